"""Causal fairness workbench for categorical tabular data.

Load a weighted dataset and a causal DAG, evaluate associational and
causal fairness definitions, compare naive group-by answers with
do-adjusted effects, and minimally repair the data so a conditional
independence constraint holds.
"""
from .dag import CausalDag, ancestors, d_separated, descendants, directed_paths, load_dag, parse_dag, topological_order
from .data import (CiResult, CiStatement, Dataset, Distribution, ci_holds, cond_mutual_info, conditional,
                   empirical_distribution, load_csv, marginal, prob, write_csv)
from .detect import (DetectionQuery, adjusted_total_effect, controlled_direct_effect, detect, naive_groupby,
                     rank_mediators)
from .errors import (DagError, DatasetError, FairkitError, FairnessError, ParseError, PositivityError, RepairError,
                     UndefinedStratumError)
from .fairness import (FairnessSpec, MetricReport, conditional_statistical_parity, demographic_parity,
                       equalized_odds, impossibility_check, justifiably_fair, k_fair, load_spec, parse_spec,
                       predictive_parity, proxy_fairness, rod, rod_strata)
from .intervention import CausalModel, InterventionQuery, interventional_distribution, interventional_prob, truncated_joint
from .repair import (RepairPlan, RepairProblem, combinatorial_repair, independent_coupling,
                     matrix_factorization_repair, verify_repair)

__version__ = "0.1.0"
