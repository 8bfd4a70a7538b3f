"""
Where the income gap comes from
===============================

Usage: python adult_detection.py /path/to/adult.data

Compares the raw gender gap in high income with the do-adjusted total
and direct effects, ranks the mediators, then repairs the data so the
outcome is independent of gender and marital status given the rest.
"""
import math
import sys

from fairkit import (CiStatement, DetectionQuery, RepairProblem, detect, independent_coupling, load_dag, load_spec,
                     rod, verify_repair)
from fairkit.adult import load_adult
from fairkit.cli import FIXTURE_DIR

data = load_adult(sys.argv[1] if len(sys.argv) > 1 else "adult.data")
dag = load_dag(FIXTURE_DIR / "adult.dag")
spec = load_spec(FIXTURE_DIR / "adult.spec").resolve(data.columns)

report = detect(data, DetectionQuery("G", "female", "O", "1", dag))
print(report.to_text())

# repair: outcome independent of gender and marital status within each (C, E, W) cell
problem = RepairProblem(data, CiStatement.parse("O _|_ G,M | C,E,W"), 0.01)
plan = independent_coupling(problem)
print(verify_repair(data, plan, problem).cmi, "bits after repair,", plan.cost, "tuples changed")
print("ROD", round(rod(data, spec), 4), "->", round(rod(plan.apply(data), spec), 4))
print("|ln ROD|", round(abs(math.log(rod(plan.apply(data), spec))), 4))
