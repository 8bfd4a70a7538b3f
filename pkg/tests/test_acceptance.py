"""One test per acceptance criterion; the summary lines are printed at the end of the run."""
import io
import itertools
import math
import time

import numpy as np
from fairkit.adult import load_adult
from fairkit.cli import main
from fairkit.dag import d_separated, load_dag
from fairkit.data import CiStatement, Distribution, cond_mutual_info
from fairkit.detect import DetectionQuery, naive_groupby, rank_mediators
from fairkit.fairness import (FairnessSpec, conditional_statistical_parity, demographic_parity,
                              impossibility_check, justifiably_fair, k_fair, load_spec, proxy_fairness, rod)
from fairkit.intervention import CausalModel
from fairkit.repair import (RepairProblem, combinatorial_repair, independent_coupling,
                            matrix_factorization_repair, verify_repair)

from conftest import ACCEPTANCE, fixture_path, load_fixture
from oracles import oracle_min_cost, path_dsep, random_dag, random_factorized, strata_dataset

B = ("0", "1")


def record(k, checks, started, limit):
    """Store and assert the verdict for criterion ``k``; ``checks`` maps a description to a bool."""
    elapsed = time.perf_counter() - started
    checks = dict(checks)
    checks[f"runtime {elapsed:.2f}s < {limit}s"] = elapsed < limit
    failed = [name for name, ok in checks.items() if not ok]
    ACCEPTANCE[k] = ("PASS" if not failed else "FAIL",
                     "; ".join(checks) if not failed else "failed: " + "; ".join(failed))
    assert not failed, failed


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def test_criterion_1_college1_golden():
    t0 = time.perf_counter()
    d, g, spec = load_fixture("college1")
    dp = demographic_parity(d, spec)
    csp = conditional_statistical_parity(d, spec)
    kf = k_fair(d, g, spec, ["D"])
    a_male, a_female = kf.values["Pr(O=1|do(G=male,D=A))"], kf.values["Pr(O=1|do(G=female,D=A))"]
    record(1, {
        "DP 0.32 vs 0.32, gap 0": all(close(v, 0.32) for v in dp.values.values()) and close(dp.gap, 0),
        "CSP gap on D=A is 0.6": close(csp.gaps["D=A"], 0.6),
        "proxy fairness over {G} fair": proxy_fairness(d, g, spec).verdict,
        "k_fair{D} D=A values 0.8, 0.2, gap 0.6": close(a_male, 0.8) and close(a_female, 0.2)
                                                  and close(kf.gaps["D=A"], 0.6),
        "justifiably fair is false": justifiably_fair(d, g, spec).verdict == "unfair",
    }, t0, 1.0)


def test_criterion_2_college2_golden():
    t0 = time.perf_counter()
    d, g, spec = load_fixture("college2")
    dp = demographic_parity(d, spec)
    kf = k_fair(d, g, spec, ["D"])
    record(2, {
        "DP 0.5 vs 0.5": all(close(v, 0.5) for v in dp.values.values()) and close(dp.gap, 0),
        "k_fair{D} all values 1/2": len(kf.values) == 8 and all(close(v, 0.5) for v in kf.values.values()),
        "justifiable (enumerate) true": justifiably_fair(d, g, spec, mode="enumerate").fair,
        "justifiable (graph) true": justifiably_fair(d, g, spec, mode="graph").fair,
    }, t0, 1.0)


def test_criterion_3_chain_interventions():
    t0 = time.perf_counter()
    d, g, _ = load_fixture("chain")
    rev = load_dag(fixture_path("chain_reversed.dag"))
    record(3, {
        "Pr(Y=0|do(X=0)) = 1 on Z->X->Y": CausalModel(d, g).prob("Y", "0", {"X": "0"}) == 1.0,
        "Pr(Y=0|do(X=0)) = 1/2 on Y->X->Z": CausalModel(d, rev).prob("Y", "0", {"X": "0"}) == 0.5,
    }, t0, 1.0)


def _sym_dist(p):
    return Distribution([("S", B), ("Y", B), ("O", B)], dict(zip(itertools.product(B, B, B), p)), normalize=True)


def _eo_family(rng, equal_prevalence):
    """Distributions with identical TPR/FPR across groups."""
    tpr, fpr = rng.uniform(0.55, 0.95), rng.uniform(0.05, 0.45)
    ps = rng.uniform(0.2, 0.8)
    prev = {"1": rng.uniform(0.1, 0.9)}
    prev["0"] = prev["1"] if equal_prevalence else rng.uniform(0.1, 0.9)
    probs = []
    for s, y, o in itertools.product(B, B, B):
        p_s = ps if s == "1" else 1 - ps
        p_y = prev[s] if y == "1" else 1 - prev[s]
        rate = tpr if y == "1" else fpr
        probs.append(p_s * p_y * (rate if o == "1" else 1 - rate))
    return _sym_dist(probs)


def test_criterion_4_impossibility():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2019)
    spec = FairnessSpec("S", "1", "O", label="Y")
    identity_ok, implication_ok, both_fair, unequal_pp_broken = True, True, 0, True
    dists = [_sym_dist(rng.dirichlet(np.ones(8)) * 0.98 + 0.0025) for _ in range(1000)]
    dists += [_eo_family(rng, equal_prevalence=k % 2 == 0) for k in range(400)]
    for i, d in enumerate(dists):
        rep = impossibility_check(d, spec)
        if i < 1000:
            identity_ok &= len(rep.identity) == 2 and all(abs(v["lhs"] - v["rhs"]) <= 1e-9
                                                          for v in rep.identity.values())
        if i >= 1000 and i % 2 == 1:
            unequal_pp_broken &= rep.eo_gap <= 1e-9 and rep.pp_gap > 1e-9
        if rep.eo_gap <= 1e-9 and rep.pp_gap <= 1e-9:
            both_fair += 1
            implication_ok &= rep.prevalence_gap <= 1e-6
    record(4, {
        "identity within 1e-9 on both groups (1000 random)": identity_ok,
        f"EO and PP => prevalence gap <= 1e-6 ({both_fair} EO+PP cases)": implication_ok and both_fair >= 150,
        "EO with unequal prevalence always breaks PP (200 cases)": unequal_pp_broken,
    }, t0, 10.0)


def test_criterion_5_dseparation_soundness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    sound, agree, worst, n_sep = True, True, 0.0, 0
    for _ in range(20):
        g = random_dag(rng, int(rng.integers(3, 7)))
        names = list(g.names)
        queries = []
        for x, y in itertools.combinations(names, 2):
            rest = [v for v in names if v not in (x, y)]
            for r in range(len(rest) + 1):
                for z in itertools.combinations(rest, r):
                    sep = d_separated(g, [x], [y], z)
                    agree &= sep == path_dsep(g, [x], [y], z)
                    if sep:
                        queries.append((x, y, z))
        picked = [queries[i] for i in rng.permutation(len(queries))[:25]]
        n_sep += len(picked)
        for _ in range(20):
            dist = random_factorized(rng, g)
            for x, y, z in picked:
                cmi = cond_mutual_info(dist, [x], [y], list(z))
                worst = max(worst, cmi)
                sound &= cmi <= 1e-12
    fixtures_ok = True
    for stem in ("college1", "college2", "chain", "stratum3131"):
        _, g, _ = load_fixture(stem)
        for x, y in itertools.permutations(g.names, 2):
            rest = [v for v in g.names if v not in (x, y)]
            for r in range(len(rest) + 1):
                for z in itertools.combinations(rest, r):
                    fixtures_ok &= d_separated(g, [x], [y], z) == path_dsep(g, [x], [y], z)
    record(5, {
        f"d-separated => CMI <= 1e-12 ({n_sep} statements x 20 dists, max {worst:.1e})": sound,
        "random DAGs agree with path enumeration": agree,
        "fixture DAGs agree with path enumeration": fixtures_ok,
    }, t0, 30.0)


def _problem(strata, eps, free=("I", "Y")):
    d = strata_dataset(strata, free, 1)
    return RepairProblem(d, CiStatement(free[:1], free[1:], ("A",)), eps)


def test_criterion_6_repair():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    eps_grid = (0.0, 0.01, 0.1)
    instances = []
    for n in range(1, 9):  # every single 2x2 stratum with total <= 8
        for c in itertools.product(range(n + 1), repeat=3):
            if sum(c) <= n:
                instances.append(([np.array(c + (n - sum(c),)).reshape(2, 2)], ("I", "Y")))
    for _ in range(40):  # two strata
        instances.append(([rng.multinomial(int(rng.integers(1, 9)), [0.25] * 4).reshape(2, 2)
                           for _ in range(2)], ("I", "Y")))
    for _ in range(40):  # three binary free columns
        instances.append(([rng.multinomial(int(rng.integers(1, 9)), [0.125] * 8).reshape(2, 4)], ("I", "J", "Y")))
    mismatches, monotone_fail, checked = [], 0, 0
    for strata, free in instances:
        costs = []
        for eps in eps_grid:
            if len(free) == 3 and eps == 0.01:
                continue
            plan = combinatorial_repair(_problem(strata, eps, free))
            checked += 1
            costs.append(plan.cost)
            if plan.cost != oracle_min_cost(strata, eps) or not plan.proven_optimal or plan.cmi > eps:
                mismatches.append((strata, eps))
        monotone_fail += costs != sorted(costs, reverse=True)

    heuristics_ok = True
    fixtures = [(load_fixture("college1")[0], CiStatement.parse("O _|_ G,H | D")),
                (load_fixture("stratum3131")[0], CiStatement.parse("Y _|_ I | A"))]
    for d, s in fixtures:
        p = RepairProblem(d, s)
        for algo in (independent_coupling, matrix_factorization_repair):
            plan = algo(p)
            rep = verify_repair(d, plan, p)
            before = {k: sum(n for c, n in d.counts.items() if tuple(c[i] for i in d.indices(s.given)) == k)
                      for k in {tuple(c[i] for i in d.indices(s.given)) for c in d.counts}}
            after_d = plan.apply(d)
            after = {k: sum(n for c, n in after_d.counts.items() if tuple(c[i] for i in d.indices(s.given)) == k)
                     for k in before}
            heuristics_ok &= rep.cmi <= 1e-9 and before == after

    d1 = load_fixture("college1")[0]
    s1 = CiStatement.parse("O _|_ G,H | D")
    sa_costs = [combinatorial_repair(RepairProblem(d1, s1, e), seed=0).cost for e in eps_grid]
    record(6, {
        f"(a) exact search = brute-force oracle on {checked} runs": not mismatches,
        "(b) IC and MF reach CMI <= 1e-9 with stratum totals preserved": heuristics_ok,
        f"(c) soft cost non-increasing over eps (sweep; College I annealed {sa_costs})":
            monotone_fail == 0 and sa_costs == sorted(sa_costs, reverse=True),
    }, t0, 60.0)


def test_criterion_7_adult(adult_path):
    t0 = time.perf_counter()
    d = load_adult(adult_path)
    g = load_dag(fixture_path("adult.dag"))
    spec = load_spec(fixture_path("adult.spec")).resolve(d.columns)
    q = DetectionQuery("G", "female", "O", "1", g)
    nv = naive_groupby(d, q)
    p = RepairProblem(d, CiStatement.parse("O _|_ G,M | C,E,W"), 0.01)
    plan = independent_coupling(p)
    rep = verify_repair(d, plan, p)
    before, after = abs(math.log(rod(d, spec))), abs(math.log(rod(plan.apply(d), spec)))
    ranked = [s.mediator for s in rank_mediators(d, q)]
    record(7, {
        f"women {nv.means['female']:.4f} within 0.01 of 0.11": abs(nv.means["female"] - 0.11) <= 0.01,
        f"men {nv.means['male']:.4f} within 0.01 of 0.30": abs(nv.means["male"] - 0.30) <= 0.01,
        f"IC repair CMI {rep.cmi:.5f} <= 0.01": rep.cmi <= 0.01,
        f"|ln ROD| {before:.4f} -> {after:.4f} decreases": after < before,
        f"marital status ranked above education {ranked}": ranked.index("M") < ranked.index("E"),
    }, t0, 120.0)


def test_criterion_8_determinism(tmp_path):
    t0 = time.perf_counter()
    plans = []
    for run in ("a", "b"):
        out = io.StringIO()
        code = main(["repair", "--data", "college1.csv", "--spec", "college1.spec", "--algo", "soft",
                     "--seed", "7", "--out", str(tmp_path / run)], out=out, err=io.StringIO())
        report = (tmp_path / run / "report.txt").read_text().replace(str(tmp_path / run), "OUT")
        plans.append(((tmp_path / run / "plan.csv").read_bytes(), code, report))
    record(8, {
        "two soft runs with seed 7 give byte-identical plans": plans[0][0] == plans[1][0] and len(plans[0][0]) > 20,
        "identical reports and exit codes": plans[0][1:] == plans[1][1:],
    }, t0, 30.0)
