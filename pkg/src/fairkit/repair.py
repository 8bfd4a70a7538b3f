"""Minimal tuple insert/delete repair for a saturated CI constraint.

The constraint ``(X _|_ Y | Z)`` mentions every column, so it holds exactly
when, inside every stratum ``Z = z``, the count matrix ``t[x, y]`` (rows are
assignments of ``X``, columns assignments of ``Y``) has rank at most one::

    t[x, y] * t[.] == t[x, .] * t[., y]

Repairs change multiplicities only. The cost of a plan is the L1 norm of
its integer deltas. Four algorithms are provided:

``independent_coupling``
    Replace each stratum by the product of its margins, rounded to integers.
``matrix_factorization_repair``
    Replace each stratum by its nearest nonnegative rank-one matrix.
``combinatorial_repair``
    Minimize cost subject to ``CMI <= epsilon``. Small instances are solved
    exhaustively and are provably optimal; larger ones use simulated
    annealing.

The rounding used by the first two preserves each stratum total. If the
rounded table misses the tolerance, strata are replaced (largest violation
first) by the closest integer matrix of the form ``u v^T`` with the same
total, which is exactly independent.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .data import CiStatement, Dataset, cond_mutual_info, load_csv, marginal
from .errors import DatasetError, RepairError

__all__ = [
    "RepairProblem",
    "RepairPlan",
    "RepairReport",
    "independent_coupling",
    "matrix_factorization_repair",
    "combinatorial_repair",
    "verify_repair",
    "largest_remainder",
    "within_exact_cap",
    "write_plan",
    "read_plan",
    "EXACT_MAX_COLUMNS",
    "EXACT_MAX_STRATUM",
]

EXACT_MAX_COLUMNS = 3
EXACT_MAX_STRATUM = 12
SUFFICIENCY_NOTE = (
    "The repaired data satisfies the constraint; when the constraint is (Y _|_ I | A) this is a "
    "sufficient condition for a classifier trained on it to be justifiably fair."
)


@dataclass(frozen=True)
class RepairProblem:
    """A dataset, a saturated CI constraint and a tolerance in bits (0 = hard)."""

    dataset: Dataset
    constraint: CiStatement
    epsilon: float = 0.0

    def __post_init__(self):
        if self.dataset.total < 1:
            raise RepairError("empty dataset")
        if not self.constraint.saturated(self.dataset.columns):
            missing = sorted(set(self.dataset.columns) - self.constraint.variables)
            extra = sorted(self.constraint.variables - set(self.dataset.columns))
            raise RepairError(f"constraint {self.constraint} is not saturated (missing {missing}, unknown {extra})")
        if not self.epsilon >= 0:
            raise RepairError(f"epsilon must be >= 0, got {self.epsilon}")

    @property
    def hard(self) -> bool:
        return self.epsilon == 0


@dataclass
class RepairPlan:
    """Signed per-assignment deltas (insertions positive, deletions negative)."""

    columns: tuple[str, ...]
    deltas: dict[tuple, int]
    algorithm: str
    cmi: float = float("nan")
    proven_optimal: bool = False
    info: dict = field(default_factory=dict)

    @property
    def cost(self) -> int:
        return sum(abs(v) for v in self.deltas.values())

    def apply(self, dataset: Dataset) -> Dataset:
        if tuple(dataset.columns) != tuple(self.columns):
            raise RepairError("plan and dataset columns differ")
        try:
            return dataset.apply(self.deltas)
        except DatasetError as exc:
            raise RepairError(str(exc)) from None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.columns) + ["delta"])
        for key, d in self.deltas.items():
            w.writerow(list(key) + [d])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"algorithm": self.algorithm, "cost": self.cost, "cmi": self.cmi,
                "proven_optimal": self.proven_optimal, "changed_cells": len(self.deltas), **self.info}


def write_plan(plan: RepairPlan, path) -> None:
    Path(path).write_text(plan.to_csv(), encoding="utf-8")


def read_plan(path, algorithm="file") -> RepairPlan:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][-1] != "delta":
        raise RepairError(f"{path}: expected a header ending in 'delta'")
    cols = tuple(rows[0][:-1])
    deltas = {}
    for no, row in enumerate(rows[1:], start=2):
        if len(row) != len(cols) + 1:
            raise RepairError(f"{path}: row {no} has {len(row)} fields")
        try:
            deltas[tuple(row[:-1])] = int(row[-1])
        except ValueError:
            raise RepairError(f"{path}: row {no}: delta {row[-1]!r} is not an integer") from None
    return RepairPlan(cols, deltas, algorithm)


# ---------------------------------------------------------------------------
# stratum layout

class _Layout:
    """Maps a saturated problem onto per-stratum count matrices."""

    def __init__(self, p: RepairProblem):
        d = p.dataset
        self.dataset = d
        s = p.constraint
        self.left = d.ordered(s.left)
        self.right = d.ordered(s.right)
        self.given = d.ordered(s.given)
        self.rows = list(itertools.product(*(d.domain(c) for c in self.left)))
        self.cols = list(itertools.product(*(d.domain(c) for c in self.right)))
        ri = {k: i for i, k in enumerate(self.rows)}
        ci = {k: j for j, k in enumerate(self.cols)}
        li, yi, zi = d.indices(self.left), d.indices(self.right), d.indices(self.given)
        mats = {}
        for key, n in d.counts.items():
            z = tuple(key[i] for i in zi)
            m = mats.get(z)
            if m is None:
                m = mats[z] = np.zeros((len(self.rows), len(self.cols)), dtype=np.int64)
            m[ri[tuple(key[i] for i in li)], ci[tuple(key[i] for i in yi)]] += n
        order = [{l: i for i, l in enumerate(d.domain(c))} for c in self.given]
        self.strata = sorted(mats, key=lambda z: tuple(o[l] for o, l in zip(order, z)))
        self.counts = [mats[z] for z in self.strata]
        # position of each column of the dataset in (z, row, col) space
        self._where = []
        for c in d.columns:
            if c in self.given:
                self._where.append(("z", self.given.index(c)))
            elif c in self.left:
                self._where.append(("r", self.left.index(c)))
            else:
                self._where.append(("c", self.right.index(c)))

    def assignment(self, z, i, j):
        parts = {"z": z, "r": self.rows[i], "c": self.cols[j]}
        return tuple(parts[kind][pos] for kind, pos in self._where)

    def plan(self, tables, algorithm, proven=False, info=None) -> RepairPlan:
        deltas = {}
        for z, old, new in zip(self.strata, self.counts, tables):
            diff = np.asarray(new, dtype=np.int64) - old
            for i, j in zip(*np.nonzero(diff)):
                deltas[self.assignment(z, int(i), int(j))] = int(diff[i, j])
        d = self.dataset
        canon = sorted(deltas, key=d._cell_key)
        plan = RepairPlan(tuple(d.columns), {k: deltas[k] for k in canon}, algorithm, proven_optimal=proven,
                          info=dict(info or {}))
        repaired = plan.apply(d)
        if repaired.total < 1:
            raise RepairError("repair would delete every tuple")
        plan.cmi = _achieved(repaired, self)
        return plan


def _achieved(repaired: Dataset, layout: _Layout) -> float:
    return cond_mutual_info(repaired, layout.left, layout.right, layout.given)


def within_exact_cap(p: RepairProblem) -> bool:
    """At most three binary non-conditioning columns and stratum totals at most twelve."""
    d = p.dataset
    free = [c for c in d.columns if c not in p.constraint.given]
    if len(free) > EXACT_MAX_COLUMNS or any(len(d.domain(c)) != 2 for c in free):
        return False
    return all(int(m.sum()) <= EXACT_MAX_STRATUM for m in _Layout(p).counts)


# ---------------------------------------------------------------------------
# integer helpers

def largest_remainder(values, total: int) -> np.ndarray:
    """Round nonnegative ``values`` to integers summing to ``total``.

    Floors first, then hands out the remaining units by descending fractional
    part; ties go to the earlier cell in row-major order.
    """
    v = np.asarray(values, dtype=float)
    flat = v.ravel()
    base = np.floor(flat + 1e-9).astype(np.int64)
    left = int(total) - int(base.sum())
    if left < 0 or left > flat.size:
        raise RepairError(f"cannot round values summing to {flat.sum()} onto {total}")
    frac = flat - base
    order = sorted(range(flat.size), key=lambda k: (-round(frac[k], 12), k))
    for k in order[:left]:
        base[k] += 1
    return base.reshape(v.shape)


def _independent(t: np.ndarray) -> bool:
    T = int(t.sum())
    if T == 0:
        return True
    r = t.sum(axis=1)
    c = t.sum(axis=0)
    return bool(np.array_equal(t * T, np.outer(r, c)))


def _stratum_w(t: np.ndarray) -> float:
    """``T * I(row; col)`` in bits for one count matrix (exact zero when independent)."""
    T = int(t.sum())
    if T == 0 or _independent(t):
        return 0.0
    r = t.sum(axis=1)
    c = t.sum(axis=0)
    terms = []
    for i, j in zip(*np.nonzero(t)):
        n = int(t[i, j])
        terms.append(n * math.log2((n * T) / (int(r[i]) * int(c[j]))))
    return max(math.fsum(terms), 0.0)


def _divisors(n: int) -> list[int]:
    small = [k for k in range(1, int(math.isqrt(n)) + 1) if n % k == 0]
    return sorted(set(small + [n // k for k in small]))


def _exact_rank_one(target: np.ndarray, total: int) -> np.ndarray:
    """Integer ``u v^T`` with ``sum = total`` closest in L1 to ``target``."""
    if total == 0:
        return np.zeros_like(target, dtype=np.int64)
    rs = target.sum(axis=1)
    cs = target.sum(axis=0)
    mass = target.sum()
    best, best_dist = None, math.inf
    for U in _divisors(total):
        V = total // U
        u = largest_remainder(rs * (U / mass), U)
        v = largest_remainder(cs * (V / mass), V)
        t = np.outer(u, v)
        dist = float(np.abs(t - target).sum())
        if dist < best_dist - 1e-9:
            best, best_dist = t, dist
    return best.astype(np.int64)


def _round_strata(layout, targets, epsilon, algorithm):
    """Largest-remainder rounding, then exact fallbacks until ``CMI <= epsilon``."""
    tables = []
    for m, tgt in zip(layout.counts, targets):
        n = int(m.sum())
        tables.append(largest_remainder(tgt, n) if n else m.copy())
    N = sum(int(m.sum()) for m in layout.counts)
    ws = [_stratum_w(t) for t in tables]
    fixed = []
    while math.fsum(ws) / N > epsilon:
        k = max(range(len(ws)), key=lambda i: (ws[i], -i))
        tables[k] = _exact_rank_one(targets[k], int(layout.counts[k].sum()))
        ws[k] = 0.0
        fixed.append(k)
    info = {"exact_strata": len(fixed)} if fixed else {}
    return layout.plan(tables, algorithm, info=info)


# ---------------------------------------------------------------------------
# closed-form and factorization repairs

def independent_coupling(p: RepairProblem) -> RepairPlan:
    """Per stratum, target ``n(z, x) n(z, y) / n(z)`` rounded onto ``n(z)``."""
    layout = _Layout(p)
    targets = []
    for m in layout.counts:
        n = m.sum()
        targets.append(np.outer(m.sum(axis=1), m.sum(axis=0)) / n if n else m.astype(float))
    return _round_strata(layout, targets, p.epsilon, "ic")


def _rank_one(m: np.ndarray, iterations: int, tol: float = 1e-13) -> np.ndarray:
    """Nearest nonnegative rank-one matrix by alternating least squares."""
    m = m.astype(float)
    u = m.sum(axis=1)
    v = np.ones(m.shape[1])
    prev = None
    for _ in range(iterations):
        v = np.maximum(m.T @ u, 0.0)
        vv = v @ v
        if vv == 0:
            break
        v /= math.sqrt(vv)
        u = np.maximum(m @ v, 0.0)
        approx = np.outer(u, v)
        err = float(np.linalg.norm(m - approx))
        if prev is not None and abs(prev - err) <= tol * max(1.0, err):
            break
        prev = err
    return np.outer(u, v)


def matrix_factorization_repair(p: RepairProblem, iterations: int = 500) -> RepairPlan:
    """Replace each stratum by its Frobenius-nearest nonnegative rank-one matrix.

    The approximation is rescaled to the stratum total before rounding.
    All-zero strata are left alone.
    """
    if iterations < 1:
        raise RepairError("iterations must be positive")
    layout = _Layout(p)
    targets = []
    for m in layout.counts:
        n = m.sum()
        a = _rank_one(m, iterations) if n else m.astype(float)
        s = a.sum()
        targets.append(a * (n / s) if s > 0 else m.astype(float))
    return _round_strata(layout, targets, p.epsilon, "mf")


# ---------------------------------------------------------------------------
# exhaustive search

def _compositions(total, parts, base, bound):
    """Nonnegative integer vectors summing to ``total`` with ``|vec - base|_1 < bound``."""
    out = []
    vec = [0] * parts

    def rec(k, remaining, used):
        if k == parts - 1:
            d = used + abs(remaining - base[k])
            if d < bound:
                vec[k] = remaining
                out.append((list(vec), d))
            return
        for x in range(remaining + 1):
            d = used + abs(x - base[k])
            if d >= bound:
                if x > base[k]:
                    break
                continue
            vec[k] = x
            rec(k + 1, remaining - x, d)

    rec(0, total, 0)
    return out


def _hard_exact(m: np.ndarray) -> np.ndarray:
    """Cheapest exactly independent table, by enumerating its margins.

    Every candidate is ``r c^T / T`` with integer margins ``r``, ``c`` of total
    ``T``; margins whose own L1 distance already reaches the incumbent cost
    are pruned.
    """
    n = int(m.sum())
    if n == 0 or _independent(m):
        return m.copy()
    r0 = [int(x) for x in m.sum(axis=1)]
    c0 = [int(x) for x in m.sum(axis=0)]
    # incumbent: keep only the largest cell
    k = int(np.argmax(m))
    best = np.zeros_like(m)
    best.flat[k] = m.flat[k]
    best_cost = int(np.abs(best - m).sum())
    totals = sorted(range(1, n + best_cost), key=lambda T: (abs(T - n), T))
    for T in totals:
        if abs(T - n) >= best_cost:
            break
        rows = _compositions(T, len(r0), r0, best_cost)
        if not rows:
            continue
        cols = _compositions(T, len(c0), c0, best_cost)
        if not cols:
            continue
        R = np.array([v for v, _ in rows], dtype=np.int64)
        C = np.array([v for v, _ in cols], dtype=np.int64)
        prod = R[:, None, :, None] * C[None, :, None, :]
        ok = (prod % T == 0).all(axis=(2, 3))
        if not ok.any():
            continue
        cand = prod // T
        cost = np.abs(cand - m[None, None]).sum(axis=(2, 3))
        cost = np.where(ok, cost, np.iinfo(np.int64).max)
        a, b = np.unravel_index(int(np.argmin(cost)), cost.shape)
        if cost[a, b] < best_cost:
            best_cost = int(cost[a, b])
            best = cand[a, b].copy()
    return best


def _ball(m: np.ndarray, radius: int):
    """All nonnegative tables within L1 distance ``radius`` of ``m`` (flattened), with distances."""
    flat = m.ravel()
    tabs = np.zeros((1, 0), dtype=np.int64)
    used = np.zeros(1, dtype=np.int64)
    for nj in flat:
        nj = int(nj)
        pt, pu = [], []
        for d in range(-nj, radius + 1):
            mask = used + abs(d) <= radius
            if not mask.any():
                continue
            sel = tabs[mask]
            pt.append(np.hstack([sel, np.full((len(sel), 1), nj + d, dtype=np.int64)]))
            pu.append(used[mask] + abs(d))
        tabs = np.vstack(pt)
        used = np.concatenate(pu)
    return tabs, used


def _xlog2x(a):
    a = np.asarray(a, dtype=float)
    out = np.zeros_like(a)
    pos = a > 0
    out[pos] = a[pos] * np.log2(a[pos])
    return out


def _w_batch(tabs: np.ndarray, shape) -> np.ndarray:
    t = tabs.reshape((-1,) + tuple(shape))
    T = t.sum(axis=(1, 2))
    w = (_xlog2x(t).sum(axis=(1, 2)) + _xlog2x(T)
         - _xlog2x(t.sum(axis=2)).sum(axis=1) - _xlog2x(t.sum(axis=1)).sum(axis=1))
    return np.maximum(w, 0.0), T


def _soft_exact(layout: _Layout, epsilon: float):
    """Minimum-cost tables with ``sum_z W_z <= epsilon * sum_z T_z``.

    The constraint separates over strata as ``sum_z (W_z - epsilon T_z) <= 0``.
    For each stratum the best slack at every cost up to its hard-repair cost
    is tabulated; a knapsack over strata then picks the cheapest combination.
    """
    per = []
    for m in layout.counts:
        hard = _hard_exact(m)
        h = int(np.abs(hard - m).sum())
        tabs, dist = _ball(m, h)
        w, T = _w_batch(tabs, m.shape)
        slack = w - epsilon * T
        best = []
        for c in range(h + 1):
            sel = np.nonzero(dist <= c)[0]
            k = sel[int(np.argmin(slack[sel]))]
            best.append((float(slack[k]), tabs[k].reshape(m.shape)))
        per.append(best)
    tol = 1e-12 * max(1, layout.dataset.total)
    # dp[c] = (min total slack, choices) using total cost c
    dp = {0: (0.0, [])}
    for best in per:
        nxt = {}
        for c0, (s0, ch) in dp.items():
            for c, (s, _) in enumerate(best):
                key = c0 + c
                val = s0 + s
                if key not in nxt or val < nxt[key][0] - 1e-15:
                    nxt[key] = (val, ch + [c])
        dp = nxt
    for c in sorted(dp):
        s, choice = dp[c]
        if s <= tol:
            return [per[z][k][1] for z, k in enumerate(choice)]
    raise RepairError("no feasible soft repair found")  # unreachable: hard tables are feasible


# ---------------------------------------------------------------------------
# annealing

def _factor(t: np.ndarray):
    """Integer ``u, v`` with ``outer(u, v) == t`` for an integer rank-one ``t``."""
    nz = np.nonzero(t.sum(axis=1))[0]
    if len(nz) == 0:
        return np.zeros(t.shape[0], dtype=np.int64), np.zeros(t.shape[1], dtype=np.int64)
    row = t[nz[0]]
    g = int(np.gcd.reduce(row[row > 0]))
    v = row // g
    pivot = int(np.nonzero(v)[0][0])
    u = t[:, pivot] // v[pivot]
    return u.astype(np.int64), v.astype(np.int64)


def _anneal_hard(m, start, steps, rng, t0=2.0, t1=0.02):
    """Local search over integer factors ``u, v``; every state is exactly independent."""
    u, v = _factor(start)
    R, C = m.shape

    def cost_of(u, v):
        return int(np.abs(np.outer(u, v) - m).sum())

    cur = cost_of(u, v)
    best, best_uv = cur, (u.copy(), v.copy())
    if cur == 0 or steps <= 0:
        return np.outer(*best_uv)
    for step in range(steps):
        temp = t0 * (t1 / t0) ** (step / max(1, steps - 1))
        k = int(rng.integers(R + C))
        delta = 1 if rng.random() < 0.5 else -1
        if k < R:
            if u[k] + delta < 0:
                continue
            old = np.abs(u[k] * v - m[k]).sum()
            new = np.abs((u[k] + delta) * v - m[k]).sum()
        else:
            j = k - R
            if v[j] + delta < 0:
                continue
            old = np.abs(u * v[j] - m[:, j]).sum()
            new = np.abs(u * (v[j] + delta) - m[:, j]).sum()
        change = int(new - old)
        if change <= 0 or rng.random() < math.exp(-change / temp):
            if k < R:
                u[k] += delta
            else:
                v[k - R] += delta
            cur += change
            if cur < best:
                best, best_uv = cur, (u.copy(), v.copy())
    return np.outer(*best_uv)


def _f(x):
    return x * math.log2(x) if x > 0 else 0.0


def _anneal_soft(layout, hard_tables, epsilon, steps, rng, penalty=4.0, t0=2.0, t1=0.02):
    """Cell-level ±1 moves with a penalty on ``W - epsilon N``; returns the best feasible state."""
    tabs = [m.copy() for m in layout.counts]
    rs = [t.sum(axis=1).astype(np.int64) for t in tabs]
    cs = [t.sum(axis=0).astype(np.int64) for t in tabs]
    Ts = [int(t.sum()) for t in tabs]
    ws = [_stratum_w(t) for t in tabs]
    N = sum(Ts)
    W = math.fsum(ws)
    cost = 0

    def energy(cost, W, N):
        return cost + penalty * max(0.0, W - epsilon * N)

    best_cost = sum(int(np.abs(h - m).sum()) for h, m in zip(hard_tables, layout.counts))
    best = [h.copy() for h in hard_tables]
    if W <= epsilon * N:
        return tabs, 0
    cur_e = energy(cost, W, N)
    sizes = [t.size for t in tabs]
    offsets = np.cumsum([0] + sizes)
    for step in range(steps):
        temp = t0 * (t1 / t0) ** (step / max(1, steps - 1))
        flat = int(rng.integers(offsets[-1]))
        z = int(np.searchsorted(offsets, flat, side="right") - 1)
        i, j = np.unravel_index(flat - offsets[z], tabs[z].shape)
        delta = 1 if rng.random() < 0.5 else -1
        t = tabs[z]
        n = int(t[i, j])
        if n + delta < 0 or N + delta < 1:
            continue
        orig = int(layout.counts[z][i, j])
        dcost = abs(n + delta - orig) - abs(n - orig)
        r, c, T = int(rs[z][i]), int(cs[z][j]), Ts[z]
        dW = (_f(n + delta) - _f(n)) + (_f(T + delta) - _f(T)) - (_f(r + delta) - _f(r)) - (_f(c + delta) - _f(c))
        new_e = energy(cost + dcost, W + dW, N + delta)
        if new_e <= cur_e or rng.random() < math.exp(-(new_e - cur_e) / temp):
            t[i, j] += delta
            rs[z][i] += delta
            cs[z][j] += delta
            Ts[z] += delta
            cost += dcost
            W += dW
            N += delta
            cur_e = new_e
            if cost < best_cost and W <= epsilon * N:
                # resync the running sum before trusting it
                W = math.fsum(_stratum_w(x) for x in tabs)
                cur_e = energy(cost, W, N)
                if W <= epsilon * N:
                    best_cost = cost
                    best = [x.copy() for x in tabs]
    return best, best_cost


def combinatorial_repair(p: RepairProblem, budget: int = 20000, seed: int = 0, method: str = "auto") -> RepairPlan:
    """Cheapest integer repair with ``CMI(repaired) <= p.epsilon``.

    Parameters
    ----------
    budget : int
        Annealing moves (shared across strata). Unused by the exact search.
    seed : int
        Master seed; per-stratum streams are spawned from it.
    method : {"auto", "exact", "anneal"}
        ``auto`` is exhaustive inside the exact cap (see
        :func:`within_exact_cap`) and annealing outside it.

    The plan's ``proven_optimal`` flag is set only by the exhaustive search.
    """
    if budget < 1:
        raise RepairError(f"budget must be a positive number of moves, got {budget}")
    if method not in ("auto", "exact", "anneal"):
        raise RepairError(f"unknown method {method!r}")
    layout = _Layout(p)
    name = "hard" if p.hard else "soft"
    exact = method == "exact" or (method == "auto" and within_exact_cap(p))
    if exact:
        if p.hard:
            tables = [_hard_exact(m) for m in layout.counts]
        else:
            tables = _soft_exact(layout, p.epsilon)
        return layout.plan(tables, name, proven=True, info={"search": "exhaustive"})

    streams = np.random.SeedSequence(seed).spawn(len(layout.counts) + 1)
    ic = independent_coupling(RepairProblem(p.dataset, p.constraint, 0.0))
    ic_tables = _tables_from_plan(layout, ic)
    sizes = [m.size for m in layout.counts]
    share = [max(50, budget * s // sum(sizes)) for s in sizes]
    hard_tables = []
    for m, start, steps, ss in zip(layout.counts, ic_tables, share, streams):
        hard_tables.append(_anneal_hard(m, start, steps, np.random.default_rng(ss)))
    if p.hard:
        return layout.plan(hard_tables, name, info={"search": "anneal", "budget": budget, "seed": seed})
    tables, _ = _anneal_soft(layout, hard_tables, p.epsilon, budget, np.random.default_rng(streams[-1]))
    return layout.plan(tables, name, info={"search": "anneal", "budget": budget, "seed": seed})


def _tables_from_plan(layout, plan):
    tabs = [m.copy() for m in layout.counts]
    pos = {z: k for k, z in enumerate(layout.strata)}
    ri = {r: i for i, r in enumerate(layout.rows)}
    ci = {c: j for j, c in enumerate(layout.cols)}
    d = layout.dataset
    li, yi, zi = d.indices(layout.left), d.indices(layout.right), d.indices(layout.given)
    for key, delta in plan.deltas.items():
        z = tuple(key[i] for i in zi)
        tabs[pos[z]][ri[tuple(key[i] for i in li)], ci[tuple(key[i] for i in yi)]] += delta
    return tabs


# ---------------------------------------------------------------------------
# verification

@dataclass
class RepairReport:
    cmi: float
    cost: int
    epsilon: float
    drift: dict[str, float]
    total_before: int
    total_after: int
    note: str = SUFFICIENCY_NOTE

    @property
    def satisfied(self) -> bool:
        return self.cmi <= self.epsilon

    def to_dict(self) -> dict:
        return {"cmi": self.cmi, "cost": self.cost, "epsilon": self.epsilon, "satisfied": self.satisfied,
                "total_before": self.total_before, "total_after": self.total_after,
                "marginal_drift": dict(self.drift), "note": self.note}


def verify_repair(original: Dataset, plan: RepairPlan, p: RepairProblem) -> RepairReport:
    """Apply ``plan`` and measure the result.

    ``drift`` is the total variation distance between each column's
    marginal before and after the repair.
    """
    repaired = plan.apply(original)
    s = p.constraint
    cmi = cond_mutual_info(repaired, s.left, s.right, s.given)
    drift = {}
    for c in original.columns:
        a = marginal(original, [c])
        b = marginal(repaired, [c])
        drift[c] = 0.5 * math.fsum(abs(a[(l,)] - b[(l,)]) for l in original.domain(c))
    return RepairReport(cmi, plan.cost, p.epsilon, drift, original.total, repaired.total)
