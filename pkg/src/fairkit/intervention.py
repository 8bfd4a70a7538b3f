"""Interventional distributions by truncated factorization.

Given a dataset and a causal DAG over the same variables, the effect of
``do(X = x)`` is the product of the empirical factors ``Pr(V | Pa(V))`` for
every non-intervened ``V`` (in topological order), with intervened
variables held at their do-values wherever they appear as parents. The
factors of intervened variables are dropped.

Estimation is plug-in from the empirical conditionals, without smoothing.
A factor whose parent stratum never occurs in the data but is reached with
positive weight raises :class:`~fairkit.errors.PositivityError`; strata of
zero weight are simply dropped.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping

from .dag import CausalDag, ancestors, topological_order
from .data import Distribution, Table, group_weights
from .errors import DatasetError, PositivityError

__all__ = [
    "InterventionQuery",
    "CausalModel",
    "truncated_joint",
    "interventional_prob",
    "interventional_distribution",
]


@dataclass(frozen=True)
class InterventionQuery:
    """``Pr(outcome = value | do(assignments))``."""

    outcome: str
    value: str
    do: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "do", dict(self.do))
        if self.outcome in self.do:
            raise DatasetError(f"outcome {self.outcome!r} cannot also be intervened on")


class CausalModel:
    """A (table, DAG) pair with cached empirical conditional tables.

    Create one per dataset when many interventional queries will be asked,
    e.g. when enumerating fairness contexts.
    """

    def __init__(self, table: Table, dag: CausalDag):
        dag.checked()
        if set(table.columns) != set(dag.names):
            missing = sorted(set(dag.names) ^ set(table.columns))
            raise DatasetError(f"dataset columns and DAG variables differ on {missing}")
        self.table = table
        self.dag = dag
        self.order = topological_order(dag)
        self._parents = {v: tuple(dag.sort(dag.parents(v))) for v in dag.names}
        self._children = {v: dag.children(v) for v in dag.names}
        self._factors = {}

    def factor(self, var):
        """(parent names, joint weights over parents+var, weights over parents)."""
        try:
            return self._factors[var]
        except KeyError:
            pa = self._parents[var]
            f = (pa, group_weights(self.table, pa + (var,)), group_weights(self.table, pa))
            self._factors[var] = f
            return f

    def _check_do(self, do):
        for v, label in do.items():
            if v not in self.dag:
                raise DatasetError(f"cannot intervene on unknown variable {v!r}")
            if label not in self.table.domain(v):
                raise DatasetError(f"do-value {label!r} outside the domain of {v!r}")

    def marginal_under(self, do: Mapping[str, str], keep) -> Distribution:
        """Distribution of ``keep`` under ``do``; other variables summed out as early as possible."""
        do = dict(do)
        self._check_do(do)
        keep = set([keep] if isinstance(keep, str) else keep)
        if keep & set(do):
            raise DatasetError(f"variables {sorted(keep & set(do))} are both kept and intervened on")
        mutilated = self.dag.remove_incoming(do)
        relevant = (ancestors(mutilated, keep) if keep else frozenset()) - set(do)
        todo = [v for v in self.order if v in relevant]
        position = {v: i for i, v in enumerate(todo)}
        # last position at which each variable is read as a parent
        last_use = {}
        for v in todo:
            for p in self._parents[v]:
                if p not in do:
                    last_use[p] = max(last_use.get(p, -1), position[v])

        live: list[str] = []
        state = {(): 1.0}
        for step, var in enumerate(todo):
            pa, joint, pw = self.factor(var)
            dom = self.table.domain(var)
            where = [(live.index(p), None) if p in live else (None, do[p]) for p in pa]
            new = defaultdict(float)
            for key, mass in state.items():
                if mass <= 0:
                    continue
                pav = tuple(key[i] if i is not None else fixed for i, fixed in where)
                n_pa = pw.get(pav, 0)
                if n_pa <= 0:
                    stratum = dict(zip(pa, pav))
                    raise PositivityError(
                        f"positivity violation: Pr({var} | {stratum}) is undefined in the data", stratum=stratum
                    )
                for x in dom:
                    n = joint.get(pav + (x,), 0)
                    if n:
                        new[key + (x,)] += mass * (n / n_pa)
            live.append(var)
            state = new
            # sum out variables nobody downstream reads
            drop = [i for i, v in enumerate(live) if v not in keep and last_use.get(v, -1) <= step]
            if drop:
                kept = [i for i in range(len(live)) if i not in drop]
                live = [live[i] for i in kept]
                summed = defaultdict(float)
                for key, mass in state.items():
                    summed[tuple(key[i] for i in kept)] += mass
                state = summed

        names = [c for c in self.table.columns if c in keep]
        perm = [live.index(c) for c in names]
        out = defaultdict(float)
        for key, mass in state.items():
            out[tuple(key[i] for i in perm)] += mass
        total = math.fsum(out.values())
        schema = [(c, self.table.domain(c)) for c in names]
        return Distribution(schema, {k: v / total for k, v in out.items()}, normalize=True)

    def truncated_joint(self, do: Mapping[str, str]) -> Distribution:
        rest = [c for c in self.table.columns if c not in do]
        return self.marginal_under(do, rest)

    def distribution(self, outcome: str, do: Mapping[str, str]) -> Distribution:
        return self.marginal_under(do, [outcome])

    def prob(self, outcome: str, value: str, do: Mapping[str, str]) -> float:
        if value not in self.table.domain(outcome):
            raise DatasetError(f"label {value!r} outside the domain of {outcome!r}")
        return self.distribution(outcome, do)[(value,)]


def truncated_joint(d: Table, dag: CausalDag, do: Mapping[str, str]) -> Distribution:
    """Joint distribution of the non-intervened variables under ``do``."""
    return CausalModel(d, dag).truncated_joint(do)


def interventional_distribution(d: Table, dag: CausalDag, outcome: str, do: Mapping[str, str]) -> Distribution:
    return CausalModel(d, dag).distribution(outcome, do)


def interventional_prob(d: Table, dag: CausalDag, q: InterventionQuery) -> float:
    """``Pr(q.outcome = q.value | do(q.do))``."""
    return CausalModel(d, dag).prob(q.outcome, q.value, q.do)
