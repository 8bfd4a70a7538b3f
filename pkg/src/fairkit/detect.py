"""Discrimination detection by rewriting a group-by into causal queries.

A naive comparison ``avg(O) GROUP BY T`` mixes the effect of the treatment
with that of its confounders. Given a DAG, the same question is asked three
more ways:

* the total effect ``Pr(O=1 | do(T=t1)) - Pr(O=1 | do(T=t0))``;
* the controlled direct effect, which also fixes the mediators; and
* per-mediator contributions, ranking which mediator carries the effect.

Roles come from the DAG: parents of the treatment are confounders, and
nodes on directed treatment-to-outcome paths are mediators. The indirect
part is reported by the difference method (total minus direct).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .dag import CausalDag, directed_paths
from .data import Table, group_weights
from .errors import DatasetError, PositivityError
from .intervention import CausalModel

__all__ = [
    "DetectionQuery",
    "GroupComparison",
    "DirectEffect",
    "MediatorScore",
    "DetectionReport",
    "naive_groupby",
    "adjusted_total_effect",
    "controlled_direct_effect",
    "rank_mediators",
    "detect",
]


@dataclass(frozen=True)
class DetectionQuery:
    """Effect of ``treatment = treated`` (vs its other label) on ``outcome = positive``.

    ``mediators`` overrides the DAG-derived mediator set when given.
    """

    treatment: str
    treated: str
    outcome: str
    positive: str
    dag: CausalDag
    mediators: tuple[str, ...] | None = None

    def __post_init__(self):
        self.dag.checked()
        if self.treatment == self.outcome:
            raise DatasetError("treatment and outcome must differ")
        for v in (self.treatment, self.outcome):
            if v not in self.dag:
                raise DatasetError(f"{v!r} is not a DAG variable")
        if self.mediators is not None:
            meds = tuple(self.mediators)
            bad = [m for m in meds if m not in self.dag or m in (self.treatment, self.outcome)]
            if bad:
                raise DatasetError(f"invalid mediators {bad}")
            object.__setattr__(self, "mediators", tuple(self.dag.sort(meds)))

    @property
    def confounders(self) -> tuple[str, ...]:
        return tuple(self.dag.sort(self.dag.parents(self.treatment)))

    @property
    def mediator_set(self) -> tuple[str, ...]:
        if self.mediators is not None:
            return self.mediators
        inner = set()
        for path in directed_paths(self.dag, self.treatment, self.outcome):
            inner.update(path[1:-1])
        return tuple(self.dag.sort(inner))

    def labels(self, d: Table) -> tuple[str, str]:
        """(treated, control) labels of the binary treatment."""
        if self.treatment not in d:
            raise DatasetError(f"treatment column {self.treatment!r} not in the data")
        dom = d.domain(self.treatment)
        if len(dom) != 2 or self.treated not in dom:
            raise DatasetError(f"treatment {self.treatment!r} must be binary with label {self.treated!r}, got {dom}")
        return self.treated, next(l for l in dom if l != self.treated)

    def check(self, d: Table):
        if self.outcome not in d:
            raise DatasetError(f"outcome column {self.outcome!r} not in the data")
        if self.positive not in d.domain(self.outcome):
            raise DatasetError(f"label {self.positive!r} outside the domain of {self.outcome!r}")
        return self.labels(d)


@dataclass
class GroupComparison:
    treated: str
    control: str
    means: dict[str, float]

    @property
    def difference(self) -> float:
        return self.means[self.treated] - self.means[self.control]


def naive_groupby(d: Table, q: DetectionQuery) -> GroupComparison:
    """``Pr(O=1 | T=t)`` for both treatment labels."""
    t1, t0 = q.check(d)
    cells = group_weights(d, (q.treatment, q.outcome))
    means = {}
    for t in (t1, t0):
        n = sum(w for (tt, _), w in cells.items() if tt == t)
        if n <= 0:
            raise DatasetError(f"group {q.treatment}={t} is empty")
        means[t] = cells.get((t, q.positive), 0) / n
    return GroupComparison(t1, t0, means)


def _gap(model, q, t1, t0, fixed):
    hi = model.prob(q.outcome, q.positive, {q.treatment: t1, **fixed})
    lo = model.prob(q.outcome, q.positive, {q.treatment: t0, **fixed})
    return hi, lo


def adjusted_total_effect(d: Table, q: DetectionQuery, model: CausalModel | None = None) -> float:
    """``Pr(O=1 | do(T=treated)) - Pr(O=1 | do(T=control))``."""
    t1, t0 = q.check(d)
    model = model or CausalModel(d, q.dag)
    hi, lo = _gap(model, q, t1, t0, {})
    return hi - lo


@dataclass
class DirectEffect:
    """Controlled direct effects per observed mediator context.

    ``summary`` is the ``Pr(M=m)``-weighted mean over the contexts where
    both interventional probabilities are defined; contexts that hit a
    positivity gap are listed in ``undefined``.
    """

    mediators: tuple[str, ...]
    contexts: list[dict]
    summary: float
    undefined: list[str] = field(default_factory=list)


def controlled_direct_effect(d: Table, q: DetectionQuery, mediators=None,
                             model: CausalModel | None = None) -> DirectEffect:
    t1, t0 = q.check(d)
    model = model or CausalModel(d, q.dag)
    meds = tuple(q.dag.sort(mediators)) if mediators is not None else q.mediator_set
    if not meds:
        ate = adjusted_total_effect(d, q, model)
        return DirectEffect((), [{"context": "", "weight": 1.0, "effect": ate}], ate)
    weights = group_weights(d, meds)
    total = sum(weights.values())
    order = [{l: i for i, l in enumerate(d.domain(m))} for m in meds]
    contexts, undefined = [], []
    for m in sorted(weights, key=lambda k: tuple(o[l] for o, l in zip(order, k))):
        label = ",".join(f"{a}={b}" for a, b in zip(meds, m))
        try:
            hi, lo = _gap(model, q, t1, t0, dict(zip(meds, m)))
        except PositivityError:
            undefined.append(label)
            continue
        contexts.append({"context": label, "weight": weights[m] / total, "treated": hi, "control": lo,
                         "effect": hi - lo})
    if not contexts:
        raise PositivityError(f"no mediator context of {list(meds)} has a defined direct effect")
    mass = sum(c["weight"] for c in contexts)
    summary = sum(c["weight"] * c["effect"] for c in contexts) / mass
    return DirectEffect(meds, contexts, summary, undefined)


@dataclass
class MediatorScore:
    mediator: str
    contribution: float
    direct: float
    explanations: list[dict]
    contexts: list[dict] = field(default_factory=list)


def _explanations(d, q, m, t1, t0, top):
    """Mediator levels scored by the group composition shift times their association with O."""
    cells = group_weights(d, (q.treatment, m, q.outcome))
    n_t = {t: sum(w for (tt, _, _), w in cells.items() if tt == t) for t in (t1, t0)}
    n_m = {}
    pos_m = {}
    for (t, l, o), w in cells.items():
        n_m[l] = n_m.get(l, 0) + w
        if o == q.positive:
            pos_m[l] = pos_m.get(l, 0) + w
    n = sum(n_m.values())
    base = sum(pos_m.values()) / n
    out = []
    for l in d.domain(m):
        if not n_m.get(l):
            continue
        share1 = sum(w for (t, ll, _), w in cells.items() if t == t1 and ll == l) / n_t[t1]
        share0 = sum(w for (t, ll, _), w in cells.items() if t == t0 and ll == l) / n_t[t0]
        assoc = pos_m.get(l, 0) / n_m[l] - base
        out.append({"level": f"{m}={l}", "share_treated": share1, "share_control": share0,
                    "association": assoc, "score": (share1 - share0) * assoc})
    out.sort(key=lambda e: (-round(abs(e["score"]), 12), e["level"]))
    return out[:top]


def rank_mediators(d: Table, q: DetectionQuery, top: int = 3, model: CausalModel | None = None) -> list[MediatorScore]:
    """Contribution of each mediator: ``|total - direct effect fixing only it|``.

    Sorted by descending contribution, ties by name.
    """
    t1, t0 = q.check(d)
    model = model or CausalModel(d, q.dag)
    meds = q.mediator_set
    if not meds:
        raise DatasetError(f"no mediators between {q.treatment!r} and {q.outcome!r}")
    ate = adjusted_total_effect(d, q, model)
    scores = []
    for m in meds:
        de = controlled_direct_effect(d, q, [m], model)
        scores.append(MediatorScore(m, abs(ate - de.summary), de.summary, _explanations(d, q, m, t1, t0, top),
                                    de.contexts))
    scores.sort(key=lambda s: (-round(s.contribution, 12), s.mediator))
    return scores


@dataclass
class DetectionReport:
    query: DetectionQuery
    naive: GroupComparison
    total: float
    direct: DirectEffect
    mediators: list[MediatorScore]

    @property
    def indirect(self) -> float:
        return self.total - self.direct.summary

    def records(self) -> list[dict]:
        q = self.query
        recs = [
            {"record": "naive", "treatment": q.treatment, "outcome": q.outcome,
             "means": self.naive.means, "difference": self.naive.difference},
            {"record": "total_effect", "estimand": "ATE", "value": self.total,
             "confounders": list(q.confounders)},
            {"record": "direct_effect", "estimand": "controlled direct effect", "mediators": list(self.direct.mediators),
             "value": self.direct.summary, "contexts": self.direct.contexts, "undefined": self.direct.undefined},
            {"record": "indirect_effect", "estimand": "total minus direct (difference method)", "value": self.indirect},
        ]
        for rank, s in enumerate(self.mediators, start=1):
            recs.append({"record": "mediator", "rank": rank, "mediator": s.mediator, "contribution": s.contribution,
                         "direct_fixing_only_this": s.direct, "contexts": s.contexts,
                         "explanations": s.explanations})
        return recs

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records())

    def to_text(self) -> str:
        q, nv = self.query, self.naive
        lines = [f"effect of {q.treatment}={nv.treated} (vs {nv.control}) on Pr({q.outcome}={q.positive})",
                 f"  confounders: {', '.join(q.confounders) or '(none)'}",
                 f"  mediators:   {', '.join(q.mediator_set) or '(none)'}",
                 "naive group-by:"]
        for t in (nv.treated, nv.control):
            lines.append(f"  Pr({q.outcome}={q.positive} | {q.treatment}={t}) = {nv.means[t]:.6f}")
        lines.append(f"  difference = {nv.difference:+.6f}")
        lines.append(f"total effect (do-adjusted)          = {self.total:+.6f}")
        lines.append(f"controlled direct effect (weighted) = {self.direct.summary:+.6f}")
        lines.append(f"indirect effect (total - direct)    = {self.indirect:+.6f}")
        if self.direct.undefined:
            lines.append(f"  {len(self.direct.undefined)} mediator context(s) skipped for positivity")
        if self.mediators:
            lines.append("mediator ranking:")
            for rank, s in enumerate(self.mediators, start=1):
                lines.append(f"  {rank}. {s.mediator}: contribution {s.contribution:.6f}, "
                             f"direct effect fixing only {s.mediator} {s.direct:+.6f}")
                for c in s.contexts:
                    lines.append(f"       do({c['context']}): {c['effect']:+.6f} (weight {c['weight']:.3f})")
                for e in s.explanations:
                    lines.append(f"       {e['level']}: share {e['share_treated']:.3f} vs {e['share_control']:.3f}, "
                                 f"association {e['association']:+.3f}")
        return "\n".join(lines) + "\n"


def detect(d: Table, q: DetectionQuery, top: int = 3) -> DetectionReport:
    """Run every detection query and bundle the results."""
    model = CausalModel(d, q.dag)
    naive = naive_groupby(d, q)
    total = adjusted_total_effect(d, q, model)
    direct = controlled_direct_effect(d, q, model=model)
    meds = rank_mediators(d, q, top, model) if q.mediator_set else []
    return DetectionReport(q, naive, total, direct, meds)
