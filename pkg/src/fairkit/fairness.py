"""Associational and causal fairness metrics.

All metrics read a binary sensitive attribute ``S`` (the protected label is
``S=1``, the other label ``S=0``) and a binary classifier outcome ``O``
whose positive label is ``O=1``. Gap metrics return a :class:`MetricReport`
whose verdict is ``gap <= tau``.

Associational metrics are plain conditional probabilities of the data.
Causal metrics (proxy fairness, K-fairness, justifiable fairness) evaluate
interventional probabilities on a :class:`~fairkit.intervention.CausalModel`.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .dag import CausalDag, directed_paths
from .data import EPS_EXACT, CiStatement, Table, ci_holds, group_weights, prob
from .errors import FairnessError, ParseError, PositivityError, UndefinedStratumError
from .intervention import CausalModel

__all__ = [
    "FairnessSpec",
    "MetricReport",
    "JustifiabilityResult",
    "ImpossibilityReport",
    "parse_spec",
    "load_spec",
    "demographic_parity",
    "conditional_statistical_parity",
    "equalized_odds",
    "predictive_parity",
    "proxy_fairness",
    "k_fair",
    "justifiably_fair",
    "impossibility_check",
    "rod",
    "rod_strata",
    "DEFAULT_TAU",
    "ENUMERATION_CAP",
]

DEFAULT_TAU = 1e-6
ENUMERATION_CAP = 12
IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class FairnessSpec:
    """Declared roles of the variables.

    ``inadmissible=None`` means "every variable not otherwise named"; see
    :meth:`resolve`.
    """

    sensitive: str
    protected: str
    outcome: str
    positive: str = "1"
    label: str | None = None
    label_positive: str | None = None
    admissible: tuple[str, ...] = ()
    inadmissible: tuple[str, ...] | None = None
    proxy: tuple[str, ...] = ()

    def __post_init__(self):
        for f in ("admissible", "proxy"):
            object.__setattr__(self, f, tuple(getattr(self, f)))
        if self.inadmissible is not None:
            object.__setattr__(self, "inadmissible", tuple(self.inadmissible))
        roles = [self.sensitive, self.outcome] + ([self.label] if self.label else [])
        if len(set(roles)) != len(roles):
            raise FairnessError(f"sensitive, outcome and label must be distinct, got {roles}")
        if self.label and self.label_positive is None:
            object.__setattr__(self, "label_positive", "1")
        bad = set(self.admissible) & set(roles)
        if bad:
            raise FairnessError(f"{sorted(bad)} cannot be admissible: already a role variable")
        if self.inadmissible is not None:
            if set(self.admissible) & set(self.inadmissible):
                raise FairnessError("admissible and inadmissible sets overlap")
            if set(self.inadmissible) & set(roles):
                raise FairnessError("role variables cannot be listed as inadmissible")
        if self.outcome in self.proxy:
            raise FairnessError("the outcome cannot be a proxy")

    @property
    def roles(self) -> tuple[str, ...]:
        return (self.sensitive, self.outcome) + ((self.label,) if self.label else ())

    def resolve(self, columns: Sequence[str]) -> "FairnessSpec":
        """Check names against ``columns`` and fill the inadmissible set.

        Columns not listed as admissible default to inadmissible.
        """
        cols = list(columns)
        named = set(self.roles) | set(self.admissible) | set(self.inadmissible or ()) | set(self.proxy)
        unknown = sorted(named - set(cols))
        if unknown:
            raise FairnessError(f"spec names variables absent from the data: {unknown}")
        rest = [c for c in cols if c not in self.roles and c not in self.admissible]
        return replace(self, inadmissible=tuple(rest))

    def groups(self, table: Table) -> tuple[str, str]:
        """(protected label, privileged label) of the sensitive attribute."""
        return _binary(table, self.sensitive, self.protected, "sensitive")

    def outcome_labels(self, table: Table) -> tuple[str, str]:
        """(positive, negative) outcome labels."""
        return _binary(table, self.outcome, self.positive, "outcome")

    def label_labels(self, table: Table) -> tuple[str, str]:
        if not self.label:
            raise FairnessError("this metric needs a training label; declare 'label Y=...'")
        return _binary(table, self.label, self.label_positive, "label")

    def swapped(self, table: Table) -> "FairnessSpec":
        """The same spec with the protected and privileged groups exchanged."""
        return replace(self, protected=self.groups(table)[1])

    def format(self) -> str:
        lines = [f"sensitive {self.sensitive}={self.protected}", f"outcome {self.outcome}={self.positive}"]
        if self.label:
            lines.append(f"label {self.label}={self.label_positive}")
        if self.admissible:
            lines.append("admissible " + ",".join(self.admissible))
        if self.inadmissible:
            lines.append("inadmissible " + ",".join(self.inadmissible))
        if self.proxy:
            lines.append("proxy " + ",".join(self.proxy))
        return "\n".join(lines) + "\n"


def _binary(table, var, one, role):
    dom = table.domain(var)
    if len(dom) != 2:
        raise FairnessError(f"{role} variable {var!r} must be binary, has domain {list(dom)}")
    if one not in dom:
        raise FairnessError(f"{role} label {one!r} not in the domain {list(dom)} of {var!r}")
    other = dom[0] if dom[1] == one else dom[1]
    return one, other


_ASSIGN = re.compile(r"^([^\s=,]+)\s*=\s*([^\s=,]+)$")


def parse_spec(text: str, path=None) -> FairnessSpec:
    """Parse the line format::

        sensitive G=female
        outcome O=1
        label Y=1
        admissible D
        inadmissible H
        proxy G,H
    """
    fields = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        if key in fields:
            raise ParseError(f"{key!r} declared twice", no, path)
        if key in ("sensitive", "outcome", "label"):
            m = _ASSIGN.match(rest)
            if not m:
                raise ParseError(f"expected '{key} NAME=label', got {line!r}", no, path)
            fields[key] = (m.group(1), m.group(2))
        elif key in ("admissible", "inadmissible", "proxy"):
            names = tuple(v.strip() for v in rest.split(",") if v.strip())
            if rest and len(names) != len(rest.split(",")):
                raise ParseError(f"empty name in {line!r}", no, path)
            fields[key] = names
        else:
            raise ParseError(f"unknown declaration {key!r}", no, path)
    for req in ("sensitive", "outcome"):
        if req not in fields:
            raise ParseError(f"missing '{req}' declaration", path=path)
    label = fields.get("label", (None, None))
    try:
        return FairnessSpec(
            sensitive=fields["sensitive"][0],
            protected=fields["sensitive"][1],
            outcome=fields["outcome"][0],
            positive=fields["outcome"][1],
            label=label[0],
            label_positive=label[1],
            admissible=fields.get("admissible", ()),
            inadmissible=fields.get("inadmissible"),
            proxy=fields.get("proxy", ()),
        )
    except FairnessError as exc:
        raise ParseError(str(exc), path=path) from None


def load_spec(path) -> FairnessSpec:
    path = Path(path)
    return parse_spec(path.read_text(encoding="utf-8"), path=str(path))


@dataclass
class MetricReport:
    """Outcome of one gap metric.

    ``gaps`` holds the per-group, per-stratum or per-context differences;
    ``gap`` is their maximum.
    """

    metric: str
    values: dict[str, float]
    gaps: dict[str, float]
    tau: float = DEFAULT_TAU
    uncomparable: list[str] = field(default_factory=list)
    note: str | None = None

    @property
    def gap(self) -> float:
        return max(self.gaps.values()) if self.gaps else 0.0

    @property
    def verdict(self) -> bool:
        return self.gap <= self.tau

    @property
    def worst(self) -> str | None:
        """Key of the first largest gap."""
        if not self.gaps:
            return None
        g = self.gap
        return next(k for k, v in self.gaps.items() if v == g)

    def to_dict(self) -> dict:
        out = {
            "metric": self.metric,
            "gap": self.gap,
            "tau": self.tau,
            "fair": self.verdict,
            "gaps": dict(self.gaps),
            "values": dict(self.values),
        }
        if self.uncomparable:
            out["uncomparable"] = list(self.uncomparable)
        if self.note:
            out["note"] = self.note
        return out


def _fmt(assign: dict) -> str:
    return ",".join(f"{k}={v}" for k, v in assign.items())


def _p(table, event, given, what):
    try:
        return prob(table, event, given)
    except UndefinedStratumError:
        raise FairnessError(f"{what}: no data for {_fmt(given)}") from None


def demographic_parity(d: Table, spec: FairnessSpec, tau: float = DEFAULT_TAU) -> MetricReport:
    """``Pr(O=1 | S=1)`` against ``Pr(O=1 | S=0)``."""
    s1, s0 = spec.groups(d)
    pos, _ = spec.outcome_labels(d)
    S, O = spec.sensitive, spec.outcome
    values = {}
    for s in (s1, s0):
        values[f"Pr({O}={pos}|{S}={s})"] = _p(d, {O: pos}, {S: s}, "demographic parity")
    a, b = values.values()
    return MetricReport("demographic_parity", values, {S: abs(a - b)}, tau)


def _strata(d, names):
    """Observed assignments of ``names`` in canonical order."""
    names = tuple(names)
    if not names:
        return [()]
    order = [{l: i for i, l in enumerate(d.domain(n))} for n in names]
    keys = group_weights(d, names)
    return sorted((k for k, w in keys.items() if w > 0), key=lambda k: tuple(o[l] for o, l in zip(order, k)))


def conditional_statistical_parity(d: Table, spec: FairnessSpec, A: Iterable[str] | None = None,
                                   tau: float = DEFAULT_TAU) -> MetricReport:
    """Per-stratum parity ``|Pr(O=1|S=1,A=a) - Pr(O=1|S=0,A=a)|``.

    Strata lacking one of the groups are listed as uncomparable.
    """
    A = d.ordered(spec.admissible if A is None else A)
    s1, s0 = spec.groups(d)
    pos, _ = spec.outcome_labels(d)
    S, O = spec.sensitive, spec.outcome
    values, gaps, skipped = {}, {}, []
    for a in _strata(d, A):
        ctx = dict(zip(A, a))
        label = _fmt(ctx) or "all"
        try:
            p1 = prob(d, {O: pos}, {S: s1, **ctx})
            p0 = prob(d, {O: pos}, {S: s0, **ctx})
        except UndefinedStratumError:
            skipped.append(label)
            continue
        values[f"Pr({O}={pos}|{_fmt({S: s1, **ctx})})"] = p1
        values[f"Pr({O}={pos}|{_fmt({S: s0, **ctx})})"] = p0
        gaps[label] = abs(p1 - p0)
    if not gaps:
        raise FairnessError(f"no stratum of {list(A)} contains both groups")
    return MetricReport("conditional_statistical_parity", values, gaps, tau, skipped)


def equalized_odds(d: Table, spec: FairnessSpec, tau: float = DEFAULT_TAU) -> MetricReport:
    """False-positive and false-negative rate gaps between the groups."""
    s1, s0 = spec.groups(d)
    pos, neg = spec.outcome_labels(d)
    y1, y0 = spec.label_labels(d)
    S, O, Y = spec.sensitive, spec.outcome, spec.label
    empty = [f"{S}={s},{Y}={y}" for s in (s1, s0) for y in (y1, y0) if prob(d, {S: s, Y: y}) == 0]
    if empty:
        raise FairnessError(f"equalized odds needs every (S, Y) cell; empty: {empty}")
    fp = {s: prob(d, {O: pos}, {S: s, Y: y0}) for s in (s1, s0)}
    fn = {s: prob(d, {O: neg}, {S: s, Y: y1}) for s in (s1, s0)}
    values = {}
    for s in (s1, s0):
        values[f"FP({S}={s})"] = fp[s]
        values[f"FN({S}={s})"] = fn[s]
    gaps = {"FP": abs(fp[s1] - fp[s0]), "FN": abs(fn[s1] - fn[s0])}
    return MetricReport("equalized_odds", values, gaps, tau)


def predictive_parity(d: Table, spec: FairnessSpec, tau: float = DEFAULT_TAU) -> MetricReport:
    """``|Pr(Y=1|O=o,S=1) - Pr(Y=1|O=o,S=0)|`` for both outcome labels."""
    s1, s0 = spec.groups(d)
    pos, neg = spec.outcome_labels(d)
    y1, _ = spec.label_labels(d)
    S, O, Y = spec.sensitive, spec.outcome, spec.label
    empty = [f"{S}={s},{O}={o}" for s in (s1, s0) for o in (pos, neg) if prob(d, {S: s, O: o}) == 0]
    if empty:
        raise FairnessError(f"predictive parity needs every (S, O) cell; empty: {empty}")
    values, gaps = {}, {}
    for o in (neg, pos):
        p = {s: prob(d, {Y: y1}, {O: o, S: s}) for s in (s1, s0)}
        for s in (s1, s0):
            values[f"Pr({Y}={y1}|{O}={o},{S}={s})"] = p[s]
        gaps[f"{O}={o}"] = abs(p[s1] - p[s0])
    return MetricReport("predictive_parity", values, gaps, tau)


def _model(d, dag, model):
    if model is not None:
        return model
    return CausalModel(d, dag)


def _contexts(d, names):
    names = tuple(names)
    return [dict(zip(names, k)) for k in itertools.product(*(d.domain(n) for n in names))]


def proxy_fairness(d: Table, dag: CausalDag, spec: FairnessSpec, P: Iterable[str] | None = None,
                   tau: float = DEFAULT_TAU, model: CausalModel | None = None) -> MetricReport:
    """Spread of ``Pr(O=1 | do(P=p))`` over every assignment ``p`` of the proxies."""
    P = d.ordered(spec.proxy if P is None else P)
    if not P:
        raise FairnessError("proxy fairness needs a nonempty proxy set")
    pos, _ = spec.outcome_labels(d)
    m = _model(d, dag, model)
    values = {}
    for ctx in _contexts(d, P):
        values[f"Pr({spec.outcome}={pos}|do({_fmt(ctx)}))"] = m.prob(spec.outcome, pos, ctx)
    vs = list(values.values())
    return MetricReport("proxy_fairness", values, {_fmt({k: '*' for k in P}): max(vs) - min(vs)}, tau)


def k_fair(d: Table, dag: CausalDag, spec: FairnessSpec, K: Iterable[str] = (), tau: float = DEFAULT_TAU,
           model: CausalModel | None = None) -> MetricReport:
    """K-fairness: equal ``Pr(O=o | do(S=s), do(K=k))`` across groups in every context.

    Contexts in which either group's value is undefined are uncomparable.
    Raises :class:`PositivityError` when no context is comparable.
    """
    K = d.ordered(K)
    S, O = spec.sensitive, spec.outcome
    if S in K or O in K:
        raise FairnessError("K must exclude the sensitive attribute and the outcome")
    s1, s0 = spec.groups(d)
    spec.outcome_labels(d)
    m = _model(d, dag, model)
    values, gaps, skipped = {}, {}, []
    first_error = None
    for ctx in _contexts(d, K):
        label = _fmt(ctx) or "all"
        try:
            dist = {s: m.distribution(O, {S: s, **ctx}) for s in (s1, s0)}
        except PositivityError as exc:
            skipped.append(label)
            first_error = first_error or exc
            continue
        ctx_gap = 0.0
        for o in d.domain(O):
            p1, p0 = dist[s1][(o,)], dist[s0][(o,)]
            values[f"Pr({O}={o}|do({_fmt({S: s1, **ctx})}))"] = p1
            values[f"Pr({O}={o}|do({_fmt({S: s0, **ctx})}))"] = p0
            ctx_gap = max(ctx_gap, abs(p1 - p0))
        gaps[label] = ctx_gap
    if not gaps:
        raise first_error
    return MetricReport(f"k_fair[{','.join(K)}]", values, gaps, tau, skipped)


@dataclass
class JustifiabilityResult:
    """``verdict`` is ``"fair"``, ``"unfair"`` or ``"unknown"``."""

    verdict: str
    mode: str
    evidence: dict = field(default_factory=dict)

    @property
    def fair(self) -> bool:
        return self.verdict == "fair"

    def to_dict(self) -> dict:
        return {"metric": "justifiable", "mode": self.mode, "verdict": self.verdict,
                "fair": self.fair, "evidence": self.evidence}


def justifiably_fair(d: Table, dag: CausalDag, spec: FairnessSpec, mode: str = "enumerate",
                     tau: float = DEFAULT_TAU, cap: int = ENUMERATION_CAP,
                     epsilon: float = EPS_EXACT, policy: str = "exact") -> JustifiabilityResult:
    """Justifiable fairness: K-fair for every ``K`` containing the admissible set.

    Modes
    -----
    enumerate
        Exhaustive check of every superset (needs ``|V - {S,O}| <= cap``).
    graph
        Sufficient: every directed path from ``S`` to ``O`` meets an
        admissible variable. Returns ``"unknown"`` with the offending path
        otherwise.
    ci
        Sufficient: ``(O _|_ I + {S} | A)`` holds in the data.
    """
    spec = spec.resolve(d.columns)
    S, O = spec.sensitive, spec.outcome
    A = d.ordered(spec.admissible)
    if mode == "enumerate":
        others = [c for c in d.columns if c not in (S, O)]
        if len(others) > cap:
            raise FairnessError(
                f"{len(others)} candidate variables exceed the enumeration cap of {cap}; use mode 'graph' or 'ci'"
            )
        extra = [c for c in others if c not in A]
        m = CausalModel(d, dag)
        checked, uncomparable = [], []
        for r in range(len(extra) + 1):
            for combo in itertools.combinations(extra, r):
                K = d.ordered(A + tuple(combo))
                try:
                    rep = k_fair(d, dag, spec, K, tau, model=m)
                except PositivityError:
                    uncomparable.append(list(K))
                    continue
                checked.append(list(K))
                if not rep.verdict:
                    ctx = rep.worst
                    o = _worst_outcome(rep, d, spec, ctx)
                    return JustifiabilityResult("unfair", mode, {
                        "K": list(K), "context": ctx, "outcome": o, "gap": rep.gap,
                        "values": {k: v for k, v in rep.values.items() if _in_context(k, ctx)},
                        "checked": checked,
                    })
        ev = {"checked": checked}
        if uncomparable:
            ev["uncomparable"] = uncomparable
        return JustifiabilityResult("fair", mode, ev)

    if mode == "graph":
        admissible = set(A)
        for path in directed_paths(dag, S, O):
            if not admissible.intersection(path[1:-1]):
                return JustifiabilityResult("unknown", mode, {"unblocked_path": path})
        return JustifiabilityResult("fair", mode, {
            "reason": f"every directed path from {S} to {O} passes through an admissible variable"
        })

    if mode == "ci":
        stmt = CiStatement((O,), tuple(spec.inadmissible) + (S,), A)
        res = ci_holds(d, stmt, policy=policy, epsilon=epsilon)
        ev = {"statement": str(stmt), "cmi": res.cmi, "statistic": res.statistic}
        return JustifiabilityResult("fair" if res.verdict else "unknown", mode, ev)

    raise FairnessError(f"unknown mode {mode!r}; expected enumerate, graph or ci")


def _in_context(key, ctx):
    if ctx == "all":
        return True
    inner = key[key.index("do(") + 3:-2]
    return all(part in inner.split(",") for part in ctx.split(","))


def _worst_outcome(rep, d, spec, ctx):
    S, O = spec.sensitive, spec.outcome
    s1, s0 = spec.groups(d)
    extra = "" if ctx == "all" else "," + ctx
    best, label = -1.0, None
    # the positive outcome wins ties (binary outcomes always tie)
    for o in sorted(d.domain(O), key=lambda o: o != spec.positive):
        g = abs(rep.values[f"Pr({O}={o}|do({S}={s1}{extra}))"] - rep.values[f"Pr({O}={o}|do({S}={s0}{extra}))"])
        if g > best + 1e-12:
            best, label = g, o
    return label


@dataclass
class ImpossibilityReport:
    eo_gap: float | None
    pp_gap: float | None
    prevalence_gap: float
    identity: dict
    degenerate: list
    tau: float = DEFAULT_TAU

    @property
    def identity_holds(self) -> bool:
        return all(v["holds"] for v in self.identity.values())

    def to_dict(self) -> dict:
        return {
            "metric": "impossibility",
            "eo_gap": self.eo_gap,
            "pp_gap": self.pp_gap,
            "prevalence_gap": self.prevalence_gap,
            "identity": self.identity,
            "identity_holds": self.identity_holds,
            "degenerate": self.degenerate,
            "fair": self.fair,
        }

    @property
    def fair(self) -> bool:
        """Both EO and PP hold within ``tau``."""
        return (self.eo_gap is not None and self.pp_gap is not None
                and self.eo_gap <= self.tau and self.pp_gap <= self.tau)


def impossibility_check(d: Table, spec: FairnessSpec, tau: float = DEFAULT_TAU) -> ImpossibilityReport:
    """Equalized odds versus predictive parity.

    For each group ``i`` both sides of

        FP_i / (1 - FN_i) = Pr(Y=1|S=i) / Pr(Y=0|S=i) * (1 - PPV_i) / PPV_i

    are computed from separate conditional probabilities. Groups with a
    zero denominator are listed as degenerate and skipped.
    """
    s1, s0 = spec.groups(d)
    pos, neg = spec.outcome_labels(d)
    y1, y0 = spec.label_labels(d)
    S, O, Y = spec.sensitive, spec.outcome, spec.label

    def safe(metric):
        try:
            return metric(d, spec, tau).gap
        except FairnessError:
            return None

    prev = {}
    for s in (s1, s0):
        prev[s] = _p(d, {Y: y1}, {S: s}, "prevalence")
    identity, degenerate = {}, []
    for i, s in (("1", s1), ("0", s0)):
        try:
            fp = prob(d, {O: pos}, {S: s, Y: y0})
            fn = prob(d, {O: neg}, {S: s, Y: y1})
            ppv = prob(d, {Y: y1}, {O: pos, S: s})
        except UndefinedStratumError as exc:
            degenerate.append(f"{S}={s}: {exc}")
            continue
        if fn == 1 or ppv == 0 or prev[s] == 1:
            degenerate.append(f"{S}={s}: zero denominator")
            continue
        lhs = fp / (1 - fn)
        rhs = (prev[s] / (1 - prev[s])) * ((1 - ppv) / ppv)
        identity[f"{S}={s}"] = {"lhs": lhs, "rhs": rhs, "holds": abs(lhs - rhs) <= IDENTITY_TOL}
    return ImpossibilityReport(
        eo_gap=safe(equalized_odds),
        pp_gap=safe(predictive_parity),
        prevalence_gap=abs(prev[s1] - prev[s0]),
        identity=identity,
        degenerate=degenerate,
        tau=tau,
    )


def rod_strata(d: Table, spec: FairnessSpec, A: Iterable[str] | None = None) -> list[dict]:
    """Per-stratum odds ratios of the protected group receiving ``O=1``.

    Only strata in which all four (S, O) cells are positive are returned;
    ``weight`` is ``Pr(A=a)`` renormalized over those strata.
    """
    A = d.ordered(spec.admissible if A is None else A)
    s1, s0 = spec.groups(d)
    pos, neg = spec.outcome_labels(d)
    S, O = spec.sensitive, spec.outcome
    cells = group_weights(d, A + (S, O))
    out = []
    for a in _strata(d, A):
        n = {(s, o): cells.get(a + (s, o), 0) for s in (s1, s0) for o in (pos, neg)}
        if min(n.values()) <= 0:
            continue
        ratio = (n[s1, pos] * n[s0, neg]) / (n[s1, neg] * n[s0, pos])
        out.append({"stratum": _fmt(dict(zip(A, a))) or "all", "mass": sum(n.values()), "odds_ratio": ratio})
    if not out:
        raise FairnessError("no stratum has all four (S, O) cells populated")
    total = sum(r["mass"] for r in out)
    for r in out:
        r["weight"] = r.pop("mass") / total
    return out


def rod(d: Table, spec: FairnessSpec, A: Iterable[str] | None = None) -> float:
    """Ratio of observational discrimination given the admissible variables.

    ``exp`` of the stratum-weighted mean log odds ratio; ``1.0`` means no
    association between ``S`` and ``O`` within the admissible strata, and
    swapping the groups gives the reciprocal. This weighted log-odds
    summary is a reconstruction, not a published formula.
    """
    strata = rod_strata(d, spec, A)
    return math.exp(math.fsum(r["weight"] * math.log(r["odds_ratio"]) for r in strata))
