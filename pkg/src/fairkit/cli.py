"""Command-line front end: ``fairkit check|repair|detect``.

Exit codes are 0 (fair, or repair met its tolerance), 2 (some verdict
unfair or not certified) and 1 (bad input or any other fault), so shell
pipelines can gate on them. Every report echoes the resolved
configuration, and output is byte-identical for identical inputs, flags
and seed.

Relative paths that do not exist are looked up in ``$FAIRKIT_FIXTURES``
and then in the bundled fixture directory, so ``--data college1.csv``
works from anywhere.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from .dag import load_dag
from .data import CiStatement, load_csv, write_csv
from .errors import FairkitError
from .fairness import (DEFAULT_TAU, FairnessSpec, conditional_statistical_parity, demographic_parity,
                       equalized_odds, impossibility_check, justifiably_fair, k_fair, load_spec,
                       predictive_parity, proxy_fairness, rod, rod_strata)
from .intervention import CausalModel

__all__ = ["RunConfig", "build_parser", "main", "cmd_check", "cmd_repair", "cmd_detect", "resolve_path",
           "FIXTURE_DIR", "METRICS", "ALGORITHMS"]

FIXTURE_DIR = Path(__file__).parent / "fixtures"
METRICS = ("dp", "csp", "eo", "pp", "proxy", "kfair", "justifiable", "impossibility", "rod")
LABEL_METRICS = ("eo", "pp", "impossibility")
DAG_METRICS = ("proxy", "kfair", "justifiable")
ALGORITHMS = ("ic", "mf", "hard", "soft")
SOFT_DEFAULT_EPSILON = 0.01

EXIT_FAIR, EXIT_FAULT, EXIT_UNFAIR = 0, 1, 2


class ConfigError(FairkitError):
    pass


@dataclass
class RunConfig:
    command: str
    data: str
    dag: str | None = None
    spec: str | None = None
    data_format: str = "csv"
    metrics: tuple[str, ...] = ()
    mode: str = "enumerate"
    algo: str = "ic"
    epsilon: float | None = None
    tau: float = DEFAULT_TAU
    seed: int = 0
    budget: int = 20000
    out: str | None = None
    format: str = "text"

    def validate(self) -> "RunConfig":
        if self.tau < 0 or not math.isfinite(self.tau):
            raise ConfigError(f"--tau must be a finite value >= 0, got {self.tau}")
        if self.epsilon is not None and (self.epsilon < 0 or not math.isfinite(self.epsilon)):
            raise ConfigError(f"--epsilon must be a finite value >= 0, got {self.epsilon}")
        if self.budget < 1:
            raise ConfigError(f"--budget must be >= 1, got {self.budget}")
        bad = [m for m in self.metrics if m not in METRICS]
        if bad:
            raise ConfigError(f"unknown metrics {bad}; choose from {','.join(METRICS)}")
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algo!r}")
        return self

    def echo(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}


def resolve_path(p: str) -> Path:
    """``p`` itself if it exists, else the same name under the fixture directories."""
    path = Path(p)
    if path.exists():
        return path
    if not path.is_absolute():
        for root in (os.environ.get("FAIRKIT_FIXTURES"), FIXTURE_DIR):
            if root and (Path(root) / path).exists():
                return Path(root) / path
    raise ConfigError(f"file not found: {p}")


def _num(x) -> str:
    return "n/a" if x is None else f"{x:.10g}"


# ---------------------------------------------------------------------------
# loading

def _load(cfg: RunConfig, need_dag: bool, need_spec: bool):
    dag = None
    if cfg.dag:
        dag = load_dag(resolve_path(cfg.dag))
    elif need_dag:
        raise ConfigError("--dag is required for this command")
    if cfg.data_format == "adult":
        from .adult import load_adult
        d = load_adult(resolve_path(cfg.data))
    else:
        schema = [(v, dag.domain(v)) for v in dag.names] if dag else None
        d = load_csv(resolve_path(cfg.data), schema=schema)
    if dag is not None:
        extra = sorted(set(d.columns) ^ set(dag.names))
        if extra:
            raise ConfigError(f"dataset columns and DAG variables differ on {extra}")
    spec = None
    if cfg.spec:
        spec = load_spec(resolve_path(cfg.spec)).resolve(d.columns)
    elif need_spec:
        raise ConfigError("--spec is required for this command")
    return d, dag, spec


def _emit(cfg: RunConfig, text: str, out) -> None:
    out.write(text)
    if cfg.out and cfg.command != "repair":
        Path(cfg.out).write_text(text, encoding="utf-8")


def _render(cfg: RunConfig, payload: dict, lines: list[str]) -> str:
    if cfg.format == "json":
        return json.dumps({"config": cfg.echo(), **payload}, sort_keys=True, indent=2) + "\n"
    head = ["config:"] + [f"  {k} = {v}" for k, v in sorted(cfg.echo().items())]
    return "\n".join(head + lines) + "\n"


# ---------------------------------------------------------------------------
# check

def _default_metrics(spec: FairnessSpec, dag) -> tuple[str, ...]:
    out = []
    for m in METRICS:
        if m in LABEL_METRICS and spec.label is None:
            continue
        if m in DAG_METRICS and dag is None:
            continue
        if m == "proxy" and not spec.proxy:
            continue
        out.append(m)
    return tuple(out)


def _run_metric(name, d, dag, spec, cfg, model):
    """(fair, record, text lines) for one metric."""
    tau = cfg.tau
    if name in LABEL_METRICS and spec.label is None:
        raise ConfigError(f"metric {name!r} needs a 'label' declaration in the --spec file")
    if name in DAG_METRICS and dag is None:
        raise ConfigError(f"metric {name!r} needs --dag")
    if name == "justifiable":
        res = justifiably_fair(d, dag, spec, mode=cfg.mode, tau=tau)
        ev = ", ".join(f"{k}={v}" for k, v in res.evidence.items() if k != "checked")
        return res.fair, res.to_dict(), [f"justifiable [{res.mode}]: {res.verdict}" + (f" ({ev})" if ev else "")]
    if name == "impossibility":
        rep = impossibility_check(d, spec, tau)
        lines = [f"impossibility: EO gap {_num(rep.eo_gap)}, PP gap {_num(rep.pp_gap)}, "
                 f"prevalence gap {_num(rep.prevalence_gap)}; identity holds: {rep.identity_holds}"]
        for g, v in rep.identity.items():
            lines.append(f"  {g}: {_num(v['lhs'])} vs {_num(v['rhs'])}")
        return rep.fair, rep.to_dict(), lines
    if name == "rod":
        value = rod(d, spec)
        fair = abs(math.log(value)) <= tau
        rec = {"metric": "rod", "value": value, "ln_rod": math.log(value), "tau": tau, "fair": fair,
               "strata": rod_strata(d, spec)}
        return fair, rec, [f"rod: {_num(value)} (ln {_num(math.log(value))}) -> {'fair' if fair else 'unfair'}"]
    if name == "dp":
        rep = demographic_parity(d, spec, tau)
    elif name == "csp":
        rep = conditional_statistical_parity(d, spec, tau=tau)
    elif name == "eo":
        rep = equalized_odds(d, spec, tau)
    elif name == "pp":
        rep = predictive_parity(d, spec, tau)
    elif name == "proxy":
        rep = proxy_fairness(d, dag, spec, tau=tau, model=model)
    else:
        rep = k_fair(d, dag, spec, spec.admissible, tau, model=model)
    lines = [f"{rep.metric}: gap {_num(rep.gap)} -> {'fair' if rep.verdict else 'unfair'}"]
    lines += [f"  {k} = {_num(v)}" for k, v in rep.values.items()]
    if len(rep.gaps) > 1:
        lines += [f"  gap[{k}] = {_num(v)}" for k, v in rep.gaps.items()]
    if rep.uncomparable:
        lines.append(f"  uncomparable: {', '.join(rep.uncomparable)}")
    return rep.verdict, rep.to_dict(), lines


def cmd_check(cfg: RunConfig, out=sys.stdout) -> int:
    d, dag, spec = _load(cfg, need_dag=False, need_spec=True)
    metrics = cfg.metrics or _default_metrics(spec, dag)
    cfg.metrics = tuple(metrics)
    model = CausalModel(d, dag) if dag is not None else None
    records, lines, all_fair = [], ["spec: " + "; ".join(spec.format().splitlines())], True
    for m in metrics:
        fair, rec, text = _run_metric(m, d, dag, spec, cfg, model)
        all_fair &= bool(fair)
        records.append(rec)
        lines += text
    code = EXIT_FAIR if all_fair else EXIT_UNFAIR
    lines.append(f"verdict: {'fair' if all_fair else 'unfair'}")
    _emit(cfg, _render(cfg, {"results": records, "fair": all_fair, "exit": code}, lines), out)
    return code


# ---------------------------------------------------------------------------
# repair

def repair_constraint(spec: FairnessSpec, columns) -> CiStatement:
    """``(O _|_ I + {S} | A)`` over the resolved roles; a label column counts as inadmissible."""
    spec = spec.resolve(columns)
    right = [c for c in columns if c != spec.outcome and c not in spec.admissible]
    return CiStatement((spec.outcome,), right, spec.admissible)


def cmd_repair(cfg: RunConfig, out=sys.stdout) -> int:
    from .repair import (RepairProblem, combinatorial_repair, independent_coupling,
                         matrix_factorization_repair, verify_repair)

    d, _, spec = _load(cfg, need_dag=False, need_spec=True)
    if cfg.epsilon is None:
        cfg.epsilon = SOFT_DEFAULT_EPSILON if cfg.algo == "soft" else 0.0
    if cfg.algo == "hard" and cfg.epsilon != 0:
        raise ConfigError("--algo hard enforces the constraint exactly; drop --epsilon or use --algo soft")
    constraint = repair_constraint(spec, d.columns)
    p = RepairProblem(d, constraint, cfg.epsilon)
    if cfg.algo == "ic":
        plan = independent_coupling(p)
    elif cfg.algo == "mf":
        plan = matrix_factorization_repair(p)
    else:
        plan = combinatorial_repair(p, budget=cfg.budget, seed=cfg.seed)
    report = verify_repair(d, plan, p)
    repaired = plan.apply(d)
    code = EXIT_FAIR if report.satisfied else EXIT_UNFAIR
    lines = [f"constraint: {constraint}",
             f"algorithm: {plan.algorithm}" + (" (proven optimal)" if plan.proven_optimal else ""),
             f"cost: {plan.cost} tuple changes over {len(plan.deltas)} cells",
             f"cmi: {_num(report.cmi)} bits (epsilon {_num(cfg.epsilon)}) -> "
             f"{'satisfied' if report.satisfied else 'violated'}",
             f"total: {report.total_before} -> {report.total_after}",
             "marginal drift (total variation):"]
    lines += [f"  {c}: {_num(v)}" for c, v in report.drift.items()]
    lines.append(f"note: {report.note}")
    payload = {"constraint": str(constraint), "plan": plan.summary(), "verification": report.to_dict(),
               "exit": code}
    if cfg.out:
        root = Path(cfg.out)
        root.mkdir(parents=True, exist_ok=True)
        (root / "plan.csv").write_text(plan.to_csv(), encoding="utf-8")
        write_csv(repaired, root / "repaired.csv")
        suffix = "json" if cfg.format == "json" else "txt"
        lines.append(f"wrote: {root / 'plan.csv'}, {root / 'repaired.csv'}, {root / ('report.' + suffix)}")
        text = _render(cfg, payload, lines)
        (root / f"report.{suffix}").write_text(text, encoding="utf-8")
    else:
        lines += ["plan:"] + ["  " + ln for ln in plan.to_csv().splitlines()]
        text = _render(cfg, payload, lines)
    out.write(text)
    return code


# ---------------------------------------------------------------------------
# detect

def cmd_detect(cfg: RunConfig, out=sys.stdout) -> int:
    from .detect import DetectionQuery, detect

    d, dag, spec = _load(cfg, need_dag=True, need_spec=True)
    q = DetectionQuery(spec.sensitive, spec.protected, spec.outcome, spec.positive, dag)
    rep = detect(d, q)
    if cfg.format == "json":
        text = json.dumps({"config": cfg.echo()}, sort_keys=True) + "\n" + rep.to_jsonl()
    else:
        text = _render(cfg, {}, rep.to_text().rstrip("\n").splitlines())
    _emit(cfg, text, out)
    return EXIT_FAIR


# ---------------------------------------------------------------------------
# entry point

def _add_common(p, dag_required=False):
    p.add_argument("--data", required=True, help="dataset CSV (or raw Adult file with --data-format adult)")
    p.add_argument("--dag", required=dag_required, help="causal DAG file")
    p.add_argument("--spec", required=True, help="fairness spec file")
    p.add_argument("--data-format", choices=("csv", "adult"), default="csv")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU, help="fairness gap tolerance")
    p.add_argument("--epsilon", type=float, default=None, help="CMI tolerance in bits")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=20000, help="annealing moves")
    p.add_argument("--out", help="report file (check, detect) or output directory (repair)")
    p.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairkit", description="Causal fairness checks, detection and repair.")
    sub = parser.add_subparsers(dest="command", required=True)
    c = sub.add_parser("check", help="evaluate fairness metrics")
    _add_common(c)
    c.add_argument("--metrics", default="", help=f"comma list from {','.join(METRICS)}")
    c.add_argument("--mode", choices=("enumerate", "graph", "ci"), default="enumerate",
                   help="justifiable fairness decision procedure")
    r = sub.add_parser("repair", help="repair the data so (O _|_ I,S | A) holds")
    _add_common(r)
    r.add_argument("--algo", choices=ALGORITHMS, default="ic")
    dt = sub.add_parser("detect", help="naive versus causal effect and mediator ranking")
    _add_common(dt, dag_required=True)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_FAULT if exc.code else EXIT_FAIR
    metrics = tuple(m.strip() for m in getattr(args, "metrics", "").split(",") if m.strip())
    cfg = RunConfig(command=args.command, data=args.data, dag=args.dag, spec=args.spec,
                    data_format=args.data_format, metrics=metrics, mode=getattr(args, "mode", "enumerate"),
                    algo=getattr(args, "algo", "ic"), epsilon=args.epsilon, tau=args.tau, seed=args.seed,
                    budget=args.budget, out=args.out, format=args.format)
    try:
        cfg.validate()
        run = {"check": cmd_check, "repair": cmd_repair, "detect": cmd_detect}[args.command]
        return run(cfg, out)
    except (FairkitError, OSError) as exc:
        err.write(f"fairkit {args.command}: error: {exc}\n")
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
