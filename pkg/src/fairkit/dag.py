"""Causal DAGs over finite-domain variables.

A :class:`CausalDag` is an immutable value: an ordered list of variables,
each with a finite domain of string labels, plus a set of directed edges.
Declaration order matters; it is used to break every tie so that orders,
reports and enumerations are reproducible.

d-separation is decided with the ancestral moral graph construction:
restrict to the ancestors of ``X | Y | Z``, marry co-parents, drop edge
directions, delete ``Z`` and look for an undirected path from ``X`` to
``Y``.

The text format understood by :func:`parse_dag` is line oriented::

    # College II
    var G: male,female
    var D: A,B
    edge G -> D
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DagError, ParseError

__all__ = [
    "CausalDag",
    "ValidationReport",
    "validate",
    "topological_order",
    "parents",
    "children",
    "ancestors",
    "descendants",
    "d_separated",
    "directed_paths",
    "parse_dag",
    "load_dag",
    "parse_var_lines",
    "format_dag",
]


@dataclass(frozen=True)
class CausalDag:
    """Variables with finite domains and a directed edge set.

    Parameters
    ----------
    variables : sequence of (name, labels)
        Declared variables in declaration order.
    edges : iterable of (parent, child)
        Directed edges. Stored in the order given.

    The constructor normalizes containers but does not validate; call
    :func:`validate` or :meth:`checked` for that.
    """

    variables: tuple[tuple[str, tuple[str, ...]], ...]
    edges: tuple[tuple[str, str], ...] = ()
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(
            self, "variables", tuple((str(n), tuple(str(l) for l in d)) for n, d in self.variables)
        )
        object.__setattr__(self, "edges", tuple((str(a), str(b)) for a, b in self.edges))
        object.__setattr__(self, "_index", {n: i for i, (n, _) in enumerate(self.variables)})

    @classmethod
    def from_edges(cls, edges, domains):
        """Build a DAG whose variables come from ``domains`` (a name -> labels mapping)."""
        return cls(tuple(domains.items()), edges).checked()

    def checked(self) -> "CausalDag":
        """Return ``self`` or raise :class:`DagError` listing every violation."""
        report = validate(self)
        if not report.ok:
            witness = next((v.witness for v in report.violations if v.kind == "cycle"), None)
            raise DagError("invalid DAG: " + "; ".join(str(v) for v in report.violations), witness)
        return self

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.variables)

    def domain(self, name: str) -> tuple[str, ...]:
        return self.variables[self._position(name)][1]

    def __contains__(self, name) -> bool:
        return name in self._index

    def _position(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise DagError(f"unknown variable {name!r}") from None

    def parents(self, v: str) -> frozenset[str]:
        return parents(self, v)

    def children(self, v: str) -> frozenset[str]:
        return children(self, v)

    def topological_order(self) -> list[str]:
        return topological_order(self)

    def d_separated(self, x, y, z=()) -> bool:
        return d_separated(self, x, y, z)

    def remove_incoming(self, nodes: Iterable[str]) -> "CausalDag":
        """The mutilated graph used by interventions: edges into ``nodes`` removed."""
        cut = set(nodes)
        return CausalDag(self.variables, [(a, b) for a, b in self.edges if b not in cut])

    def sort(self, names: Iterable[str]) -> list[str]:
        """Sort names by declaration order."""
        return sorted(set(names), key=self._position)


@dataclass(frozen=True)
class Violation:
    kind: str  # cycle | dangling-edge | self-loop | duplicate-edge | duplicate-name | empty-domain
    message: str
    witness: tuple = ()

    def __str__(self):
        return self.message


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate(dag: CausalDag) -> ValidationReport:
    """Collect every structural violation of ``dag``. Never raises."""
    out = []
    seen = set()
    for name, dom in dag.variables:
        if name in seen:
            out.append(Violation("duplicate-name", f"variable {name!r} declared twice", (name,)))
        seen.add(name)
        if len(dom) == 0:
            out.append(Violation("empty-domain", f"variable {name!r} has an empty domain", (name,)))
        elif len(set(dom)) != len(dom):
            out.append(Violation("duplicate-name", f"variable {name!r} repeats a label", (name,)))
    seen_edges = set()
    clean = []
    for a, b in dag.edges:
        missing = [v for v in (a, b) if v not in seen]
        if missing:
            for v in missing:
                out.append(Violation("dangling-edge", f"edge {a} -> {b} names undeclared variable {v!r}", (v,)))
            continue
        if a == b:
            out.append(Violation("self-loop", f"self-loop on {a!r}", (a,)))
            continue
        if (a, b) in seen_edges:
            out.append(Violation("duplicate-edge", f"edge {a} -> {b} declared twice", (a, b)))
            continue
        seen_edges.add((a, b))
        clean.append((a, b))
    cycle = _find_cycle([n for n, _ in dag.variables], clean)
    if cycle:
        out.append(Violation("cycle", "cycle " + " -> ".join(cycle + [cycle[0]]), tuple(cycle)))
    return ValidationReport(tuple(out))


def _find_cycle(names, edges):
    succ = {n: [] for n in names}
    for a, b in edges:
        succ[a].append(b)
    state = dict.fromkeys(names, 0)  # 0 new, 1 on stack, 2 done
    stack_path = []

    def visit(n):
        state[n] = 1
        stack_path.append(n)
        for m in succ[n]:
            if state[m] == 1:
                return stack_path[stack_path.index(m):]
            if state[m] == 0:
                found = visit(m)
                if found:
                    return found
        stack_path.pop()
        state[n] = 2
        return None

    for n in names:
        if state[n] == 0:
            found = visit(n)
            if found:
                return list(found)
    return None


def _require_valid(dag: CausalDag):
    dag.checked()


def topological_order(dag: CausalDag) -> list[str]:
    """Parents before children; among ready nodes the earliest declared goes first."""
    _require_valid(dag)
    names = dag.names
    indeg = dict.fromkeys(names, 0)
    succ = {n: [] for n in names}
    for a, b in dag.edges:
        indeg[b] += 1
        succ[a].append(b)
    order = []
    ready = [n for n in names if indeg[n] == 0]
    while ready:
        ready.sort(key=dag._position)
        n = ready.pop(0)
        order.append(n)
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    return order


def parents(dag: CausalDag, v: str) -> frozenset[str]:
    dag._position(v)
    return frozenset(a for a, b in dag.edges if b == v)


def children(dag: CausalDag, v: str) -> frozenset[str]:
    dag._position(v)
    return frozenset(b for a, b in dag.edges if a == v)


def ancestors(dag: CausalDag, nodes: Iterable[str]) -> frozenset[str]:
    """Ancestors of ``nodes``, including the nodes themselves."""
    pa = {n: [] for n in dag.names}
    for a, b in dag.edges:
        pa[b].append(a)
    todo = list(nodes)
    for n in todo:
        dag._position(n)
    seen = set(todo)
    while todo:
        for p in pa[todo.pop()]:
            if p not in seen:
                seen.add(p)
                todo.append(p)
    return frozenset(seen)


def descendants(dag: CausalDag, nodes: Iterable[str]) -> frozenset[str]:
    """Descendants of ``nodes``, including the nodes themselves."""
    ch = {n: [] for n in dag.names}
    for a, b in dag.edges:
        ch[a].append(b)
    todo = list(nodes)
    for n in todo:
        dag._position(n)
    seen = set(todo)
    while todo:
        for c in ch[todo.pop()]:
            if c not in seen:
                seen.add(c)
                todo.append(c)
    return frozenset(seen)


def _as_set(dag, s, label):
    if isinstance(s, str):
        s = (s,)
    s = frozenset(s)
    for v in s:
        if v not in dag:
            raise DagError(f"unknown variable {v!r} in {label}")
    return s


def d_separated(dag: CausalDag, x, y, z=()) -> bool:
    """True iff ``z`` d-separates ``x`` from ``y`` in ``dag``.

    Parameters
    ----------
    x, y : str or iterable of str
        Nonempty variable sets.
    z : iterable of str
        Conditioning set. The three sets must be pairwise disjoint.
    """
    _require_valid(dag)
    x, y, z = _as_set(dag, x, "X"), _as_set(dag, y, "Y"), _as_set(dag, z, "Z")
    if not x or not y:
        raise DagError("X and Y must be nonempty")
    if x & y or x & z or y & z:
        raise DagError("X, Y and Z must be pairwise disjoint")

    keep = ancestors(dag, x | y | z)
    adj = {n: set() for n in keep}
    pa = {n: [] for n in keep}
    for a, b in dag.edges:
        if a in keep and b in keep:
            adj[a].add(b)
            adj[b].add(a)
            pa[b].append(a)
    for ps in pa.values():
        for i, p in enumerate(ps):
            for q in ps[i + 1:]:
                adj[p].add(q)
                adj[q].add(p)

    seen = set(x)
    todo = list(x)
    while todo:
        n = todo.pop()
        for m in adj[n]:
            if m in z or m in seen:
                continue
            if m in y:
                return False
            seen.add(m)
            todo.append(m)
    return True


def directed_paths(dag: CausalDag, source: str, target: str) -> list[list[str]]:
    """All directed paths from ``source`` to ``target``, in declaration order of branching."""
    _require_valid(dag)
    dag._position(source)
    dag._position(target)
    succ = {n: [] for n in dag.names}
    for a, b in dag.edges:
        succ[a].append(b)
    for n in succ:
        succ[n].sort(key=dag._position)
    out = []

    def walk(path):
        n = path[-1]
        if n == target:
            out.append(list(path))
            return
        for m in succ[n]:
            path.append(m)
            walk(path)
            path.pop()

    walk([source])
    return out


# ---------------------------------------------------------------------------
# text format

_VAR = re.compile(r"^var\s+([^\s:,]+)\s*:(.*)$")
_EDGE = re.compile(r"^edge\s+([^\s:,]+)\s*->\s*([^\s:,]+)$")


def _lines(text):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _parse_var(line, no, path):
    m = _VAR.match(line)
    if not m:
        return None
    labels = [l.strip() for l in m.group(2).split(",")]
    if m.group(2).strip() == "" or any(l == "" for l in labels):
        raise ParseError(f"variable {m.group(1)!r} needs a nonempty, comma separated domain", no, path)
    return m.group(1), tuple(labels)


def parse_var_lines(text: str, path=None) -> list[tuple[str, tuple[str, ...]]]:
    """Parse a schema pin file: ``var`` lines only."""
    out = []
    names = set()
    for no, line in _lines(text):
        var = _parse_var(line, no, path)
        if var is None:
            raise ParseError(f"expected 'var NAME: label,...', got {line!r}", no, path)
        if var[0] in names:
            raise ParseError(f"variable {var[0]!r} declared twice", no, path)
        names.add(var[0])
        out.append(var)
    return out


def parse_dag(text: str, path=None) -> CausalDag:
    """Parse the line format described in the module docstring.

    Raises :class:`ParseError` (with a line number) for syntax problems and
    :class:`DagError` when the declarations form an invalid graph.
    """
    variables, edges = [], []
    for no, line in _lines(text):
        var = _parse_var(line, no, path)
        if var is not None:
            variables.append(var)
            continue
        m = _EDGE.match(line)
        if m:
            edges.append((m.group(1), m.group(2)))
            continue
        raise ParseError(f"unrecognized declaration {line!r}", no, path)
    return CausalDag(variables, edges).checked()


def load_dag(path) -> CausalDag:
    path = Path(path)
    return parse_dag(path.read_text(encoding="utf-8"), path=str(path))


def format_dag(dag: CausalDag) -> str:
    lines = [f"var {n}: {','.join(d)}" for n, d in dag.variables]
    lines += [f"edge {a} -> {b}" for a, b in dag.edges]
    return "\n".join(lines) + "\n"
