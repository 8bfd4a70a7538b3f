"""Categorical datasets, contingency tables and information measures.

Two table types share one small interface (``schema`` plus ``cells``):

* :class:`Dataset` holds integer multiplicities, i.e. a multiset of tuples.
* :class:`Distribution` holds probabilities summing to one.

Every function below accepts either. Cells are keyed by full assignments,
tuples of labels aligned with the schema; absent keys have weight zero.
Probabilities are computed from raw weights, so integer datasets give
exact ratios (in particular an exactly independent count table has a
conditional mutual information of exactly ``0.0``).

Information quantities are in bits.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from scipy import stats

from .dag import parse_var_lines
from .errors import DatasetError, ParseError, UndefinedStratumError

__all__ = [
    "Table",
    "Dataset",
    "Distribution",
    "CiStatement",
    "CiResult",
    "load_csv",
    "load_schema",
    "write_csv",
    "empirical_distribution",
    "marginal",
    "group_weights",
    "conditional",
    "prob",
    "entropy",
    "cond_mutual_info",
    "ci_holds",
    "EPS_EXACT",
]

EPS_EXACT = 1e-9
SUM_TOL = 1e-12

Assignment = tuple


def _label_key(labels):
    try:
        return sorted(labels, key=lambda s: (float(s), s))
    except ValueError:
        return sorted(labels)


def _names(vars_) -> tuple:
    if vars_ is None:
        return ()
    if isinstance(vars_, str):
        return (vars_,)
    return tuple(vars_)


class Table:
    """Shared read-only behaviour of :class:`Dataset` and :class:`Distribution`."""

    schema: tuple
    cells: Mapping

    def _init_schema(self, schema):
        schema = tuple((str(n), tuple(str(l) for l in d)) for n, d in schema)
        names = [n for n, _ in schema]
        if len(set(names)) != len(names):
            raise DatasetError(f"duplicate column names in {names}")
        for n, d in schema:
            if not d:
                raise DatasetError(f"column {n!r} has an empty domain")
        self.schema = schema
        self._pos = {n: i for i, n in enumerate(names)}
        self._dom = {n: set(d) for n, d in schema}

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.schema)

    def domain(self, name: str) -> tuple[str, ...]:
        return self.schema[self.index(name)][1]

    def index(self, name: str) -> int:
        try:
            return self._pos[name]
        except KeyError:
            raise DatasetError(f"unknown variable {name!r}") from None

    def indices(self, names) -> tuple[int, ...]:
        return tuple(self.index(n) for n in _names(names))

    def ordered(self, names) -> tuple[str, ...]:
        """``names`` sorted by schema position, duplicates removed."""
        names = set(_names(names))
        for n in names:
            self.index(n)
        return tuple(n for n in self.columns if n in names)

    def items(self):
        return self.cells.items()

    @property
    def weight(self):
        """Sum of all cell weights."""
        return self._weight

    def __contains__(self, name):
        return name in self._pos

    def __eq__(self, other):
        return type(self) is type(other) and self.schema == other.schema and dict(self.cells) == dict(other.cells)

    def __hash__(self):
        return hash((self.schema, frozenset(self.cells.items())))


class Dataset(Table):
    """A multiset of categorical tuples stored as assignment -> multiplicity.

    Parameters
    ----------
    schema : sequence of (column, labels)
    counts : mapping of assignment tuple -> nonnegative int
        Zero multiplicities are dropped.
    """

    def __init__(self, schema, counts: Mapping[Assignment, int]):
        self._init_schema(schema)
        self._order = [{l: j for j, l in enumerate(d)} for _, d in self.schema]
        clean = {}
        for key, n in counts.items():
            key = tuple(key)
            if len(key) != len(self.schema):
                raise DatasetError(f"assignment {key} does not match schema {self.columns}")
            for (col, _), label in zip(self.schema, key):
                if label not in self._dom[col]:
                    raise DatasetError(f"label {label!r} outside the domain of {col!r}")
            if isinstance(n, float) and n.is_integer():
                n = int(n)
            if not isinstance(n, int) or isinstance(n, bool):
                raise DatasetError(f"multiplicity of {key} must be an integer, got {n!r}")
            if n < 0:
                raise DatasetError(f"negative multiplicity {n} for {key}")
            if n:
                clean[key] = clean.get(key, 0) + n
        self.cells = {k: clean[k] for k in sorted(clean, key=self._cell_key)}
        self._weight = sum(self.cells.values())

    def _cell_key(self, key):
        return tuple(self._order[i][l] for i, l in enumerate(key))

    @property
    def counts(self) -> Mapping[Assignment, int]:
        return self.cells

    @property
    def total(self) -> int:
        return self._weight

    @classmethod
    def from_rows(cls, columns: Sequence[str], rows: Iterable[Sequence], weights=None, domains=None):
        """Aggregate raw rows. Domains default to the sorted observed labels."""
        columns = tuple(columns)
        counts = defaultdict(int)
        seen = [set() for _ in columns]
        weights = iter(weights) if weights is not None else None
        for row in rows:
            row = tuple(str(v) for v in row)
            if len(row) != len(columns):
                raise DatasetError(f"row {row} has {len(row)} fields, expected {len(columns)}")
            counts[row] += 1 if weights is None else next(weights)
            for s, v in zip(seen, row):
                s.add(v)
        domains = dict(domains or {})
        schema = [(c, tuple(domains[c]) if c in domains else tuple(_label_key(s))) for c, s in zip(columns, seen)]
        return cls(schema, counts)

    def with_counts(self, counts) -> "Dataset":
        return Dataset(self.schema, counts)

    def apply(self, deltas: Mapping[Assignment, int]) -> "Dataset":
        """Add signed integer ``deltas`` to the multiplicities."""
        new = dict(self.cells)
        for key, d in deltas.items():
            new[key] = new.get(key, 0) + d
            if new[key] < 0:
                raise DatasetError(f"delta {d} drives multiplicity of {key} negative")
        return Dataset(self.schema, new)

    def project(self, columns) -> "Dataset":
        """Marginal counts over ``columns`` (kept in the given order)."""
        columns = _names(columns)
        idx = self.indices(columns)
        out = defaultdict(int)
        for key, n in self.cells.items():
            out[tuple(key[i] for i in idx)] += n
        return Dataset([(c, self.domain(c)) for c in columns], out)

    def rows(self):
        """Yield (assignment, multiplicity) in canonical order."""
        return iter(self.cells.items())

    def __repr__(self):
        return f"Dataset(columns={self.columns}, cells={len(self.cells)}, total={self.total})"


class Distribution(Table):
    """A normalized mapping from full assignments to probabilities."""

    def __init__(self, schema, probs: Mapping[Assignment, float], normalize=False):
        self._init_schema(schema)
        clean = {}
        for key, p in probs.items():
            key = tuple(key)
            if len(key) != len(self.schema):
                raise DatasetError(f"assignment {key} does not match schema {self.columns}")
            p = float(p)
            if p < 0 or math.isnan(p):
                raise DatasetError(f"invalid probability {p} for {key}")
            if p > 0:
                clean[key] = clean.get(key, 0.0) + p
        total = math.fsum(clean.values())
        if normalize:
            if total <= 0:
                raise DatasetError("cannot normalize an all-zero table")
            clean = {k: v / total for k, v in clean.items()}
            total = math.fsum(clean.values())
        if abs(total - 1.0) > SUM_TOL:
            raise DatasetError(f"probabilities sum to {total!r}, not 1")
        self.cells = {k: clean[k] for k in sorted(clean)}
        self._weight = total

    @property
    def probs(self) -> Mapping[Assignment, float]:
        return self.cells

    def __getitem__(self, key) -> float:
        if isinstance(key, dict):
            key = tuple(key[c] for c in self.columns)
        elif not isinstance(key, tuple):
            key = (key,)
        return self.cells.get(key, 0.0)

    def as_dict(self):
        """Map of assignment -> probability; single-column keys are unwrapped."""
        if len(self.columns) == 1:
            return {k[0]: v for k, v in self.cells.items()}
        return dict(self.cells)

    def __repr__(self):
        return f"Distribution(columns={self.columns}, support={len(self.cells)})"


# ---------------------------------------------------------------------------
# loading

def load_schema(path) -> list[tuple[str, tuple[str, ...]]]:
    """Read a schema pin file (``var NAME: a,b,...`` lines)."""
    path = Path(path)
    return parse_var_lines(path.read_text(encoding="utf-8"), path=str(path))


def load_csv(path_or_file, schema=None, weight_column: str | None = "weight") -> Dataset:
    """Load a header-first CSV file into a :class:`Dataset`.

    Parameters
    ----------
    path_or_file : path or text file object
    schema : path, or sequence of (column, labels), optional
        Pins the domains of the named columns. Other columns get the sorted
        set of observed labels.
    weight_column : str or None
        Name of an optional integer multiplicity column.
    """
    if schema is not None and isinstance(schema, (str, Path)):
        schema = load_schema(schema)
    pinned = dict(schema or ())

    if hasattr(path_or_file, "read"):
        return _read_csv(path_or_file, pinned, weight_column)
    with open(path_or_file, newline="", encoding="utf-8") as fh:
        return _read_csv(fh, pinned, weight_column)


def _read_csv(fh, pinned, weight_column):
    reader = csv.reader(fh)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DatasetError("missing header row") from None
    if len(set(header)) != len(header) or any(h == "" for h in header):
        raise DatasetError(f"header has empty or duplicate column names: {header}", row=1)
    wpos = header.index(weight_column) if weight_column and weight_column in header else None
    columns = [h for i, h in enumerate(header) if i != wpos]
    for c in pinned:
        if c not in columns:
            raise DatasetError(f"schema declares column {c!r} absent from the data")
    domains = {c: set(pinned[c]) for c in pinned}

    counts = defaultdict(int)
    seen = [set() for _ in columns]
    for rowno, row in enumerate(reader, start=2):
        if not row or all(not f.strip() for f in row):
            continue
        if len(row) != len(header):
            raise DatasetError(f"expected {len(header)} fields, found {len(row)}", row=rowno)
        row = [f.strip() for f in row]
        if wpos is not None:
            raw = row[wpos]
            try:
                w = int(raw)
            except ValueError:
                raise DatasetError(f"weight {raw!r} is not an integer", row=rowno) from None
            if w < 0:
                raise DatasetError(f"negative weight {w}", row=rowno)
            row = row[:wpos] + row[wpos + 1:]
        else:
            w = 1
        for c, v, s in zip(columns, row, seen):
            if c in domains and v not in domains[c]:
                raise DatasetError(f"label {v!r} outside the pinned domain of {c!r}", row=rowno)
            s.add(v)
        counts[tuple(row)] += w
    if sum(counts.values()) == 0:
        raise DatasetError("empty dataset")
    schema = [(c, tuple(pinned[c]) if c in pinned else tuple(_label_key(s))) for c, s in zip(columns, seen)]
    return Dataset(schema, counts)


def write_csv(dataset: Dataset, path_or_file=None, weight_column="weight") -> str | None:
    """Write ``dataset`` as weighted CSV rows in canonical order.

    Returns the text when ``path_or_file`` is None.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(dataset.columns) + [weight_column])
    for key, n in dataset.rows():
        w.writerow(list(key) + [n])
    text = buf.getvalue()
    if path_or_file is None:
        return text
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        Path(path_or_file).write_text(text, encoding="utf-8")
    return None


# ---------------------------------------------------------------------------
# probabilities

def empirical_distribution(d: Dataset) -> Distribution:
    """Multiplicity over total, as a :class:`Distribution`."""
    if d.total < 1:
        raise DatasetError("empty dataset")
    return Distribution(d.schema, {k: n / d.total for k, n in d.cells.items()})


def group_weights(table: Table, vars_) -> dict:
    """Raw (unnormalized) weights summed onto ``vars_`` in the given order."""
    idx = table.indices(vars_)
    out = defaultdict(int if isinstance(table, Dataset) else float)
    for key, w in table.cells.items():
        out[tuple(key[i] for i in idx)] += w
    return dict(out)


def marginal(table: Table, vars_) -> Distribution:
    """Normalized marginal over ``vars_`` (columns kept in schema order)."""
    names = table.ordered(vars_)
    total = table.weight
    if total <= 0:
        raise DatasetError("empty table")
    g = group_weights(table, names)
    return Distribution([(n, table.domain(n)) for n in names], {k: w / total for k, w in g.items()}, normalize=True)


def _match(table, given):
    idx = []
    for var, label in given.items():
        i = table.index(var)
        if label not in table._dom[var]:
            raise DatasetError(f"label {label!r} outside the domain of {var!r}")
        idx.append((i, label))
    return idx


def conditional(table: Table, target, given: Mapping[str, str] | None = None) -> Distribution:
    """Distribution of ``target`` given the assignment ``given``.

    Raises :class:`UndefinedStratumError` when ``given`` has probability zero.
    """
    given = dict(given or {})
    names = table.ordered(target)
    if set(names) & set(given):
        raise DatasetError("target and conditioning variables overlap")
    cond = _match(table, given)
    tidx = table.indices(names)
    out = defaultdict(float)
    mass = 0
    for key, w in table.cells.items():
        if all(key[i] == l for i, l in cond):
            out[tuple(key[i] for i in tidx)] += w
            mass += w
    if mass <= 0:
        raise UndefinedStratumError(f"undefined stratum {given}", stratum=given)
    return Distribution([(n, table.domain(n)) for n in names], {k: w / mass for k, w in out.items()}, normalize=True)


def prob(table: Table, event: Mapping[str, str], given: Mapping[str, str] | None = None) -> float:
    """``Pr(event | given)`` from raw weights."""
    given = dict(given or {})
    cond = _match(table, given)
    ev = _match(table, event)
    num = den = 0
    for key, w in table.cells.items():
        if all(key[i] == l for i, l in cond):
            den += w
            if all(key[i] == l for i, l in ev):
                num += w
    if den <= 0:
        raise UndefinedStratumError(f"undefined stratum {given}", stratum=given)
    return num / den


def _xlog2x(w):
    return w * math.log2(w) if w > 0 else 0.0


def entropy(table: Table, x, given=()) -> float:
    """Conditional Shannon entropy ``H(X | given)`` in bits."""
    x, z = _names(x), _names(given)
    total = table.weight
    xz = group_weights(table, z + x)
    zz = group_weights(table, z)
    # H(X|Z) = -(1/N) [sum f(n_xz) - sum f(n_z)]
    h = -(math.fsum(_xlog2x(w) for w in xz.values()) - math.fsum(_xlog2x(w) for w in zz.values())) / total
    return max(h, 0.0)


def _check_disjoint(table, x, y, z):
    x, y, z = set(_names(x)), set(_names(y)), set(_names(z))
    for n in x | y | z:
        table.index(n)
    if not x or not y:
        raise DatasetError("X and Y must be nonempty")
    if x & y or x & z or y & z:
        raise DatasetError("X, Y and Z must be pairwise disjoint")
    return table.ordered(x), table.ordered(y), table.ordered(z)


def cond_mutual_info(table: Table, x, y, z=()) -> float:
    """``I(X; Y | Z)`` in bits.

    Strata of ``Z`` with zero weight contribute nothing. Each term is
    ``w log2(w w_z / (w_xz w_yz))`` with the ratio formed from raw weights,
    so integer tables that are exactly independent give exactly zero.
    """
    x, y, z = _check_disjoint(table, x, y, z)
    total = table.weight
    if total <= 0:
        raise DatasetError("empty table")
    xi, yi, zi = table.indices(x), table.indices(y), table.indices(z)
    nxyz = defaultdict(int)
    nxz = defaultdict(int)
    nyz = defaultdict(int)
    nz = defaultdict(int)
    for key, w in table.cells.items():
        kx = tuple(key[i] for i in xi)
        ky = tuple(key[i] for i in yi)
        kz = tuple(key[i] for i in zi)
        nxyz[kx, ky, kz] += w
        nxz[kx, kz] += w
        nyz[ky, kz] += w
        nz[kz] += w
    terms = []
    for (kx, ky, kz), w in nxyz.items():
        if w > 0:
            ratio = (w * nz[kz]) / (nxz[kx, kz] * nyz[ky, kz])
            terms.append(w * math.log2(ratio))
    return max(math.fsum(terms) / total, 0.0)


# ---------------------------------------------------------------------------
# CI statements

@dataclass(frozen=True)
class CiStatement:
    """``(left _|_ right | given)``; the sets are stored as sorted tuples."""

    left: tuple[str, ...]
    right: tuple[str, ...]
    given: tuple[str, ...] = ()

    def __post_init__(self):
        for f in ("left", "right", "given"):
            object.__setattr__(self, f, tuple(sorted(set(_names(getattr(self, f))))))
        l, r, g = set(self.left), set(self.right), set(self.given)
        if not l or not r:
            raise DatasetError("CI statement needs nonempty left and right sets")
        if l & r or l & g or r & g:
            raise DatasetError("CI statement sets must be pairwise disjoint")

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(self.left + self.right + self.given)

    def saturated(self, columns) -> bool:
        return self.variables == frozenset(columns)

    @classmethod
    def parse(cls, text: str) -> "CiStatement":
        """Parse ``"O _|_ G,H | D"`` (``⊥`` is accepted for ``_|_``)."""
        text = text.replace("⊥", "_|_")
        if "_|_" not in text:
            raise ParseError(f"CI statement {text!r} lacks '_|_'")
        left, rest = text.split("_|_", 1)
        right, _, given = rest.partition("|")

        def split(s):
            return tuple(v.strip() for v in s.replace("{", "").replace("}", "").split(",") if v.strip())

        return cls(split(left), split(right), split(given))

    def __str__(self):
        s = f"({','.join(self.left)} _|_ {','.join(self.right)}"
        if self.given:
            s += f" | {','.join(self.given)}"
        return s + ")"


@dataclass(frozen=True)
class CiResult:
    verdict: bool
    cmi: float
    policy: str
    statistic: float
    dof: int | None = None
    p_value: float | None = None

    def __bool__(self):
        return self.verdict


def ci_holds(d: Table, s: CiStatement, policy: str = "exact", epsilon: float = EPS_EXACT,
             alpha: float = 0.05, smoothing: float = 0.0) -> CiResult:
    """Test the statement on the empirical distribution of ``d``.

    ``exact`` accepts when CMI <= ``epsilon``. ``gtest`` computes
    ``G = 2 N ln2 CMI`` and accepts when its chi-square p-value is at least
    ``alpha``. Degrees of freedom sum ``(r - 1)(c - 1)`` over observed strata
    of the conditioning set, counting the X and Y levels seen in each stratum
    (the full grid when ``smoothing`` is positive).
    """
    if d.weight <= 0:
        raise DatasetError("empty dataset")
    for v in s.variables:
        d.index(v)
    if policy == "exact":
        if smoothing:
            raise DatasetError("smoothing applies to the gtest policy only")
        cmi = cond_mutual_info(d, s.left, s.right, s.given)
        return CiResult(cmi <= epsilon, cmi, "exact", cmi)
    if policy != "gtest":
        raise DatasetError(f"unknown CI policy {policy!r}")

    if smoothing > 0:
        table, n = _smoothed(d, s, smoothing)
    else:
        table, n = d, d.weight
    cmi = cond_mutual_info(table, s.left, s.right, s.given)
    g = 2.0 * n * math.log(2.0) * cmi
    dof = _dof(table, s, full_grid=smoothing > 0)
    p = float(stats.chi2.sf(g, dof))
    return CiResult(p >= alpha, cmi, "gtest", g, dof, p)


def _dof(table, s, full_grid):
    xi, yi, zi = table.indices(s.left), table.indices(s.right), table.indices(s.given)
    levels = defaultdict(lambda: (set(), set()))
    for key, w in table.cells.items():
        if w > 0:
            xs, ys = levels[tuple(key[i] for i in zi)]
            xs.add(tuple(key[i] for i in xi))
            ys.add(tuple(key[i] for i in yi))
    if full_grid:
        rx = math.prod(len(table.domain(v)) for v in s.left)
        ry = math.prod(len(table.domain(v)) for v in s.right)
        dof = len(levels) * (rx - 1) * (ry - 1)
    else:
        dof = sum((len(xs) - 1) * (len(ys) - 1) for xs, ys in levels.values())
    return max(dof, 1)


def _smoothed(d, s, pseudo):
    """Add ``pseudo`` to every X x Y cell of each observed stratum.

    Returns the smoothed distribution over the statement's columns and its
    pseudo-count total.
    """
    cols = s.left + s.right + s.given
    g = group_weights(d, cols)
    strata = {k[len(s.left) + len(s.right):] for k in g}
    grid = list(itertools.product(*[d.domain(c) for c in s.left + s.right]))
    out = defaultdict(float)
    for k, w in g.items():
        out[k] += w
    for z in strata:
        for xy in grid:
            out[xy + z] += pseudo
    total = math.fsum(out.values())
    dist = Distribution([(c, d.domain(c)) for c in cols], {k: w / total for k, w in out.items()}, normalize=True)
    return dist, total
