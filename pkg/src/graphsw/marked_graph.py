"""Marked graphs on ``[n]``, superposition/marginals and count statistics.

Vertices are the integers ``1..n``. Edges are stored as sorted triples
``(i, j, mark)`` with ``i < j`` in lexicographic order, so iteration and
serialization are canonical. A jointly marked graph carries pair marks
``(x1, x2)`` on edges and ``(theta1, theta2)`` on vertices; the placeholder
for a missing side is the reserved token ``BLANK`` (``"_"``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, Mapping

import numpy as np

from .errors import GraphParseError

BLANK = "_"
_TOKEN = re.compile(r"^[^\s:#]+$")

__all__ = [
    "BLANK",
    "MarkSpaces",
    "DomainGraph",
    "JointGraph",
    "CountVectors",
    "superpose",
    "marginal",
    "count_vectors",
    "project_counts",
    "degree_statistics",
    "serialize_graph",
    "parse_graph",
]


def _check_alphabet(name, symbols):
    symbols = tuple(symbols)
    if not symbols:
        raise ValueError(f"alphabet {name} must be nonempty")
    if len(set(symbols)) != len(symbols):
        raise ValueError(f"alphabet {name} has repeated symbols")
    for s in symbols:
        if not isinstance(s, str) or not _TOKEN.match(s):
            raise ValueError(f"invalid mark symbol {s!r} in {name}")
        if s == BLANK:
            raise ValueError(f"{BLANK!r} is reserved for the placeholder mark")
    return tuple(sorted(symbols))


@dataclass(frozen=True)
class MarkSpaces:
    """The four finite mark alphabets and the joint alphabets derived from them."""

    xi1: tuple
    xi2: tuple
    theta1: tuple
    theta2: tuple

    def __post_init__(self):
        for name in ("xi1", "xi2", "theta1", "theta2"):
            object.__setattr__(self, name, _check_alphabet(name, getattr(self, name)))

    @cached_property
    def joint_edge_marks(self) -> tuple:
        side1 = self.xi1 + (BLANK,)
        side2 = self.xi2 + (BLANK,)
        return tuple((a, b) for a, b in product(side1, side2) if (a, b) != (BLANK, BLANK))

    @cached_property
    def joint_vertex_marks(self) -> tuple:
        return tuple(product(self.theta1, self.theta2))

    def edge_alphabet(self, domain=None) -> tuple:
        """Edge marks of domain 1, 2, or the joint alphabet when ``domain`` is None."""
        if domain is None:
            return self.joint_edge_marks
        if domain == 1:
            return self.xi1
        if domain == 2:
            return self.xi2
        raise ValueError(f"domain must be 1, 2 or None, got {domain!r}")

    def vertex_alphabet(self, domain=None) -> tuple:
        if domain is None:
            return self.joint_vertex_marks
        if domain == 1:
            return self.theta1
        if domain == 2:
            return self.theta2
        raise ValueError(f"domain must be 1, 2 or None, got {domain!r}")


def _normalize_edges(n, edges):
    if isinstance(edges, Mapping):
        items = [(i, j, m) for (i, j), m in edges.items()]
    else:
        items = [tuple(e) for e in edges]
    out = {}
    for item in items:
        if len(item) != 3:
            raise ValueError(f"edge must be (i, j, mark), got {item!r}")
        i, j, mark = item
        i, j = int(i), int(j)
        if i == j:
            raise ValueError(f"self-loop at vertex {i}")
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
        key = (i, j) if i < j else (j, i)
        if key in out:
            raise ValueError(f"duplicate edge {key}")
        out[key] = mark
    return tuple((i, j, out[(i, j)]) for (i, j) in sorted(out))


class _GraphMixin:
    """Adjacency/degree helpers shared by domain and joint graphs."""

    @cached_property
    def edge_map(self) -> dict:
        return {(i, j): m for i, j, m in self.edges}

    @cached_property
    def adjacency(self) -> tuple:
        """``adjacency[v-1]`` lists ``(neighbor, mark)`` pairs in increasing neighbor order."""
        adj = [[] for _ in range(self.n)]
        for i, j, m in self.edges:
            adj[i - 1].append((j, m))
            adj[j - 1].append((i, m))
        return tuple(tuple(sorted(a)) for a in adj)

    @property
    def degrees(self) -> tuple:
        return tuple(len(a) for a in self.adjacency)

    def vertex_mark(self, v: int):
        return self.vertex_marks[v - 1]

    def __len__(self):
        return self.n


def _validate_marks(graph, edge_alpha, vertex_alpha):
    if len(graph.vertex_marks) != graph.n:
        raise ValueError(f"expected {graph.n} vertex marks, got {len(graph.vertex_marks)}")
    ea, va = set(edge_alpha), set(vertex_alpha)
    for v, t in enumerate(graph.vertex_marks, start=1):
        if t not in va:
            raise ValueError(f"vertex {v} has unknown mark {t!r}")
    for i, j, m in graph.edges:
        if m not in ea:
            raise ValueError(f"edge ({i}, {j}) has unknown mark {m!r}")


@dataclass(frozen=True)
class DomainGraph(_GraphMixin):
    """A simple marked graph in domain 1 or 2."""

    marks: MarkSpaces
    domain: int
    n: int
    vertex_marks: tuple
    edges: tuple = field(default=())

    def __post_init__(self):
        if self.domain not in (1, 2):
            raise ValueError(f"domain must be 1 or 2, got {self.domain!r}")
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        object.__setattr__(self, "vertex_marks", tuple(self.vertex_marks))
        object.__setattr__(self, "edges", _normalize_edges(self.n, self.edges))
        _validate_marks(self, self.marks.edge_alphabet(self.domain), self.marks.vertex_alphabet(self.domain))


@dataclass(frozen=True)
class JointGraph(_GraphMixin):
    """A simple jointly marked graph: pair marks on edges and vertices."""

    marks: MarkSpaces
    n: int
    vertex_marks: tuple
    edges: tuple = field(default=())

    domain = None

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        object.__setattr__(self, "vertex_marks", tuple(tuple(t) for t in self.vertex_marks))
        edges = _normalize_edges(self.n, self.edges)
        object.__setattr__(self, "edges", tuple((i, j, tuple(m)) for i, j, m in edges))
        _validate_marks(self, self.marks.joint_edge_marks, self.marks.joint_vertex_marks)


def superpose(g1: DomainGraph, g2: DomainGraph) -> JointGraph:
    """The superposition ``g1 (+) g2`` of a domain-1 and a domain-2 graph."""
    if g1.domain != 1 or g2.domain != 2:
        raise ValueError("superpose expects a domain-1 graph and a domain-2 graph")
    if g1.n != g2.n:
        raise ValueError(f"vertex counts differ: {g1.n} != {g2.n}")
    if g1.marks != g2.marks:
        raise ValueError("graphs use different mark spaces")
    e1, e2 = g1.edge_map, g2.edge_map
    edges = {k: (e1.get(k, BLANK), e2.get(k, BLANK)) for k in set(e1) | set(e2)}
    vmarks = tuple(zip(g1.vertex_marks, g2.vertex_marks))
    return JointGraph(g1.marks, g1.n, vmarks, edges)


def marginal(j: JointGraph, i: int) -> DomainGraph:
    """Project marks on coordinate ``i`` and drop edges whose ``i``-th mark is the placeholder."""
    if i not in (1, 2):
        raise ValueError(f"side must be 1 or 2, got {i!r}")
    k = i - 1
    edges = tuple((a, b, m[k]) for a, b, m in j.edges if m[k] != BLANK)
    vmarks = tuple(t[k] for t in j.vertex_marks)
    return DomainGraph(j.marks, i, j.n, vmarks, edges)


@dataclass(frozen=True)
class CountVectors:
    """Edge-mark counts, vertex-mark counts and (optionally) the degree sequence."""

    edge_counts: dict
    vertex_counts: dict
    degrees: tuple | None = None

    def __post_init__(self):
        if self.degrees is not None and sum(self.degrees) != 2 * sum(self.edge_counts.values()):
            raise ValueError("degree sum must equal twice the edge count")

    @property
    def n_edges(self) -> int:
        return sum(self.edge_counts.values())


def count_vectors(g) -> CountVectors:
    """Exact tallies ``m``, ``u`` and the degree sequence of a domain or joint graph."""
    m = dict.fromkeys(g.marks.edge_alphabet(g.domain), 0)
    for _, _, x in g.edges:
        m[x] += 1
    u = dict.fromkeys(g.marks.vertex_alphabet(g.domain), 0)
    for t in g.vertex_marks:
        u[t] += 1
    return CountVectors(m, u, g.degrees)


def project_counts(cv: CountVectors, side: int, marks: MarkSpaces | None = None) -> CountVectors:
    """Sum joint counts over the other coordinate.

    The edge counts come back indexed by ``Xi_side`` plus the placeholder;
    vertex counts by ``Theta_side``. With ``marks`` given, every symbol of
    those alphabets is present (zero when unused) and unknown keys are errors.
    """
    if side not in (1, 2):
        raise ValueError(f"side must be 1 or 2, got {side!r}")
    k = side - 1
    if marks is not None:
        known_e, known_v = set(marks.joint_edge_marks), set(marks.joint_vertex_marks)
        m = dict.fromkeys(marks.edge_alphabet(side) + (BLANK,), 0)
        u = dict.fromkeys(marks.vertex_alphabet(side), 0)
    else:
        known_e = known_v = None
        m, u = {}, {}
    for x, c in cv.edge_counts.items():
        if not (isinstance(x, tuple) and len(x) == 2) or x == (BLANK, BLANK):
            raise ValueError(f"unknown joint edge mark {x!r}")
        if known_e is not None and x not in known_e:
            raise ValueError(f"unknown joint edge mark {x!r}")
        m[x[k]] = m.get(x[k], 0) + c
    for t, c in cv.vertex_counts.items():
        if not (isinstance(t, tuple) and len(t) == 2):
            raise ValueError(f"unknown joint vertex mark {t!r}")
        if known_v is not None and t not in known_v:
            raise ValueError(f"unknown joint vertex mark {t!r}")
        u[t[k]] = u.get(t[k], 0) + c
    return CountVectors(m, u, None)


def degree_statistics(d, d_prime=None, size: int | None = None) -> np.ndarray:
    """Dense class counts ``c_k(d)``, or the joint counts ``c_{k,l}(d, d')``.

    ``size`` fixes the array length per axis (``Delta + 1``); by default it is
    one past the largest degree present.
    """
    d = np.asarray(d, dtype=np.int64)
    if d.ndim != 1 or (d.size and d.min() < 0):
        raise ValueError("degree sequence must be a 1-d list of nonnegative integers")
    if d_prime is None:
        width = size if size is not None else (int(d.max()) + 1 if d.size else 1)
        if d.size and d.max() >= width:
            raise ValueError(f"degree {int(d.max())} does not fit size {width}")
        return np.bincount(d, minlength=width)
    dp = np.asarray(d_prime, dtype=np.int64)
    if dp.shape != d.shape:
        raise ValueError(f"length mismatch: {d.size} != {dp.size}")
    if dp.size and dp.min() < 0:
        raise ValueError("degree sequence must be nonnegative")
    top = max(int(d.max()) if d.size else 0, int(dp.max()) if dp.size else 0)
    width = size if size is not None else top + 1
    if top >= width:
        raise ValueError(f"degree {top} does not fit size {width}")
    out = np.zeros((width, width), dtype=np.int64)
    np.add.at(out, (d, dp), 1)
    return out


# -- text format -----------------------------------------------------------


def _fmt_mark(m) -> str:
    return f"{m[0]}:{m[1]}" if isinstance(m, tuple) else m


def serialize_graph(g) -> str:
    """Canonical text form; ``parse_graph(serialize_graph(g)) == g``."""
    head = f"g {g.n}" if g.domain is None else f"g {g.n} d{g.domain}"
    lines = [head]
    for name in ("xi1", "xi2", "theta1", "theta2"):
        lines.append(f"a {name} " + " ".join(getattr(g.marks, name)))
    for v, t in enumerate(g.vertex_marks, start=1):
        lines.append(f"v {v} {_fmt_mark(t)}")
    for i, j, m in g.edges:
        lines.append(f"e {i} {j} {_fmt_mark(m)}")
    return "\n".join(lines) + "\n"


def _parse_int(tok, lineno, what):
    try:
        return int(tok)
    except ValueError:
        raise GraphParseError(f"expected integer {what}, got {tok!r}", lineno) from None


def parse_graph(text: str, marks: MarkSpaces | None = None):
    """Parse the graph file format.

    Alphabets come from ``a`` lines, else from ``marks``, else they are
    inferred from the symbols that occur.
    """
    n = domain = None
    header_seen = False
    alpha = {}
    vmarks = {}
    edges = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        kind = tok[0]
        if kind == "g":
            if header_seen:
                raise GraphParseError("duplicate header", lineno)
            if len(tok) not in (2, 3):
                raise GraphParseError("header must be 'g <n>' or 'g <n> d<1|2>'", lineno)
            n = _parse_int(tok[1], lineno, "vertex count")
            if n < 0:
                raise GraphParseError("vertex count must be nonnegative", lineno)
            if len(tok) == 3:
                if tok[2] not in ("d1", "d2"):
                    raise GraphParseError(f"unknown domain tag {tok[2]!r}", lineno)
                domain = int(tok[2][1])
            header_seen = True
            continue
        if not header_seen:
            raise GraphParseError("missing 'g <n>' header", lineno)
        if kind == "a":
            if len(tok) < 3 or tok[1] not in ("xi1", "xi2", "theta1", "theta2"):
                raise GraphParseError("alphabet line must be 'a <xi1|xi2|theta1|theta2> <symbols>'", lineno)
            if tok[1] in alpha:
                raise GraphParseError(f"alphabet {tok[1]} declared twice", lineno)
            alpha[tok[1]] = tuple(tok[2:])
        elif kind == "v":
            if len(tok) != 3:
                raise GraphParseError("vertex line must be 'v <id> <mark>'", lineno)
            v = _parse_int(tok[1], lineno, "vertex id")
            if not 1 <= v <= n:
                raise GraphParseError(f"vertex {v} out of range 1..{n}", lineno)
            if v in vmarks:
                raise GraphParseError(f"vertex {v} listed twice", lineno)
            vmarks[v] = (_split_mark(tok[2], domain, lineno), lineno)
        elif kind == "e":
            if len(tok) != 4:
                raise GraphParseError("edge line must be 'e <i> <j> <mark>'", lineno)
            i = _parse_int(tok[1], lineno, "endpoint")
            j = _parse_int(tok[2], lineno, "endpoint")
            if i == j:
                raise GraphParseError(f"self-loop at vertex {i}", lineno)
            if not (1 <= i <= n and 1 <= j <= n):
                raise GraphParseError(f"edge ({i}, {j}) out of range 1..{n}", lineno)
            key = (min(i, j), max(i, j))
            if key in edges:
                raise GraphParseError(f"duplicate edge {key}", lineno)
            m = _split_mark(tok[3], domain, lineno)
            if domain is None and m == (BLANK, BLANK):
                raise GraphParseError("edge mark cannot be '_:_'", lineno)
            edges[key] = (m, lineno)
        else:
            raise GraphParseError(f"unknown line type {kind!r}", lineno)
    if not header_seen:
        raise GraphParseError("missing 'g <n>' header", None)
    missing = [v for v in range(1, n + 1) if v not in vmarks]
    if missing:
        raise GraphParseError(f"no mark given for vertex {missing[0]}", None)

    if alpha:
        absent = {"xi1", "xi2", "theta1", "theta2"} - set(alpha)
        if absent:
            raise GraphParseError(f"alphabet line(s) missing: {sorted(absent)}", None)
        try:
            marks = MarkSpaces(**alpha)
        except ValueError as exc:
            raise GraphParseError(str(exc), None) from None
    elif marks is None:
        marks = _infer_marks(domain, vmarks, edges)

    ea = set(marks.edge_alphabet(domain))
    va = set(marks.vertex_alphabet(domain))
    for v, (t, lineno) in vmarks.items():
        if t not in va:
            raise GraphParseError(f"unknown vertex mark {_fmt_mark(t)!r}", lineno)
    for key, (m, lineno) in edges.items():
        if m not in ea:
            raise GraphParseError(f"unknown edge mark {_fmt_mark(m)!r}", lineno)
    vm = tuple(vmarks[v][0] for v in range(1, n + 1))
    em = {k: m for k, (m, _) in edges.items()}
    if domain is None:
        return JointGraph(marks, n, vm, em)
    return DomainGraph(marks, domain, n, vm, em)


def _split_mark(tok, domain, lineno):
    if domain is None:
        parts = tok.split(":")
        if len(parts) != 2 or not all(parts):
            raise GraphParseError(f"joint mark must be '<a>:<b>', got {tok!r}", lineno)
        return tuple(parts)
    if ":" in tok:
        raise GraphParseError(f"domain graph marks are single tokens, got {tok!r}", lineno)
    return tok


def _infer_marks(domain, vmarks, edges):
    sets = {"xi1": set(), "xi2": set(), "theta1": set(), "theta2": set()}
    if domain is None:
        for (t, _) in vmarks.values():
            sets["theta1"].add(t[0])
            sets["theta2"].add(t[1])
        for (m, _) in edges.values():
            sets["xi1"].add(m[0])
            sets["xi2"].add(m[1])
    else:
        for (t, _) in vmarks.values():
            sets[f"theta{domain}"].add(t)
        for (m, _) in edges.values():
            sets[f"xi{domain}"].add(m)
    sets = {k: s - {BLANK} for k, s in sets.items()}
    empty = [k for k, s in sets.items() if not s]
    if empty:
        raise GraphParseError(f"cannot infer alphabet(s) {empty}; add 'a' lines or pass marks", None)
    return MarkSpaces(**sets)
