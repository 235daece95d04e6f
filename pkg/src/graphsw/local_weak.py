"""Rooted neighbourhoods, canonical classes and Galton-Watson limit objects.

A rooted class is stored as canonical JSON bytes. Trees use an AHU-style
nested code ``[vertex_mark, [[edge_mark, child_code], ...]]`` with children
sorted by their serialized form. Neighbourhoods containing a cycle use a
canonical adjacency listing found by individualization and refinement.
"""
from __future__ import annotations

import base64
import json
import math
from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import NamedTuple

import numpy as np
from scipy.stats import poisson

from .entropy import thinning_stats
from .errors import ResourceLimitError
from .marked_graph import BLANK
from .rng import stream

__all__ = [
    "RootedClass",
    "NeighborhoodDist",
    "neighborhood",
    "empirical_u",
    "size_biased",
    "sample_gw_er",
    "sample_gw_cm",
    "gw_distribution",
    "limit_law_er",
    "limit_law_cm",
    "marginal_class",
    "dist_tv",
    "LimitDegree",
    "limit_degree",
    "decode_class",
]

MAX_CYCLIC_VERTICES = 12
LIMIT_TAIL = 1e-12
MAX_LIMIT_CLASSES = 200_000


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def _jmark(m):
    return list(m) if isinstance(m, tuple) else m


def _unjmark(m):
    return tuple(m) if isinstance(m, list) else m


@dataclass(frozen=True, order=True)
class RootedClass:
    """Isomorphism class of a rooted marked graph truncated at ``depth``."""

    code: bytes
    depth: int

    def to_base64(self) -> str:
        return base64.b64encode(self.code).decode("ascii")

    @classmethod
    def from_base64(cls, text: str, depth: int) -> "RootedClass":
        return cls(base64.b64decode(text.encode("ascii")), depth)

    def describe(self) -> str:
        return self.code.decode("utf-8")


# -- canonical forms -------------------------------------------------------------


class _Rooted(NamedTuple):
    """A small rooted graph on local ids ``0..k-1`` with root ``0``."""

    vmarks: list
    adj: list  # adj[v] = list of (w, mark)


def _tree_code(g: _Rooted, v: int, parent: int):
    kids = [[_jmark(m), _tree_code(g, w, v)] for w, m in g.adj[v] if w != parent]
    kids.sort(key=_dumps)
    return [_jmark(g.vmarks[v]), kids]


def _refine(g: _Rooted, colors: list) -> list:
    """Colour refinement; colours are ranks of isomorphism-invariant signatures."""
    n_colors = len(set(colors))
    while True:
        sigs = [
            _dumps([colors[v], sorted([_dumps(_jmark(m)), colors[w]] for w, m in g.adj[v])])
            for v in range(len(colors))
        ]
        ranks = {s: i for i, s in enumerate(sorted(set(sigs)))}
        new = [ranks[s] for s in sigs]
        if len(ranks) == n_colors:
            return new
        colors, n_colors = new, len(ranks)


def _leaf_code(g: _Rooted, colors: list) -> str:
    pos = colors  # discrete partition: colour == position
    edges = sorted(
        (min(pos[v], pos[w]), max(pos[v], pos[w]), _dumps(_jmark(m)))
        for v in range(len(pos))
        for w, m in g.adj[v]
        if v < w
    )
    order = sorted(range(len(pos)), key=lambda v: pos[v])
    return _dumps(["G", [_jmark(g.vmarks[v]) for v in order], [[a, b, json.loads(m)] for a, b, m in edges]])


def _search(g: _Rooted, colors: list) -> str:
    colors = _refine(g, colors)
    k = len(colors)
    if len(set(colors)) == k:
        return _leaf_code(g, colors)
    cells = {}
    for v, c in enumerate(colors):
        cells.setdefault(c, []).append(v)
    target = min(c for c, vs in cells.items() if len(vs) > 1)
    best = None
    for v in cells[target]:
        indiv = [2 * c + (0 if c != target or u == v else 1) for u, c in enumerate(colors)]
        code = _search(g, indiv)
        if best is None or code < best:
            best = code
    return best


def _canonical(g: _Rooted, depth: int) -> RootedClass:
    k = len(g.vmarks)
    n_edges = sum(len(a) for a in g.adj) // 2
    if n_edges == k - 1:
        return RootedClass(_dumps(_tree_code(g, 0, -1)).encode("utf-8"), depth)
    if k > MAX_CYCLIC_VERTICES:
        raise ResourceLimitError(f"cyclic neighbourhood with {k} vertices exceeds the cap {MAX_CYCLIC_VERTICES}")
    initial = [_dumps([0 if v == 0 else 1, _jmark(g.vmarks[v])]) for v in range(k)]
    ranks = {s: i for i, s in enumerate(sorted(set(initial)))}
    return RootedClass(_search(g, [ranks[s] for s in initial]).encode("utf-8"), depth)


def _ball(adjacency, vmark, root: int, h: int) -> _Rooted:
    """Induced subgraph on vertices within distance ``h`` of ``root`` (1-based ids)."""
    local = {root: 0}
    order = [root]
    dist = {root: 0}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        if dist[v] == h:
            continue
        for w, _ in adjacency[v - 1]:
            if w not in dist:
                dist[w] = dist[v] + 1
                local[w] = len(order)
                order.append(w)
                queue.append(w)
    adj = [[] for _ in order]
    for v in order:
        for w, m in adjacency[v - 1]:
            if w in local:
                adj[local[v]].append((local[w], m))
    return _Rooted([vmark(v) for v in order], adj)


def neighborhood(g, v: int, h: int) -> RootedClass:
    """Class of the depth-``h`` neighbourhood of ``v`` (distance-``<= h`` induced subgraph)."""
    if not 1 <= v <= g.n:
        raise ValueError(f"vertex {v} out of range 1..{g.n}")
    if h < 0:
        raise ValueError("depth must be nonnegative")
    return _canonical(_ball(g.adjacency, g.vertex_mark, v, h), h)


# -- decoding and marginals ---------------------------------------------------


def decode_class(c: RootedClass) -> _Rooted:
    """Rebuild a representative rooted graph from a class code."""
    obj = json.loads(c.code.decode("utf-8"))
    if obj and obj[0] == "G":
        _, vm, edges = obj
        adj = [[] for _ in vm]
        for a, b, m in edges:
            adj[a].append((b, _unjmark(m)))
            adj[b].append((a, _unjmark(m)))
        return _Rooted([_unjmark(x) for x in vm], adj)
    vmarks, adj = [], []

    def walk(node, parent, emark):
        idx = len(vmarks)
        vmarks.append(_unjmark(node[0]))
        adj.append([])
        if parent is not None:
            adj[idx].append((parent, emark))
            adj[parent].append((idx, emark))
        for m, child in node[1]:
            walk(child, idx, _unjmark(m))

    walk(obj, None, None)
    return _Rooted(vmarks, adj)


def marginal_class(c: RootedClass, i: int) -> RootedClass:
    """Project a joint class onto domain ``i``: drop placeholder edges, keep the root's component, re-truncate."""
    if i not in (1, 2):
        raise ValueError("side must be 1 or 2")
    g = decode_class(c)
    k = i - 1
    proj_adj = [[(w, m[k]) for w, m in nb if m[k] != BLANK] for nb in g.adj]
    proj = _Rooted([m[k] for m in g.vmarks], proj_adj)
    ball = _ball([[(w + 1, m) for w, m in nb] for nb in proj.adj], lambda v: proj.vmarks[v - 1], 1, c.depth)
    return _canonical(ball, c.depth)


# -- distributions -------------------------------------------------------------


@dataclass(frozen=True)
class NeighborhoodDist:
    probs: dict
    depth: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        total = sum(self.probs.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, not 1")
        for c in self.probs:
            if c.depth != self.depth:
                raise ValueError("class depth differs from the distribution depth")

    def to_json(self) -> list:
        return [{"class": c.to_base64(), "prob": p} for c, p in sorted(self.probs.items())]

    @classmethod
    def from_json(cls, items, depth: int, provenance=None) -> "NeighborhoodDist":
        probs = {}
        for it in items:
            c = RootedClass.from_base64(it["class"], depth)
            probs[c] = probs.get(c, 0.0) + float(it["prob"])
        return cls(probs, depth, dict(provenance or {}))

    def pushforward(self, fn) -> "NeighborhoodDist":
        out = {}
        for c, p in self.probs.items():
            d = fn(c)
            out[d] = out.get(d, 0.0) + p
        return NeighborhoodDist(out, self.depth, dict(self.provenance))


def _from_counts(counts: dict, depth: int, provenance: dict) -> NeighborhoodDist:
    total = sum(counts.values())
    return NeighborhoodDist({c: k / total for c, k in counts.items()}, depth, provenance)


def empirical_u(g, h: int) -> NeighborhoodDist:
    """Exact law of the depth-``h`` class of a uniformly chosen vertex."""
    if g.n < 1:
        raise ValueError("graph has no vertices")
    counts = {}
    for v in range(1, g.n + 1):
        c = neighborhood(g, v, h)
        counts[c] = counts.get(c, 0) + 1
    return _from_counts(counts, h, {"kind": "empirical", "n": g.n})


def dist_tv(d1: NeighborhoodDist, d2: NeighborhoodDist) -> float:
    if d1.depth != d2.depth:
        raise ValueError(f"depth mismatch: {d1.depth} != {d2.depth}")
    keys = set(d1.probs) | set(d2.probs)
    return 0.5 * sum(abs(d1.probs.get(k, 0.0) - d2.probs.get(k, 0.0)) for k in keys)


def size_biased(r) -> np.ndarray:
    """``r'_k = (k+1) r_{k+1} / E[X]`` on ``0..Delta-1``."""
    r = np.asarray(r, dtype=float)
    mean = float(np.dot(np.arange(r.size), r))
    if not mean > 0:
        raise ValueError("size-biasing needs a positive mean")
    return np.arange(1, r.size) * r[1:] / mean


# -- Galton-Watson sampling ----------------------------------------------------


def _choice(rng, labels, probs):
    return labels[int(rng.choice(len(labels), p=probs))]


def _side_tables(model, side):
    """Edge intensities (ER) or edge law (CM) and the vertex law, optionally marginalized."""
    etab = model.gamma if hasattr(model, "gamma") else model.p
    if side is None:
        return list(etab), list(model.q)
    k = side - 1
    e, q = {}, {}
    for m, v in etab:
        e[m[k]] = e.get(m[k], 0.0) + v
    for t, v in model.q:
        q[t[k]] = q.get(t[k], 0.0) + v
    return list(e.items()), list(q.items())


def _gw_er_code(rng, marks, lam, vlabels, qv, h):
    mark = _choice(rng, vlabels, qv)
    kids = []
    if h > 0:
        counts = rng.poisson(lam)
        for x, c in zip(marks, counts):
            for _ in range(int(c)):
                kids.append([_jmark(x), _gw_er_code(rng, marks, lam, vlabels, qv, h - 1)])
    kids.sort(key=_dumps)
    return [_jmark(mark), kids]


def sample_gw_er(model, h: int, seed: int, rng=None) -> RootedClass:
    """One draw of the depth-``h`` marked Poisson Galton-Watson tree."""
    if h < 0:
        raise ValueError("depth must be nonnegative")
    rng = rng if rng is not None else stream(seed, "gw-er")
    etab, qtab = _side_tables(model, None)
    marks = [m for m, _ in etab]
    lam = np.array([v for _, v in etab])
    code = _gw_er_code(rng, marks, lam, [t for t, _ in qtab], np.array([v for _, v in qtab]), h)
    return RootedClass(_dumps(code).encode("utf-8"), h)


def _gw_cm_code(rng, h, offspring, elabels, gv, vlabels, qv, root):
    mark = _choice(rng, vlabels, qv)
    kids = []
    if h > 0:
        law = offspring[0] if root else offspring[1]
        k = int(rng.choice(law.size, p=law))
        for _ in range(k):
            x = _choice(rng, elabels, gv)
            kids.append([_jmark(x), _gw_cm_code(rng, h - 1, offspring, elabels, gv, vlabels, qv, False)])
    kids.sort(key=_dumps)
    return [_jmark(mark), kids]


def sample_gw_cm(model, h: int, seed: int, rng=None) -> RootedClass:
    """Depth-``h`` unimodular GW tree: root degree ``~ r``, other vertices ``~ size_biased(r)`` children."""
    if h < 0:
        raise ValueError("depth must be nonnegative")
    rng = rng if rng is not None else stream(seed, "gw-cm")
    r = np.asarray(model.r, dtype=float)
    offspring = (r, size_biased(r))
    code = _gw_cm_code(
        rng,
        h,
        offspring,
        [m for m, _ in model.gamma],
        np.array([v for _, v in model.gamma]),
        [t for t, _ in model.q],
        np.array([v for _, v in model.q]),
        True,
    )
    return RootedClass(_dumps(code).encode("utf-8"), h)


def gw_distribution(model, h: int, samples: int, seed: int) -> NeighborhoodDist:
    """Empirical law of ``samples`` independent limit-tree draws from one stream."""
    cm = hasattr(model, "gamma")
    rng = stream(seed, "gw-cm" if cm else "gw-er", "many")
    sampler = sample_gw_cm if cm else sample_gw_er
    counts = {}
    for _ in range(int(samples)):
        c = sampler(model, h, seed, rng=rng)
        counts[c] = counts.get(c, 0) + 1
    return _from_counts(counts, h, {"kind": "limit-sampled", "samples": int(samples)})


# -- exact depth-1 limit laws --------------------------------------------------


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _star_class(root_mark, child_types, counts) -> RootedClass:
    kids = []
    for (x, t), c in zip(child_types, counts):
        kids.extend([[_jmark(x), [_jmark(t), []]]] * c)
    kids.sort(key=_dumps)
    return RootedClass(_dumps([_jmark(root_mark), kids]).encode("utf-8"), 1)


def _star_law(qtab, child_types, child_probs, total_law, label) -> NeighborhoodDist:
    """Root mark ``~ q``; child count ``~ total_law``; child types i.i.d. ``child_probs``."""
    types = [ct for ct, w in zip(child_types, child_probs) if w > 0]
    w = np.array([w for w in child_probs if w > 0])
    parts = max(len(types), 1)
    n_classes = sum(math.comb(t + parts - 1, parts - 1) for t, pt in enumerate(total_law) if pt > 0)
    if n_classes > MAX_LIMIT_CLASSES:
        raise ResourceLimitError(f"{n_classes} depth-1 classes exceed the cap {MAX_LIMIT_CLASSES}")
    probs = {}
    for total, pt in enumerate(total_law):
        if pt == 0:
            continue
        for comp in _compositions(total, parts):
            if types:
                logp = math.lgamma(total + 1) + sum(c * math.log(wi) - math.lgamma(c + 1) for c, wi in zip(comp, w))
                pc = pt * math.exp(logp)
            else:
                pc = pt
            for t, qt in qtab:
                if qt == 0:
                    continue
                c = _star_class(t, types, comp if types else ())
                probs[c] = probs.get(c, 0.0) + qt * pc
    total = sum(probs.values())
    probs = {c: p / total for c, p in probs.items()}
    return NeighborhoodDist(probs, 1, {"kind": "exact", "law": label})


def limit_law_er(model, side: int | None = None) -> NeighborhoodDist:
    """Exact depth-1 law of the ER limit tree (joint, or of marginal ``side``).

    Child counts are Poisson with mean ``sum p``, truncated where the tail
    drops below ``1e-12`` and renormalized.
    """
    etab, qtab = _side_tables(model, side)
    if side is not None:
        etab = [(x, v) for x, v in etab if x != BLANK]
    lam = sum(v for _, v in etab)
    top = int(poisson.isf(LIMIT_TAIL, lam)) + 1 if lam > 0 else 0
    total_law = poisson.pmf(np.arange(top + 1), lam) if lam > 0 else np.array([1.0])
    types, weights = [], []
    for x, v in etab:
        for t, qt in qtab:
            types.append((x, t))
            weights.append(v * qt / lam if lam > 0 else 0.0)
    return _star_law(qtab, types, weights, total_law, "er")


def limit_law_cm(model, side: int | None = None) -> NeighborhoodDist:
    """Exact depth-1 law of the CM limit tree (joint, or of marginal ``side``)."""
    etab, qtab = _side_tables(model, side)
    if side is None:
        total_law = np.asarray(model.r, dtype=float)
        beta = 1.0
    else:
        th = thinning_stats(model)
        total_law = th.law(side)
        beta = th.beta(side)
        etab = [(x, v) for x, v in etab if x != BLANK]
    types, weights = [], []
    for x, v in etab:
        for t, qt in qtab:
            types.append((x, t))
            weights.append(v * qt / beta if beta > 0 else 0.0)
    return _star_law(qtab, types, weights, total_law, "cm")


# -- degrees -------------------------------------------------------------------


class LimitDegree(NamedTuple):
    d12: float
    d1: float
    d2: float


def limit_degree(model) -> LimitDegree:
    """Expected root degree of the joint limit and of each marginal."""
    if hasattr(model, "gamma"):
        th = thinning_stats(model)
        size = th.r.size
        d = [float(np.dot(np.arange(size), th.joint(s).sum(axis=0))) for s in (1, 2)]
        return LimitDegree(float(np.dot(np.arange(size), th.r)), d[0], d[1])
    d12 = sum(v for _, v in model.p)
    d1 = sum(v for x, v in model.p if x[0] != BLANK)
    d2 = sum(v for x, v in model.p if x[1] != BLANK)
    return LimitDegree(d12, d1, d2)
