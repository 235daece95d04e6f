"""Marked Erdos-Renyi and configuration-model ensembles.

Samplers are pure functions of ``(model, n, seed)``; every random draw goes
through a labeled stream from :mod:`graphsw.rng`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .entropy import log_multinomial, s_func
from .marked_graph import BLANK, JointGraph, MarkSpaces, count_vectors, degree_statistics
from .rng import stream
from .errors import GraphParseError, ResourceLimitError

__all__ = [
    "ErModel",
    "CmModel",
    "DegreeSeq",
    "CmLogProb",
    "sample_er",
    "build_degree_sequence",
    "is_graphic",
    "sample_simple_with_degrees",
    "sample_cm",
    "log_prob_er",
    "log_prob_cm",
    "parse_model_config",
    "load_model",
    "model_to_config",
]

MAX_PAIRING_TRIES = 10**6
EXACT_CM_MAX_N = 10


def _as_table(marks_alpha, values, what):
    """Normalize a mapping onto a full, alphabet-ordered tuple of ``(mark, value)``."""
    values = dict(values)
    known = set(marks_alpha)
    for key in values:
        k = tuple(key) if isinstance(key, list) else key
        if k not in known:
            raise ValueError(f"unknown mark {key!r} in {what}")
    out = []
    for m in marks_alpha:
        v = float(values.get(m, 0.0))
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"{what}[{m!r}] must be a finite nonnegative number, got {v}")
        out.append((m, v))
    return tuple(out)


def _check_distribution(table, what):
    total = sum(v for _, v in table)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"{what} must sum to 1 (got {total!r})")


def _side_sums(table, side):
    """Sum a joint-mark table over the other coordinate, keyed by the side's mark (placeholder included)."""
    k = side - 1
    out = {}
    for m, v in table:
        out[m[k]] = out.get(m[k], 0.0) + v
    return out


def _positive_on_both_sides(marks, table):
    for side in (1, 2):
        sums = _side_sums(table, side)
        for sym in marks.edge_alphabet(side) + (BLANK,):
            if not sums.get(sym, 0.0) > 0:
                return False
    return True


@dataclass(frozen=True)
class ErModel:
    """Marked ER ensemble: mark ``x`` on a pair with probability ``p_x / n``; vertex marks i.i.d. ``q``.

    The coordinate positivity conditions on ``p`` are reported by
    :attr:`satisfies_positivity` rather than enforced, so degenerate
    single-mark models can still be built and sampled.
    """

    marks: MarkSpaces
    p: tuple
    q: tuple

    def __post_init__(self):
        object.__setattr__(self, "p", _as_table(self.marks.joint_edge_marks, self.p, "p"))
        object.__setattr__(self, "q", _as_table(self.marks.joint_vertex_marks, self.q, "q"))
        _check_distribution(self.q, "q")
        if not self.total_intensity > 0:
            raise ValueError("at least one edge intensity p_x must be positive")

    @property
    def p_map(self) -> dict:
        return dict(self.p)

    @property
    def q_map(self) -> dict:
        return dict(self.q)

    @property
    def total_intensity(self) -> float:
        return sum(v for _, v in self.p)

    def side_intensity(self, side: int) -> dict:
        """``p_{x_i}`` for ``x_i`` in ``Xi_i`` plus the placeholder."""
        return _side_sums(self.p, side)

    def side_vertex_law(self, side: int) -> dict:
        return _side_sums(self.q, side)

    @property
    def satisfies_positivity(self) -> bool:
        return _positive_on_both_sides(self.marks, self.p)


@dataclass(frozen=True)
class CmModel:
    """Marked configuration model with degree law ``r`` on ``0..delta``."""

    marks: MarkSpaces
    delta: int
    r: tuple
    gamma: tuple
    q: tuple
    K: float = 1.0

    def __post_init__(self):
        if int(self.delta) != self.delta or self.delta <= 0:
            raise ValueError("delta must be a positive integer")
        object.__setattr__(self, "delta", int(self.delta))
        r = tuple(float(x) for x in self.r)
        if len(r) != self.delta + 1:
            raise ValueError(f"r must have delta+1={self.delta + 1} entries, got {len(r)}")
        if any(not math.isfinite(x) or x < 0 for x in r) or abs(sum(r) - 1.0) > 1e-12:
            raise ValueError("r must be a probability vector")
        if not r[0] < 1:
            raise ValueError("r_0 must be < 1")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "gamma", _as_table(self.marks.joint_edge_marks, self.gamma, "gamma"))
        object.__setattr__(self, "q", _as_table(self.marks.joint_vertex_marks, self.q, "q"))
        _check_distribution(self.gamma, "gamma")
        _check_distribution(self.q, "q")
        if not self.K > 0:
            raise ValueError("K must be positive")

    @property
    def gamma_map(self) -> dict:
        return dict(self.gamma)

    @property
    def q_map(self) -> dict:
        return dict(self.q)

    @property
    def mean_degree(self) -> float:
        return float(np.dot(np.arange(self.delta + 1), self.r))

    def side_gamma(self, side: int) -> dict:
        return _side_sums(self.gamma, side)

    def side_vertex_law(self, side: int) -> dict:
        return _side_sums(self.q, side)

    def beta(self, side: int) -> float:
        """Probability that an edge survives in marginal ``side``."""
        return 1.0 - self.side_gamma(side).get(BLANK, 0.0)

    @property
    def satisfies_positivity(self) -> bool:
        return _positive_on_both_sides(self.marks, self.gamma)


class DegreeSeq(tuple):
    """A degree sequence; ``m`` is half the degree sum."""

    @property
    def m(self) -> int:
        return sum(self) // 2


class CmLogProb(NamedTuple):
    value: float
    mode: str


# -- Erdos-Renyi ---------------------------------------------------------------


def _pair_from_index(k: np.ndarray, n: int):
    """Map lexicographic indices of pairs ``i < j`` (0-based) to the pairs."""
    k = np.asarray(k, dtype=np.int64)
    b = 2 * n - 1
    i = np.floor((b - np.sqrt(float(b) ** 2 - 8.0 * k)) / 2).astype(np.int64)
    i = np.clip(i, 0, n - 2)

    def start(r):
        return r * (2 * n - r - 1) // 2

    for _ in range(3):
        i = np.where(start(i) > k, i - 1, i)
        i = np.where(start(i + 1) <= k, i + 1, i)
    j = k - start(i) + i + 1
    return i, j


def sample_er(model: ErModel, n: int, seed: int) -> JointGraph:
    """Draw from the marked ER law on ``[n]``.

    The number of edges is drawn as Binomial(C(n,2), sum p / n), the edge
    set uniformly among pairs and the marks i.i.d. proportional to ``p``;
    this is the same law as independent per-pair draws.
    """
    n = int(n)
    total = model.total_intensity
    if n <= total:
        raise ValueError(f"n={n} must exceed the total intensity {total}")
    marks = model.marks
    pairs = n * (n - 1) // 2
    n_edges = int(stream(seed, "er", "count").binomial(pairs, total / n)) if pairs else 0
    idx = stream(seed, "er", "pairs").choice(pairs, size=n_edges, replace=False) if n_edges else np.empty(0, int)
    idx.sort()
    ii, jj = _pair_from_index(idx, n)
    labels = [m for m, _ in model.p]
    pv = np.array([v for _, v in model.p]) / total
    edge_lab = stream(seed, "er", "edge-marks").choice(len(labels), size=n_edges, p=pv)
    vlabels = [t for t, _ in model.q]
    qv = np.array([v for _, v in model.q])
    vert_lab = stream(seed, "er", "vertex-marks").choice(len(vlabels), size=n, p=qv)
    edges = [(int(a) + 1, int(b) + 1, labels[c]) for a, b, c in zip(ii, jj, edge_lab)]
    return JointGraph(marks, n, tuple(vlabels[c] for c in vert_lab), edges)


def log_prob_er(model: ErModel, j: JointGraph) -> float:
    """Exact ``log P_ER(j)``; ``-inf`` when ``j`` uses a zero-probability mark."""
    if j.marks != model.marks:
        raise ValueError("graph and model use different mark spaces")
    n = j.n
    total = model.total_intensity
    if n <= total:
        raise ValueError(f"n={n} must exceed the total intensity {total}")
    cv = count_vectors(j)
    out = 0.0
    for x, c in cv.edge_counts.items():
        if c:
            px = model.p_map[x]
            if px == 0:
                return -math.inf
            out += c * math.log(px / n)
    out += (n * (n - 1) // 2 - cv.n_edges) * math.log1p(-total / n)
    for t, c in cv.vertex_counts.items():
        if c:
            qt = model.q_map[t]
            if qt == 0:
                return -math.inf
            out += c * math.log(qt)
    return out


# -- configuration model -------------------------------------------------------


def _slack(counts, n, r):
    return float(sum(abs(c - n * rk) for c, rk in zip(counts, r)))


def build_degree_sequence(model: CmModel, n: int) -> DegreeSeq:
    """Deterministic degree sequence whose class counts track ``n * r``.

    Counts are rounded, repaired to total ``n`` (largest residual first), and
    if the degree sum is odd one vertex moves to a neighbouring class,
    preferring classes with ``r > 0`` and then the smallest resulting slack.
    The result is sorted in decreasing order.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be positive")
    r = model.r
    delta = model.delta
    c = [math.floor(n * rk + 0.5) for rk in r]
    diff = n - sum(c)
    while diff > 0:
        k = max(range(delta + 1), key=lambda k: (n * r[k] - c[k], -k))
        c[k] += 1
        diff -= 1
    while diff < 0:
        k = min((k for k in range(delta + 1) if c[k] > 0), key=lambda k: (n * r[k] - c[k], k))
        c[k] -= 1
        diff += 1
    if sum(k * ck for k, ck in enumerate(c)) % 2:
        moves = []
        for k in range(delta + 1):
            if c[k] == 0:
                continue
            for t in (k - 1, k + 1):
                if 0 <= t <= delta:
                    trial = list(c)
                    trial[k] -= 1
                    trial[t] += 1
                    moves.append((r[t] == 0, _slack(trial, n, r), k, t, trial))
        if not moves:
            raise RuntimeError("no parity repair available")
        c = min(moves)[-1]
    slack = _slack(c, n, r)
    if slack > model.K * math.sqrt(n) + 1e-9:
        raise RuntimeError(
            f"degree-sequence slack {slack:.3f} exceeds K*sqrt(n)={model.K * math.sqrt(n):.3f}; increase n or K"
        )
    seq = []
    for k in range(delta, -1, -1):
        seq.extend([k] * c[k])
    return DegreeSeq(seq)


def is_graphic(d) -> bool:
    """Erdos-Gallai test."""
    d = sorted((int(x) for x in d), reverse=True)
    if any(x < 0 for x in d) or sum(d) % 2:
        return False
    n = len(d)
    prefix = 0
    for k in range(1, n + 1):
        prefix += d[k - 1]
        rhs = k * (k - 1) + sum(min(x, k) for x in d[k:])
        if prefix > rhs:
            return False
    return True


def sample_simple_with_degrees(d, seed: int, permute: bool = True, max_tries: int = MAX_PAIRING_TRIES):
    """Uniform simple graph whose degree classes match ``d``.

    With ``permute`` the degrees are first assigned to vertices by a uniform
    permutation, so the output is uniform over all graphs with the same
    class counts; otherwise vertex ``i`` has degree ``d[i-1]``. Half-edges
    are paired uniformly and the pairing is rejected until it is simple.
    Returns sorted 1-based edge pairs.
    """
    d = np.asarray(list(d), dtype=np.int64)
    if not is_graphic(d):
        raise ValueError(f"degree sequence is not graphic: {d.tolist()}")
    n = d.size
    if permute:
        d = d[stream(seed, "simple", "perm").permutation(n)]
    stubs = np.repeat(np.arange(n), d)
    if stubs.size == 0:
        return ()
    rng = stream(seed, "simple", "pairing")
    for _ in range(max_tries):
        rng.shuffle(stubs)
        a, b = stubs[0::2], stubs[1::2]
        if np.any(a == b):
            continue
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            continue
        order = np.argsort(keys)
        return tuple((int(x) + 1, int(y) + 1) for x, y in zip(lo[order], hi[order]))
    raise ResourceLimitError(f"no simple pairing after {max_tries} attempts")


def sample_cm(model: CmModel, n: int, seed: int) -> JointGraph:
    """Uniform simple graph with the model's class counts, then i.i.d. edge and vertex marks."""
    d = build_degree_sequence(model, n)
    edges = sample_simple_with_degrees(d, seed)
    labels = [m for m, _ in model.gamma]
    gv = np.array([v for _, v in model.gamma])
    elab = stream(seed, "cm", "edge-marks").choice(len(labels), size=len(edges), p=gv)
    vlabels = [t for t, _ in model.q]
    qv = np.array([v for _, v in model.q])
    vlab = stream(seed, "cm", "vertex-marks").choice(len(vlabels), size=n, p=qv)
    return JointGraph(
        model.marks,
        n,
        tuple(vlabels[c] for c in vlab),
        [(i, j, labels[c]) for (i, j), c in zip(edges, elab)],
    )


def _log_graph_count_asymptotic(degrees) -> float:
    """Large-n approximation of ``log |G_d|`` from the degree-count asymptotic."""
    d = np.asarray(degrees, dtype=np.int64)
    n = d.size
    b = int(d.sum())
    mean = b / n
    log_fact = sum(math.lgamma(k + 1) for k in d.tolist()) / n
    return 0.5 * b * math.log(n) + n * (-s_func(mean) - log_fact)


def log_prob_cm(model: CmModel, j: JointGraph, mode: str = "exact") -> CmLogProb:
    """``log P_CM(j)`` via the multinomial/graph-count decomposition.

    ``mode="exact"`` counts ``|G_d|`` by enumeration (``n <= 10``);
    ``mode="asymptotic"`` substitutes the degree-count asymptotic.
    """
    if mode not in ("exact", "asymptotic"):
        raise ValueError(f"mode must be 'exact' or 'asymptotic', got {mode!r}")
    if j.marks != model.marks:
        raise ValueError("graph and model use different mark spaces")
    n = j.n
    target = degree_statistics(build_degree_sequence(model, n), size=model.delta + 1)
    degs = j.degrees
    if max(degs, default=0) > model.delta:
        raise ValueError("graph has a vertex of degree above delta")
    got = degree_statistics(degs, size=model.delta + 1)
    if not np.array_equal(got, target):
        raise ValueError(f"degree class counts {got.tolist()} differ from the model's {target.tolist()}")
    if mode == "exact":
        if n > EXACT_CM_MAX_N:
            raise ResourceLimitError(f"exact mode enumerates graphs and is capped at n={EXACT_CM_MAX_N}")
        from .oracles import count_graphs_with_degrees

        log_g = math.log(count_graphs_with_degrees(degs))
    else:
        log_g = _log_graph_count_asymptotic(degs)
    neg = log_multinomial(n, target.tolist()) + log_g
    cv = count_vectors(j)
    gmap, qmap = model.gamma_map, model.q_map
    for x, c in cv.edge_counts.items():
        if c:
            if gmap[x] == 0:
                return CmLogProb(-math.inf, mode)
            neg -= c * math.log(gmap[x])
    for t, c in cv.vertex_counts.items():
        if c:
            if qmap[t] == 0:
                return CmLogProb(-math.inf, mode)
            neg -= c * math.log(qmap[t])
    return CmLogProb(-neg, mode)


# -- config files --------------------------------------------------------------


def _split_list(value):
    return [s for s in value.replace(",", " ").split() if s]


def _joint_key(s, lineno):
    parts = s.split(":")
    if len(parts) != 2 or not all(parts):
        raise GraphParseError(f"expected '<a>:<b>' mark key, got {s!r}", lineno)
    return tuple(parts)


def parse_model_config(text: str):
    """Parse ``key=value`` model config text into an :class:`ErModel` or :class:`CmModel`."""
    kv = {}
    tables = {"p": {}, "q": {}, "gamma": {}, "r": {}}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise GraphParseError(f"expected key=value, got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        head, _, rest = key.partition(".")
        if head in tables and rest:
            try:
                val = float(value)
            except ValueError:
                raise GraphParseError(f"expected a number for {key}", lineno) from None
            sub = int(rest) if head == "r" and rest.isdigit() else (_joint_key(rest, lineno) if head != "r" else None)
            if sub is None:
                raise GraphParseError(f"r.<k> needs an integer k, got {rest!r}", lineno)
            if sub in tables[head]:
                raise GraphParseError(f"duplicate key {key}", lineno)
            tables[head][sub] = val
        elif key in ("model", "xi1", "xi2", "theta1", "theta2", "delta", "K"):
            if key in kv:
                raise GraphParseError(f"duplicate key {key}", lineno)
            kv[key] = value
        else:
            raise GraphParseError(f"unknown key {key!r}", lineno)
    for need in ("model", "xi1", "xi2", "theta1", "theta2"):
        if need not in kv:
            raise GraphParseError(f"missing key {need!r}", None)
    marks = MarkSpaces(*(_split_list(kv[k]) for k in ("xi1", "xi2", "theta1", "theta2")))
    kind = kv["model"]
    if kind == "er":
        return ErModel(marks, tables["p"], tables["q"])
    if kind == "cm":
        if "delta" not in kv:
            raise GraphParseError("cm model needs 'delta'", None)
        delta = int(kv["delta"])
        r = [tables["r"].get(k, 0.0) for k in range(delta + 1)]
        if any(k > delta for k in tables["r"]):
            raise GraphParseError("r.<k> given for k > delta", None)
        return CmModel(marks, delta, r, tables["gamma"], tables["q"], float(kv.get("K", 1.0)))
    raise GraphParseError(f"model must be 'er' or 'cm', got {kind!r}", None)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return parse_model_config(fh.read())


def model_to_config(model) -> str:
    marks = model.marks
    lines = ["model=" + ("er" if isinstance(model, ErModel) else "cm")]
    for name in ("xi1", "xi2", "theta1", "theta2"):
        lines.append(f"{name}=" + ",".join(getattr(marks, name)))
    if isinstance(model, ErModel):
        lines += [f"p.{a}:{b}={v!r}" for (a, b), v in model.p]
    else:
        lines.append(f"delta={model.delta}")
        lines.append(f"K={model.K!r}")
        lines += [f"r.{k}={v!r}" for k, v in enumerate(model.r)]
        lines += [f"gamma.{a}:{b}={v!r}" for (a, b), v in model.gamma]
    lines += [f"q.{a}:{b}={v!r}" for (a, b), v in model.q]
    return "\n".join(lines) + "\n"
