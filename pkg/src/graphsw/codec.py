"""Random-binning encoder, typical-set tests, exhaustive decoder and error-event simulation.

Each marginal graph is reduced to a 64-bit digest of its canonical text.
A per-(seed, side) key turns digests into pseudo-random words, which are
reduced modulo ``L_i`` when the bin count fits in 62 bits. Larger bin spaces
use lazy collisions: two distinct marginals share a bin when a symmetric
pseudo-random word of the pair falls below ``2^64 / L_i``.
"""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import NamedTuple

import numpy as np
from scipy.stats import binomtest

from .ensembles import CmModel, ErModel, build_degree_sequence, sample_cm, sample_er
from .entropy import RateTuple, thinning_stats
from .errors import AmbiguousDecode, NotFoundDecode, ResourceLimitError
from .marked_graph import BLANK, JointGraph, count_vectors, degree_statistics, marginal
from .rng import derive_seed

__all__ = [
    "CodeParams",
    "LazyBin",
    "TypicalityReport",
    "typical_er",
    "typical_cm",
    "is_typical",
    "marginal_digest",
    "encode",
    "TypicalSet",
    "typical_set",
    "decode_exhaustive",
    "TrialResult",
    "SimReport",
    "run_trial",
    "simulate",
]

MATERIALIZE_LOG_L = 62 * math.log(2)
DECODER_MAX_N = 7
MAX_EDGE_CONFIGS = 2**21
MAX_VERTEX_CONFIGS = 2**14
EVENTS = ("E1", "E2", "E3", "E4")

_M1 = np.uint64(0xFF51AFD7ED558CCD)
_M2 = np.uint64(0xC4CEB9FE1A85EC53)
_S33 = np.uint64(33)


def _fmix64(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=np.uint64)
    k = k ^ (k >> _S33)
    k = k * _M1
    k = k ^ (k >> _S33)
    k = k * _M2
    return k ^ (k >> _S33)


def _blake64(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "little")


def _combine(edge_h, vertex_h) -> np.ndarray:
    e = np.asarray(edge_h, dtype=np.uint64)
    v = np.asarray(vertex_h, dtype=np.uint64)
    return _fmix64(e ^ _fmix64(v ^ np.uint64(0x9E3779B97F4A7C15)))


def _edge_text(n, side, edges) -> str:
    return f"g {n} d{side}\n" + "".join(f"e {i} {j} {m}\n" for i, j, m in edges)


def _vertex_text(vmarks) -> str:
    return "".join(f"v {v} {t}\n" for v, t in enumerate(vmarks, start=1))


def marginal_digest(g) -> int:
    """64-bit digest of a domain graph's canonical text (edge block and vertex block hashed separately)."""
    d = _combine([_blake64(_edge_text(g.n, g.domain, g.edges))], [_blake64(_vertex_text(g.vertex_marks))])
    return int(d[0])


# -- parameters and bins --------------------------------------------------------


@dataclass(frozen=True)
class CodeParams:
    """Block length, rate tuple and binning seed.

    ``log L_i = alpha_i n ln n + R_i n``. Bins are materialized integers in
    ``[0, L_i)`` when ``log L_i <= 62 ln 2``.
    """

    n: int
    rates: RateTuple
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "rates", RateTuple(*(float(x) for x in self.rates)))
        if self.n < 2:
            raise ValueError("n must be at least 2")
        for side in (1, 2):
            if self.log_l(side) < 0:
                raise ValueError(f"log L_{side} = {self.log_l(side)} is negative")

    def log_l(self, side: int) -> float:
        a, r = (self.rates.alpha1, self.rates.R1) if side == 1 else (self.rates.alpha2, self.rates.R2)
        return a * self.n * math.log(self.n) + r * self.n

    def materialized(self, side: int) -> bool:
        return self.log_l(side) <= MATERIALIZE_LOG_L

    def bin_count(self, side: int) -> int | None:
        """``L_i`` when materialized, else None."""
        if not self.materialized(side):
            return None
        return max(1, math.floor(math.exp(self.log_l(side)) * (1 + 1e-12)))

    def key(self, side: int, trial_seed: int | None = None) -> np.uint64:
        s = self.seed if trial_seed is None else trial_seed
        return np.uint64(_blake64(f"bin-key:{s}:{side}"))


@dataclass(frozen=True)
class LazyBin:
    """Bin handle in lazy-collision mode: the marginal digest plus its key."""

    digest: int
    key: int
    threshold: float


def _prf(key, digests) -> np.ndarray:
    return _fmix64(_fmix64(np.asarray(digests, dtype=np.uint64) ^ np.uint64(key)) + np.uint64(key))


def _bins(key, digests, L) -> np.ndarray:
    return _prf(key, digests) % np.uint64(L)


def _pair_collide(key, a, b, threshold) -> np.ndarray:
    """Symmetric pseudo-random collision of digest arrays ``a`` and ``b`` with probability ``threshold``."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    w = _fmix64(_fmix64(lo ^ np.uint64(key)) ^ hi)
    return (a == b) | (w.astype(float) / 2.0**64 < threshold)


def _encode_side(g, params, side, key):
    d = marginal_digest(g)
    if params.materialized(side):
        return int(_bins(key, [d], params.bin_count(side))[0])
    return LazyBin(d, int(key), math.exp(-params.log_l(side)))


def encode(j: JointGraph, params: CodeParams, trial_seed: int | None = None):
    """``(bin1, bin2)``; bin ``i`` depends only on marginal ``i``."""
    return tuple(_encode_side(marginal(j, s), params, s, params.key(s, trial_seed)) for s in (1, 2))


# -- typicality -----------------------------------------------------------------


class TypicalityReport(NamedTuple):
    typical: bool
    conditions: dict

    def __bool__(self):
        return self.typical


def _cond(value, bound, holds=None):
    return {"value": float(value), "bound": float(bound), "holds": bool(value <= bound + 1e-9 if holds is None else holds)}


def typical_er(j: JointGraph, model: ErModel) -> TypicalityReport:
    """Membership in the ER typical set: both count vectors within ``n^(2/3)`` in L1."""
    if j.marks != model.marks:
        raise ValueError("graph and model use different mark spaces")
    n = j.n
    slack = n ** (2.0 / 3.0)
    cv = count_vectors(j)
    pm, qm = model.p_map, model.q_map
    edge = sum(abs(c - n * pm[x] / 2) for x, c in cv.edge_counts.items())
    vert = sum(abs(c - n * qm[t]) for t, c in cv.vertex_counts.items())
    conds = {"edge_counts": _cond(edge, slack), "vertex_counts": _cond(vert, slack)}
    return TypicalityReport(all(c["holds"] for c in conds.values()), conds)


@lru_cache(maxsize=256)
def _cm_targets(model: CmModel, n: int):
    d = build_degree_sequence(model, n)
    c = degree_statistics(d, size=model.delta + 1)
    th = thinning_stats(model)
    return c, d.m, n * th.joint1, n * th.joint2


def typical_cm(j: JointGraph, model: CmModel) -> TypicalityReport:
    """Membership in the CM typical set (conditions i-v)."""
    if j.marks != model.marks:
        raise ValueError("graph and model use different mark spaces")
    n = j.n
    slack = n ** (2.0 / 3.0)
    target_c, m_n, t1, t2 = _cm_targets(model, n)
    size = model.delta + 1
    degs = np.asarray(j.degrees, dtype=np.int64)
    conds = {}
    fits = degs.size == 0 or degs.max() < size
    got_c = degree_statistics(degs, size=size) if fits else None
    conds["i_degree_classes"] = _cond(0 if fits and np.array_equal(got_c, target_c) else 1, 0)
    cv = count_vectors(j)
    gm = model.gamma_map
    total = cv.n_edges
    dev = sum(abs(c - m_n * gm[x]) for x, c in cv.edge_counts.items())
    conds["ii_edge_marks"] = _cond(dev, slack, total == m_n and dev <= slack + 1e-9)
    qm = model.q_map
    conds["iii_vertex_marks"] = _cond(sum(abs(c - n * qm[t]) for t, c in cv.vertex_counts.items()), slack)
    for side, target, name in ((1, t1, "iv_joint_degrees_1"), (2, t2, "v_joint_degrees_2")):
        if not fits:
            conds[name] = _cond(math.inf, slack, False)
            continue
        di = np.asarray(marginal(j, side).degrees, dtype=np.int64)
        ckl = degree_statistics(degs, di, size=size)
        lower = np.tril(np.ones((size, size), dtype=bool))
        worst = float(np.max(np.abs(ckl - target)[lower]))
        conds[name] = _cond(worst, slack)
    return TypicalityReport(all(c["holds"] for c in conds.values()), conds)


def is_typical(j: JointGraph, model) -> TypicalityReport:
    return typical_cm(j, model) if isinstance(model, CmModel) else typical_er(j, model)


# -- exhaustive typical set ------------------------------------------------------


def _support(table):
    return tuple(m for m, v in table if v > 0)


class _Side(NamedTuple):
    edge_index: np.ndarray  # typical edge row -> unique projected edge row
    vertex_index: np.ndarray  # typical vertex row -> unique projected vertex row
    edge_hash: np.ndarray
    vertex_hash: np.ndarray


class TypicalSet:
    """All typical joint graphs on ``[n]`` that use only positive-probability marks.

    The set is a product of typical edge configurations and typical vertex
    labelings, since every typicality condition constrains only one of the
    two. Rows of ``edges`` hold, per vertex pair, ``0`` for no edge or
    ``1 + index`` into ``edge_marks``.
    """

    def __init__(self, model, n: int):
        if n > DECODER_MAX_N:
            raise ResourceLimitError(f"exhaustive decoding is capped at n={DECODER_MAX_N}")
        self.model, self.n = model, n
        self.pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
        etab = model.gamma if isinstance(model, CmModel) else model.p
        self.edge_marks = _support(etab)
        self.vertex_marks = _support(model.q)
        n_e = (len(self.edge_marks) + 1) ** len(self.pairs)
        n_v = len(self.vertex_marks) ** n
        if n_e > MAX_EDGE_CONFIGS or n_v > MAX_VERTEX_CONFIGS:
            raise ResourceLimitError(f"{n_e} edge and {n_v} vertex configurations exceed the decoder caps")
        edges = np.array(list(product(range(len(self.edge_marks) + 1), repeat=len(self.pairs))), dtype=np.int8)
        edges = edges.reshape(-1, len(self.pairs))
        verts = np.array(list(product(range(len(self.vertex_marks)), repeat=n)), dtype=np.int8).reshape(-1, n)
        self.edges = edges[self._edge_ok(edges)]
        self.vertices = verts[self._vertex_ok(verts)]
        self._edge_lookup = {row.tobytes(): k for k, row in enumerate(self.edges)}
        self._vertex_lookup = {row.tobytes(): k for k, row in enumerate(self.vertices)}
        self.sides = {s: self._side(s) for s in (1, 2)}

    def __len__(self):
        return len(self.edges) * len(self.vertices)

    # typicality on whole arrays, mirroring typical_er / typical_cm
    def _incidence(self):
        inc = np.zeros((len(self.pairs), self.n), dtype=np.int64)
        for k, (i, j) in enumerate(self.pairs):
            inc[k, i - 1] = inc[k, j - 1] = 1
        return inc

    def _edge_ok(self, E):
        n = self.n
        slack = n ** (2.0 / 3.0)
        counts = np.stack([(E == k + 1).sum(axis=1) for k in range(len(self.edge_marks))], axis=1)
        if isinstance(self.model, ErModel):
            pm = self.model.p_map
            target = np.array([n * pm[x] / 2 for x in self.edge_marks])
            return np.abs(counts - target).sum(axis=1) <= slack + 1e-9
        model = self.model
        target_c, m_n, t1, t2 = _cm_targets(model, n)
        size = model.delta + 1
        gm = model.gamma_map
        target_m = np.array([m_n * gm[x] for x in self.edge_marks])
        absent = sum(m_n * v for x, v in model.gamma if x not in self.edge_marks)
        ok = (counts.sum(axis=1) == m_n) & (np.abs(counts - target_m).sum(axis=1) + absent <= slack + 1e-9)
        inc = self._incidence()
        deg = (E > 0).astype(np.int64) @ inc
        ok &= deg.max(axis=1, initial=0) < size
        degc = np.minimum(deg, size - 1)
        for k in range(size):
            ok &= (degc == k).sum(axis=1) == target_c[k]
        lower = [(k, l) for k in range(size) for l in range(k + 1)]
        for side, target in ((1, t1), (2, t2)):
            alive = np.array([x[side - 1] != BLANK for x in self.edge_marks])
            present = np.zeros_like(E, dtype=bool)
            for idx in np.flatnonzero(alive):
                present |= E == idx + 1
            di = present.astype(np.int64) @ inc
            for k, l in lower:
                c = ((degc == k) & (di == l)).sum(axis=1)
                ok &= np.abs(c - target[k, l]) <= slack + 1e-9
        return ok

    def _vertex_ok(self, V):
        slack = self.n ** (2.0 / 3.0)
        qm = self.model.q_map
        dev = sum(np.abs((V == k).sum(axis=1) - self.n * qm[t]) for k, t in enumerate(self.vertex_marks))
        dev = dev + sum(self.n * v for t, v in self.model.q if t not in self.vertex_marks)
        return np.asarray(dev) <= slack + 1e-9

    def _side(self, side: int) -> _Side:
        k = side - 1
        sym = [None] + sorted({x[k] for x in self.edge_marks if x[k] != BLANK})
        # joint state -> projected symbol index (0 when the edge vanishes)
        jmap = np.array([0] + [0 if x[k] == BLANK else sym.index(x[k]) for x in self.edge_marks], dtype=np.int64)
        code = jmap[self.edges]
        uniq_e, e_idx = np.unique(code, axis=0, return_inverse=True)
        e_hash = np.array(
            [
                _blake64(_edge_text(self.n, side, [(i, j, sym[c]) for (i, j), c in zip(self.pairs, row) if c]))
                for row in uniq_e
            ],
            dtype=np.uint64,
        )
        vsym = [t[k] for t in self.vertex_marks]
        vcode = np.array([[vsym[c] for c in row] for row in self.vertices], dtype=object)
        keys = ["\x00".join(r) for r in vcode]
        uniq_v = sorted(set(keys))
        pos = {s: i for i, s in enumerate(uniq_v)}
        v_idx = np.array([pos[s] for s in keys], dtype=np.int64)
        v_hash = np.array([_blake64(_vertex_text(s.split("\x00"))) for s in uniq_v], dtype=np.uint64)
        return _Side(e_idx.ravel(), v_idx, e_hash, v_hash)

    def locate(self, j: JointGraph):
        """``(edge_row, vertex_row)`` of ``j``, or None when ``j`` is not in the set."""
        emap = {m: k + 1 for k, m in enumerate(self.edge_marks)}
        vmap = {t: k for k, t in enumerate(self.vertex_marks)}
        em = j.edge_map
        try:
            erow = np.array([emap[em[p]] if p in em else 0 for p in self.pairs], dtype=np.int8)
            vrow = np.array([vmap[t] for t in j.vertex_marks], dtype=np.int8)
        except KeyError:
            return None
        e = self._edge_lookup.get(erow.tobytes())
        v = self._vertex_lookup.get(vrow.tobytes())
        if e is None or v is None:
            return None
        return e, v

    def graph(self, e: int, v: int) -> JointGraph:
        edges = [(i, j, self.edge_marks[c - 1]) for (i, j), c in zip(self.pairs, self.edges[e]) if c]
        return JointGraph(self.model.marks, self.n, tuple(self.vertex_marks[c] for c in self.vertices[v]), edges)

    def digests(self, side: int) -> np.ndarray:
        """Digest matrix over (unique projected edge row, unique projected vertex row)."""
        s = self.sides[side]
        return _combine(s.edge_hash[:, None], s.vertex_hash[None, :])

    def match_mask(self, side: int, params: CodeParams, key, target) -> np.ndarray:
        """Boolean (edge rows x vertex rows) mask of typical graphs whose bin ``side`` equals ``target``."""
        s = self.sides[side]
        dig = self.digests(side)
        if isinstance(target, LazyBin):
            small = _pair_collide(key, dig, np.uint64(target.digest), target.threshold)
        else:
            small = _bins(key, dig, params.bin_count(side)) == np.uint64(target)
        return small[s.edge_index[:, None], s.vertex_index[None, :]]


@lru_cache(maxsize=16)
def typical_set(model, n: int) -> TypicalSet:
    return TypicalSet(model, n)


def _candidates(ts: TypicalSet, bins, params, trial_seed):
    m1 = ts.match_mask(1, params, params.key(1, trial_seed), bins[0])
    m2 = ts.match_mask(2, params, params.key(2, trial_seed), bins[1])
    return m1 & m2


def decode_exhaustive(bins, params: CodeParams, model, trial_seed: int | None = None) -> JointGraph:
    """Return the unique typical graph with bin pair ``bins``.

    Raises :class:`AmbiguousDecode` when several typical graphs match and
    :class:`NotFoundDecode` when none does.
    """
    ts = typical_set(model, params.n)
    mask = _candidates(ts, bins, params, trial_seed)
    hits = np.argwhere(mask)
    if len(hits) == 0:
        raise NotFoundDecode()
    if len(hits) > 1:
        raise AmbiguousDecode([ts.graph(int(e), int(v)) for e, v in hits[:16]])
    e, v = hits[0]
    return ts.graph(int(e), int(v))


# -- simulation -----------------------------------------------------------------


class TrialResult(NamedTuple):
    trial: int
    seed: int
    typical: bool
    decoded: bool
    event: str | None
    outcome: str
    candidates: int

    def to_dict(self) -> dict:
        return self._asdict()


def _sample(model, n, seed):
    return sample_cm(model, n, seed) if isinstance(model, CmModel) else sample_er(model, n, seed)


def run_trial(params: CodeParams, model, trial: int, seed: int) -> TrialResult:
    """One source draw, one binning, one decode, with error-event attribution.

    Events are assigned in the order E1 (atypical source), E2 (a competitor
    differing in both marginals), E3 (a competitor sharing marginal 1),
    E4 (a competitor sharing marginal 2).
    """
    src_seed = derive_seed(seed, "source", trial)
    bin_seed = derive_seed(params.seed, "bins", trial)
    g = _sample(model, params.n, src_seed)
    ts = typical_set(model, params.n)
    bins = encode(g, params, bin_seed)
    mask = _candidates(ts, bins, params, bin_seed)
    n_cand = int(mask.sum())
    loc = ts.locate(g)
    typical = loc is not None
    correct = typical and n_cand == 1 and bool(mask[loc])
    if n_cand == 0:
        outcome = "not-found"
    elif n_cand > 1:
        outcome = "ambiguous"
    else:
        outcome = "ok" if correct else "wrong"
    event = None
    if not typical:
        event = "E1"
    elif not correct:
        e0, v0 = loc
        s1, s2 = ts.sides[1], ts.sides[2]
        others = mask.copy()
        others[e0, v0] = False
        es, vs = np.nonzero(others)
        same1 = (s1.edge_index[es] == s1.edge_index[e0]) & (s1.vertex_index[vs] == s1.vertex_index[v0])
        same2 = (s2.edge_index[es] == s2.edge_index[e0]) & (s2.vertex_index[vs] == s2.vertex_index[v0])
        if np.any(~same1 & ~same2):
            event = "E2"
        elif np.any(same1):
            event = "E3"
        else:
            event = "E4"
    return TrialResult(trial, src_seed, typical, correct, event, outcome, n_cand)


def _wilson(k, n):
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=0.95, method="wilson")
    return [float(ci.low), float(ci.high)]


@dataclass(frozen=True)
class SimReport:
    n: int
    rates: RateTuple
    trials: int
    pe: float
    pe_ci: list
    event_rates: dict
    event_ci: dict
    typical_rate: float
    results: tuple

    def summary(self) -> dict:
        return {
            "n": self.n,
            "rates": list(self.rates),
            "trials": self.trials,
            "pe": self.pe,
            "pe_ci": self.pe_ci,
            "event_rates": self.event_rates,
            "event_ci": self.event_ci,
            "typical_rate": self.typical_rate,
        }

    def errors(self) -> np.ndarray:
        return np.array([not r.decoded for r in self.results], dtype=bool)


def _run_chunk(args):
    params, model, seed, trials = args
    return [run_trial(params, model, t, seed) for t in trials]


def simulate(params: CodeParams, model, trials: int, seed: int, jobs: int = 1) -> SimReport:
    """Monte Carlo estimate of the decoding error probability and its event breakdown.

    Trial ``t`` draws its source from ``(seed, t)`` and its binning from
    ``(params.seed, t)``, so reports with different rates but equal seeds are
    paired trial by trial.
    """
    trials = int(trials)
    if trials < 1:
        raise ValueError("trials must be positive")
    typical_set(model, params.n)  # fail fast on caps
    idx = list(range(trials))
    if jobs > 1:
        chunks = [idx[k::jobs] for k in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = ex.map(_run_chunk, [(params, model, seed, c) for c in chunks])
            results = sorted((r for part in parts for r in part), key=lambda r: r.trial)
    else:
        results = _run_chunk((params, model, seed, idx))
    n_err = sum(not r.decoded for r in results)
    counts = {e: sum(r.event == e for r in results) for e in EVENTS}
    return SimReport(
        params.n,
        params.rates,
        trials,
        n_err / trials,
        _wilson(n_err, trials),
        {e: c / trials for e, c in counts.items()},
        {e: _wilson(c, trials) for e, c in counts.items()},
        sum(r.typical for r in results) / trials,
        tuple(results),
    )
