"""Closed-form BC entropies, thinning statistics and the two-domain rate region.

All quantities are in nats. Models are duck-typed: an ER model exposes
``p``/``q`` tables, a CM model additionally ``delta``, ``r`` and ``gamma``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import entr, gammaln

from .marked_graph import BLANK

__all__ = [
    "s_func",
    "shannon",
    "log_multinomial",
    "ThinningStats",
    "thinning_stats",
    "BcSummary",
    "bc_entropy_er",
    "bc_entropy_cm",
    "bc_entropy",
    "exact_shannon_er",
    "RateTuple",
    "lex_succ",
    "lex_succeq",
    "RegionVerdict",
    "rate_region_contains",
]

DIST_TOL = 1e-9


def s_func(x: float) -> float:
    """``s(x) = x/2 - (x/2) ln x`` with ``s(0) = 0``."""
    x = float(x)
    if x < 0 or math.isnan(x):
        raise ValueError(f"s(x) needs x >= 0, got {x}")
    if x == 0:
        return 0.0
    return 0.5 * x - 0.5 * x * math.log(x)


def _as_prob_array(dist) -> np.ndarray:
    if isinstance(dist, dict):
        dist = list(dist.values())
    a = np.asarray(dist, dtype=float).ravel()
    if a.size == 0 or np.any(~np.isfinite(a)) or np.any(a < 0):
        raise ValueError("distribution must be a nonempty vector of nonnegative numbers")
    if abs(a.sum() - 1.0) > DIST_TOL:
        raise ValueError(f"distribution must sum to 1 (got {a.sum()!r})")
    return a


def shannon(dist) -> float:
    """Shannon entropy in nats of a probability vector or mapping."""
    return float(entr(_as_prob_array(dist)).sum())


def _entropy_unchecked(a) -> float:
    return float(entr(np.asarray(a, dtype=float)).sum())


def log_multinomial(N, parts) -> float:
    """``log( N! / (prod parts! * (N - sum parts)!) )`` via log-gamma.

    Real-valued arguments are accepted, which the asymptotic bounds use.
    """
    parts = np.asarray(list(parts), dtype=float)
    if np.any(parts < 0):
        raise ValueError("parts must be nonnegative")
    rest = float(N) - parts.sum()
    if rest < -1e-9 * max(1.0, float(N)):
        raise ValueError(f"parts sum {parts.sum()} exceeds N={N}")
    rest = max(rest, 0.0)
    return float(gammaln(float(N) + 1) - gammaln(parts + 1).sum() - gammaln(rest + 1))


def _h2(b: float) -> float:
    return _entropy_unchecked([b, 1.0 - b])


# -- thinning ------------------------------------------------------------------


@dataclass(frozen=True)
class ThinningStats:
    """Joint laws of the degree ``X ~ r`` and its thinnings ``X_1``, ``X_2``.

    ``joint1[k, l] = P(X = k, X_1 = l)``; each edge at the root survives in
    domain ``i`` independently with probability ``beta_i``.
    """

    r: np.ndarray
    beta1: float
    beta2: float
    joint1: np.ndarray
    joint2: np.ndarray

    def joint(self, side: int) -> np.ndarray:
        return self.joint1 if side == 1 else self.joint2

    def beta(self, side: int) -> float:
        return self.beta1 if side == 1 else self.beta2

    def law(self, side: int | None = None) -> np.ndarray:
        """Law of ``X`` (``side=None``) or of ``X_side``."""
        if side is None:
            return self.r
        return self.joint(side).sum(axis=0)

    def mean(self, side: int | None = None) -> float:
        law = self.law(side)
        return float(np.dot(np.arange(law.size), law))

    def entropy(self, side: int | None = None) -> float:
        return _entropy_unchecked(self.law(side))

    def expected_log_factorial(self, side: int | None = None) -> float:
        law = self.law(side)
        return float(np.dot(gammaln(np.arange(law.size) + 1.0), law))

    @property
    def H_X(self) -> float:
        return self.entropy()

    @property
    def H_X1(self) -> float:
        return self.entropy(1)

    @property
    def H_X2(self) -> float:
        return self.entropy(2)

    @property
    def E_X(self) -> float:
        return self.mean()

    @property
    def E_log_fact_X(self) -> float:
        return self.expected_log_factorial()

    @property
    def E_log_fact_X1(self) -> float:
        return self.expected_log_factorial(1)

    @property
    def E_log_fact_X2(self) -> float:
        return self.expected_log_factorial(2)


def binomial_thinning(r, beta: float) -> np.ndarray:
    """``P(X=k, X'=l) = r_k C(k,l) beta^l (1-beta)^(k-l)`` as a dense array."""
    r = np.asarray(r, dtype=float)
    size = r.size
    out = np.zeros((size, size))
    for k in range(size):
        if r[k] == 0:
            continue
        for l in range(k + 1):
            out[k, l] = r[k] * math.comb(k, l) * beta**l * (1.0 - beta) ** (k - l)
    return out


def thinning_stats(model) -> ThinningStats:
    r = np.asarray(model.r, dtype=float)
    b1, b2 = model.beta(1), model.beta(2)
    return ThinningStats(r, b1, b2, binomial_thinning(r, b1), binomial_thinning(r, b2))


# -- BC entropy ----------------------------------------------------------------


@dataclass(frozen=True)
class BcSummary:
    sigma12: float
    sigma1: float
    sigma2: float
    sigma2given1: float
    sigma1given2: float
    d12: float
    d1: float
    d2: float
    ensemble: str

    @classmethod
    def build(cls, sigma12, sigma1, sigma2, d12, d1, d2, ensemble):
        return cls(
            float(sigma12),
            float(sigma1),
            float(sigma2),
            float(sigma12 - sigma1),
            float(sigma12 - sigma2),
            float(d12),
            float(d1),
            float(d2),
            ensemble,
        )

    def thresholds(self) -> dict:
        """Corner points ``(alpha, R)`` of the three rate-region constraints."""
        return {
            "side1": ((self.d12 - self.d2) / 2, self.sigma1given2),
            "side2": ((self.d12 - self.d1) / 2, self.sigma2given1),
            "sum": (self.d12 / 2, self.sigma12),
        }

    def to_dict(self) -> dict:
        return asdict(self)


def _side_sums(table, side):
    k = side - 1
    out = {}
    for m, v in table:
        out[m[k]] = out.get(m[k], 0.0) + v
    return out


def bc_entropy_er(model) -> BcSummary:
    p = dict(model.p)
    q = [v for _, v in model.q]
    sigma12 = _entropy_unchecked(q) + sum(s_func(v) for v in p.values())
    sig, deg = {}, {}
    for side in (1, 2):
        ps = _side_sums(model.p, side)
        qs = list(_side_sums(model.q, side).values())
        real = [v for x, v in ps.items() if x != BLANK]
        sig[side] = _entropy_unchecked(qs) + sum(s_func(v) for v in real)
        deg[side] = sum(real)
    return BcSummary.build(sigma12, sig[1], sig[2], sum(p.values()), deg[1], deg[2], "er")


def _conditional_real_entropy(side_law: dict) -> float:
    """``H(Gamma_i | Gamma_i != placeholder)``."""
    real = np.array([v for x, v in side_law.items() if x != BLANK])
    total = real.sum()
    if total <= 0:
        return 0.0
    return _entropy_unchecked(real / total)


def bc_entropy_cm(model) -> BcSummary:
    th = thinning_stats(model)
    d12 = th.mean()
    gamma = [v for _, v in model.gamma]
    q = [v for _, v in model.q]
    sigma12 = -s_func(d12) + th.entropy() - th.expected_log_factorial() + _entropy_unchecked(q) + 0.5 * d12 * _entropy_unchecked(gamma)
    sig, deg = {}, {}
    for side in (1, 2):
        di = th.beta(side) * d12
        if not di > 0:
            raise ValueError(f"expected degree of domain {side} is zero; the marginal has no edges")
        qs = list(_side_sums(model.q, side).values())
        sig[side] = (
            -s_func(di)
            + th.entropy(side)
            - th.expected_log_factorial(side)
            + _entropy_unchecked(qs)
            + 0.5 * di * _conditional_real_entropy(_side_sums(model.gamma, side))
        )
        deg[side] = di
    return BcSummary.build(sigma12, sig[1], sig[2], d12, deg[1], deg[2], "cm")


def bc_entropy(model) -> BcSummary:
    """Dispatch on the model type."""
    return bc_entropy_cm(model) if hasattr(model, "gamma") else bc_entropy_er(model)


def exact_shannon_er(model, n: int, side: int | None = None) -> float:
    """Exact entropy of the ER law on ``[n]`` (joint, or of marginal ``side``).

    Pairs are independent, so this is ``C(n,2)`` times the per-pair entropy
    plus ``n`` times the vertex-mark entropy.
    """
    n = int(n)
    if side is None:
        intens = [v for _, v in model.p]
        q = [v for _, v in model.q]
    else:
        intens = [v for x, v in _side_sums(model.p, side).items() if x != BLANK]
        q = list(_side_sums(model.q, side).values())
    total = sum(intens)
    if n <= sum(v for _, v in model.p):
        raise ValueError(f"n={n} must exceed the total intensity")
    pair = 0.0
    for v in intens:
        if v > 0:
            pair -= (v / n) * math.log(v / n)
    pair -= (1.0 - total / n) * math.log1p(-total / n)
    return n * (n - 1) / 2 * pair + n * _entropy_unchecked(q)


# -- rate region ---------------------------------------------------------------


class RateTuple(NamedTuple):
    alpha1: float
    R1: float
    alpha2: float
    R2: float


def lex_succ(a, b, tol: float = 0.0) -> bool:
    """Strict lexicographic order on ``(alpha, R)`` pairs."""
    if a[0] > b[0] + tol:
        return True
    return abs(a[0] - b[0]) <= tol and a[1] > b[1] + tol


def lex_succeq(a, b, tol: float = 0.0) -> bool:
    if a[0] > b[0] + tol:
        return True
    return abs(a[0] - b[0]) <= tol and a[1] >= b[1] - tol


@dataclass(frozen=True)
class RegionVerdict:
    contained: bool
    constraints: tuple

    @property
    def failing(self) -> tuple:
        return tuple(c["name"] for c in self.constraints if not c["holds"])

    def to_dict(self) -> dict:
        return {"contained": self.contained, "constraints": [dict(c) for c in self.constraints]}


def rate_region_contains(bc: BcSummary, t, tol: float = 1e-12) -> RegionVerdict:
    """Check a rate tuple against the three lexicographic constraints.

    Each constraint reports its point, threshold, whether it holds, and
    whether it binds (the alpha coordinate sits on the threshold, so the R
    coordinate decides).
    """
    t = RateTuple(*(float(x) for x in t))
    points = {
        "side1": (t.alpha1, t.R1),
        "side2": (t.alpha2, t.R2),
        "sum": (t.alpha1 + t.alpha2, t.R1 + t.R2),
    }
    out = []
    for name, thr in bc.thresholds().items():
        pt = points[name]
        out.append(
            {
                "name": name,
                "point": [pt[0], pt[1]],
                "threshold": [float(thr[0]), float(thr[1])],
                "holds": lex_succeq(pt, thr, tol),
                "binding": abs(pt[0] - thr[0]) <= tol,
            }
        )
    return RegionVerdict(all(c["holds"] for c in out), tuple(out))
