"""Exact, brute-force checks for the counting identities and bounds.

Everything here enumerates or evaluates finite expressions exactly; nothing
samples. Size caps raise :class:`ResourceLimitError` instead of falling back
to approximations.
"""
from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations, product
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from .entropy import bc_entropy_cm, log_multinomial, s_func, shannon
from .errors import ResourceLimitError
from .marked_graph import BLANK, DomainGraph, JointGraph

__all__ = [
    "count_graphs_with_degrees",
    "MultinomialAsymptotics",
    "multinomial_asymptotics",
    "thinning_identity",
    "cm_count_asymptote",
    "multiset_permutations",
    "enumerate_joint_graphs",
    "enumerate_domain_graphs",
    "bc_definition_oracle",
    "typical_bound_a1",
    "A2Bound",
    "cond_bound_a2_er",
    "CondBoundCm",
    "cond_bound_cm",
    "verification_report",
]

UNMARKED_MAX_N = 10
MARKED_MAX_N = 8
MARKED_MAX_GRAPHS = 50_000


# -- unmarked graph counts ------------------------------------------------------


@lru_cache(maxsize=None)
def _count_sorted(res: tuple) -> int:
    """Simple graphs realizing the residual degrees ``res`` (sorted decreasing)."""
    if not res or res[0] == 0:
        return 1
    first, rest = res[0], res[1:]
    live = [i for i, x in enumerate(rest) if x > 0]
    if len(live) < first:
        return 0
    total = 0
    for chosen in combinations(live, first):
        nxt = list(rest)
        for i in chosen:
            nxt[i] -= 1
        total += _count_sorted(tuple(sorted(nxt, reverse=True)))
    return total


def count_graphs_with_degrees(d, max_n: int = UNMARKED_MAX_N) -> int:
    """``|G_d|``: labeled simple graphs whose vertex ``i`` has degree ``d[i]``.

    Vertices are peeled off one at a time, choosing the peeled vertex's
    neighbours among the rest; the count only depends on the multiset of
    residual degrees, which is used as the memo key.
    """
    d = [int(x) for x in d]
    if any(x < 0 for x in d):
        raise ValueError("degrees must be nonnegative")
    if len(d) > max_n:
        raise ResourceLimitError(f"exact enumeration is capped at n={max_n}")
    if sum(d) % 2:
        return 0
    return _count_sorted(tuple(sorted(d, reverse=True)))


# -- Stirling-type asymptotics -------------------------------------------------


class MultinomialAsymptotics(NamedTuple):
    limit: float
    ns: tuple
    values: tuple


def multinomial_asymptotics(case: str, b, a: float = 1.0, ns=(10, 100, 1000, 10_000)) -> MultinomialAsymptotics:
    """Finite-n values and the limit of normalized log multinomials.

    ``case="linear"``: ``a_n = floor(a n)``, ``b_i^n = floor(b_i n)``; the
    value is ``(1/n) log C(a_n; b^n)`` with limit ``a H({b_i/a} + remainder)``.

    ``case="quadratic"``: ``a_n = C(n,2)``, ``b_i^n = floor(b_i n)``; the value
    subtracts ``(sum b_i^n) ln n`` before dividing by ``n`` and the limit is
    ``sum s(2 b_i)``.
    """
    b = [float(x) for x in b]
    if any(x < 0 for x in b):
        raise ValueError("b_i must be nonnegative")
    values = []
    if case == "linear":
        if not a > 0 or sum(b) > a + 1e-12:
            raise ValueError("need a > 0 and sum(b) <= a")
        fr = [x / a for x in b]
        limit = a * shannon(fr + [max(0.0, 1.0 - sum(fr))])
        for n in ns:
            an = math.floor(a * n)
            bn = [math.floor(x * n) for x in b]
            values.append(log_multinomial(an, bn) / n)
    elif case == "quadratic":
        limit = sum(s_func(2 * x) for x in b)
        for n in ns:
            an = n * (n - 1) // 2
            bn = [math.floor(x * n) for x in b]
            if sum(bn) > an:
                raise ValueError(f"sum of parts exceeds C(n,2) at n={n}")
            values.append((log_multinomial(an, bn) - sum(bn) * math.log(n)) / n)
    else:
        raise ValueError(f"case must be 'linear' or 'quadratic', got {case!r}")
    return MultinomialAsymptotics(float(limit), tuple(int(n) for n in ns), tuple(values))


def thinning_identity(r, eps: float) -> dict:
    """Both sides of ``H(X1, X-X1) = H(X) + E[X] h(eps) - E log C(X, X1)``.

    ``X ~ r`` and ``X1 | X ~ Binomial(X, eps)``. The left side is computed
    from the explicit law of the pair ``(X1, X-X1)``.
    """
    r = np.asarray(r, dtype=float)
    if r.ndim != 1 or np.any(r < 0) or abs(r.sum() - 1.0) > 1e-9:
        raise ValueError("r must be a probability vector")
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    pair = {}
    e_log_binom = 0.0
    for k, rk in enumerate(r):
        if rk == 0:
            continue
        pmf = binom.pmf(np.arange(k + 1), k, eps)
        for l in range(k + 1):
            w = rk * pmf[l]
            if w == 0:
                continue
            pair[(l, k - l)] = pair.get((l, k - l), 0.0) + w
            e_log_binom += w * (gammaln(k + 1) - gammaln(l + 1) - gammaln(k - l + 1))
    lhs = -sum(w * math.log(w) for w in pair.values() if w > 0)
    h_eps = -sum(v * math.log(v) for v in (eps, 1.0 - eps) if v > 0)
    mean = float(np.dot(np.arange(r.size), r))
    rhs = -sum(v * math.log(v) for v in r if v > 0) + mean * h_eps - e_log_binom
    return {"lhs": lhs, "rhs": rhs, "diff": abs(lhs - rhs)}


def cm_count_asymptote(r) -> float:
    """Limit of ``(log|G_d| - (b/2) ln n) / n`` when the degree law tends to ``r``."""
    r = np.asarray(r, dtype=float)
    mean = float(np.dot(np.arange(r.size), r))
    if not mean > 0:
        raise ValueError("the degree law must have positive mean")
    return -s_func(mean) - float(np.dot(gammaln(np.arange(r.size) + 1.0), r))


# -- marked enumeration ---------------------------------------------------------


def multiset_permutations(counts: dict):
    """Yield every distinct sequence with the given symbol multiplicities."""
    symbols = [s for s, c in counts.items() if c > 0]
    remaining = {s: counts[s] for s in symbols}
    total = sum(remaining.values())
    seq = [None] * total

    def rec(pos):
        if pos == total:
            yield tuple(seq)
            return
        for s in symbols:
            if remaining[s]:
                remaining[s] -= 1
                seq[pos] = s
                yield from rec(pos + 1)
                remaining[s] += 1

    yield from rec(0)


def _all_pairs(n):
    return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]


def enumerate_joint_graphs(marks, n: int, m: dict | None = None, u: dict | None = None, cap: int = MARKED_MAX_GRAPHS):
    """Every joint graph on ``[n]``, optionally with exact edge counts ``m`` and vertex counts ``u``."""
    if n > MARKED_MAX_N:
        raise ResourceLimitError(f"marked enumeration is capped at n={MARKED_MAX_N}")
    pairs = _all_pairs(n)
    emarks = marks.joint_edge_marks
    vmarks = marks.joint_vertex_marks
    if m is not None:
        if sum(m.values()) > len(pairs):
            return
        ecounts = dict(m)
        ecounts[None] = len(pairs) - sum(m.values())
        n_edge = math.exp(log_multinomial(len(pairs), list(m.values())))
        edge_iter = lambda: multiset_permutations(ecounts)  # noqa: E731
    else:
        n_edge = (len(emarks) + 1) ** len(pairs)
        edge_iter = lambda: product((None,) + emarks, repeat=len(pairs))  # noqa: E731
    if u is not None:
        if sum(u.values()) != n:
            raise ValueError("vertex counts must sum to n")
        n_vert = math.exp(log_multinomial(n, list(u.values())))
        vert_iter = lambda: multiset_permutations(u)  # noqa: E731
    else:
        n_vert = len(vmarks) ** n
        vert_iter = lambda: product(vmarks, repeat=n)  # noqa: E731
    if n_edge * n_vert > cap * (1 + 1e-9):
        raise ResourceLimitError(f"{n_edge * n_vert:.3g} graphs exceed the enumeration cap {cap}")
    for vm in vert_iter():
        for em in edge_iter():
            edges = tuple((i, j, x) for (i, j), x in zip(pairs, em) if x is not None)
            yield JointGraph(marks, n, vm, edges)


def enumerate_domain_graphs(marks, domain: int, n: int, cap: int = MARKED_MAX_GRAPHS):
    """Every domain-``domain`` marked graph on ``[n]``."""
    if n > MARKED_MAX_N:
        raise ResourceLimitError(f"marked enumeration is capped at n={MARKED_MAX_N}")
    pairs = _all_pairs(n)
    em = marks.edge_alphabet(domain)
    vm = marks.vertex_alphabet(domain)
    total = (len(em) + 1) ** len(pairs) * len(vm) ** n
    if total > cap:
        raise ResourceLimitError(f"{total} graphs exceed the enumeration cap {cap}")
    for vlab in product(vm, repeat=n):
        for elab in product((None,) + em, repeat=len(pairs)):
            edges = tuple((i, j, x) for (i, j), x in zip(pairs, elab) if x is not None)
            yield DomainGraph(marks, domain, n, vlab, edges)


def bc_definition_oracle(target, epsilon: float, n: int, m_target: dict, u_target: dict, marks, depth: int = 1) -> float:
    """Log of the number of graphs with exact counts whose depth-``depth`` law is ``epsilon``-close to ``target``.

    Closeness is total variation between the empirical neighbourhood
    distribution and ``target`` (a :class:`NeighborhoodDist`). Returns
    ``-inf`` when no graph qualifies.
    """
    from .local_weak import dist_tv, empirical_u

    if target.depth != depth:
        raise ValueError("target depth differs from the requested depth")
    count = 0
    for g in enumerate_joint_graphs(marks, n, m_target, u_target):
        if dist_tv(empirical_u(g, depth), target) <= epsilon + 1e-12:
            count += 1
    return math.log(count) if count else -math.inf


# -- ER bounds ------------------------------------------------------------------


def typical_bound_a1(n: int, m_vec: dict, u_vec: dict) -> float:
    """``log A_1 = log C(n; u) + log C(C(n,2); m)``: the number of graphs with exactly those counts."""
    if sum(u_vec.values()) != n:
        raise ValueError("vertex counts must sum to n")
    pairs = n * (n - 1) // 2
    if sum(m_vec.values()) > pairs:
        raise ValueError("more edges than vertex pairs")
    return log_multinomial(n, list(u_vec.values())) + log_multinomial(pairs, list(m_vec.values()))


class A2Bound(NamedTuple):
    value: float
    edge_split: float
    blank_fill: float
    vertex_split: float


def cond_bound_a2_er(marks, n: int, m_vec: dict, u_vec: dict) -> A2Bound:
    """Log of the count bound on second marginals completing a fixed first marginal.

    Three factors: splitting each first-domain edge class by its second
    coordinate, placing the second-domain-only edges on the remaining pairs,
    and splitting each first-domain vertex class.
    """
    if sum(u_vec.values()) != n:
        raise ValueError("vertex counts must sum to n")
    pairs = n * (n - 1) // 2
    for x in m_vec:
        if x not in marks.joint_edge_marks:
            raise ValueError(f"unknown joint edge mark {x!r}")
    if sum(m_vec.values()) > pairs:
        raise ValueError("more edges than vertex pairs")
    edge_split = 0.0
    side1_total = 0
    for x1 in marks.xi1:
        parts = [m_vec.get((x1, x2), 0) for x2 in marks.xi2 + (BLANK,)]
        edge_split += log_multinomial(sum(parts), parts)
        side1_total += sum(parts)
    blank = [m_vec.get((BLANK, x2), 0) for x2 in marks.xi2]
    blank_fill = log_multinomial(pairs - side1_total, blank)
    vertex_split = 0.0
    for t1 in marks.theta1:
        parts = [u_vec.get((t1, t2), 0) for t2 in marks.theta2]
        vertex_split += log_multinomial(sum(parts), parts)
    return A2Bound(edge_split + blank_fill + vertex_split, edge_split, blank_fill, vertex_split)


# -- CM conditional bound -------------------------------------------------------


class CondBoundCm(NamedTuple):
    log_bound: float
    normalized: float
    limit: float
    terms: dict


def _pair_entropy(joint: np.ndarray) -> float:
    w = joint[joint > 0]
    return float(-(w * np.log(w)).sum())


def cond_bound_cm(model, n: int) -> CondBoundCm:
    """Four-term upper bound on ``log |S_2(H_1)|`` for the configuration model, and its limit.

    At finite ``n`` every maximum is evaluated at the centre of its slack
    window (real-valued counts through log-gamma) and multiplied by the
    window's lattice-point count; the graph-count term uses the degree-count
    asymptotic. ``normalized`` subtracts ``n (d12 - d1)/2 ln n`` and divides by
    ``n``; ``limit`` is the closed form it tends to, assembled from
    ``H(X - X1 | X1)``, ``H(Gamma_2 | Gamma_1)`` and ``H(Q_2 | Q_1)``.
    """
    n = int(n)
    size = model.delta + 1
    r = np.asarray(model.r, dtype=float)
    gamma = dict(model.gamma)
    q = dict(model.q)
    beta1 = sum(v for x, v in gamma.items() if x[0] != BLANK)
    # joint law of (X1, X - X1), built directly
    joint = np.zeros((size, size))
    for k in range(size):
        pmf = binom.pmf(np.arange(k + 1), k, beta1)
        for l in range(k + 1):
            joint[l, k - l] += r[k] * pmf[l]
    law_x1 = joint.sum(axis=1)
    law_rest = joint.sum(axis=0)
    d12 = float(np.dot(np.arange(size), r))
    d1 = float(np.dot(np.arange(size), law_x1))
    extra = d12 - d1
    if not extra > 1e-15:
        raise ValueError("every edge survives in domain 1, so d12 - d1 = 0")
    slack = n ** (2.0 / 3.0)

    # degree sequences of the added graph, given the first marginal's
    t_deg = (size * size) * math.log(2 * slack + 1)
    for k in range(size):
        row = n * joint[k]
        t_deg += log_multinomial(row.sum(), row)
    # graphs with that degree sequence
    b = n * extra
    t_graph = 0.5 * b * math.log(n) + n * (-s_func(extra) - float(np.dot(gammaln(np.arange(size) + 1.0), law_rest)))
    # second-domain edge marks
    m_n = n * d12 / 2
    t_edge = len(gamma) * math.log(2 * slack)
    blank_parts = [m_n * gamma.get((BLANK, x2), 0.0) for x2 in model.marks.xi2]
    t_edge += log_multinomial(m_n * (1 - beta1), blank_parts)
    for x1 in model.marks.xi1:
        parts = [m_n * gamma.get((x1, x2), 0.0) for x2 in model.marks.xi2]
        whole = m_n * sum(gamma.get((x1, x2), 0.0) for x2 in model.marks.xi2 + (BLANK,))
        t_edge += log_multinomial(whole, parts)
    # second-domain vertex marks
    t_vert = len(q) * math.log(2 * slack)
    for t1 in model.marks.theta1:
        parts = [n * q.get((t1, t2), 0.0) for t2 in model.marks.theta2]
        t_vert += log_multinomial(sum(parts), parts)

    log_bound = t_deg + t_graph + t_edge + t_vert
    normalized = (log_bound - 0.5 * n * extra * math.log(n)) / n

    def _side_entropy(table, k):
        side = {}
        for key, v in table.items():
            side[key[k]] = side.get(key[k], 0.0) + v
        return shannon(list(side.values()))

    h_rest_given_x1 = _pair_entropy(joint) - shannon(law_x1)
    h_g2_given_g1 = shannon(list(gamma.values())) - _side_entropy(gamma, 0)
    h_q2_given_q1 = shannon(list(q.values())) - _side_entropy(q, 0)
    limit = (
        -s_func(extra)
        + h_rest_given_x1
        - float(np.dot(gammaln(np.arange(size) + 1.0), law_rest))
        + 0.5 * d12 * h_g2_given_g1
        + h_q2_given_q1
    )
    terms = {"degrees": t_deg, "graphs": t_graph, "edge_marks": t_edge, "vertex_marks": t_vert}
    return CondBoundCm(log_bound, normalized, float(limit), terms)


# -- suite ----------------------------------------------------------------------


def _check(name, passed, **detail):
    return {"name": name, "passed": bool(passed), **detail}


def _oracle_checks():
    from .local_weak import size_biased

    out = []
    for d, want in (((1, 1, 1, 1), 3), ((2, 2, 2), 1), ((1,) * 6, 15), ((0,) * 5, 1)):
        got = count_graphs_with_degrees(d)
        out.append(_check(f"count_graphs{d}", got == want, got=got, expected=want))
    rng = np.random.default_rng(12345)
    worst = 0.0
    for _ in range(100):
        size = int(rng.integers(1, 8))
        r = rng.dirichlet(np.ones(size))
        worst = max(worst, thinning_identity(r, float(rng.uniform()))["diff"])
    out.append(_check("thinning_identity", worst < 1e-9, max_diff=worst))
    vals = [(math.log(count_graphs_with_degrees((2,) * n)) - n * math.log(n)) / n for n in (6, 8, 10)]
    ok = vals[0] < vals[1] < vals[2] < -1 + 0.35 and abs(vals[2] + 1) <= 0.35
    out.append(_check("two_regular_count_trend", ok, values=vals, limit=cm_count_asymptote([0, 0, 1])))
    lin = multinomial_asymptotics("linear", [0.5, 0.5], ns=(1000,))
    out.append(_check("stirling_linear", abs(lin.values[0] - lin.limit) < 0.01, value=lin.values[0], limit=lin.limit))
    sb = size_biased([0, 0.5, 0.5])
    out.append(_check("size_biased", np.allclose(sb, [1 / 3, 2 / 3]), value=list(map(float, sb))))
    return out


def _entropy_checks():
    from .ensembles import CmModel, ErModel
    from .entropy import bc_entropy_er, exact_shannon_er, rate_region_contains
    from .marked_graph import MarkSpaces

    out = []
    marks = MarkSpaces(["a"], ["b"], ["t"], ["u"])
    er = ErModel(marks, {("a", "b"): 1.0}, {("t", "u"): 1.0})
    n = 10**6
    coef = (exact_shannon_er(er, n) - 0.5 * n * math.log(n)) / n
    out.append(_check("er_entropy_coefficient", abs(coef - 0.5) <= 1e-3, value=coef))
    # disjoint, independent domains: the three corners meet in one tuple
    split = ErModel(marks, {("a", BLANK): 0.5, (BLANK, "b"): 0.25}, {("t", "u"): 1.0})
    bc = bc_entropy_er(split)
    verdict = rate_region_contains(bc, ((bc.d12 - bc.d2) / 2, bc.sigma1given2, (bc.d12 - bc.d1) / 2, bc.sigma2given1))
    out.append(_check("rate_region_corner", verdict.contained))
    rng = np.random.default_rng(2024)
    worst = 0.0
    m2 = MarkSpaces(["a"], ["b"], ["s", "t"], ["u", "v"])
    for _ in range(20):
        delta = int(rng.integers(1, 5))
        r = rng.dirichlet(np.ones(delta + 1))
        g = rng.dirichlet(np.ones(3))
        qv = rng.dirichlet(np.ones(4))
        model = CmModel(
            m2,
            delta,
            r,
            dict(zip(m2.joint_edge_marks, g)),
            dict(zip(m2.joint_vertex_marks, qv)),
        )
        worst = max(worst, abs(cond_bound_cm(model, 1000).limit - bc_entropy_cm(model).sigma2given1))
    out.append(_check("cm_conditional_two_paths", worst < 1e-9, max_diff=worst))
    return out


def verification_report(suite: str = "all") -> dict:
    """Run a named check suite; ``passed`` is true iff every check passes."""
    groups = {"oracles": _oracle_checks, "entropy": _entropy_checks}
    if suite == "all":
        names = list(groups)
    elif suite in groups:
        names = [suite]
    else:
        raise ValueError(f"unknown suite {suite!r}; choose from all, {', '.join(groups)}")
    checks = [c for name in names for c in groups[name]()]
    return {"suite": suite, "passed": all(c["passed"] for c in checks), "checks": checks}
