from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphsw.ensembles import CmModel, ErModel
from graphsw.entropy import (
    RateTuple,
    bc_entropy_cm,
    bc_entropy_er,
    exact_shannon_er,
    lex_succ,
    lex_succeq,
    log_multinomial,
    rate_region_contains,
    s_func,
    shannon,
    thinning_stats,
)
from graphsw.local_weak import limit_degree
from graphsw.marked_graph import BLANK, MarkSpaces
from graphsw.oracles import thinning_identity


def test_s_func_values():
    assert s_func(0) == 0
    assert s_func(1) == 0.5
    assert s_func(math.e) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        s_func(-0.1)


def test_shannon_and_multinomial():
    assert shannon([0.5, 0.5]) == pytest.approx(math.log(2))
    assert shannon({"x": 1.0}) == 0.0
    with pytest.raises(ValueError):
        shannon([0.5, 0.6])
    assert log_multinomial(4, [2, 2]) == pytest.approx(math.log(6))
    assert log_multinomial(7, [7]) == pytest.approx(0.0, abs=1e-12)
    assert log_multinomial(6, [2]) == pytest.approx(math.log(15))
    with pytest.raises(ValueError):
        log_multinomial(3, [2, 2])


def _cm(marks, r, gamma, q=None):
    return CmModel(marks, len(r) - 1, r, gamma, q or {m: 1 / len(marks.joint_vertex_marks) for m in marks.joint_vertex_marks})


def test_thinning_examples(marks):
    th = thinning_stats(_cm(marks, [0, 0, 1], {("a", "b"): 1.0}))
    assert th.beta1 == 1.0 and th.beta2 == 1.0
    assert np.allclose(th.law(1), [0, 0, 1])
    th = thinning_stats(_cm(marks, [0, 0, 1], {("a", "b"): 0.5, (BLANK, "b"): 0.5}))
    assert np.allclose(th.law(1), [0.25, 0.5, 0.25])
    assert np.allclose(th.law(2), [0, 0, 1])


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=7), st.floats(0.01, 0.98))
@settings(max_examples=100, deadline=None)
def test_thinning_mean_and_marginal(weights, g_blank):
    marks = MarkSpaces(["a"], ["b"], ["t"], ["u"])
    r = np.array(weights) / sum(weights)
    model = _cm(marks, r, {("a", "b"): 1 - g_blank, (BLANK, "b"): g_blank})
    th = thinning_stats(model)
    assert th.mean(1) == pytest.approx(th.beta1 * th.mean(), rel=1e-12)
    assert np.allclose(th.joint1.sum(axis=1), r)
    # X_1 <= X on the support
    k, l = np.nonzero(th.joint1)
    assert np.all(l <= k)
    res = thinning_identity(r, th.beta1)
    assert res["diff"] < 1e-9


def test_bc_er_single_mark(er_single):
    bc = bc_entropy_er(er_single)
    assert bc.sigma12 == pytest.approx(0.5)
    assert (bc.d12, bc.d1, bc.d2) == (1.0, 1.0, 1.0)


def test_bc_er_formulas(er_two):
    bc = bc_entropy_er(er_two)
    p = er_two.p_map
    q = np.array([v for _, v in er_two.q])
    assert bc.sigma12 == pytest.approx(shannon(q) + sum(s_func(v) for v in p.values()))
    # side 1: intensities a -> 1.0, c -> 0.5; side-1 vertex law s -> 0.6, t -> 0.4
    assert bc.sigma1 == pytest.approx(shannon([0.6, 0.4]) + s_func(1.0) + s_func(0.5))
    assert bc.sigma2 == pytest.approx(shannon([0.5, 0.5]) + s_func(1.6))
    assert bc.sigma2given1 == bc.sigma12 - bc.sigma1
    assert bc.sigma1given2 == bc.sigma12 - bc.sigma2
    assert bc.d1 <= bc.d12 and bc.d2 <= bc.d12 <= bc.d1 + bc.d2
    assert (bc.d12, bc.d1, bc.d2) == pytest.approx(tuple(limit_degree(er_two)))


def test_bc_er_marginal_matches_exact_entropy(er_two):
    bc = bc_entropy_er(er_two)
    n = 10**6
    for side, sigma, d in ((1, bc.sigma1, bc.d1), (2, bc.sigma2, bc.d2)):
        coef = (exact_shannon_er(er_two, n, side) - 0.5 * d * n * math.log(n)) / n
        assert abs(coef - sigma) < 1e-3


def test_bc_cm_two_regular(marks):
    bc = bc_entropy_cm(_cm(marks, [0, 0, 1], {("a", "b"): 1.0}))
    assert bc.sigma12 == pytest.approx(-1.0)
    assert bc.sigma1 == pytest.approx(-1.0)
    assert bc.sigma2given1 == pytest.approx(0.0, abs=1e-15)


def test_bc_cm_zero_marginal_degree(marks):
    with pytest.raises(ValueError):
        bc_entropy_cm(_cm(marks, [0, 0, 1], {(BLANK, "b"): 1.0}))


def test_bc_cm_degrees_match_limit(cm_two):
    bc = bc_entropy_cm(cm_two)
    assert (bc.d12, bc.d1, bc.d2) == pytest.approx(tuple(limit_degree(cm_two)))
    assert bc.sigma2given1 == bc.sigma12 - bc.sigma1


def test_exact_shannon_examples(marks):
    model = ErModel(marks, {("a", "b"): 1.0}, {("t", "u"): 1.0})
    assert exact_shannon_er(model, 2) == pytest.approx(math.log(2))
    marks3 = MarkSpaces(["a"], ["b"], ["s", "t"], ["u"])
    tiny = ErModel(marks3, {("a", "b"): 1e-300}, {("s", "u"): 0.5, ("t", "u"): 0.5})
    assert exact_shannon_er(tiny, 5) == pytest.approx(5 * math.log(2))


def test_exact_shannon_convergence(er_single):
    bc = bc_entropy_er(er_single)
    errs = []
    for n in (10**3, 10**4, 10**5, 10**6):
        coef = (exact_shannon_er(er_single, n) - 0.5 * bc.d12 * n * math.log(n)) / n
        errs.append(abs(coef - bc.sigma12))
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-3


def test_lex_order_examples():
    assert lex_succ((1, 0), (0.5, 100))
    assert lex_succeq((1, 2), (1, 2))
    assert not lex_succ((1, 2), (1, 2))
    assert not lex_succ((1, 1), (1, 2))


@given(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), st.tuples(st.floats(-5, 5), st.floats(-5, 5)))
def test_lex_order_total(a, b):
    assert lex_succeq(a, b) or lex_succeq(b, a)
    assert lex_succ(a, b) == (lex_succeq(a, b) and a != b)


@pytest.fixture
def split_model():
    marks = MarkSpaces(["a"], ["b"], ["s", "t"], ["u", "v"])
    q = {(x, y): px * py for x, px in (("s", 0.5), ("t", 0.5)) for y, py in (("u", 0.25), ("v", 0.75))}
    return ErModel(marks, {("a", BLANK): 0.5, (BLANK, "b"): 0.25}, q)


def test_rate_region_corner_contained(split_model):
    bc = bc_entropy_er(split_model)
    t = RateTuple((bc.d12 - bc.d2) / 2, bc.sigma1given2, (bc.d12 - bc.d1) / 2, bc.sigma2given1)
    v = rate_region_contains(bc, t)
    assert v.contained and all(c["binding"] for c in v.constraints)


def test_rate_region_alpha_dominance(er_two):
    bc = bc_entropy_er(er_two)
    v = rate_region_contains(bc, (bc.d12, -50.0, bc.d12, -50.0))
    assert v.contained


@pytest.mark.parametrize("which", ["side1", "side2"])
def test_rate_region_alpha_below(er_two, which):
    bc = bc_entropy_er(er_two)
    a1, a2 = (bc.d12 - bc.d2) / 2, (bc.d12 - bc.d1) / 2
    if which == "side1":
        t = (a1 - 0.01, 100.0, a2 + 10, 100.0)
    else:
        t = (a1 + 10, 100.0, a2 - 0.01, 100.0)
    v = rate_region_contains(bc, t)
    assert not v.contained and v.failing == (which,)


@given(
    st.lists(st.floats(-2, 2), min_size=4, max_size=4),
    st.integers(0, 3),
    st.floats(0.0, 1.0),
)
@settings(max_examples=200)
def test_rate_region_monotone(t, coord, bump):
    marks = MarkSpaces(["a"], ["b"], ["t"], ["u"])
    model = ErModel(marks, {("a", "b"): 1.0, ("a", BLANK): 0.3, (BLANK, "b"): 0.7}, {("t", "u"): 1.0})
    bc = bc_entropy_er(model)
    before = rate_region_contains(bc, t).contained
    t2 = list(t)
    t2[coord] += bump
    after = rate_region_contains(bc, t2).contained
    assert after or not before
