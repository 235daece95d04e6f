"""Acceptance criteria 1-10, each reported as one PASS/FAIL line."""
from __future__ import annotations

import math
import time
from itertools import product

import numpy as np
import pytest
from scipy.stats import binomtest

from conftest import ACCEPTANCE
from graphsw.codec import CodeParams, decode_exhaustive, encode, is_typical, simulate, typical_set
from graphsw.ensembles import CmModel, ErModel, log_prob_cm, log_prob_er, sample_cm, sample_er
from graphsw.entropy import RateTuple, bc_entropy_cm, bc_entropy_er, exact_shannon_er, rate_region_contains
from graphsw.local_weak import dist_tv, empirical_u, limit_law_er
from graphsw.marked_graph import BLANK, JointGraph, MarkSpaces
from graphsw.oracles import cond_bound_cm, count_graphs_with_degrees, enumerate_joint_graphs, thinning_identity


def report(k, ok, detail):
    k = str(k)
    line = f"criterion {k:>3}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[k] = line
    print(line)
    assert ok, line


ONE = MarkSpaces(["a"], ["b"], ["t"], ["u"])
CODE_MARKS = MarkSpaces(["a"], ["b"], ["s", "t"], ["u"])


def _code_model():
    return ErModel(CODE_MARKS, {("a", "b"): 1.0, (BLANK, "b"): 0.6}, {("s", "u"): 0.5, ("t", "u"): 0.5})


def test_criterion_01_thinning_identity():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        delta = int(rng.integers(0, 7))
        r = rng.dirichlet(np.ones(delta + 1))
        eps = float(rng.uniform())
        worst = max(worst, thinning_identity(r, eps)["diff"])
    dt = time.perf_counter() - t0
    report(1, worst < 1e-9 and dt < 1.0, f"max |LHS-RHS| = {worst:.2e} over 100 pairs in {dt:.2f}s")


def test_criterion_02_degree_counts():
    t0 = time.perf_counter()
    cases = {(1, 1, 1, 1): 3, (2, 2, 2): 1, (1,) * 6: 15, (0, 0, 0, 0): 1}
    got = {d: count_graphs_with_degrees(d) for d in cases}
    dt = time.perf_counter() - t0
    report(2, got == cases and dt < 1.0, f"counts {list(got.values())} in {dt:.3f}s")


def test_criterion_03_two_regular_trend():
    t0 = time.perf_counter()
    vals = []
    for n in (6, 8, 10):
        cnt = count_graphs_with_degrees([2] * n)
        vals.append((math.log(cnt) - n * math.log(n)) / n)
    dt = time.perf_counter() - t0
    inc = all(a < b for a, b in zip(vals, vals[1:]))
    ok = inc and abs(vals[-1] + 1.0) <= 0.35 and dt < 120
    report(3, ok, f"values {[round(v, 4) for v in vals]} toward -1 in {dt:.2f}s")


def test_criterion_04_er_coefficient():
    model = ErModel(ONE, {("a", "b"): 1.0}, {("t", "u"): 1.0})
    n = 10**6
    t0 = time.perf_counter()
    coef = (exact_shannon_er(model, n) - 0.5 * n * math.log(n)) / n
    dt = time.perf_counter() - t0
    gap = abs(coef - 0.5)
    report(4, gap <= 1e-3 and dt < 1.0, f"coefficient {coef:.6f}, |gap| = {gap:.2e}")


def _random_cm(rng):
    marks = MarkSpaces(["a", "c"], ["b", "d"], ["s", "t"], ["u", "v"])
    delta = int(rng.integers(1, 5))
    r = rng.dirichlet(np.ones(delta + 1))
    emarks = [x for x in marks.joint_edge_marks]
    g = rng.dirichlet(np.ones(len(emarks)))
    q = rng.dirichlet(np.ones(len(marks.joint_vertex_marks)))
    return CmModel(marks, delta, r, dict(zip(emarks, g)), dict(zip(marks.joint_vertex_marks, q)))


def test_criterion_05_conditional_paths():
    rng = np.random.default_rng(505)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        model = _random_cm(rng)
        a = cond_bound_cm(model, 1000).limit
        b = bc_entropy_cm(model).sigma2given1
        worst = max(worst, abs(a - b))
    dt = time.perf_counter() - t0
    report(5, worst < 1e-9 and dt < 1.0, f"max path difference {worst:.2e} over 20 models in {dt:.2f}s")


def test_criterion_06_local_weak_convergence():
    model = ErModel(ONE, {("a", "b"): 1.0}, {("t", "u"): 1.0})
    law = limit_law_er(model)
    t0 = time.perf_counter()
    means = []
    for n in (10**2, 10**3, 10**4):
        tvs = [dist_tv(empirical_u(sample_er(model, n, 6000 + s), 1), law) for s in range(20)]
        means.append(float(np.mean(tvs)))
    dt = time.perf_counter() - t0
    ok = means[-1] <= 0.05 and means[0] > means[1] > means[2] and dt < 60
    report(6, ok, f"mean TV {[round(m, 4) for m in means]} at n=1e2,1e3,1e4 in {dt:.1f}s")


def test_criterion_07_typicality_rates(er_two, cm_two):
    t0 = time.perf_counter()
    er_rate = np.mean([is_typical(sample_er(er_two, 10**4, 7000 + s), er_two).typical for s in range(200)])
    cm_rates = []
    for n in (20, 50, 100):
        cm_rates.append(float(np.mean([is_typical(sample_cm(cm_two, n, 8000 + s), cm_two).typical for s in range(500)])))
    dt = time.perf_counter() - t0
    ok = er_rate >= 0.9 and cm_rates[0] < cm_rates[1] < cm_rates[2] and dt < 300
    report(7, ok, f"ER rate {er_rate:.3f} at n=1e4; CM rates {cm_rates} at n=20,50,100 in {dt:.1f}s")


def test_criterion_08a_decoder_correctness():
    model = _code_model()
    n = 5
    params = CodeParams(n, (0.0, 3.0, 0.0, 3.0), seed=21)
    ts = typical_set(model, n)
    checked = 0
    failures = 0
    for s in range(300):
        g = sample_er(model, n, 9000 + s)
        if ts.locate(g) is None:
            continue
        bins = encode(g, params)
        m = ts.match_mask(1, params, params.key(1), bins[0]) & ts.match_mask(2, params, params.key(2), bins[1])
        hits = np.argwhere(m)
        # every listed candidate really carries the source's bin pair
        assert all(encode(ts.graph(int(e), int(v)), params) == bins for e, v in hits)
        if len(hits) != 1:
            continue
        checked += 1
        failures += decode_exhaustive(bins, params, model) != g
    report("8a", checked >= 50 and failures == 0, f"{checked} typical sources with a unique bin pair, {failures} decode failures")


def test_criterion_08b_monotone_error():
    model = _code_model()
    n, trials = 5, 500
    r1s, r2s = (0.8, 1.2, 1.6), (1.2, 1.6, 2.0)
    t0 = time.perf_counter()
    err = {}
    for r1, r2 in product(r1s, r2s):
        rep = simulate(CodeParams(n, (0.0, r1, 0.0, r2), seed=33), model, trials, seed=44)
        err[r1, r2] = rep.errors()
    dt = time.perf_counter() - t0
    violations = []
    for a, b in [((r1s[i], r2), (r1s[i + 1], r2)) for i in range(2) for r2 in r2s] + [
        ((r1, r2s[i]), (r1, r2s[i + 1])) for i in range(2) for r1 in r1s
    ]:
        lo, hi = err[a], err[b]
        up = int(np.sum(hi & ~lo))
        down = int(np.sum(lo & ~hi))
        # paired sign test: is the higher-rate cell significantly worse?
        if up + down and binomtest(up, up + down, 0.5, alternative="greater").pvalue < 0.01:
            violations.append((a, b))
    pe = {k: float(v.mean()) for k, v in err.items()}
    corner = pe[r1s[0], r2s[0]] > pe[r1s[-1], r2s[-1]]
    grid = " ".join(f"{pe[k]:.3f}" for k in sorted(pe))
    report("8b", not violations and corner and dt < 600, f"pe grid {grid}; {len(violations)} significant increases in {dt:.1f}s")


def test_criterion_09_rate_region_boundaries():
    model = ErModel(
        MarkSpaces(["a"], ["b"], ["s", "t"], ["u", "v"]),
        {("a", BLANK): 0.5, (BLANK, "b"): 0.25},
        {("s", "u"): 0.125, ("s", "v"): 0.375, ("t", "u"): 0.125, ("t", "v"): 0.375},
    )
    bc = bc_entropy_er(model)
    a1, a2 = (bc.d12 - bc.d2) / 2, (bc.d12 - bc.d1) / 2
    t0 = time.perf_counter()
    corner = RateTuple(a1, bc.sigma1given2, a2, bc.sigma2given1)
    eq = rate_region_contains(bc, corner)
    ok = eq.contained and all(c["binding"] for c in eq.constraints)
    below1 = rate_region_contains(bc, (a1 - 1e-6, 50.0, a2 + 1.0, 50.0))
    below2 = rate_region_contains(bc, (a1 + 1.0, 50.0, a2 - 1e-6, 50.0))
    ok &= not below1.contained and below1.failing == ("side1",)
    ok &= not below2.contained and below2.failing == ("side2",)
    # sum constraint alone: both sides at threshold but the alpha sum below
    split = bc_entropy_er(ErModel(ONE, {("a", "b"): 1.0}, {("t", "u"): 1.0}))
    sum_only = rate_region_contains(split, (0.2, 50.0, 0.2, 50.0))
    ok &= not sum_only.contained and sum_only.failing == ("sum",)
    dt = time.perf_counter() - t0
    report(9, ok and dt < 1.0, f"corner contained; failing sets {below1.failing}, {below2.failing}, {sum_only.failing}")


def test_criterion_10_normalization():
    t0 = time.perf_counter()
    sums = []
    model = _code_model()
    for n in (2, 3):
        sums.append(sum(math.exp(log_prob_er(model, g)) for g in enumerate_joint_graphs(model.marks, n, cap=10**6)))
    marks = MarkSpaces(["a", "c"], ["b"], ["t"], ["u", "v"])
    cm = CmModel(marks, 2, [0.0, 0.0, 1.0], {("a", "b"): 0.3, ("c", BLANK): 0.3, (BLANK, "b"): 0.4}, {("t", "u"): 0.6, ("t", "v"): 0.4})
    tri = [(1, 2), (1, 3), (2, 3)]
    total = 0.0
    for em in product(marks.joint_edge_marks, repeat=3):
        for vm in product(marks.joint_vertex_marks, repeat=3):
            j = JointGraph(marks, 3, vm, [(i, k, x) for (i, k), x in zip(tri, em)])
            total += math.exp(log_prob_cm(cm, j).value)
    sums.append(total)
    dt = time.perf_counter() - t0
    ok = all(abs(s - 1.0) < 1e-9 for s in sums) and dt < 10
    report(10, ok, f"sums {[f'{s:.12f}' for s in sums]} (ER n=2, ER n=3, CM triangle) in {dt:.2f}s")


def test_cm_normalization_full_support():
    # stronger than the triangle check: every structure with the right degree classes
    marks = MarkSpaces(["a"], ["b"], ["t"], ["u"])
    cm = CmModel(marks, 2, [0.0, 0.5, 0.5], {("a", "b"): 0.7, (BLANK, "b"): 0.3}, {("t", "u"): 1.0}, K=2.0)
    total = 0.0
    for g in enumerate_joint_graphs(marks, 4, cap=10**6):
        degs = sorted(g.degrees)
        if degs == [1, 1, 2, 2]:
            total += math.exp(log_prob_cm(cm, g).value)
    assert total == pytest.approx(1.0, abs=1e-9)
