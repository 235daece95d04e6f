from __future__ import annotations

import json
from importlib import resources

import pytest
from hypothesis import strategies as st

from graphsw.ensembles import CmModel, ErModel
from graphsw.marked_graph import BLANK, JointGraph, MarkSpaces


@pytest.fixture
def marks():
    return MarkSpaces(["a"], ["b"], ["t"], ["u"])


@pytest.fixture
def marks2():
    return MarkSpaces(["a", "c"], ["b"], ["s", "t"], ["u", "v"])


@pytest.fixture
def er_single(marks):
    return ErModel(marks, {("a", "b"): 1.0}, {("t", "u"): 1.0})


@pytest.fixture
def er_two(marks2):
    p = {("a", "b"): 1.0, ("c", BLANK): 0.5, (BLANK, "b"): 0.6}
    q = {("s", "u"): 0.4, ("t", "u"): 0.1, ("s", "v"): 0.2, ("t", "v"): 0.3}
    return ErModel(marks2, p, q)


@pytest.fixture
def cm_two(marks2):
    gamma = {("a", "b"): 0.3, ("c", "b"): 0.2, ("a", BLANK): 0.2, (BLANK, "b"): 0.2, ("c", BLANK): 0.1}
    q = {("s", "u"): 0.25, ("s", "v"): 0.25, ("t", "u"): 0.25, ("t", "v"): 0.25}
    return CmModel(marks2, 3, [0.1, 0.3, 0.3, 0.3], gamma, q, K=2.0)


def load_schema(name):
    text = resources.files("graphsw").joinpath("schemas", f"{name}.json").read_text()
    return json.loads(text)


MARKS2 = MarkSpaces(["a", "c"], ["b"], ["s", "t"], ["u", "v"])


@st.composite
def joint_graphs(draw, marks=MARKS2, max_n=7):
    n = draw(st.integers(1, max_n))
    vm = draw(st.lists(st.sampled_from(marks.joint_vertex_marks), min_size=n, max_size=n))
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    edges = [(i, j, draw(st.sampled_from(marks.joint_edge_marks))) for i, j in chosen]
    return JointGraph(marks, n, tuple(vm), edges)


# one summary line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("ab")), k)):
        terminalreporter.write_line(ACCEPTANCE[k])
