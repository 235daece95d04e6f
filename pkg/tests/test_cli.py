from __future__ import annotations

import json
import subprocess
import sys

import jsonschema
import pytest

from conftest import load_schema
from graphsw.cli import parse_sweep, run
from graphsw.ensembles import ErModel, model_to_config
from graphsw.marked_graph import BLANK, MarkSpaces, parse_graph


@pytest.fixture
def er_cfg(tmp_path, er_two):
    path = tmp_path / "er.cfg"
    path.write_text(model_to_config(er_two))
    return str(path)


@pytest.fixture
def cm_cfg(tmp_path, cm_two):
    path = tmp_path / "cm.cfg"
    path.write_text(model_to_config(cm_two))
    return str(path)


@pytest.fixture
def code_cfg(tmp_path):
    marks = MarkSpaces(["a"], ["b"], ["s", "t"], ["u"])
    model = ErModel(marks, {("a", "b"): 1.0, (BLANK, "b"): 0.6}, {("s", "u"): 0.5, ("t", "u"): 0.5})
    path = tmp_path / "code.cfg"
    path.write_text(model_to_config(model))
    return str(path)


@pytest.fixture
def single_cfg(tmp_path, er_single):
    path = tmp_path / "single.cfg"
    path.write_text(model_to_config(er_single))
    return str(path)


def _records(capsys, argv, code=0):
    assert run(argv) == code
    out = capsys.readouterr().out
    return [json.loads(line) for line in out.splitlines() if line.strip()]


def _validate(name, records):
    schema = load_schema(name)
    for rec in records:
        jsonschema.validate(rec, schema)


def test_sample(capsys, er_cfg, er_two):
    recs = _records(capsys, ["sample", "--config", er_cfg, "--n", "30", "--seed", "4"])
    _validate("sample", recs)
    g = parse_graph(recs[0]["graph"])
    assert g.n == 30 and g.marks == er_two.marks


def test_entropy_and_sweep(capsys, er_cfg, cm_cfg, single_cfg):
    _validate("entropy", _records(capsys, ["entropy", "--config", er_cfg]))
    _validate("entropy", _records(capsys, ["entropy", "--config", cm_cfg]))
    rows = _records(capsys, ["entropy", "--config", single_cfg, "--sweep", "n=1000:1000000:log"])
    _validate("entropy", rows)
    assert [r["n"] for r in rows] == [1000, 10**4, 10**5, 10**6]
    assert abs(rows[-1]["gap"]) < 1e-3
    assert run(["entropy", "--config", cm_cfg, "--sweep", "n=10:100:log"]) == 1


def test_entropy_csv(capsys, single_cfg):
    assert run(["entropy", "--config", single_cfg, "--sweep", "n=100:1000:log", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split(",")[:3] == ["command", "n", "exact_entropy"]
    assert len(lines) == 3


def test_rate_region(capsys, er_cfg):
    recs = _records(capsys, ["rate-region", "--config", er_cfg, "--tuple", "5,0,5,0"])
    _validate("rate-region", recs)
    assert recs[0]["contained"]
    recs = _records(capsys, ["rate-region", "--config", er_cfg, "--tuple", "0,100,0,100"])
    assert not recs[0]["contained"]


def test_codec_sim(capsys, code_cfg):
    recs = _records(capsys, ["codec-sim", "--config", code_cfg, "--n", "4", "--seed", "1", "--tuple", "0,1,0,1", "--trials", "12"])
    _validate("codec-sim", recs)
    assert [r["record"] for r in recs] == ["trial"] * 12 + ["summary"]


def test_lwc_dist(capsys, single_cfg):
    recs = _records(capsys, ["lwc-dist", "--config", single_cfg, "--n", "200", "--seed", "3", "--trials", "2"])
    _validate("lwc-dist", recs)
    rows = _records(capsys, ["lwc-dist", "--config", single_cfg, "--sweep", "n=100:1000:log", "--seed", "3"])
    _validate("lwc-dist", rows)
    assert [r["n"] for r in rows] == [100, 1000]
    assert run(["lwc-dist", "--config", single_cfg, "--n", "50", "--seed", "1", "--depth", "2"]) == 1


def test_verify(capsys):
    recs = _records(capsys, ["verify", "--suite", "oracles"])
    _validate("verify", recs)
    assert recs[0]["passed"]


def test_byte_identical_output(tmp_path, code_cfg):
    outs = []
    for k in range(2):
        path = tmp_path / f"out{k}.jsonl"
        argv = ["codec-sim", "--config", code_cfg, "--n", "4", "--seed", "7", "--tuple", "0,1,0,1", "--trials", "10", "--out", str(path)]
        assert run(argv) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] and outs[0]
    path = tmp_path / "par.jsonl"
    assert run(argv[:-2] + ["--jobs", "2", "--out", str(path)]) == 0
    assert path.read_bytes() == outs[0]


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["sample", "--n", "5", "--seed", "1"],
        ["rate-region", "--config", "x", "--tuple", "1,2,3"],
        ["entropy", "--config", "x", "--sweep", "n=10"],
        ["sample", "--config", "x", "--jobs", "0"],
        ["verify", "--suite", "nope"],
    ],
)
def test_usage_errors(argv, capsys):
    assert run(argv) == 2


def test_domain_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("model=er\nxi1=a\n")
    assert run(["entropy", "--config", str(bad)]) == 1
    assert run(["entropy", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert "error" in capsys.readouterr().err


def test_parse_sweep():
    assert parse_sweep("n=100:10000:log") == [100, 1000, 10000]
    assert parse_sweep("n=10:30:10") == [10, 20, 30]


def test_console_script(er_cfg):
    proc = subprocess.run([sys.executable, "-m", "graphsw.cli", "entropy", "--config", er_cfg], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["ensemble"] == "er"
