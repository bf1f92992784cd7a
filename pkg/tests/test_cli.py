import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from icim import cli
from icim.fixtures import random_graph
from icim.graph import SocialGraph, dump_graph


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def write_graph(tmp_path, graph, name="g.json"):
    path = tmp_path / name
    path.write_text(dump_graph(graph))
    return str(path)


@pytest.fixture
def path3(tmp_path):
    return write_graph(tmp_path, SocialGraph.build(3, [(0, 1, 1.0), (1, 2, 1.0)]))


# --- simulate

def test_simulate_path(path3, capsys):
    code, out, _ = run(["simulate", "--graph", path3, "--seeds", "0"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert [(r["node"], r["time"]) for r in doc["trace"]] == [(0, 0), (1, 1), (2, 2)]
    assert doc["meta"]["seed"] == cli.DEFAULT_SEED


def test_simulate_deterministic(tmp_path, capsys):
    g = random_graph(np.random.default_rng(1), 6, 6, interior=True)
    path = write_graph(tmp_path, g)
    _, a, _ = run(["simulate", "--graph", path, "--seeds", "0", "--seed", "42"], capsys)
    _, b, _ = run(["simulate", "--graph", path, "--seeds", "0", "--seed", "42"], capsys)
    assert a == b


def test_simulate_blocked(tmp_path, capsys):
    path = write_graph(tmp_path, SocialGraph.build(3, [(0, 1, 0.0), (1, 2, 0.0)]))
    _, out, _ = run(["simulate", "--graph", path, "--seeds", "0"], capsys)
    assert [r["node"] for r in json.loads(out)["trace"]] == [0]


def test_simulate_labels(capsys):
    code, out, _ = run(["simulate", "--graph", cli.STYLIZED, "--seeds", "j", "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["node", "time", "activator"] and len(rows) == 9


# --- sigma / maximize

def test_sigma_exact(path3, capsys):
    _, out, _ = run(["sigma", "--graph", path3, "--seeds", "0"], capsys)
    doc = json.loads(out)
    assert doc["sigma"] == 3 and doc["exact"]


def test_maximize_stylized(capsys):
    _, out, _ = run(["maximize", "--graph", cli.STYLIZED, "--algo", "exact", "--k", "1"], capsys)
    doc = json.loads(out)
    assert doc["target_labels"] == ["j"] and doc["sigma"] == 8
    assert {"target", "sigma", "std_error", "algorithm", "evaluations"} <= set(doc)


def test_maximize_random_reproducible(capsys):
    argv = ["maximize", "--graph", cli.STYLIZED, "--algo", "random", "--k", "1", "--seed", "7"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    assert a == b and len(json.loads(a)["target"]) == 1


def test_maximize_greedy_path(path3, capsys):
    _, out, _ = run(["maximize", "--graph", path3, "--algo", "greedy"], capsys)
    assert json.loads(out)["target"] == [0]


@pytest.mark.parametrize("sub", ["sigma", "pay"])
def test_threads_byte_identical(tmp_path, capsys, sub):
    g = random_graph(np.random.default_rng(5), 6, 6, interior=True)
    path = write_graph(tmp_path, g)
    extra = ["--seeds", "0,1"] if sub == "sigma" else ["--model", "influencer_influencee"]
    outs = []
    for t in ("1", "8"):
        _, out, _ = run([sub, "--graph", path, "--eval", "mc", "--samples", "3000", "--threads", t] + extra, capsys)
        outs.append(out)
    assert outs[0] == outs[1]


def test_threads_env_default(monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "4")
    ns = cli.build_parser().parse_args(["sigma", "--graph", "x", "--seeds", "0"])
    assert ns.threads == 4


# --- pay

def test_pay_stylized(capsys):
    _, out, _ = run(["pay", "--graph", cli.STYLIZED, "--h", "zero"], capsys)
    doc = json.loads(out)
    k = next(a for a in doc["agents"] if a["label"] == "k")
    assert (k["valuation"], k["payment"], k["utility"]) == (1, 7, 8)


def test_pay_reverse_weighted_zero(tmp_path, capsys):
    path = write_graph(tmp_path, SocialGraph.build(3, [(0, 1, 0.0), (1, 2, 0.0)]))
    _, out, _ = run(["pay", "--graph", path, "--model", "influencer_influencee", "--rule", "reverse_weighted"], capsys)
    assert all(a["payment"] == 0 for a in json.loads(out)["agents"])


def test_pay_single_edge_with_reports(tmp_path, capsys):
    path = write_graph(tmp_path, SocialGraph.build(2, [(0, 1, 0.5)]))
    rep = tmp_path / "r.json"
    rep.write_text('{"reports":[{"src":0,"dst":1,"influencer":0.5,"influencee":0.5}]}')
    _, out, _ = run(["pay", "--graph", path, "--reports", str(rep), "--model", "influencer_influencee",
                     "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["id", "valuation", "payment", "utility"]
    assert float(rows[1][2]) == pytest.approx(25.25)


# --- audit

def test_audit_no_payments_fails(capsys):
    code, out, _ = run(["audit", "--graph", cli.STYLIZED, "--payments", "off"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["verdict"] == "fail"
    assert next(a for a in doc["agents"] if a["label"] == "k")["gap"] < 0


def test_audit_strict_exit(capsys):
    code, _, _ = run(["audit", "--graph", cli.STYLIZED, "--payments", "off", "--strict"], capsys)
    assert code == cli.EXIT_VERDICT


def test_audit_groves_passes(capsys):
    code, out, _ = run(["audit", "--graph", cli.STYLIZED, "--h", "zero", "--strict", "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["agent", "truthful_utility", "best_deviation_utility", "gap", "verdict"]
    assert {r[4] for r in rows[1:]} == {"pass"}


def test_audit_model2_random(tmp_path, capsys):
    g = random_graph(np.random.default_rng(11), 5, 5, max_degree=4)
    path = write_graph(tmp_path, g)
    code, out, _ = run(["audit", "--graph", path, "--model", "influencer_influencee", "--strict"], capsys)
    assert code == 0 and json.loads(out)["verdict"] == "pass"


def test_audit_dominant(capsys):
    code, out, _ = run(["audit", "--graph", cli.STYLIZED, "--check", "dominant", "--profiles", "2"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["verdict"] == "pass" and doc["profiles"] == 2


# --- score

def test_score(capsys):
    _, out, _ = run(["score", "--rule", "quadratic", "--z", "0.6,0.4", "--w", "0.5,0.5"], capsys)
    doc = json.loads(out)
    assert doc["expected_score"] == pytest.approx(0.48)
    assert doc["loss"] == pytest.approx(0.02)
    assert doc["scores"] == pytest.approx([0.68, 0.28])


def test_score_log_zero_mass(capsys):
    _, out, _ = run(["score", "--rule", "logarithmic", "--z", "1,0"], capsys)
    assert json.loads(out)["scores"] == [0.0, None]


# --- errors and output

@pytest.mark.parametrize(
    "argv",
    [
        ["sigma", "--graph", "missing.json", "--seeds", "0"],
        ["sigma", "--graph", cli.STYLIZED],
        ["sigma", "--graph", cli.STYLIZED, "--seeds", "nobody"],
        ["maximize", "--graph", cli.STYLIZED, "--k", "11"],
        ["score", "--rule", "quadratic", "--z", "0.6,0.6"],
        ["score", "--rule", "logarithmic", "--z", "1,0", "--w", "0.5,0.5"],
        ["audit", "--graph", cli.STYLIZED, "--check", "dominant", "--model", "influencer_influencee"],
    ],
)
def test_input_errors_exit_2(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == cli.EXIT_INPUT and out == "" and err.startswith("icim: error")


def test_degree_discount_needs_uniform(tmp_path, capsys):
    path = write_graph(tmp_path, SocialGraph.build(3, [(0, 1, 0.3), (1, 2, 0.5)]))
    code, _, err = run(["maximize", "--graph", path, "--algo", "degree_discount"], capsys)
    assert code == 2 and "uniform" in err
    code, _, _ = run(["maximize", "--graph", cli.STYLIZED, "--algo", "degree_discount"], capsys)
    assert code == 0


def test_off_grid_graph(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"n":2,"epsilon":0.1,"edges":[{"src":0,"dst":1,"p":0.35}]}')
    code, _, err = run(["sigma", "--graph", str(path), "--seeds", "0"], capsys)
    assert code == 2 and "grid" in err


def test_bad_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["maximize", "--algo", "celf"])
    assert exc.value.code == 2


def test_internal_error_exit_1(monkeypatch, capsys):
    def boom(cfg):
        raise RuntimeError("kaput")
    monkeypatch.setattr(cli, "cmd_sigma", boom)
    code, _, err = run(["sigma", "--graph", cli.STYLIZED, "--seeds", "0"], capsys)
    assert code == cli.EXIT_INTERNAL and "kaput" in err


def test_out_file(tmp_path, capsys):
    dest = tmp_path / "o.json"
    code, out, _ = run(["maximize", "--graph", cli.STYLIZED, "--out", str(dest)], capsys)
    assert code == 0 and out == ""
    assert json.loads(dest.read_text())["sigma"] == 8


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "icim.cli", "score", "--rule", "spherical", "--z", "0.6,0.4"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["scores"][0] == pytest.approx(0.83205, abs=1e-5)
