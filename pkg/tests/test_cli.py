import json

import pytest
import yaml

from cfhist.cli import run
from cfhist.events import read_cohort
from cfhist.study import data_path

SCEN = str(data_path("cde_dynamic.yaml"))
T1 = str(data_path("theta_a0.yaml"))
T2 = str(data_path("theta_a1.yaml"))


@pytest.fixture(scope="module")
def cohort_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "cohort.csv"
    assert run(["simulate", "--scenario", SCEN, "--n", "400", "--seed", "3", "--out", str(out)]) == 0
    return out


def test_simulate_roundtrip(cohort_file, dynamic):
    cohort = read_cohort(cohort_file, scenario=dynamic)
    assert len(cohort) == 400 and cohort.is_factual


def test_simulate_counterfactual(tmp_path, dynamic):
    out = tmp_path / "cf.csv"
    assert run(["simulate", "--scenario", SCEN, "--n", "50", "--seed", "1", "--intervene", T2, "--out", str(out)]) == 0
    assert all(p.baseline["A"] == 1 for p in read_cohort(out, scenario=dynamic).paths)


def test_weights(tmp_path, cohort_file):
    out = tmp_path / "w.csv"
    assert run(["weights", "--scenario", SCEN, "--intervene", T2, "--cohort", str(cohort_file), "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0]
    assert header == "id,t,log_w_total,log_w_A,log_w_K"


def test_check_positivity(tmp_path, cohort_file):
    out = tmp_path / "p.yaml"
    assert run(["check-positivity", "--scenario", SCEN, "--intervene", T2, "--cohort", str(cohort_file),
                "--out", str(out)]) == 0
    rep = yaml.safe_load(out.read_text())
    assert rep["passed"] and rep["min_probability"] == 0.25
    bad = tmp_path / "bad.yaml"
    bad.write_text("baseline: {A: 0, L: 1}\n")
    assert run(["check-positivity", "--scenario", SCEN, "--intervene", str(bad), "--cohort", str(cohort_file),
                "--out", str(out)]) == 1


def test_check_graph(tmp_path):
    assert run(["check-graph", "--scenario", SCEN, "--out", str(tmp_path / "g.txt")]) == 0
    g = tmp_path / "sparse.txt"
    g.write_text(data_path("cde_dynamic_graph.txt").read_text().replace("A -> C\n", ""))
    assert run(["check-graph", "--scenario", SCEN, "--graph", str(g), "--out", str(tmp_path / "g.txt")]) == 1
    assert "C" in (tmp_path / "g.txt").read_text()


def test_estimators(tmp_path, cohort_file):
    out = tmp_path / "a.csv"
    assert run(["estimate-aalen", "--cohort", str(cohort_file), "--outcome", "B", "--covariates", "1,A,L,K",
                "--out", str(out)]) == 0
    assert out.read_text().startswith("t,coefficient,value,flag\n")
    assert run(["estimate-aalen", "--cohort", str(cohort_file), "--outcome", "B", "--covariates", "1,Z",
                "--out", str(out)]) == 1
    out = tmp_path / "g.csv"
    assert run(["estimate-gcde", "--cohort", str(cohort_file), "--scenario", SCEN, "--intervene", T1,
                "--out", str(out)]) == 0
    names = {line.split(",")[1] for line in out.read_text().splitlines()[1:]}
    assert names == {"gamma0", "gammaA", "psiK", "lambda", "survival"}


def test_gformula(tmp_path, capsys):
    k = tmp_path / "k.yaml"
    k.write_text("table: {0: 1, 1: 1}\n")
    assert run(["gformula", "--model", str(data_path("cde_static.yaml")), "--a", "1", "--krule", str(k), "--oracle"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(out["gformula"] - out["oracle"]) <= 1e-12
    assert run(["gformula", "--model", str(data_path("cde_static.yaml")), "--a", "0",
                "--krule", str(data_path("krule_follow_l.yaml")), "--oracle"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(out["gformula"] - out["oracle"]) <= 1e-12
    assert run(["gformula", "--model", str(data_path("cde_static.yaml")), "--a", "0", "--krule", str(k),
                "--h", "L=1"]) == 1


def test_usage_errors():
    assert run([]) == 2
    assert run(["simulate", "--scenario", SCEN]) == 2
    assert run(["simulate", "--scenario", "/nonexistent.yaml", "--n", "1", "--seed", "1", "--out", "x"]) == 1


def test_unknown_flag_prints_usage(capsys):
    assert run(["check-graph", "--scenario", SCEN, "--bogus"]) == 2
    assert "usage:" in capsys.readouterr().err
