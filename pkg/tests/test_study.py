import json

from cfhist.cli import run
from cfhist.study import derived_seeds, replicate_study


def test_replicate_study_outputs(tmp_path):
    summary = replicate_study(400, 1, tmp_path, bootstrap_reps=5)
    for name in ("gamma_hat.csv", "lambda_hat.csv", "oracle.csv", "weights.csv", "ipw.csv", "summary.json",
                 "summary.csv", "gamma.png", "survival.png", "weights.png"):
        assert (tmp_path / name).stat().st_size > 0, name
    on_disk = json.loads((tmp_path / "summary.json").read_text())
    assert on_disk["criteria"] == summary["criteria"]
    assert summary["closed_form_survival"]["theta1"] > summary["closed_form_survival"]["theta2"]
    assert summary["skipped_increments"]["stage1"] > 0


def test_cli_no_figures(tmp_path):
    assert run(["replicate-study", "--n", "300", "--seed", "2", "--out", str(tmp_path), "--bootstrap", "0",
                "--no-figures"]) == 0
    assert not (tmp_path / "gamma.png").exists()


def test_derived_seeds_stable():
    assert derived_seeds(5, 3) == derived_seeds(5, 3)
    assert len(set(derived_seeds(5, 3))) == 3


def test_identical_regimes_give_unit_ratio(tmp_path):
    from cfhist.study import bundled_regimes

    t1, _ = bundled_regimes()
    summary = replicate_study(300, 3, tmp_path, bootstrap_reps=0, theta1=t1, theta2=t1, figures=False)
    rdr = [c for c in summary["checks"] if c["name"] == "relative_direct_risk"][0]
    assert rdr["estimate"] == 1.0 and rdr["oracle"] == 1.0 and rdr["pass"]


def test_smoke_run_is_fast(tmp_path):
    import time

    start = time.perf_counter()
    replicate_study(500, 11, tmp_path)
    assert time.perf_counter() - start < 10.0


def test_binary_se_floor():
    import math

    import pytest

    from cfhist.study import binary_se_floor

    assert binary_se_floor(1.0, 38) == pytest.approx(math.sqrt((40 / 42) * (2 / 42) / 42), rel=1e-12)
    assert binary_se_floor(0.5, 1e6) < 1e-3
    assert binary_se_floor(0.5, 0) == math.inf
