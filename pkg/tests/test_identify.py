import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfhist.identify import (IdentificationError, fit_tables, gformula_direct_effect, load_joint_model,
                             marginal_probability, observed_tables, parse_joint_model, print_joint_model,
                             random_confounded_model, relative_direct_risk, timestamp_orders,
                             truncated_factorization_oracle)
from cfhist.simulate import simulate_cohort
from cfhist.study import data_path


@pytest.fixture(scope="module")
def static():
    return load_joint_model(data_path("cde_static.yaml"))


def oracle(model, a, k, order=None):
    dist = truncated_factorization_oracle(model, {"A": a, "K": k}, order)
    return marginal_probability(dist, list(model.observed), {"B": 1})


def test_roundtrip(static):
    assert parse_joint_model(print_joint_model(static)) == static
    assert static.latent == {"W"}
    assert static.observed == ("A", "L", "K", "B")


@pytest.mark.parametrize("a,k", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_gformula_matches_oracle(static, a, k):
    tables = observed_tables(static)
    assert abs(gformula_direct_effect(tables, a, k) - oracle(static, a, k)) <= 1e-12


def test_dynamic_rule(static):
    tables = observed_tables(static)
    for a in (0, 1):
        assert abs(gformula_direct_effect(tables, a, lambda l: l) - oracle(static, a, "L")) <= 1e-12


def test_orders(static):
    orders = list(timestamp_orders(static))
    assert sorted(orders) == [("A", "W", "L", "K", "B"), ("W", "A", "L", "K", "B")]
    vals = [oracle(static, 1, 0, o) for o in orders]
    assert max(vals) - min(vals) <= 1e-12
    with pytest.raises(IdentificationError, match="before its parent"):
        oracle(static, 1, 0, ("L", "A", "W", "K", "B"))


def test_latent_table_refused(static):
    tables = observed_tables(static)
    tables["B"] = fit_tables(static, "B", ["A", "L", "K", "W"])
    with pytest.raises(IdentificationError):
        gformula_direct_effect(tables, 1, 0)


def test_rule_may_not_read_latent_or_later(static):
    with pytest.raises(IdentificationError, match="may not read"):
        truncated_factorization_oracle(static, {"A": "W"})
    with pytest.raises(IdentificationError, match="may not read"):
        truncated_factorization_oracle(static, {"A": 1, "K": "A"})


def test_zero_mass_cell_named():
    text = data_path("cde_static.yaml").read_text().replace("table: [[0.5, 0.5]]", "table: [[1.0, 0.0]]")
    model = parse_joint_model(text)
    tables = observed_tables(model)
    with pytest.raises(IdentificationError, match=r"P\(L \| A=1\) undefined"):
        gformula_direct_effect(tables, 1, 0)


def test_cohort_tables_converge(static):
    scen = static.to_scenario()
    cohort = simulate_cohort(scen, 40_000, 1)
    est = gformula_direct_effect(observed_tables(cohort), 1, 0)
    assert abs(est - oracle(static, 1, 0)) < 0.02


def test_relative_direct_risk(static):
    tables = observed_tables(static)
    rdr = relative_direct_risk(tables, 1, 0, 0)
    assert rdr == pytest.approx(oracle(static, 1, 0) / oracle(static, 0, 0), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_models_identified(seed):
    model = random_confounded_model(np.random.default_rng(seed))
    tables = observed_tables(model)
    for a in (0, 1):
        for k in (0, 1):
            assert abs(gformula_direct_effect(tables, a, k) - oracle(model, a, k)) <= 1e-12
