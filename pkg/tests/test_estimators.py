import math
import warnings

import numpy as np
import pytest

from cfhist.estimators import (EstimationError, GcdeFit, aalen_fit, counterfactual_hazard, hazard_to_survival,
                               nelson_aalen, parse_covariates, sequential_g_fit)
from cfhist.events import Cohort, StepFunction
from cfhist.oracles import gamma_oracle
from cfhist.scenario import parse_intervention, parse_scenario
from cfhist.simulate import simulate_cohort
from cfhist.study import data_path, sup_error


def null_scenario():
    """B ignores A and W, and L is independent of A: the direct effect is zero."""
    text = data_path("cde_dynamic.yaml").read_text()
    text = text.replace('"0.25 + 0.15*A + 0.3*L + 0.2*K + 0.6*W"', '"0.25 + 0.3*L + 0.2*K"')
    text = text.replace("depends: [A, L, K, W]", "depends: [L, K]")
    for row in ("[1.0, 0.0]     # A=0, W=0", "[1.0, 0.0]     # A=0, W=1",
                "[0.75, 0.25]   # A=1, W=0", "[0.25, 0.75]   # A=1, W=1"):
        text = text.replace(row, "[0.5, 0.5]")
    return parse_scenario(text, data_path("cde_dynamic.yaml").parent)


def test_intercept_only_is_nelson_aalen(small_cohort):
    fit = aalen_fit(small_cohort, "B", "1")
    na = nelson_aalen(small_cohort, "B")
    assert np.array_equal(fit["1"].jump_times, na.jump_times)
    assert np.max(np.abs(fit["1"].values - na.values)) <= 1e-12


def test_constant_hazard():
    s = parse_scenario("horizon: 1.0\nmodules: {B: {intensity: '0.7', absorbing: true}}")
    fit = aalen_fit(simulate_cohort(s, 10_000, 3), "B")
    se = math.sqrt(fit.variance["1"].final())
    assert abs(fit["1"].final() - 0.7) <= 3 * se


def test_additive_arm_effect():
    s = parse_scenario("""
horizon: 1.0
baseline: {A: {time: 0, values: [0, 1], parents: [], table: [[0.5, 0.5]]}}
modules: {B: {intensity: "0.3 + 0.4*A", depends: [A], absorbing: true}}
""")
    fit = aalen_fit(simulate_cohort(s, 10_000, 4), "B", "1,A")
    for lab, truth in (("1", 0.3), ("A", 0.4)):
        assert abs(fit[lab].final() - truth) <= 3 * math.sqrt(fit.variance[lab].final())


def test_null_arm_and_no_events():
    s = parse_scenario("""
horizon: 1.0
baseline: {A: {time: 0, values: [0, 1], parents: [], table: [[0.5, 0.5]]}}
modules: {B: {intensity: "0.5", absorbing: true}}
""")
    fit = aalen_fit(simulate_cohort(s, 10_000, 5), "B", "1,A")
    assert abs(fit["A"].final()) <= 3 * math.sqrt(fit.variance["A"].final())
    quiet = parse_scenario("horizon: 1.0\nmodules: {B: {intensity: '0.0', absorbing: true}}")
    with pytest.warns(UserWarning, match="no B events"):
        fit = aalen_fit(simulate_cohort(quiet, 10, 1), "B")
    assert fit["1"].final() == 0.0


def test_covariate_errors(small_cohort):
    with pytest.raises(EstimationError, match="unknown variable"):
        parse_covariates("1,Z", small_cohort)
    labels = [c.label for c in parse_covariates("1,A,K", small_cohort)]
    assert labels == ["1", "A", "Kminus"]


def test_singular_increments_skipped(dynamic, small_cohort):
    fit = aalen_fit(small_cohort, "B", "1,A,L,K")
    # K is identically zero before the first visit
    assert fit.skipped.size > 0 and np.all(fit.skipped < 0.25)
    assert all(f.startswith("singular design") for f in fit.flags)


def test_null_direct_effect():
    s = null_scenario()
    grid = np.linspace(0, 1, 501)
    g0, gA = gamma_oracle(s, grid)
    assert np.max(np.abs(gA)) < 1e-12
    fit = sequential_g_fit(simulate_cohort(s, 4000, 1), s)
    assert sup_error(fit.gammaA, grid, gA) < 0.1
    assert sup_error(fit.gamma0, grid, g0) < 0.1
    assert abs(fit.psiK.final() - 0.15) < 0.06


def test_psiK_zero_when_K_inert(dynamic):
    text = data_path("cde_dynamic.yaml").read_text().replace(" + 0.2*K + 0.6*W", " + 0.6*W")
    s = parse_scenario(text.replace("depends: [A, L, K, W]", "depends: [A, L, W]"), data_path("cde_dynamic.yaml").parent)
    fit = sequential_g_fit(simulate_cohort(s, 4000, 2), s)
    assert abs(fit.psiK.final()) < 3 * math.sqrt(fit.stage1.variance["Kminus"].final())


def test_permutation_invariance(dynamic, small_cohort):
    rng = np.random.default_rng(0)
    perm = rng.permutation(len(small_cohort.paths))
    shuffled = Cohort(tuple(small_cohort.paths[i] for i in perm), small_cohort.scenario_digest, small_cohort.seed,
                      small_cohort.regime, small_cohort.horizon, small_cohort.modules)
    a = sequential_g_fit(small_cohort, dynamic)
    b = sequential_g_fit(shuffled, dynamic)
    assert np.array_equal(a.gammaA.jump_times, b.gammaA.jump_times)
    assert np.max(np.abs(a.gammaA.values - b.gammaA.values)) < 1e-12
    assert np.max(np.abs(a.gamma0.values - b.gamma0.values)) < 1e-12


def test_gfit_errors(dynamic, small_cohort, theta1):
    arm = [p for p in small_cohort.paths if p.baseline["A"] == 1]
    one = Cohort(tuple(arm), small_cohort.scenario_digest, 0, small_cohort.regime, 1.0, small_cohort.modules)
    with pytest.raises(EstimationError, match="design degenerate"):
        sequential_g_fit(one, dynamic)
    noc = Cohort(small_cohort.paths[:10], "", 0, small_cohort.regime, 1.0, ("B", "K"))
    with pytest.raises(EstimationError, match="missing"):
        sequential_g_fit(noc)
    fit = sequential_g_fit(small_cohort, dynamic)
    with pytest.raises(EstimationError):
        counterfactual_hazard(fit, parse_intervention("baseline: {A: 1}\nschedules: {K: 'L'}"))
    with pytest.raises(EstimationError):
        counterfactual_hazard(fit, parse_intervention("schedules: {K: [0, 0, 0]}"))


def make_fit(g0, gA, psi, sched=(0.25, 0.5, 0.75)):
    dummy = None
    return GcdeFit(g0, gA, psi, dummy, "A", "K", "B", sched, np.zeros(0))


def test_counterfactual_hazard_linear():
    g0 = StepFunction([0.1, 0.6], [0.2, 0.3])
    gA = StepFunction([0.2, 0.9], [0.05, 0.1])
    psi = StepFunction([0.3, 0.55, 0.8], [0.1, 0.2, 0.4])
    fit = make_fit(g0, gA, psi)
    lam = counterfactual_hazard(fit, parse_intervention("baseline: {A: 0}\nschedules: {K: [0, 0, 0]}"))
    assert lam.final() == pytest.approx(0.5)
    lam = counterfactual_hazard(fit, parse_intervention("baseline: {A: 1}\nschedules: {K: [0, 0, 0]}"))
    assert lam.final() == pytest.approx(0.65)
    # K jumps at 0.25 and 0.75: K(s-) is 1 at 0.3 and 0.55, 2 at 0.8
    lam = counterfactual_hazard(fit, parse_intervention("baseline: {A: 0}\nschedules: {K: [1, 0, 1]}"))
    assert lam.final() == pytest.approx(0.5 + 0.1 + 0.2 + 2 * 0.4)
    assert lam(0.7) == pytest.approx(0.5 + 0.3)


def test_hazard_to_survival():
    s = hazard_to_survival(StepFunction([0.2, 0.5], [0.5, 0.5]))
    assert s(0.1) == 1.0 and s(0.3) == pytest.approx(0.5) and s(1.0) == pytest.approx(0.25)
    with pytest.warns(UserWarning, match="negative"):
        s = hazard_to_survival(StepFunction([0.2, 0.5], [-0.1, 1.5]))
    assert s(0.3) == pytest.approx(1.1) and s(0.6) == 0.0
    assert hazard_to_survival(StepFunction.constant(0.0)).final() == 1.0
