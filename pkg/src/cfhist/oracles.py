"""Closed-form counterfactual quantities for scenarios whose outcome hazard reads only baselines.

When the outcome intensity depends on baseline variables (latent ones
included) and on schedule-restricted modules that the intervention fixes to
a deterministic trajectory, the counterfactual outcome time is a finite
mixture of piecewise-exponential laws:

    S_theta(t) = sum_b P_theta(b) exp(-int_0^t lambda(b, theta K(s-)) ds)

with P_theta the truncated factorization over the baseline variables.  The
cumulative P_theta-hazard of the outcome (marginal over baselines, and with
censoring depending on intervened baselines only) is -log S_theta.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from .events import StepFunction
from .expr import Expression
from .scenario import InterventionSpec, JumpRule, ScenarioSpec
from .simulate import simulate_map


class OracleError(ValueError):
    pass


def _trajectory(scenario: ScenarioSpec, theta: InterventionSpec, module: str) -> list[float]:
    """Jump times of a schedule module fixed by theta to a deterministic trajectory."""
    rule = theta.schedules.get(module)
    if rule is None or not rule.is_deterministic_trajectory:
        raise OracleError(f"{module} is not fixed to a deterministic trajectory")
    times = scenario.schedule(module).times
    f = rule.compile({})
    return [t for i, t in enumerate(times) if f([], t, i)]


def baseline_law(scenario: ScenarioSpec, theta: InterventionSpec) -> list[tuple[dict[str, int], float]]:
    """Truncated factorization over baseline variables: intervened tables become point masses."""
    idx = scenario.state_index()
    alph = scenario.alphabets
    out = []
    names = [b.name for b in scenario.baseline]
    for combo in itertools.product(*(b.values for b in scenario.baseline)):
        env = dict(zip(names, combo))
        state = [float(env.get(n, 0)) for n in idx]
        pr = 1.0
        for b in scenario.baseline:
            if b.name in theta.baseline:
                pr *= 1.0 if int(theta.baseline[b.name].compile(idx)(state, 0.0)) == env[b.name] else 0.0
            else:
                pr *= b.prob(env[b.name], [env[q] for q in b.parents], alph)
            if pr == 0.0:
                break
        if pr > 0.0:
            out.append((env, pr))
    return out


def counterfactual_survival(scenario: ScenarioSpec, theta: InterventionSpec, outcome: str,
                            times: Sequence[float]) -> np.ndarray:
    spec = scenario.intensity_spec(outcome)
    reads = spec.reads - {outcome}
    dynamic = sorted(r for r in reads if r in scenario.modules)
    for r in dynamic:
        if not scenario.is_scheduled(r):
            raise OracleError(f"{outcome} reads intensity-driven module {r}")
    jumps = {r: _trajectory(scenario, theta, r) for r in dynamic}
    breaks = sorted({t for js in jumps.values() for t in js})
    idx = scenario.state_index()
    fs = [mk.intensity.compile(idx) for mk in spec.marks]
    times = np.asarray(times, dtype=float)
    surv = np.zeros_like(times)
    for env, pr in baseline_law(scenario, theta):
        state = [float(env.get(n, 0)) for n in idx]
        # piecewise-constant rate on [breaks_j, breaks_{j+1})
        edges = [0.0] + breaks
        rates = []
        for e in edges:
            for r in dynamic:
                state[idx[r]] = float(sum(1 for t in jumps[r] if t <= e))
            rates.append(sum(f(state, e) for f in fs))
        cum = np.zeros_like(times)
        for j, e in enumerate(edges):
            hi = edges[j + 1] if j + 1 < len(edges) else math.inf
            cum += rates[j] * np.clip(np.minimum(times, hi) - e, 0.0, None)
        surv += pr * np.exp(-cum)
    return surv


def counterfactual_cumhaz(scenario: ScenarioSpec, theta: InterventionSpec, outcome: str,
                          times: Sequence[float]) -> np.ndarray:
    return -np.log(counterfactual_survival(scenario, theta, outcome, times))


def gamma_oracle(scenario: ScenarioSpec, times: Sequence[float], treatment: str = "A",
                 mediator: str = "K", outcome: str = "B") -> tuple[np.ndarray, np.ndarray]:
    """(Gamma0, GammaA) on ``times``: cumulative hazards under A=0 and A=1 with the mediator held at 0."""
    m = len(scenario.schedule(mediator).times)
    hold = {mediator: JumpRule(decisions=(0,) * m)}
    th0 = InterventionSpec({treatment: Expression("0")}, hold)
    th1 = InterventionSpec({treatment: Expression("1")}, hold)
    l0 = counterfactual_cumhaz(scenario, th0, outcome, times)
    l1 = counterfactual_cumhaz(scenario, th1, outcome, times)
    return l0, l1 - l0


class OutcomeExit:
    """Reduce a path to (end of at-risk period, outcome observed) for Nelson-Aalen."""

    def __init__(self, outcome: str, censoring: Sequence[str], horizon: float):
        self.outcome = outcome
        self.censoring = tuple(censoring)
        self.horizon = horizon

    def __call__(self, path) -> tuple[float, int]:
        for e in path.events:
            if e.time > self.horizon:
                break
            if e.module == self.outcome:
                return e.time, 1
            if e.module in self.censoring:
                return e.time, 0
        return self.horizon, 0


def nelson_aalen_from_exits(exits: np.ndarray, observed: np.ndarray) -> StepFunction:
    ends = np.sort(exits)
    uniq, counts = np.unique(exits[observed == 1], return_counts=True)
    at_risk = ends.size - np.searchsorted(ends, uniq, side="left")
    return StepFunction(uniq, counts / at_risk)


def simulated_gamma_oracle(scenario: ScenarioSpec, n: int, seed: int, threads: int = 1,
                           treatment: str = "A", mediator: str = "K", outcome: str = "B",
                           censoring: Sequence[str] = ("C",)) -> tuple[StepFunction, StepFunction]:
    """(Gamma0, GammaA) from Nelson-Aalen estimates on two large counterfactual cohorts.

    Gamma0 + a GammaA is the cumulative hazard of the outcome when A is set to
    a and the mediator is held at 0; the A=0 and A=1 cohorts use the seeds
    ``seed`` and ``seed + 1``.
    """
    m = len(scenario.schedule(mediator).times)
    hold = {mediator: JumpRule(decisions=(0,) * m)}
    red = OutcomeExit(outcome, censoring, scenario.horizon)
    curves = []
    for a in (0, 1):
        theta = InterventionSpec({treatment: Expression(str(a))}, hold)
        rows = simulate_map(scenario, theta, n, seed + a, red, threads)
        arr = np.array(rows)
        curves.append(nelson_aalen_from_exits(arr[:, 0], arr[:, 1].astype(int)))
    return curves[0], curves[1] - curves[0]
