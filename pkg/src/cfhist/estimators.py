"""Aalen additive hazards and the modified sequential G-estimator.

Everything is computed by one sweep over event times.  Between events the
at-risk design only changes when an individual leaves the risk set or one of
its covariates jumps, so the cross-product matrices are kept as running sums
and never rebuilt.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .events import Cohort, StepFunction
from .scenario import InterventionSpec, ScenarioSpec

COND_MAX = 1e12
INTERCEPT = "1"


class EstimationError(ValueError):
    pass


# -- covariates ------------------------------------------------------------


@dataclass(frozen=True)
class Covariate:
    """A predictable covariate: the intercept, a baseline value or a module's left limit."""

    label: str
    kind: str  # "intercept" | "baseline" | "module"
    source: str = ""


def parse_covariates(spec: str | Sequence[str], cohort: Cohort) -> list[Covariate]:
    items = [s.strip() for s in spec.split(",")] if isinstance(spec, str) else list(spec)
    modules = set(cohort.modules)
    baseline = set(cohort.paths[0].baseline) if cohort.paths else set()
    out = []
    for item in items:
        if item == INTERCEPT:
            out.append(Covariate(INTERCEPT, "intercept"))
        elif item in baseline:
            out.append(Covariate(item, "baseline", item))
        elif item in modules:
            out.append(Covariate(item + "minus", "module", item))
        elif item.endswith("minus") and item[:-5] in modules:
            out.append(Covariate(item, "module", item[:-5]))
        else:
            raise EstimationError(f"covariate references unknown variable {item!r}")
    if len({c.label for c in out}) != len(out):
        raise EstimationError("duplicate covariates")
    return out


@dataclass
class _Records:
    """Per-individual at-risk intervals and covariate changes, extracted once."""

    x0: np.ndarray            # n x p covariates at time 0
    exit: np.ndarray          # end of at-risk period (inclusive)
    event: np.ndarray         # outcome time if observed while at risk, else inf
    changes: list[tuple[float, int, np.ndarray]]  # (time, i, new x) effective just after time
    ids: np.ndarray


def _extract(cohort: Cohort, outcome: str, covariates: list[Covariate],
             censoring: Sequence[str], horizon: float | None = None) -> _Records:
    if outcome not in cohort.modules:
        raise EstimationError(f"outcome module {outcome!r} not in cohort")
    for c in censoring:
        if c not in cohort.modules:
            raise EstimationError(f"censoring module {c!r} not in cohort")
    horizon = cohort.horizon if horizon is None else horizon
    n, p = len(cohort.paths), len(covariates)
    x0 = np.zeros((n, p))
    exit_ = np.full(n, horizon)
    event = np.full(n, math.inf)
    ids = np.empty(n, dtype=np.int64)
    changes: list[tuple[float, int, np.ndarray]] = []
    tracked = {c.source for c in covariates if c.kind == "module"}
    cens = set(censoring)
    for i, path in enumerate(cohort.paths):
        ids[i] = path.id
        state = {m: float(path.baseline.get(m, 0)) for m in tracked}
        for j, c in enumerate(covariates):
            if c.kind == "intercept":
                x0[i, j] = 1.0
            elif c.kind == "baseline":
                x0[i, j] = path.baseline[c.source]
            else:
                x0[i, j] = state[c.source]
        x = x0[i].copy()
        for e in path.events:
            if e.time > horizon:
                break
            if e.module == outcome:
                event[i] = e.time
                exit_[i] = e.time
                break
            if e.module in cens:
                exit_[i] = e.time
                break
            if e.module in tracked:
                state[e.module] += e.delta
                x = x.copy()
                for j, c in enumerate(covariates):
                    if c.kind == "module" and c.source == e.module:
                        x[j] = state[e.module]
                changes.append((e.time, i, x))
    return _Records(x0, exit_, event, changes, ids)


def _sweep_times(rec: _Records):
    """Outcome times (sorted, grouped) and the update schedule.

    Updates at time u affect the design strictly after u; increments at time
    s use the design just before s, so updates at s are applied after the
    increment at s.
    """
    ev_idx = np.flatnonzero(np.isfinite(rec.event))
    order = np.lexsort((rec.ids[ev_idx], rec.event[ev_idx]))
    ev_idx = ev_idx[order]
    updates: list[tuple[float, int, int, np.ndarray | None]] = []
    for t, i, x in rec.changes:
        updates.append((t, 1, i, x))
    for i in range(len(rec.exit)):
        updates.append((float(rec.exit[i]), 2, i, None))
    updates.sort(key=lambda u: (u[0], u[1], rec.ids[u[2]]))
    return ev_idx, updates


def _inverse(m: np.ndarray) -> np.ndarray | None:
    if m.shape == (2, 2):
        a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
        det = a * d - b * c
        if det <= 0 or not np.isfinite(det):
            return None
        # condition number of a symmetric positive-definite 2x2 matrix
        tr = a + d
        disc = math.sqrt(max(tr * tr / 4 - det, 0.0))
        lo, hi = tr / 2 - disc, tr / 2 + disc
        if lo <= 0 or hi / lo > COND_MAX:
            return None
        return np.array([[d, -b], [-c, a]]) / det
    if m.shape == (1, 1):
        return None if m[0, 0] <= 0 else np.array([[1.0 / m[0, 0]]])
    with np.errstate(all="ignore"):
        if not np.all(np.isfinite(m)) or np.linalg.cond(m) > COND_MAX:
            return None
    return np.linalg.inv(m)


# -- Aalen -----------------------------------------------------------------


@dataclass(eq=False)
class AalenFit:
    covariates: list[str]
    coefficients: dict[str, StepFunction]
    variance: dict[str, StepFunction]
    event_times: np.ndarray
    skipped: np.ndarray          # event times whose increment was skipped
    at_risk: np.ndarray          # number at risk just before each event time

    def __getitem__(self, label: str) -> StepFunction:
        return self.coefficients[label]

    @property
    def flags(self) -> list[str]:
        return [f"singular design at t={float(t)!r}" for t in self.skipped]


def _default_censoring(cohort: Cohort, outcome: str) -> tuple[str, ...]:
    return ("C",) if "C" in cohort.modules and outcome != "C" else ()


def aalen_fit(cohort: Cohort, outcome: str, covariates: str | Sequence[str] = (INTERCEPT,),
              censoring: Sequence[str] | None = None) -> AalenFit:
    """Cumulative regression functions of Aalen's additive hazards model.

    At each outcome time s the increment is (Z'Z)^{-1} Z' dN_s, with rows of Z
    the left-limit covariates of individuals at risk (no outcome and no
    censoring strictly before s).
    """
    covs = parse_covariates(covariates, cohort)
    if censoring is None:
        censoring = _default_censoring(cohort, outcome)
    rec = _extract(cohort, outcome, covs, censoring)
    labels = [c.label for c in covs]
    p = len(covs)
    ev_idx, updates = _sweep_times(rec)
    if ev_idx.size == 0:
        warnings.warn(f"no {outcome} events observed; fit is identically zero", stacklevel=2)
    x = rec.x0.copy()
    m = x.T @ x
    times, incs, vars_, skipped, at_risk = [], [], [], [], []
    in_risk = np.ones(len(x), dtype=bool)
    u = 0
    k = 0
    while k < ev_idx.size:
        s = rec.event[ev_idx[k]]
        while u < len(updates) and updates[u][0] < s:
            _apply(updates[u], x, m, in_risk)
            u += 1
        group = []
        while k < ev_idx.size and rec.event[ev_idx[k]] == s:
            group.append(ev_idx[k])
            k += 1
        inv = _inverse(m)
        times.append(s)
        at_risk.append(int(in_risk.sum()))
        if inv is None:
            skipped.append(s)
            incs.append(np.zeros(p))
            vars_.append(np.zeros(p))
            continue
        xs = x[group]
        incs.append(inv @ xs.sum(axis=0))
        ix = xs @ inv
        vars_.append(np.sum(ix * ix, axis=0))
    times_a = np.array(times)
    inc = np.array(incs).reshape(-1, p)
    var = np.array(vars_).reshape(-1, p)
    coefs = {lab: StepFunction(times_a, inc[:, j]) for j, lab in enumerate(labels)}
    variance = {lab: StepFunction(times_a, var[:, j]) for j, lab in enumerate(labels)}
    return AalenFit(labels, coefs, variance, times_a, np.array(skipped), np.array(at_risk))


def _apply(update, x: np.ndarray, m: np.ndarray, in_risk: np.ndarray) -> None:
    _, kind, i, new = update
    if not in_risk[i]:
        return
    old = x[i]
    m -= np.outer(old, old)
    if kind == 2:
        in_risk[i] = False
        x[i] = 0.0
    else:
        x[i] = new
        m += np.outer(new, new)


def nelson_aalen(cohort: Cohort, outcome: str, censoring: Sequence[str] | None = None) -> StepFunction:
    """Reference Nelson-Aalen estimator: sum over event times of d/Y."""
    if censoring is None:
        censoring = _default_censoring(cohort, outcome)
    exits, events = [], []
    for path in cohort.paths:
        stop, ev = cohort.horizon, None
        for e in path.events:
            if e.time > cohort.horizon:
                break
            if e.module == outcome:
                stop, ev = e.time, e.time
                break
            if e.module in censoring:
                stop = e.time
                break
        exits.append(stop)
        if ev is not None:
            events.append(ev)
    exits = np.sort(np.array(exits))
    uniq, counts = np.unique(np.array(events), return_counts=True)
    at_risk = exits.size - np.searchsorted(exits, uniq, side="left")
    return StepFunction(uniq, counts / at_risk)


# -- sequential G-estimator ------------------------------------------------


@dataclass(eq=False)
class GcdeFit:
    gamma0: StepFunction
    gammaA: StepFunction
    psiK: StepFunction
    stage1: AalenFit
    treatment: str
    mediator: str
    outcome: str
    schedule_times: tuple[float, ...]
    event_times: np.ndarray
    at_risk: dict[int, np.ndarray] = field(default_factory=dict)
    skipped: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def gamma(self) -> tuple[StepFunction, StepFunction]:
        return self.gamma0, self.gammaA

    @property
    def flags(self) -> list[str]:
        return [f"singular weighted design at t={float(t)!r}" for t in self.skipped] + self.stage1.flags


def sequential_g_fit(cohort: Cohort, scenario: ScenarioSpec | None = None, treatment: str = "A",
                     covariate: str = "L", mediator: str = "K", outcome: str = "B",
                     censoring: str = "C") -> GcdeFit:
    """Modified sequential G-estimator of the controlled direct effect of A on B.

    Stage 1 fits Aalen's model with (1, A, L, K-) to get Psi^K.  Stage 2
    weights individual i by H_i(t) = Y_i(t) exp(int_0^t K_i(s-) dPsi^K(s))
    using left limits.  Stage 3 regresses on (1, A) with weights H:

        dGamma(s) = (Z'HZ)^{-1} Z'H dN(s) - (Z'HZ)^{-1} Z'H K(s-) dPsi^K(s).
    """
    for name in (outcome, censoring, mediator):
        if name not in cohort.modules:
            raise EstimationError(f"required module {name!r} missing from cohort")
    if cohort.paths:
        for name in (treatment, covariate):
            if name not in cohort.paths[0].baseline:
                raise EstimationError(f"required baseline variable {name!r} missing from cohort")
    a = cohort.baseline_array(treatment)
    if a.size == 0 or np.all(a == a[0]):
        raise EstimationError("design degenerate: every individual has the same treatment arm")
    if not set(np.unique(a)) <= {0.0, 1.0}:
        raise EstimationError(f"treatment {treatment!r} must be binary 0/1")
    stage1 = aalen_fit(cohort, outcome, [INTERCEPT, treatment, covariate, mediator], [censoring])
    psiK = stage1.coefficients[mediator + "minus"]
    cum_psi = psiK  # right-continuous C(t)

    covs = parse_covariates([INTERCEPT, treatment, mediator], cohort)
    rec = _extract(cohort, outcome, covs, [censoring])
    n = len(rec.x0)
    ev_idx, updates = _sweep_times(rec)

    # groups by current K level; base weight exp(off_i) with off_i = -sum_j C(tau_ij)
    level = rec.x0[:, 2].astype(int).copy()
    logw = np.zeros(n)
    xa = rec.x0[:, :2].copy()
    in_risk = np.ones(n, dtype=bool)
    groups: dict[int, list] = {}

    def group(k):
        if k not in groups:
            groups[k] = [np.zeros((2, 2)), np.zeros(2)]
        return groups[k]

    def add(i, sign):
        g = group(level[i])
        w = math.exp(logw[i]) * sign
        g[0] += w * np.outer(xa[i], xa[i])
        g[1] += w * xa[i]

    for i in range(n):
        add(i, 1.0)

    dpsi = dict(zip(psiK.jump_times.tolist(), psiK.jump_sizes.tolist()))
    times, g0, gA, skipped = [], [], [], []
    risk0, risk1 = [], []
    u = 0
    k = 0
    while k < ev_idx.size:
        s = rec.event[ev_idx[k]]
        while u < len(updates) and updates[u][0] < s:
            t_u, kind, i, _ = updates[u]
            u += 1
            if not in_risk[i]:
                continue
            add(i, -1.0)
            if kind == 2:
                in_risk[i] = False
            else:
                level[i] += 1
                logw[i] -= cum_psi(t_u)
                add(i, 1.0)
        evs = []
        while k < ev_idx.size and rec.event[ev_idx[k]] == s:
            evs.append(ev_idx[k])
            k += 1
        c_left = cum_psi.left_limit(s)
        mat = np.zeros((2, 2))
        kvec = np.zeros(2)
        for lev, (gm, gv) in groups.items():
            f = math.exp(lev * c_left)
            mat += f * gm
            kvec += lev * f * gv
        times.append(s)
        risk1.append(int(np.sum(in_risk & (xa[:, 1] == 1))))
        risk0.append(int(np.sum(in_risk)) - risk1[-1])
        inv = _inverse(mat)
        if inv is None:
            skipped.append(s)
            g0.append(0.0)
            gA.append(0.0)
            continue
        dn = np.zeros(2)
        for i in evs:
            dn += math.exp(logw[i] + level[i] * c_left) * xa[i]
        inc = inv @ (dn - kvec * dpsi.get(s, 0.0))
        g0.append(inc[0])
        gA.append(inc[1])

    times_a = np.array(times)
    if scenario is not None and scenario.is_scheduled(mediator):
        sched = tuple(scenario.schedule(mediator).times)
    else:
        sched = tuple(sorted({e.time for p in cohort.paths for e in p.events if e.module == mediator}))
    return GcdeFit(StepFunction(times_a, np.array(g0)), StepFunction(times_a, np.array(gA)), psiK, stage1,
                   treatment, mediator, outcome, sched, times_a,
                   {0: np.array(risk0), 1: np.array(risk1)}, np.array(skipped))


def _deterministic_trajectory(theta: InterventionSpec, fit: GcdeFit) -> tuple[int, tuple[int, ...]]:
    if fit.treatment not in theta.baseline or not theta.baseline[fit.treatment].is_constant:
        raise EstimationError(f"intervention must fix {fit.treatment} to a constant")
    a = theta.baseline[fit.treatment].evaluate({})
    if a not in (0.0, 1.0):
        raise EstimationError(f"intervention sets {fit.treatment}={a:g}; expected 0 or 1")
    rule = theta.schedules.get(fit.mediator)
    if rule is None or not rule.is_deterministic_trajectory:
        raise EstimationError(f"intervention must fix {fit.mediator} to a deterministic trajectory")
    m = len(fit.schedule_times)
    if rule.decisions is not None:
        if len(rule.decisions) != m:
            raise EstimationError(f"{len(rule.decisions)} decisions for {m} scheduled times")
        dec = rule.decisions
    else:
        f = rule.compile({})
        dec = tuple(f([], t, i) for i, t in enumerate(fit.schedule_times))
    extra = set(theta.intervened) - {fit.treatment, fit.mediator}
    if extra:
        raise EstimationError(f"intervention also touches {sorted(extra)}")
    return int(a), tuple(int(d) for d in dec)


def counterfactual_hazard(fit: GcdeFit, theta: InterventionSpec) -> StepFunction:
    """Lambda^theta(t) = int_0^t (1, theta A, theta K(s-)) d(Gamma0, GammaA, Psi^K)."""
    a, dec = _deterministic_trajectory(theta, fit)
    sched = np.array(fit.schedule_times)
    jumps = np.array([t for t, d in zip(sched, dec) if d])
    psi_t = fit.psiK.jump_times
    k_left = np.searchsorted(jumps, psi_t, side="left").astype(float)
    out = fit.gamma0 + fit.gammaA.scaled(float(a))
    return out + StepFunction(psi_t, k_left * fit.psiK.jump_sizes)


def hazard_to_survival(hazard: StepFunction) -> StepFunction:
    """Product integral prod_{s <= t} (1 - dLambda(s)); factors are clamped at 0."""
    d = hazard.jump_sizes
    if np.any(d < 0):
        warnings.warn("cumulative hazard has negative increments", stacklevel=2)
    factors = np.clip(1.0 - d, 0.0, None)
    surv = np.cumprod(factors)
    prev = np.concatenate([[1.0], surv[:-1]])
    return StepFunction(hazard.jump_times, surv - prev, 1.0)
