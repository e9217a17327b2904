"""Likelihood-ratio weights dP_theta/dP, IPW estimation and positivity diagnostics.

For a deterministic intervention the weight factorizes over the intervened
variables.  A baseline variable V contributes

    1{V = theta V} / P(V = observed | past)

and a schedule-restricted module contributes, at each scheduled time,

    1{observed decision = theta decision} / P(observed decision | past).

Non-intervened modules contribute 1.  Weights are accumulated as log-weights,
module by module (sorted by id) and then in time order.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .events import Cohort, Path, StepFunction
from .graph import LocalIndependenceGraph, closure
from .scenario import InterventionSpec, ScenarioSpec, validate_intervention

NEG_INF = -math.inf


class ZeroProbabilityError(ValueError):
    """An observed decision has zero probability under the scenario."""


@dataclass(frozen=True, eq=False)
class WeightTrajectory:
    modules: dict[str, StepFunction]
    total: StepFunction

    @property
    def final_weight(self) -> float:
        return math.exp(self.total.final())

    def weight(self, t):
        return np.exp(self.total(t))


class WeightModel:
    """Scenario and intervention compiled for repeated per-path weight evaluation."""

    def __init__(self, scenario: ScenarioSpec, theta: InterventionSpec, check: bool = True):
        if check:
            report = validate_intervention(scenario, theta)
            if not report.ok:
                raise ValueError("invalid intervention: " + "; ".join(report.lines()))
        self.scenario = scenario
        self.theta = theta
        self.index = idx = scenario.state_index()
        self.alphabets = scenario.alphabets
        self.baseline = []
        for b in scenario.baseline:
            if b.name in theta.baseline:
                self.baseline.append((b, theta.baseline[b.name].compile(idx)))
        self.decisions = []
        for s in scenario.schedules:
            if s.module in theta.schedules:
                prob = s.probability.compile(idx)
                rule = theta.schedules[s.module].compile(idx)
                for k, t in enumerate(s.times):
                    self.decisions.append((t, s.module, prob, rule, k))
        self.decisions.sort(key=lambda d: (d[1], d[0]))
        self.names = sorted(theta.intervened)

    def _state(self, path: Path, mask: set[str] | None = None) -> list:
        state = [0.0] * len(self.index)
        for name, val in path.baseline.items():
            if name in self.index:
                state[self.index[name]] = val
        if mask is not None:
            for name, j in self.index.items():
                if name not in mask:
                    state[j] = math.nan
        return state

    def log_increments(self, path: Path, allowed: dict[str, set[str]] | None = None
                       ) -> dict[str, tuple[float, list[float], list[float]]]:
        """Per intervened variable: (log-weight at 0, jump times, log jump sizes).

        ``allowed`` optionally restricts, per variable, which states may be
        read; other states are replaced by NaN.
        """
        out: dict[str, tuple[float, list[float], list[float]]] = {}
        idx = self.index
        for b, rule in self.baseline:
            state = self._state(path, None if allowed is None else allowed[b.name])
            observed = path.baseline[b.name]
            parent_vals = [path.baseline[p] for p in b.parents]
            p = b.prob(observed, parent_vals, self.alphabets)
            if allowed is not None and any(math.isnan(state[idx[q]]) for q in b.parents):
                p = math.nan
            if p == 0.0:
                raise ZeroProbabilityError(f"path {path.id}: observed {b.name}={observed} has probability 0")
            enforced = rule(state, 0.0)
            if math.isnan(enforced) or math.isnan(p):
                out[b.name] = (math.nan, [], [])
            else:
                out[b.name] = (-math.log(p) if int(enforced) == observed else NEG_INF, [], [])
        if not self.decisions:
            return out
        events = path.events
        current = None
        for t, module, prob, rule, k in self.decisions:
            if module != current:
                current = module
                state = self._state(path, None if allowed is None else allowed[module])
                j = 0
                times: list[float] = []
                sizes: list[float] = []
                out[module] = (0.0, times, sizes)
                own = {e.time for e in events if e.module == module}
            while j < len(events) and events[j].time < t:
                e = events[j]
                state[idx[e.module]] += e.delta
                j += 1
            observed = 1 if t in own else 0
            p = prob(state, t)
            p_obs = p if observed else 1.0 - p
            if p_obs == 0.0:
                raise ZeroProbabilityError(
                    f"path {path.id}: observed decision {observed} of {module} at t={t} has probability 0")
            enforced = rule(state, t, k)
            times.append(t)
            if math.isnan(p_obs):
                sizes.append(math.nan)
            else:
                sizes.append(-math.log(p_obs) if enforced == observed else NEG_INF)
        return out

    def trajectory(self, path: Path) -> WeightTrajectory:
        parts = self.log_increments(path)
        modules = {}
        all_t: list[float] = []
        all_s: list[float] = []
        init = 0.0
        for name in self.names:
            i0, ts, ss = parts[name]
            modules[name] = StepFunction.from_increments(ts, ss, i0)
            init += i0
            all_t.extend(ts)
            all_s.extend(ss)
        return WeightTrajectory(modules, _sum_increments(all_t, all_s, init))

    def log_weight_path(self, path: Path) -> tuple[float, list[float], list[float]]:
        """Total log-weight: value at 0, sorted jump times, cumulative values after each."""
        parts = self.log_increments(path)
        init = 0.0
        incs: dict[float, float] = {}
        for name in self.names:
            i0, ts, ss = parts[name]
            init += i0
            for t, s in zip(ts, ss):
                incs[t] = incs.get(t, 0.0) + s
        times = sorted(incs)
        cum = []
        acc = init
        for t in times:
            acc = acc + incs[t]
            cum.append(acc)
        return init, times, cum

    def log_weight_final(self, path: Path) -> float:
        init, _, cum = self.log_weight_path(path)
        return cum[-1] if cum else init


def _sum_increments(times: list[float], sizes: list[float], init: float) -> StepFunction:
    if not times:
        return StepFunction.constant(init)
    with np.errstate(invalid="ignore"):
        return StepFunction.from_increments(times, sizes, init)


def weight_trajectory(path: Path, scenario: ScenarioSpec, theta: InterventionSpec) -> WeightTrajectory:
    return WeightModel(scenario, theta).trajectory(path)


def cohort_log_weights(cohort: Cohort, scenario: ScenarioSpec, theta: InterventionSpec,
                       grid: Sequence[float] | None = None) -> np.ndarray:
    """Final log-weights (shape n) or log-weights on ``grid`` (shape n x len(grid))."""
    model = WeightModel(scenario, theta)
    if grid is None:
        return np.array([model.log_weight_final(p) for p in cohort.paths])
    out = np.empty((len(cohort.paths), len(grid)))
    for i, p in enumerate(cohort.paths):
        init, times, cum = model.log_weight_path(p)
        vals = [init] + cum
        for g, t in enumerate(grid):
            out[i, g] = vals[bisect.bisect_right(times, t)]
    return out


# -- path functionals ------------------------------------------------------


def _value(path: Path, module: str, t: float) -> float:
    v = path.baseline.get(module, 0)
    for e in path.events:
        if e.time > t:
            break
        if e.module == module:
            v += e.delta
    return float(v)


@dataclass(frozen=True)
class PathFunctional:
    """A real function of one path, built from the supported descriptors."""

    kind: str
    module: str = ""
    time: float = 0.0
    equals: float | None = None
    parts: tuple["PathFunctional", ...] = ()

    def __call__(self, path: Path) -> float:
        if self.kind == "all":
            out = 1.0
            for f in self.parts:
                out *= f(path)
            return out
        if self.kind == "state":
            v = _value(path, self.module, self.time)
        elif self.kind == "event_by":
            v = 1.0 if any(e.module == self.module and e.time <= self.time for e in path.events) else 0.0
        elif self.kind == "integral":
            v = 0.0
            level = float(path.baseline.get(self.module, 0))
            last = 0.0
            for e in path.events:
                if e.time > self.time:
                    break
                if e.module == self.module:
                    v += level * (e.time - last)
                    level += e.delta
                    last = e.time
            v += level * (self.time - last)
        else:
            raise ValueError(f"unknown functional kind {self.kind!r}")
        if self.equals is not None:
            return 1.0 if v == self.equals else 0.0
        return v

    def __str__(self) -> str:
        if self.kind == "all":
            return " & ".join(str(p) for p in self.parts)
        base = f"{self.kind}({self.module}, {self.time:g})"
        return base if self.equals is None else f"{base} == {self.equals:g}"


def state_functional(module: str, t: float, equals: float | None = None) -> PathFunctional:
    return PathFunctional("state", module, float(t), equals)


def event_by(module: str, t: float) -> PathFunctional:
    return PathFunctional("event_by", module, float(t))


def time_integral(module: str, t: float) -> PathFunctional:
    return PathFunctional("integral", module, float(t))


def all_of(*parts: PathFunctional) -> PathFunctional:
    return PathFunctional("all", parts=tuple(parts))


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float
    n: int

    def __iter__(self):
        return iter((self.value, self.se))


def weighted_mean(w: np.ndarray, h: np.ndarray, normalization: str = "self") -> Estimate:
    w = np.asarray(w, dtype=float)
    h = np.asarray(h, dtype=float)
    n = len(w)
    if normalization == "raw":
        wh = w * h
        return Estimate(float(np.mean(wh)), float(np.std(wh, ddof=1) / math.sqrt(n)) if n > 1 else math.nan, n)
    if normalization != "self":
        raise ValueError("normalization must be 'raw' or 'self'")
    sw = float(np.sum(w))
    if sw == 0.0:
        raise ValueError("empty effective sample")
    est = float(np.sum(w * h)) / sw
    se = math.sqrt(float(np.sum(w**2 * (h - est) ** 2))) / sw
    return Estimate(est, se, n)


def ipw_expectation(cohort: Cohort, scenario: ScenarioSpec, theta: InterventionSpec,
                    functional: Callable[[Path], float], normalization: str = "self") -> Estimate:
    """Estimate E_theta[h] from a factual cohort by re-weighting with W_T."""
    if not cohort.is_factual:
        raise ValueError("IPW needs a factual cohort")
    w = np.exp(cohort_log_weights(cohort, scenario, theta))
    h = np.array([functional(p) for p in cohort.paths], dtype=float)
    if not np.any(w > 0):
        raise ValueError("empty effective sample")
    return weighted_mean(w, h, normalization)


@dataclass
class WeightDiagnostics:
    grid: np.ndarray
    mean_weight: np.ndarray
    se_weight: np.ndarray
    max_weight: float
    n_eff: float
    n_zero: int
    n: int


def weight_diagnostics(cohort: Cohort, scenario: ScenarioSpec, theta: InterventionSpec,
                       grid: Sequence[float] | None = None) -> WeightDiagnostics:
    if grid is None:
        grid = np.linspace(scenario.horizon / 20, scenario.horizon, 20)
    grid = np.asarray(grid, dtype=float)
    lw = cohort_log_weights(cohort, scenario, theta, grid)
    w = np.exp(lw)
    n = w.shape[0]
    final = w[:, -1] if grid.size and grid[-1] >= scenario.horizon else np.exp(
        cohort_log_weights(cohort, scenario, theta))
    return WeightDiagnostics(
        grid=grid,
        mean_weight=w.mean(axis=0),
        se_weight=w.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(grid.size, math.nan),
        max_weight=float(final.max()),
        n_eff=float(final.sum() ** 2 / np.sum(final**2)) if final.any() else 0.0,
        n_zero=int(np.sum(final == 0)),
        n=n,
    )


def effective_sample_size(w: np.ndarray) -> float:
    w = np.asarray(w, dtype=float)
    return float(w.sum() ** 2 / np.sum(w**2))


# -- positivity ------------------------------------------------------------


@dataclass
class PositivityReport:
    baseline: dict[str, dict] = field(default_factory=dict)
    schedules: dict[str, dict] = field(default_factory=dict)
    n_zero_weight: int = 0
    n: int = 0
    min_probability: float = 1.0
    flags: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.flags

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "min_probability": self.min_probability,
            "n": self.n,
            "n_zero_weight": self.n_zero_weight,
            "baseline": self.baseline,
            "schedules": self.schedules,
            "flags": self.flags,
        }


def _baseline_joint(scenario: ScenarioSpec, limit: int = 10**6):
    """Reachable baseline configurations with positive probability, or None if too many."""
    names = [b.name for b in scenario.baseline]
    size = math.prod(len(b.values) for b in scenario.baseline)
    if size > limit:
        return None
    alph = scenario.alphabets
    out = []
    for combo in itertools.product(*(b.values for b in scenario.baseline)):
        env = dict(zip(names, combo))
        pr = 1.0
        for b in scenario.baseline:
            pr *= b.prob(env[b.name], [env[p] for p in b.parents], alph)
            if pr == 0.0:
                break
        if pr > 0.0:
            out.append(env)
    return out


def _module_range(scenario: ScenarioSpec, name: str, before: float):
    if scenario.is_scheduled(name):
        return range(sum(1 for t in scenario.schedule(name).times if t < before) + 1)
    spec = scenario.intensity_spec(name)
    if spec.absorbing and all(mk.delta == 1 for mk in spec.marks):
        return range(2)
    return None


def positivity_check(cohort: Cohort, scenario: ScenarioSpec, theta: InterventionSpec) -> PositivityReport:
    """Smallest conditional probabilities of the enforced decisions, empirical and analytic.

    With the identity intervention the observed decisions are the enforced
    ones, and the report gives the smallest factual probability of an
    observed baseline value or scheduled decision.
    """
    rep = PositivityReport(n=len(cohort.paths))
    idx = scenario.state_index()
    alph = scenario.alphabets
    joint = _baseline_joint(scenario)
    identity = theta.is_identity
    base_targets = [b.name for b in scenario.baseline] if identity else list(theta.baseline)
    sched_targets = [s.module for s in scenario.schedules] if identity else list(theta.schedules)

    for name in base_targets:
        b = scenario.baseline_spec(name)
        rule = None if identity else theta.baseline[name].compile(idx)
        emp = math.inf
        for p in cohort.paths:
            state = [0.0] * len(idx)
            for k, v in p.baseline.items():
                if k in idx:
                    state[idx[k]] = v
            target = p.baseline[name] if rule is None else int(rule(state, 0.0))
            pr = b.prob(target, [p.baseline[q] for q in b.parents], alph) if target in b.values else 0.0
            emp = min(emp, pr)
        ana = None
        if joint is not None:
            ana = math.inf
            for env in joint:
                state = [float(env.get(n, 0)) for n in idx]
                if rule is None:
                    target_vals = [v for v in b.values if b.prob(v, [env[q] for q in b.parents], alph) > 0]
                else:
                    target_vals = [int(rule(state, 0.0))]
                for tv in target_vals:
                    pr = b.prob(tv, [env[q] for q in b.parents], alph) if tv in b.values else 0.0
                    ana = min(ana, pr)
        rep.baseline[name] = {"empirical_min": emp if emp != math.inf else None,
                              "analytic_min": ana if ana != math.inf else None}
        for v in (emp, ana):
            if v is not None and v != math.inf:
                rep.min_probability = min(rep.min_probability, v)
        if emp == 0.0 or ana == 0.0:
            rep.flags.append(f"{name}: enforced baseline value has zero probability")

    model = WeightModel(scenario, theta) if not identity else None
    for name in sched_targets:
        s = scenario.schedule(name)
        prob = s.probability.compile(idx)
        rule = None if identity else theta.schedules[name].compile(idx)
        emp = math.inf
        for p in cohort.paths:
            state = [0.0] * len(idx)
            for k, v in p.baseline.items():
                if k in idx:
                    state[idx[k]] = v
            alive = True
            if model is not None:
                init, wtimes, cum = model.log_weight_path(p)
            j = 0
            own = {e.time for e in p.events if e.module == name}
            for k, t in enumerate(s.times):
                while j < len(p.events) and p.events[j].time < t:
                    state[idx[p.events[j].module]] += p.events[j].delta
                    j += 1
                if model is not None:
                    vals = [init] + cum
                    alive = vals[bisect.bisect_left(wtimes, t)] > NEG_INF
                if not alive:
                    break
                pj = prob(state, t)
                target = (1 if t in own else 0) if rule is None else rule(state, t, k)
                emp = min(emp, pj if target else 1.0 - pj)
        reads = (s.probability.reads | (theta.schedules[name].reads if not identity else frozenset())) | {name}
        ana = ana_nojump = None
        if joint is not None:
            mod_reads = sorted(r for r in reads if r in scenario.modules)
            base_reads = sorted(r for r in reads if r not in scenario.modules)
            ana = ana_nojump = math.inf
            reachable = joint
            if not identity and theta.baseline:
                rules = {k: v.compile(idx) for k, v in theta.baseline.items()}
                reachable = [env for env in joint
                             if all(int(f([float(env.get(n, 0)) for n in idx], 0.0)) == env[k]
                                    for k, f in rules.items())]
            seen_base = {tuple(env[r] for r in base_reads) for env in reachable}
            for k, t in enumerate(s.times):
                ranges = [_module_range(scenario, m, t) for m in mod_reads]
                if any(r is None for r in ranges):
                    ana = ana_nojump = None
                    break
                for bv in seen_base:
                    for mv in itertools.product(*ranges):
                        state = [0.0] * len(idx)
                        for r, v in zip(base_reads, bv):
                            state[idx[r]] = v
                        for r, v in zip(mod_reads, mv):
                            state[idx[r]] = v
                        pj = prob(state, t)
                        ana_nojump = min(ana_nojump, 1.0 - pj)
                        if rule is None:
                            cands = [x for x in (pj, 1.0 - pj) if x > 0]
                            ana = min([ana] + cands)
                        else:
                            ana = min(ana, pj if rule(state, t, k) else 1.0 - pj)
        rep.schedules[name] = {
            "empirical_min": emp if emp != math.inf else None,
            "analytic_min": ana,
            "analytic_min_no_jump": ana_nojump,
        }
        for v in (emp, ana):
            if v is not None and v != math.inf:
                rep.min_probability = min(rep.min_probability, v)
        if emp == 0.0 or ana == 0.0:
            rep.flags.append(f"{name}: enforced decision has zero probability at some scheduled time")

    if not identity:
        try:
            lw = cohort_log_weights(cohort, scenario, theta)
            rep.n_zero_weight = int(np.sum(lw == NEG_INF))
        except ZeroProbabilityError as exc:
            rep.flags.append(str(exc))
        if rep.n and rep.n_zero_weight == rep.n:
            rep.flags.append("every path has weight zero")
    return rep


# -- factorization ---------------------------------------------------------


def _likelihood_factors(path: Path, scenario: ScenarioSpec, masks: dict[str, set[str]] | None):
    """Per-variable log dP/dQ factors at the horizon.

    The reference law Q takes baseline values uniform on their alphabets,
    unit-rate Poisson marks and fair coins at scheduled times.  With
    ``masks``, each factor is computed from a state in which variables
    outside ``masks[V]`` are NaN.
    """
    idx = scenario.state_index()
    alph = scenario.alphabets
    out: dict[str, float] = {}
    for b in scenario.baseline:
        allowed = None if masks is None else masks[b.name]
        vals = []
        for q in b.parents:
            vals.append(path.baseline[q] if allowed is None or q in allowed else None)
        if any(v is None for v in vals):
            out[b.name] = math.nan
            continue
        p = b.prob(path.baseline[b.name], vals, alph)
        out[b.name] = math.log(p * len(b.values)) if p > 0 else NEG_INF
    horizon = scenario.horizon
    mechanisms = [(m.module, m) for m in scenario.intensities] + [(s.module, s) for s in scenario.schedules]
    for name, spec in mechanisms:
        state = [0.0] * len(idx)
        for k, v in path.baseline.items():
            if k in idx:
                state[idx[k]] = v
        if masks is not None:
            for k, j in idx.items():
                if k not in masks[name]:
                    state[j] = math.nan
        if hasattr(spec, "marks"):
            fs = [(mk.label, mk.intensity.compile(idx)) for mk in spec.marks]
            total = 0.0
            last = 0.0
            for e in path.events:
                if e.time > horizon:
                    break
                if not (spec.absorbing and state[idx[name]] >= 1):
                    rate = sum(f(state, last) for _, f in fs)
                else:
                    rate = 0.0
                total -= (rate - len(fs)) * (e.time - last)
                if e.module == name:
                    lam = dict((lab, f(state, e.time)) for lab, f in fs)[e.mark]
                    if spec.absorbing and state[idx[name]] >= 1:
                        lam = 0.0
                    total += math.log(lam) if lam > 0 else (math.nan if math.isnan(lam) else NEG_INF)
                state[idx[e.module]] += e.delta
                last = e.time
            rate = 0.0 if (spec.absorbing and state[idx[name]] >= 1) else sum(f(state, last) for _, f in fs)
            total -= (rate - len(fs)) * (horizon - last)
        else:
            prob = spec.probability.compile(idx)
            own = {e.time for e in path.events if e.module == name}
            total = 0.0
            j = 0
            for t in spec.times:
                while j < len(path.events) and path.events[j].time < t:
                    e = path.events[j]
                    state[idx[e.module]] += e.delta
                    j += 1
                p = prob(state, t)
                p_obs = p if t in own else 1.0 - p
                total += math.log(2.0 * p_obs) if p_obs > 0 else (math.nan if math.isnan(p_obs) else NEG_INF)
        out[name] = total
    return out


def _total_log_likelihood(path: Path, scenario: ScenarioSpec) -> float:
    """log dP/dQ at the horizon from a single time-ordered sweep over all mechanisms."""
    idx = scenario.state_index()
    alph = scenario.alphabets
    total = 0.0
    for b in scenario.baseline:
        p = b.prob(path.baseline[b.name], [path.baseline[q] for q in b.parents], alph)
        total += math.log(p * len(b.values)) if p > 0 else NEG_INF
    state = [0.0] * len(idx)
    for k, v in path.baseline.items():
        if k in idx:
            state[idx[k]] = v
    intens = [(m.module, m.absorbing, [(mk.label, mk.intensity.compile(idx)) for mk in m.marks])
              for m in scenario.intensities]
    decisions = sorted((t, s.module, s.probability.compile(idx)) for s in scenario.schedules for t in s.times)
    points = sorted([(e.time, 0, e) for e in path.events] + [(t, 1, (m, f)) for t, m, f in decisions],
                    key=lambda x: (x[0], x[1]))
    last = 0.0

    def rate_sum(t):
        r = 0.0
        for name, absorbing, fs in intens:
            if absorbing and state[idx[name]] >= 1:
                r -= len(fs)
            else:
                r += sum(f(state, t) for _, f in fs) - len(fs)
        return r

    scheduled_now: set[tuple[float, str]] = {(e.time, e.module) for e in path.events}
    for t, kind, item in points:
        total -= rate_sum(last) * (t - last)
        last = t
        if kind == 1:
            module, f = item
            p = f(state, t)
            p_obs = p if (t, module) in scheduled_now else 1.0 - p
            total += math.log(2.0 * p_obs) if p_obs > 0 else NEG_INF
        else:
            e = item
            if not scenario.is_scheduled(e.module):
                spec = next(x for x in intens if x[0] == e.module)
                lam = 0.0 if (spec[1] and state[idx[e.module]] >= 1) else dict(
                    (lab, f(state, t)) for lab, f in spec[2])[e.mark]
                total += math.log(lam) if lam > 0 else NEG_INF
            state[idx[e.module]] += e.delta
    total -= rate_sum(last) * (scenario.horizon - last)
    return total


@dataclass
class FactorizationResult:
    ok: bool
    max_discrepancy: float
    discrepancies: dict[str, float]


def factorization_check(path: Path, scenario: ScenarioSpec, theta: InterventionSpec,
                        graph: LocalIndependenceGraph, tol: float = 1e-10) -> FactorizationResult:
    """Compare cl(V)-restricted factors with full-history factors.

    Covers the likelihood factors of every variable and the weight factors of
    the intervened ones, and checks the factors sum to independently computed
    totals.
    """
    disc: dict[str, float] = {}

    def diff(a: float, b: float) -> float:
        if a == b:
            return 0.0
        if math.isnan(a) or math.isnan(b) or math.isinf(a) or math.isinf(b):
            return math.inf
        return abs(a - b)

    names = list(scenario.variables) + list(scenario.modules)
    masks = {v: set(closure(graph, v)) if v in graph.nodes else {v} for v in names}
    full = _likelihood_factors(path, scenario, None)
    restricted = _likelihood_factors(path, scenario, masks)
    for v in names:
        disc[f"likelihood:{v}"] = diff(full[v], restricted[v])
    summed = math.fsum(full[v] for v in sorted(names)) if all(
        not math.isinf(full[v]) for v in names) else sum(full[v] for v in sorted(names))
    disc["likelihood:total"] = diff(summed, _total_log_likelihood(path, scenario))

    model = WeightModel(scenario, theta)
    wmasks = {}
    for v in model.names:
        rule = theta.baseline.get(v) or theta.schedules.get(v)
        wmasks[v] = masks.get(v, {v}) | set(rule.reads)
    wfull = model.log_increments(path)
    wres = model.log_increments(path, wmasks)
    total_fn = model.trajectory(path).total
    summed_fn = StepFunction.constant(0.0)
    for v in model.names:
        i0, ts, ss = wfull[v]
        r0, rts, rss = wres[v]
        d = diff(i0, r0)
        for a, b in zip(ss, rss):
            d = max(d, diff(a, b))
        disc[f"weight:{v}"] = d
        summed_fn = summed_fn + _sum_increments(ts, ss, i0)
    grid = np.union1d(total_fn.jump_times, [0.0, scenario.horizon])
    a, b = np.asarray(total_fn(grid)), np.asarray(summed_fn(grid))
    disc["weight:total"] = max((diff(float(x), float(y)) for x, y in zip(a, b)), default=0.0)
    worst = max(disc.values()) if disc else 0.0
    return FactorizationResult(worst <= tol, worst, disc)
