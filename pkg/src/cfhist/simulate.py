"""Exact cohort simulation under the factual law and under an intervention.

Intensities are piecewise constant in state, so follow-up is sampled exactly:
between decision points the waiting time to the next event is exponential in
the total intensity and the event's module/mark is drawn proportionally to
its intensity.  At a scheduled time the restricted module jumps with its
conditional probability (factual) or by the intervention's rule
(counterfactual), evaluated on left limits.

Each individual ``i`` draws from its own Philox stream keyed by ``(seed, i)``,
so outputs do not depend on how individuals are split across workers.  The
factual and counterfactual samplers consume uniforms identically, so an
identity intervention reproduces the factual cohort bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .events import FACTUAL, Cohort, Event, Path
from .expr import TracingState
from .scenario import InterventionSpec, ScenarioSpec, validate_intervention

_BLOCK = 32


class SimulationError(RuntimeError):
    pass


class _Uniforms:
    __slots__ = ("_rng", "_buf", "_pos")

    def __init__(self, seed: int, index: int):
        ss = np.random.SeedSequence(seed, spawn_key=(index,))
        self._rng = np.random.Generator(np.random.Philox(ss))
        self._buf = self._rng.random(_BLOCK).tolist()
        self._pos = 0

    def __call__(self) -> float:
        if self._pos == _BLOCK:
            self._buf = self._rng.random(_BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


@dataclass
class _BaselineStep:
    name: str
    slot: int
    values: tuple[int, ...]
    parent_slots: tuple[int, ...]
    parent_pos: tuple[dict, ...]
    strides: tuple[int, ...]
    cum_rows: tuple[tuple[float, ...], ...]
    replace: object = None


class CompiledScenario:
    """Scenario (and optional intervention) compiled to closures over a state list."""

    def __init__(self, scenario: ScenarioSpec, theta: InterventionSpec | None = None):
        self.scenario = scenario
        self.theta = theta
        self.index = idx = scenario.state_index()
        self.names = list(idx)
        self.nvars = len(idx)
        alph = scenario.alphabets
        self.baseline_steps = []
        for b in scenario.baseline:
            strides = []
            acc = 1
            for p in reversed(b.parents):
                strides.append(acc)
                acc *= len(alph[p])
            cum_rows = tuple(tuple(np.cumsum(row).tolist()) for row in b.table)
            replace = None
            if theta is not None and b.name in theta.baseline:
                replace = theta.baseline[b.name].compile(idx)
            self.baseline_steps.append(_BaselineStep(
                b.name, idx[b.name], b.values, tuple(idx[p] for p in b.parents),
                tuple({v: k for k, v in enumerate(alph[p])} for p in b.parents),
                tuple(reversed(strides)), cum_rows, replace))
        self.intensities = []
        for m in scenario.intensities:
            marks = [(mk.label, mk.intensity.compile(idx), mk.delta) for mk in m.marks]
            self.intensities.append((m.module, idx[m.module], m.absorbing, m.cap, marks))
        self.decisions = []
        for s in scenario.schedules:
            rule = None
            if theta is not None and s.module in theta.schedules:
                rule = theta.schedules[s.module].compile(idx)
            prob = s.probability.compile(idx)
            for i, t in enumerate(s.times):
                self.decisions.append((t, s.module, idx[s.module], prob, rule, i))
        self.decisions.sort(key=lambda d: d[0])
        self.read_slots: dict[str, set[int]] = {}

    # traced reads are attributed to the mechanism being evaluated
    def _reads(self, name: str) -> set[int]:
        return self.read_slots.setdefault(name, set())

    def sample_baseline(self, state: list, u: _Uniforms, tracing: bool) -> dict[str, int]:
        out = {}
        for st in self.baseline_steps:
            if tracing:
                state.reads = self._reads(st.name)
            row = 0
            for slot, pos, stride in zip(st.parent_slots, st.parent_pos, st.strides):
                row += pos[state[slot]] * stride
            x = u()
            if st.replace is not None:
                val = int(st.replace(state, 0.0))
                if val not in st.values:
                    raise SimulationError(f"intervention sets {st.name}={val} outside its alphabet")
            else:
                cum = st.cum_rows[row]
                k = 0
                while k < len(cum) - 1 and x >= cum[k]:
                    k += 1
                val = st.values[k]
            state[st.slot] = val
            out[st.name] = val
        return out

    def simulate_one(self, seed: int, i: int, tracing: bool = False) -> Path:
        horizon = self.scenario.horizon
        u = _Uniforms(seed, i)
        state = TracingState([0] * self.nvars) if tracing else [0] * self.nvars
        baseline = self.sample_baseline(state, u, tracing)
        events: list[Event] = []
        t = 0.0
        intens = self.intensities
        for d in self.decisions + [(horizon, None, None, None, None, None)]:
            td = d[0]
            while True:
                total = 0.0
                rates = []
                for module, slot, absorbing, cap, marks in intens:
                    if tracing:
                        state.reads = self._reads(module)
                    if absorbing and state[slot] >= 1:
                        continue
                    for label, f, delta in marks:
                        r = f(state, t)
                        if not (0.0 <= r <= cap):
                            raise SimulationError(f"intensity of {module} is {r} at t={t} (cap {cap})")
                        if r > 0.0:
                            rates.append((r, module, slot, label, delta))
                            total += r
                if total == 0.0:
                    break
                tn = t - math.log1p(-u()) / total
                x = u() * total
                if tn >= td:
                    break
                if tn == t:
                    continue  # zero waiting time would tie with the previous event
                acc = 0.0
                pick = rates[-1]
                for r in rates:
                    acc += r[0]
                    if x < acc:
                        pick = r
                        break
                _, module, slot, label, delta = pick
                if tracing:
                    state.reads = set()  # bookkeeping, not a mechanism read
                state[slot] += delta
                events.append(Event(tn, module, label, delta))
                t = tn
            if d[1] is None:
                break
            t = td
            _, module, slot, prob, rule, k = d
            if tracing:
                state.reads = self._reads(module)
            p = prob(state, td)
            if not (0.0 <= p <= 1.0):
                raise SimulationError(f"jump probability of {module} is {p} at t={td}")
            x = u()
            jump = (x < p) if rule is None else bool(rule(state, td, k))
            if tracing:
                state.reads = set()
            if jump:
                state[slot] += 1
                events.append(Event(td, module, 0, 1))
        for a, b in zip(events, events[1:]):
            if a.time == b.time:
                raise SimulationError(f"simultaneous jumps of {a.module} and {b.module} at {a.time!r}")
        return Path(i, baseline, tuple(events), frozenset(self.scenario.modules), horizon)

    def traced_reads(self) -> dict[str, set[str]]:
        return {k: {self.names[j] for j in v} for k, v in self.read_slots.items()}


def _chunk(args) -> list:
    scenario, theta, seed, start, stop, fn = args
    comp = CompiledScenario(scenario, theta)
    if fn is None:
        return [comp.simulate_one(seed, i) for i in range(start, stop)]
    return [fn(comp.simulate_one(seed, i)) for i in range(start, stop)]


def _run(scenario: ScenarioSpec, theta: InterventionSpec | None, n: int, seed: int, threads: int,
         fn: Callable[[Path], Any] | None = None) -> list:
    if threads <= 1 or n < 2 * threads:
        return _chunk((scenario, theta, seed, 0, n, fn))
    bounds = np.linspace(0, n, threads * 4 + 1).astype(int)
    jobs = [(scenario, theta, seed, a, b, fn) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(_chunk, jobs))
    return [p for part in parts for p in part]


def simulate_map(scenario: ScenarioSpec, theta: InterventionSpec | None, n: int, seed: int,
                 fn: Callable[[Path], Any], threads: int = 1) -> list:
    """``fn`` applied to each simulated path, without keeping the paths.

    Path ``i`` is the same path ``simulate_cohort`` (theta None) or
    ``simulate_counterfactual`` would produce; ``fn`` must be picklable when
    ``threads > 1``.
    """
    _check_n(n)
    if theta is not None:
        report = validate_intervention(scenario, theta)
        if not report.ok:
            raise ValueError("invalid intervention: " + "; ".join(report.lines()))
    return _run(scenario, theta, int(n), int(seed), threads, fn)


def _check_n(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n <= 0:
        raise ValueError("n must be a positive integer")


def simulate_cohort(scenario: ScenarioSpec, n: int, seed: int, threads: int = 1) -> Cohort:
    """Simulate ``n`` i.i.d. paths under the factual law."""
    _check_n(n)
    paths = _run(scenario, None, int(n), int(seed), threads)
    return Cohort(tuple(paths), scenario.digest, int(seed), FACTUAL, scenario.horizon, scenario.modules)


def simulate_counterfactual(scenario: ScenarioSpec, theta: InterventionSpec, n: int, seed: int,
                            threads: int = 1) -> Cohort:
    """Simulate ``n`` paths under the counterfactual law of ``theta``.

    Non-intervened mechanisms keep their factual functional form, evaluated on
    the counterfactually evolving state.
    """
    _check_n(n)
    report = validate_intervention(scenario, theta)
    if not report.ok:
        raise ValueError("invalid intervention: " + "; ".join(report.lines()))
    paths = _run(scenario, theta, int(n), int(seed), threads)
    return Cohort(tuple(paths), scenario.digest, int(seed), f"counterfactual:{theta.digest}",
                  scenario.horizon, scenario.modules)


def trace_reads(scenario: ScenarioSpec, n: int, seed: int) -> dict[str, set[str]]:
    """Simulate with instrumented state and return, per mechanism, the variables actually read."""
    comp = CompiledScenario(scenario)
    for i in range(n):
        comp.simulate_one(seed, i, tracing=True)
    return comp.traced_reads()


def _state_vector(path: Path, scenario: ScenarioSpec, index: dict[str, int]) -> list:
    state = [0] * len(index)
    for name, val in path.baseline.items():
        if name in index:
            state[index[name]] = val
    return state


def apply_action(path: Path, theta: InterventionSpec, scenario: ScenarioSpec) -> Path:
    """Return theta(path): intervened coordinates replaced, everything else untouched."""
    if theta.is_identity:
        return path
    idx = scenario.state_index()
    state = _state_vector(path, scenario, idx)
    baseline = dict(path.baseline)
    for b in scenario.baseline:
        if b.name in theta.baseline:
            val = int(theta.baseline[b.name].compile(idx)(state, 0.0))
            baseline[b.name] = val
            state[idx[b.name]] = val
    kept = [e for e in path.events if e.module not in theta.schedules]
    new_events: list[Event] = []
    decisions = []
    for s in scenario.schedules:
        if s.module in theta.schedules:
            rule = theta.schedules[s.module].compile(idx)
            decisions.extend((t, s.module, rule, k) for k, t in enumerate(s.times))
    decisions.sort(key=lambda d: d[0])
    j = 0
    for t, module, rule, k in decisions:
        while j < len(kept) and kept[j].time < t:
            e = kept[j]
            state[idx[e.module]] += e.delta
            j += 1
        if rule(state, t, k):
            state[idx[module]] += 1
            new_events.append(Event(t, module, 0, 1))
    events = sorted(kept + new_events, key=lambda e: e.time)
    return Path(path.id, baseline, tuple(events), path.modules, path.horizon)
