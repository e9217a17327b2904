"""Event histories: paths, cohorts, step functions and predictable state queries."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import TYPE_CHECKING, Mapping, NamedTuple

import numpy as np

if TYPE_CHECKING:
    from .scenario import ScenarioSpec

FACTUAL = "factual"
EVENT_HEADER = ["id", "time", "module", "mark", "delta"]
BASELINE_HEADER = ["id", "variable", "value"]


class Mark(NamedTuple):
    module: str
    label: int


class Event(NamedTuple):
    time: float
    module: str
    mark: int = 0
    delta: int = 1


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous piecewise-constant function with finitely many jumps.

    ``value(t) = initial_value + sum of jump_sizes at jump_times <= t``.
    Jump sizes may be ``-inf`` when the function carries a log-weight that
    dropped to zero.
    """

    jump_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    jump_sizes: np.ndarray = field(default_factory=lambda: np.zeros(0))
    initial_value: float = 0.0

    def __post_init__(self):
        times = np.asarray(self.jump_times, dtype=float).reshape(-1)
        sizes = np.asarray(self.jump_sizes, dtype=float).reshape(-1)
        if times.shape != sizes.shape:
            raise ValueError("jump_times and jump_sizes must have equal length")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("jump_times must be strictly increasing")
        object.__setattr__(self, "jump_times", times)
        object.__setattr__(self, "jump_sizes", sizes)
        object.__setattr__(self, "initial_value", float(self.initial_value))
        with np.errstate(invalid="ignore"):
            object.__setattr__(self, "_cum", self.initial_value + np.cumsum(sizes))

    @classmethod
    def constant(cls, value: float = 0.0) -> "StepFunction":
        return cls(np.zeros(0), np.zeros(0), value)

    @classmethod
    def from_increments(cls, times, sizes, initial_value: float = 0.0) -> "StepFunction":
        """Build from possibly unsorted increments; increments at equal times are added."""
        times = np.asarray(times, dtype=float).reshape(-1)
        sizes = np.asarray(sizes, dtype=float).reshape(-1)
        if times.size == 0:
            return cls.constant(initial_value)
        order = np.argsort(times, kind="stable")
        times, sizes = times[order], sizes[order]
        uniq, start = np.unique(times, return_index=True)
        summed = np.add.reduceat(sizes, start)
        return cls(uniq, summed, initial_value)

    @property
    def values(self) -> np.ndarray:
        """Function value just after each jump."""
        return self._cum

    def __call__(self, t):
        idx = np.searchsorted(self.jump_times, t, side="right")
        vals = np.concatenate([[self.initial_value], self._cum])
        out = vals[idx]
        return float(out) if np.ndim(out) == 0 else out

    def left_limit(self, t):
        idx = np.searchsorted(self.jump_times, t, side="left")
        vals = np.concatenate([[self.initial_value], self._cum])
        out = vals[idx]
        return float(out) if np.ndim(out) == 0 else out

    def final(self) -> float:
        return float(self._cum[-1]) if self._cum.size else self.initial_value

    def __add__(self, other: "StepFunction") -> "StepFunction":
        times = np.concatenate([self.jump_times, other.jump_times])
        sizes = np.concatenate([self.jump_sizes, other.jump_sizes])
        return StepFunction.from_increments(times, sizes, self.initial_value + other.initial_value)

    def __neg__(self) -> "StepFunction":
        return StepFunction(self.jump_times, -self.jump_sizes, -self.initial_value)

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return self + (-other)

    def scaled(self, c: float) -> "StepFunction":
        return StepFunction(self.jump_times, c * self.jump_sizes, c * self.initial_value)

    def __repr__(self) -> str:
        return (
            f"StepFunction(n_jumps={self.jump_times.size}, "
            f"initial={self.initial_value:g}, final={self.final():g})"
        )


def sup_distance(f: StepFunction, g: StepFunction, t_max: float | None = None) -> float:
    """sup_t |f(t) - g(t)| over [0, t_max]; attained at a jump of f or g."""
    grid = np.union1d(f.jump_times, g.jump_times)
    grid = np.concatenate([[0.0], grid])
    if t_max is not None:
        grid = grid[grid <= t_max]
    return float(np.max(np.abs(np.asarray(f(grid)) - np.asarray(g(grid)))))


@dataclass(frozen=True)
class Path:
    """One individual's baseline values and time-ordered follow-up events.

    ``modules`` is the follow-up alphabet the path was recorded against; a
    module without events is still known to have state ``initial`` (0 unless
    the module also appears in ``baseline``).
    """

    id: int
    baseline: Mapping[str, int]
    events: tuple[Event, ...] = ()
    modules: frozenset[str] = frozenset()
    horizon: float = math.inf

    def __post_init__(self):
        evs = tuple(Event(float(e[0]), str(e[1]), int(e[2]), int(e[3])) for e in self.events)
        if any(evs[i].time > evs[i + 1].time for i in range(len(evs) - 1)):
            evs = tuple(sorted(evs, key=lambda e: e.time))
        object.__setattr__(self, "events", evs)
        object.__setattr__(self, "baseline", dict(self.baseline))
        mods = frozenset(self.modules) | {e.module for e in evs}
        object.__setattr__(self, "modules", mods)

    __hash__ = None  # type: ignore[assignment]

    def module_events(self, module: str) -> list[Event]:
        return [e for e in self.events if e.module == module]

    def event_times(self, module: str) -> list[float]:
        return [e.time for e in self.events if e.module == module]

    def first_time(self, module: str) -> float:
        for e in self.events:
            if e.module == module:
                return e.time
        return math.inf


def _check_known(path: Path, name: str) -> None:
    if name not in path.modules and name not in path.baseline:
        raise KeyError(f"unknown module {name!r} for path {path.id}")


def state_at(path: Path, module: str, t: float, side: str = "right") -> float:
    """V_t (``side="right"``) or the predictable left limit V_{t-} (``side="left"``)."""
    _check_known(path, module)
    if not (0.0 <= t <= path.horizon) or math.isnan(t):
        raise ValueError(f"time {t} outside [0, {path.horizon}]")
    value = path.baseline.get(module, 0)
    if module not in path.modules:
        return float(value)
    if side == "right":
        value += sum(e.delta for e in path.events if e.module == module and e.time <= t)
    elif side == "left":
        value += sum(e.delta for e in path.events if e.module == module and e.time < t)
    else:
        raise ValueError("side must be 'left' or 'right'")
    return float(value)


def counting_process(path: Path, module: str) -> StepFunction:
    """N^V with unit jumps at the module's event times."""
    if module not in path.modules:
        raise KeyError(f"unknown module {module!r} for path {path.id}")
    times = path.event_times(module)
    return StepFunction.from_increments(times, np.ones(len(times)), 0.0)


class Violation(NamedTuple):
    kind: str
    module: str
    time: float
    message: str


def validate_path(path: Path, scenario: "ScenarioSpec") -> list[Violation]:
    """List every contract violation of ``path`` against ``scenario``; never raises."""
    out: list[Violation] = []
    horizon = scenario.horizon
    known = set(scenario.modules)
    marks = scenario.mark_labels()
    schedules = {s.module: set(s.times) for s in scenario.schedules}
    absorbing = {m.module for m in scenario.intensities if m.absorbing}

    for b in scenario.baseline:
        if b.name not in path.baseline:
            if not b.latent:
                out.append(Violation("missing baseline", b.name, 0.0, f"baseline {b.name} missing"))
        elif path.baseline[b.name] not in b.values:
            out.append(
                Violation("bad baseline value", b.name, 0.0,
                          f"{b.name}={path.baseline[b.name]} outside alphabet {list(b.values)}")
            )

    last: dict[str, float] = {}
    count: dict[str, int] = {}
    for i, e in enumerate(path.events):
        if e.module not in known:
            out.append(Violation("unknown module", e.module, e.time, f"unknown module {e.module!r}"))
            continue
        if e.mark not in marks[e.module]:
            out.append(Violation("unknown mark", e.module, e.time, f"mark {e.mark} not in J_{e.module}"))
        if not (0.0 < e.time <= horizon):
            out.append(Violation("out of range", e.module, e.time, f"event at {e.time!r} outside (0, {horizon}]"))
        if i > 0:
            prev = path.events[i - 1]
            if prev.time == e.time and prev.module != e.module:
                out.append(
                    Violation("simultaneous cross-module jump", e.module, e.time,
                              f"{prev.module} and {e.module} both jump at {e.time!r}")
                )
        if e.module in last and e.time <= last[e.module]:
            out.append(Violation("unsorted", e.module, e.time, f"{e.module} events not strictly increasing"))
        if e.module in schedules and e.time not in schedules[e.module]:
            out.append(
                Violation("restricted jump off schedule", e.module, e.time,
                          f"{e.module} may only jump at scheduled times; got {e.time!r}")
            )
        if e.module in absorbing and count.get(e.module, 0) >= 1:
            out.append(Violation("event after absorption", e.module, e.time, f"{e.module} already absorbed"))
        last[e.module] = e.time
        count[e.module] = count.get(e.module, 0) + 1
    return out


@dataclass(frozen=True)
class Cohort:
    paths: tuple[Path, ...]
    scenario_digest: str = ""
    seed: int | None = None
    regime: str = FACTUAL
    horizon: float = math.inf
    modules: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        object.__setattr__(self, "modules", tuple(sorted(self.modules)))

    __hash__ = None  # type: ignore[assignment]

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    @property
    def is_factual(self) -> bool:
        return self.regime == FACTUAL

    def baseline_array(self, variable: str) -> np.ndarray:
        return np.array([p.baseline[variable] for p in self.paths], dtype=float)


def _fmt_time(t: float) -> str:
    return format(t, ".17g")


def baseline_file_for(events_file: str | FsPath) -> FsPath:
    p = FsPath(events_file)
    return p.with_name(p.stem + "_baseline" + p.suffix)


def write_cohort(cohort: Cohort, events_file: str | FsPath) -> tuple[FsPath, FsPath]:
    """Write the event-history CSV and the sibling ``*_baseline.csv``."""
    events_file = FsPath(events_file)
    base_file = baseline_file_for(events_file)
    meta = [
        ("scenario_digest", cohort.scenario_digest),
        ("seed", "" if cohort.seed is None else str(cohort.seed)),
        ("regime", cohort.regime),
        ("horizon", _fmt_time(cohort.horizon)),
        ("modules", ",".join(cohort.modules)),
        ("n", str(len(cohort.paths))),
    ]
    with open(events_file, "w", encoding="utf-8", newline="") as fh:
        for k, v in meta:
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_HEADER)
        for p in cohort.paths:
            for e in p.events:
                w.writerow([p.id, _fmt_time(e.time), e.module, e.mark, e.delta])
    with open(base_file, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BASELINE_HEADER)
        for p in cohort.paths:
            for var, val in p.baseline.items():
                w.writerow([p.id, var, val])
    return events_file, base_file


def _read_rows(fh, header: list[str], name: str) -> tuple[dict[str, str], list[list[str]]]:
    meta: dict[str, str] = {}
    lines = []
    for line in fh:
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key.strip()] = val.strip()
        else:
            lines.append(line)
    rows = list(csv.reader(lines))
    if not rows or [c.strip() for c in rows[0]] != header:
        raise ValueError(f"{name}: expected header {','.join(header)}")
    return meta, rows[1:]


def read_cohort(events_file: str | FsPath, baseline_file: str | FsPath | None = None,
                scenario: "ScenarioSpec | None" = None) -> Cohort:
    """Read a cohort; cross-module ties and other violations are rejected."""
    events_file = FsPath(events_file)
    baseline_file = FsPath(baseline_file) if baseline_file else baseline_file_for(events_file)
    with open(events_file, encoding="utf-8", newline="") as fh:
        meta, rows = _read_rows(fh, EVENT_HEADER, str(events_file))
    events: dict[int, list[Event]] = {}
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        try:
            pid = int(row[0])
            ev = Event(float(row[1]), row[2], int(row[3]), int(row[4]))
        except (ValueError, IndexError):
            raise ValueError(f"{events_file}: malformed row {row!r}") from None
        events.setdefault(pid, []).append(ev)
    baselines: dict[int, dict[str, int]] = {}
    if baseline_file.exists():
        with open(baseline_file, encoding="utf-8", newline="") as fh:
            _, brows = _read_rows(fh, BASELINE_HEADER, str(baseline_file))
        for row in brows:
            if row:
                baselines.setdefault(int(row[0]), {})[row[1]] = int(row[2])
    horizon = float(meta.get("horizon", "inf"))
    if scenario is not None:
        horizon = scenario.horizon
    modules = tuple(m for m in meta.get("modules", "").split(",") if m)
    if scenario is not None:
        modules = tuple(sorted(scenario.modules))
    ids = set(events) | set(baselines)
    if "n" in meta:
        ids |= set(range(int(meta["n"])))
    paths = []
    for pid in sorted(ids):
        evs = events.get(pid, [])
        path = Path(pid, baselines.get(pid, {}), tuple(evs), frozenset(modules), horizon)
        for i in range(len(path.events) - 1):
            a, b = path.events[i], path.events[i + 1]
            if a.time == b.time and a.module != b.module:
                raise ValueError(f"path {pid}: simultaneous cross-module jump at {a.time!r}")
        if scenario is not None:
            bad = validate_path(path, scenario)
            if bad:
                raise ValueError(f"path {pid}: {bad[0].message}")
        paths.append(path)
    seed = meta.get("seed", "")
    return Cohort(
        tuple(paths),
        scenario_digest=meta.get("scenario_digest", ""),
        seed=int(seed) if seed else None,
        regime=meta.get("regime", FACTUAL),
        horizon=horizon,
        modules=modules,
    )

