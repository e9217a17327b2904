"""Generative scenarios (the factual law) and deterministic interventions.

A scenario is a YAML document with sections ``baseline``, ``modules``,
``schedules`` and ``graph``::

    horizon: 1.0
    baseline:
      A: {time: -2.0, values: [0, 1], parents: [], table: [[0.5, 0.5]]}
      L: {time: -1.0, values: [0, 1], parents: [A], table: [[0.8, 0.2], [0.4, 0.6]]}
    modules:
      B: {intensity: "0.2 + 0.3*A + 0.1*K", depends: [A, K], absorbing: true, cap: 2.0}
    schedules:
      K: {times: [0.25, 0.5], probability: "0.3 + 0.2*L", depends: [L]}
    graph:
      nodes: {A: -2.0, L: -1.0, K: null, B: null}
      edges: ["A -> L", "A -> B", "L -> K", "K -> B"]

Table rows are indexed by the parents' values in lexicographic order of the
parent list.  Interventions are YAML too::

    baseline: {A: 1}
    schedules: {K: [1, 0]}      # or an expression such as "L"
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Any, Callable, Mapping, Sequence

import yaml

from .expr import TIME, Expression, ExpressionError
from .graph import GraphError, LocalIndependenceGraph, format_graph, parse_graph

TABLE_TOL = 1e-12


class ScenarioError(ValueError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.message = message
        self.field = field
        self.line = line
        super().__init__(message)

    def __str__(self) -> str:
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.field:
            where.append(self.field)
        return (": ".join(where) + ": " if where else "") + self.message


@dataclass(frozen=True)
class BaselineSpec:
    name: str
    time: float
    values: tuple[int, ...]
    parents: tuple[str, ...]
    table: tuple[tuple[float, ...], ...]
    latent: bool = False

    def row_index(self, parent_values: Sequence[int], alphabets: Mapping[str, Sequence[int]]) -> int:
        idx = 0
        for p, v in zip(self.parents, parent_values):
            alpha = alphabets[p]
            idx = idx * len(alpha) + alpha.index(v)
        return idx

    def distribution(self, parent_values: Sequence[int], alphabets: Mapping[str, Sequence[int]]) -> tuple[float, ...]:
        return self.table[self.row_index(parent_values, alphabets)]

    def prob(self, value: int, parent_values: Sequence[int], alphabets: Mapping[str, Sequence[int]]) -> float:
        return self.distribution(parent_values, alphabets)[self.values.index(value)]


@dataclass(frozen=True)
class MarkSpec:
    label: int
    intensity: Expression
    delta: int = 1


@dataclass(frozen=True)
class IntensitySpec:
    module: str
    marks: tuple[MarkSpec, ...]
    depends: frozenset[str]
    absorbing: bool = False
    cap: float = math.inf

    @property
    def reads(self) -> frozenset[str]:
        out = frozenset().union(*(m.intensity.reads for m in self.marks))
        return out | {self.module} if self.absorbing else out


@dataclass(frozen=True)
class TreatmentSchedule:
    module: str
    times: tuple[float, ...]
    probability: Expression
    depends: frozenset[str]

    @property
    def reads(self) -> frozenset[str]:
        return self.probability.reads


@dataclass(frozen=True)
class ScenarioSpec:
    horizon: float
    baseline: tuple[BaselineSpec, ...]
    intensities: tuple[IntensitySpec, ...] = ()
    schedules: tuple[TreatmentSchedule, ...] = ()
    graph: LocalIndependenceGraph | None = field(default=None, compare=False)
    name: str = ""
    graph_file: str | None = field(default=None, compare=False)

    __hash__ = None  # type: ignore[assignment]

    @property
    def modules(self) -> tuple[str, ...]:
        """Follow-up modules, sorted by id."""
        return tuple(sorted([m.module for m in self.intensities] + [s.module for s in self.schedules]))

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.baseline)

    @property
    def alphabets(self) -> dict[str, tuple[int, ...]]:
        return {b.name: b.values for b in self.baseline}

    def baseline_spec(self, name: str) -> BaselineSpec:
        for b in self.baseline:
            if b.name == name:
                return b
        raise KeyError(name)

    def intensity_spec(self, module: str) -> IntensitySpec:
        for m in self.intensities:
            if m.module == module:
                return m
        raise KeyError(module)

    def schedule(self, module: str) -> TreatmentSchedule:
        for s in self.schedules:
            if s.module == module:
                return s
        raise KeyError(module)

    def is_scheduled(self, module: str) -> bool:
        return any(s.module == module for s in self.schedules)

    def mark_labels(self) -> dict[str, set[int]]:
        out = {m.module: {mk.label for mk in m.marks} for m in self.intensities}
        out.update({s.module: {0} for s in self.schedules})
        return out

    def dependency_sets(self) -> dict[str, frozenset[str]]:
        out = {b.name: frozenset(b.parents) for b in self.baseline}
        out.update({m.module: m.depends for m in self.intensities})
        out.update({s.module: s.depends for s in self.schedules})
        return out

    def state_index(self) -> dict[str, int]:
        names = list(self.variables) + list(self.modules)
        return {n: i for i, n in enumerate(names)}

    def schedule_times(self) -> list[tuple[float, str]]:
        return sorted((t, s.module) for s in self.schedules for t in s.times)

    @property
    def digest(self) -> str:
        return hashlib.sha256(print_scenario(self).encode()).hexdigest()[:16]


# -- YAML helpers ---------------------------------------------------------


def _line_of(node: yaml.Node | None, path: str) -> int | None:
    if node is None:
        return None
    cur = node
    best = cur.start_mark.line + 1
    for part in path.split("."):
        nxt = None
        if isinstance(cur, yaml.MappingNode):
            for k, v in cur.value:
                if str(k.value) == part:
                    nxt = v
                    best = k.start_mark.line + 1
                    break
        elif isinstance(cur, yaml.SequenceNode) and part.isdigit() and int(part) < len(cur.value):
            nxt = cur.value[int(part)]
            best = nxt.start_mark.line + 1
        if nxt is None:
            break
        cur = nxt
    return best


def _load_yaml(text: str) -> tuple[Any, yaml.Node | None]:
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ScenarioError(f"parse error: {getattr(exc, 'problem', exc)}", line=line) from None
    return data, node


def _expr(value: Any, field_: str) -> Expression:
    if isinstance(value, bool) or value is None:
        raise ScenarioError("expected an expression", field_)
    try:
        return Expression(str(value))
    except ExpressionError as exc:
        raise ScenarioError(str(exc), field_) from None


def _mapping(value: Any, field_: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ScenarioError("expected a mapping", field_)
    return value


def _names(value: Any, field_: str) -> tuple[str, ...]:
    if value is None:
        return ()
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ScenarioError("expected a list of identifiers", field_)
    return tuple(value)


def _float(value: Any, field_: str) -> float:
    if isinstance(value, bool):
        raise ScenarioError("expected a number", field_)
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ScenarioError("expected a number", field_) from None
    if math.isnan(out):
        raise ScenarioError("NaN not allowed", field_)
    return out


_BASELINE_KEYS = {"time", "values", "parents", "table", "latent"}


def parse_baseline_block(items: dict, section: str) -> tuple[BaselineSpec, ...]:
    """Parse a mapping of baseline variables (shared by scenario and joint-model files)."""
    specs: dict[str, BaselineSpec] = {}
    raw = {}
    for name, body in items.items():
        f = f"{section}.{name}"
        body = _mapping(body, f)
        extra = set(body) - _BASELINE_KEYS
        if extra:
            raise ScenarioError(f"unknown keys {sorted(extra)}", f)
        if "time" not in body:
            raise ScenarioError("missing timestamp", f"{f}.time")
        values = body.get("values", [0, 1])
        if not isinstance(values, list) or not values or not all(isinstance(v, int) and not isinstance(v, bool) for v in values):
            raise ScenarioError("values must be a non-empty list of integers", f"{f}.values")
        if len(set(values)) != len(values):
            raise ScenarioError("duplicate values", f"{f}.values")
        raw[name] = (_float(body["time"], f"{f}.time"), tuple(values),
                     _names(body.get("parents"), f"{f}.parents"), body.get("table"), bool(body.get("latent", False)))
    for name, (time, values, parents, table, latent) in raw.items():
        f = f"{section}.{name}"
        for p in parents:
            if p not in raw:
                raise ScenarioError(f"unknown parent {p!r}", f"{f}.parents")
            if not raw[p][0] < time:
                raise ScenarioError(f"parent {p!r} is not strictly earlier", f"{f}.parents")
        n_rows = math.prod(len(raw[p][1]) for p in parents)
        if not isinstance(table, list) or len(table) != n_rows:
            raise ScenarioError(f"table needs {n_rows} rows", f"{f}.table")
        rows = []
        for i, row in enumerate(table):
            if not isinstance(row, list) or len(row) != len(values):
                raise ScenarioError(f"row {i} needs {len(values)} entries", f"{f}.table")
            row = tuple(_float(x, f"{f}.table") for x in row)
            if any(x < 0 for x in row):
                raise ScenarioError(f"table {name}: negative probability in row {i}", f"{f}.table")
            if abs(math.fsum(row) - 1.0) > TABLE_TOL:
                raise ScenarioError(f"table {name}: row {i} sums to {math.fsum(row)!r}, not 1", f"{f}.table")
            rows.append(row)
        specs[name] = BaselineSpec(name, time, values, parents, tuple(rows), latent)
    return tuple(sorted(specs.values(), key=lambda b: (b.time, b.name)))


def _parse_graph_section(g: Any, base_dir: FsPath | None) -> tuple[LocalIndependenceGraph | None, str | None]:
    if g is None:
        return None, None
    g = _mapping(g, "graph")
    try:
        if "file" in g:
            path = FsPath(g["file"])
            if not path.is_absolute() and base_dir is not None:
                path = base_dir / path
            try:
                text = path.read_text(encoding="utf-8")
            except OSError:
                raise ScenarioError(f"cannot read graph file {str(path)!r}", "graph.file") from None
            return parse_graph(text), str(g["file"])
        nodes = _mapping(g.get("nodes"), "graph.nodes")
        edges = []
        for i, e in enumerate(g.get("edges") or []):
            parts = [x.strip() for x in str(e).split("->")]
            if len(parts) != 2 or not all(parts):
                raise ScenarioError(f"bad edge {e!r}", f"graph.edges.{i}")
            edges.append((parts[0], parts[1]))
        stamps = {k: float(v) for k, v in nodes.items() if v is not None}
        return LocalIndependenceGraph.from_edges(edges, nodes, stamps), None
    except GraphError as exc:
        raise ScenarioError(str(exc), "graph") from None


def _build_scenario(data: Any, base_dir: FsPath | None) -> ScenarioSpec:
    data = _mapping(data, "document")
    extra = set(data) - {"name", "horizon", "baseline", "modules", "schedules", "graph"}
    if extra:
        raise ScenarioError(f"unknown sections {sorted(extra)}")
    if "horizon" not in data:
        raise ScenarioError("missing horizon", "horizon")
    horizon = _float(data["horizon"], "horizon")
    if not (0 < horizon < math.inf):
        raise ScenarioError("horizon must be positive and finite", "horizon")
    base_items = _mapping(data.get("baseline"), "baseline")
    mod_items = _mapping(data.get("modules"), "modules")
    sched_items = _mapping(data.get("schedules"), "schedules")
    if not base_items and not mod_items and not sched_items:
        raise ScenarioError("no modules")
    for name in list(base_items) + list(mod_items) + list(sched_items):
        if not isinstance(name, str) or not name.isidentifier() or name == TIME:
            raise ScenarioError(f"invalid identifier {name!r}")
    dup = (set(base_items) & set(mod_items)) | (set(base_items) & set(sched_items)) | (set(mod_items) & set(sched_items))
    if dup:
        raise ScenarioError(f"identifier declared twice: {sorted(dup)}")
    baseline = parse_baseline_block(base_items, "baseline")
    known = set(base_items) | set(mod_items) | set(sched_items)

    def deps_of(body, f, own):
        deps = frozenset(_names(body.get("depends"), f"{f}.depends"))
        unknown = deps - known
        if unknown:
            raise ScenarioError(f"unknown dependencies {sorted(unknown)}", f"{f}.depends")
        return deps

    intensities = []
    for name, body in sorted(mod_items.items()):
        f = f"modules.{name}"
        body = _mapping(body, f)
        extra = set(body) - {"intensity", "marks", "depends", "absorbing", "cap", "delta"}
        if extra:
            raise ScenarioError(f"unknown keys {sorted(extra)}", f)
        if ("intensity" in body) == ("marks" in body):
            raise ScenarioError("give exactly one of intensity or marks", f)
        if "intensity" in body:
            marks = [MarkSpec(0, _expr(body["intensity"], f"{f}.intensity"), int(body.get("delta", 1)))]
        else:
            marks = []
            for label, mb in sorted(_mapping(body["marks"], f"{f}.marks").items()):
                mf = f"{f}.marks.{label}"
                if not isinstance(label, int):
                    raise ScenarioError("mark labels must be integers", mf)
                mb = mb if isinstance(mb, dict) else {"intensity": mb}
                marks.append(MarkSpec(label, _expr(mb.get("intensity"), f"{mf}.intensity"), int(mb.get("delta", 1))))
        deps = deps_of(body, f, name)
        spec = IntensitySpec(name, tuple(marks), deps, bool(body.get("absorbing", False)),
                             _float(body.get("cap", math.inf), f"{f}.cap"))
        for mk in marks:
            if TIME in mk.intensity.names:
                raise ScenarioError("intensities are piecewise constant in state and may not read t", f"{f}.intensity")
            undeclared = mk.intensity.reads - deps - {name}
            if undeclared:
                raise ScenarioError(f"intensity reads undeclared {sorted(undeclared)}", f"{f}.intensity")
            if mk.delta == 0:
                raise ScenarioError("delta must be a nonzero integer", f)
        intensities.append(spec)

    schedules = []
    all_times: dict[float, str] = {}
    for name, body in sorted(sched_items.items()):
        f = f"schedules.{name}"
        body = _mapping(body, f)
        extra = set(body) - {"times", "probability", "depends"}
        if extra:
            raise ScenarioError(f"unknown keys {sorted(extra)}", f)
        times = body.get("times")
        if not isinstance(times, list) or not times:
            raise ScenarioError("times must be a non-empty list", f"{f}.times")
        times = tuple(_float(x, f"{f}.times") for x in times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ScenarioError("schedule times must be strictly increasing", f"{f}.times")
        if times[0] <= 0 or times[-1] > horizon:
            raise ScenarioError(f"schedule times must lie in (0, {horizon}]", f"{f}.times")
        for t in times:
            if t in all_times:
                raise ScenarioError(f"time {t} shared with schedule {all_times[t]} (simultaneous jumps)", f"{f}.times")
            all_times[t] = name
        prob = _expr(body.get("probability"), f"{f}.probability")
        deps = deps_of(body, f, name)
        undeclared = prob.reads - deps - {name}
        if undeclared:
            raise ScenarioError(f"probability reads undeclared {sorted(undeclared)}", f"{f}.probability")
        schedules.append(TreatmentSchedule(name, times, prob, deps))

    graph, graph_file = _parse_graph_section(data.get("graph"), base_dir)
    return ScenarioSpec(horizon, baseline, tuple(intensities), tuple(schedules), graph,
                        str(data.get("name", "")), graph_file)


def parse_scenario(text: str, base_dir: str | FsPath | None = None) -> ScenarioSpec:
    """Parse and validate a scenario document."""
    data, node = _load_yaml(text)
    try:
        return _build_scenario(data, FsPath(base_dir) if base_dir is not None else None)
    except ScenarioError as exc:
        if exc.line is None and exc.field:
            exc.line = _line_of(node, exc.field)
        raise


def load_scenario(path: str | FsPath) -> ScenarioSpec:
    path = FsPath(path)
    return parse_scenario(path.read_text(encoding="utf-8"), base_dir=path.parent)


def _num(x: float):
    return int(x) if float(x).is_integer() and abs(x) < 2**53 else float(x)


def baseline_block(baseline: Sequence[BaselineSpec]) -> dict:
    out = {}
    for b in baseline:
        entry = {"time": float(b.time), "values": list(b.values), "parents": list(b.parents),
                 "table": [[float(x) for x in row] for row in b.table]}
        if b.latent:
            entry["latent"] = True
        out[b.name] = entry
    return out


def print_scenario(spec: ScenarioSpec) -> str:
    """Canonical YAML form; ``parse_scenario(print_scenario(s))`` reproduces ``s``."""
    doc: dict[str, Any] = {}
    if spec.name:
        doc["name"] = spec.name
    doc["horizon"] = float(spec.horizon)
    doc["baseline"] = baseline_block(spec.baseline)
    mods = {}
    for m in spec.intensities:
        entry: dict[str, Any] = {}
        if len(m.marks) == 1 and m.marks[0].label == 0:
            entry["intensity"] = m.marks[0].intensity.text
            if m.marks[0].delta != 1:
                entry["delta"] = m.marks[0].delta
        else:
            entry["marks"] = {mk.label: {"intensity": mk.intensity.text, "delta": mk.delta} for mk in m.marks}
        entry["depends"] = sorted(m.depends)
        entry["absorbing"] = m.absorbing
        if m.cap != math.inf:
            entry["cap"] = float(m.cap)
        mods[m.module] = entry
    doc["modules"] = mods
    doc["schedules"] = {
        s.module: {"times": [float(t) for t in s.times], "probability": s.probability.text,
                   "depends": sorted(s.depends)}
        for s in spec.schedules
    }
    if spec.graph is not None:
        if spec.graph_file is not None:
            doc["graph"] = {"file": spec.graph_file}
        else:
            g = spec.graph
            doc["graph"] = {
                "nodes": {v: (float(g.timestamps[v]) if v in g.timestamps else None) for v in sorted(g.nodes)},
                "edges": [f"{u} -> {v}" for u, v in sorted(g.edges)],
            }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=100)


# -- interventions --------------------------------------------------------


@dataclass(frozen=True)
class JumpRule:
    """Deterministic jump decision at each scheduled time of an intervened module.

    Either a fixed 0/1 decision per scheduled time, or an expression over the
    strictly prior non-intervened history (nonzero means jump).
    """

    decisions: tuple[int, ...] | None = None
    expression: Expression | None = None

    def __post_init__(self):
        if (self.decisions is None) == (self.expression is None):
            raise ValueError("give exactly one of decisions or expression")

    @property
    def reads(self) -> frozenset[str]:
        return frozenset() if self.expression is None else self.expression.reads

    @property
    def is_deterministic_trajectory(self) -> bool:
        """True when decisions depend on nothing but the schedule index/time."""
        return self.decisions is not None or not self.expression.reads

    def compile(self, index: Mapping[str, int]) -> Callable[[Sequence[float], float, int], int]:
        if self.decisions is not None:
            dec = self.decisions
            return lambda s, t, i: dec[i]
        f = self.expression.compile(index)
        return lambda s, t, i: 1 if f(s, t) != 0.0 else 0

    def text(self):
        return list(self.decisions) if self.decisions is not None else self.expression.text


@dataclass(frozen=True)
class InterventionSpec:
    baseline: Mapping[str, Expression] = field(default_factory=dict)
    schedules: Mapping[str, JumpRule] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "baseline", dict(sorted(self.baseline.items())))
        object.__setattr__(self, "schedules", dict(sorted(self.schedules.items())))

    __hash__ = None  # type: ignore[assignment]

    @property
    def intervened(self) -> frozenset[str]:
        return frozenset(self.baseline) | frozenset(self.schedules)

    @property
    def is_identity(self) -> bool:
        return not self.intervened

    @property
    def digest(self) -> str:
        return hashlib.sha256(print_intervention(self).encode()).hexdigest()[:16]

    @classmethod
    def identity(cls) -> "InterventionSpec":
        return cls()


def parse_intervention(text: str) -> InterventionSpec:
    data, node = _load_yaml(text)
    try:
        data = _mapping(data, "document")
        extra = set(data) - {"name", "baseline", "schedules"}
        if extra:
            raise ScenarioError(f"unknown sections {sorted(extra)}")
        base = {k: _expr(v, f"baseline.{k}") for k, v in _mapping(data.get("baseline"), "baseline").items()}
        rules = {}
        for k, v in _mapping(data.get("schedules"), "schedules").items():
            if isinstance(v, list):
                if not all(x in (0, 1) and not isinstance(x, float) for x in v):
                    raise ScenarioError("fixed decisions must be 0 or 1", f"schedules.{k}")
                rules[k] = JumpRule(decisions=tuple(int(x) for x in v))
            else:
                rules[k] = JumpRule(expression=_expr(v, f"schedules.{k}"))
        return InterventionSpec(base, rules, str(data.get("name", "")))
    except ScenarioError as exc:
        if exc.line is None and exc.field:
            exc.line = _line_of(node, exc.field)
        raise


def load_intervention(path: str | FsPath) -> InterventionSpec:
    return parse_intervention(FsPath(path).read_text(encoding="utf-8"))


def print_intervention(theta: InterventionSpec) -> str:
    doc: dict[str, Any] = {}
    if theta.name:
        doc["name"] = theta.name
    doc["baseline"] = {k: _num(v.evaluate({})) if v.is_constant else v.text for k, v in theta.baseline.items()}
    doc["schedules"] = {k: r.text() for k, r in theta.schedules.items()}
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=100)


@dataclass
class InterventionReport:
    violations: list[tuple[str, str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, target: str, message: str) -> None:
        self.violations.append((code, target, message))

    def lines(self) -> list[str]:
        return [f"[{c}] {t}: {m}" for c, t, m in self.violations]


def validate_intervention(scenario: ScenarioSpec, theta: InterventionSpec) -> InterventionReport:
    """Check the action axioms for a deterministic intervention.

    (a) rules only for known variables, (b) baseline replacements read only
    strictly earlier non-intervened baselines, (c) jump rules read only the
    non-intervened history, (d) intervened follow-up modules are
    schedule-restricted.
    """
    rep = InterventionReport()
    intervened = theta.intervened
    times = {b.name: b.time for b in scenario.baseline}
    known = set(times) | set(scenario.modules)
    for name, expr in theta.baseline.items():
        if name not in times:
            kind = "not a baseline variable" if name in known else "unknown variable"
            rep.add("a", name, kind)
            continue
        spec = scenario.baseline_spec(name)
        for r in sorted(expr.reads):
            if r not in known:
                rep.add("a", name, f"rule reads unknown {r!r}")
            elif r in intervened:
                rep.add("b", name, f"rule reads intervened {r!r}")
            elif r not in times or not times[r] < times[name]:
                rep.add("b", name, f"rule reads {r!r}, which is not strictly prior")
        if TIME in expr.names:
            rep.add("b", name, "baseline rule may not read t")
        if expr.is_constant and int(expr.evaluate({})) not in spec.values:
            rep.add("a", name, f"enforced value {expr.text} outside alphabet {list(spec.values)}")
    for name, rule in theta.schedules.items():
        if name not in known:
            rep.add("a", name, "unknown module")
            continue
        if not scenario.is_scheduled(name):
            rep.add("d", name, "intervened module is not schedule-restricted")
            continue
        sched = scenario.schedule(name)
        if rule.decisions is not None and len(rule.decisions) != len(sched.times):
            rep.add("a", name, f"{len(rule.decisions)} decisions for {len(sched.times)} scheduled times")
        for r in sorted(rule.reads):
            if r not in known:
                rep.add("a", name, f"rule reads unknown {r!r}")
            elif r in intervened:
                rep.add("c", name, f"rule reads intervened history {r!r}")
    return rep


def alphabet_product(names: Sequence[str], alphabets: Mapping[str, Sequence[int]]):
    return itertools.product(*(alphabets[n] for n in names))
