"""Local independence graphs over modules and time-stamped baseline variables.

Semantics are purely syntactic: a missing arrow ``u -> v`` states that v's
short-term dynamics do not depend on u given the rest.  Graphs may be cyclic;
self-dependence is implicit and never drawn.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping

if TYPE_CHECKING:
    from .scenario import ScenarioSpec

_EDGE = re.compile(r"^\s*([A-Za-z_][\w]*)\s*->\s*([A-Za-z_][\w]*)\s*$")
_NODE = re.compile(r"^\s*node\s+([A-Za-z_][\w]*)\s*(?:t\s*=\s*(\S+))?\s*$")


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class LocalIndependenceGraph:
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]
    timestamps: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "edges", frozenset((u, v) for u, v in self.edges if u != v))
        object.__setattr__(self, "timestamps", dict(self.timestamps))
        unknown = {x for e in self.edges for x in e} - self.nodes
        if unknown:
            raise GraphError(f"edges reference undeclared nodes {sorted(unknown)}")
        if set(self.timestamps) - self.nodes:
            raise GraphError("timestamp given for an undeclared node")

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]], nodes: Iterable[str] = (),
                   timestamps: Mapping[str, float] | None = None) -> "LocalIndependenceGraph":
        edges = list(edges)
        all_nodes = set(nodes) | {x for e in edges for x in e} | set(timestamps or {})
        return cls(frozenset(all_nodes), frozenset(edges), dict(timestamps or {}))

    def _known(self, v: str) -> None:
        if v not in self.nodes:
            raise GraphError(f"unknown node {v!r}")


def parents(graph: LocalIndependenceGraph, v: str) -> frozenset[str]:
    graph._known(v)
    return frozenset(u for u, w in graph.edges if w == v)


def closure(graph: LocalIndependenceGraph, v: str) -> frozenset[str]:
    """cl(v): v together with its parents."""
    return parents(graph, v) | {v}


def is_locally_independent(graph: LocalIndependenceGraph, sources: Iterable[str], target: str) -> bool:
    """True iff no arrow runs from any source into ``target``."""
    sources = set(sources)
    graph._known(target)
    for s in sources:
        graph._known(s)
    return not any((s, target) in graph.edges for s in sources if s != target)


def baseline_order(graph: LocalIndependenceGraph, timestamps: Mapping[str, float] | None = None) -> list[str]:
    """Enumerate time-stamped nodes by increasing time, ties broken by name."""
    stamps = dict(graph.timestamps if timestamps is None else timestamps)
    for v, t in stamps.items():
        graph._known(v)
        if t is None:
            raise GraphError(f"missing timestamp for {v!r}")
    return sorted(stamps, key=lambda v: (stamps[v], v))


@dataclass
class DependencyReport:
    declared: dict[str, frozenset[str]]
    allowed: dict[str, frozenset[str]]
    violations: list[tuple[str, str]]
    missing_nodes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations and not self.missing_nodes

    def lines(self) -> list[str]:
        out = [f"{v} is not a node of the graph" for v in self.missing_nodes]
        out += [f"{v} reads {u} but {u} -> {v} is not in the graph" for v, u in self.violations]
        return out


def validate_dependencies(graph: LocalIndependenceGraph, scenario: "ScenarioSpec") -> DependencyReport:
    """Check every declared dependency set against the graph closure."""
    declared: dict[str, frozenset[str]] = {}
    allowed: dict[str, frozenset[str]] = {}
    violations: list[tuple[str, str]] = []
    missing: list[str] = []
    times = {b.name: b.time for b in scenario.baseline}
    for name, deps in scenario.dependency_sets().items():
        declared[name] = frozenset(deps)
        if name not in graph.nodes:
            missing.append(name)
            allowed[name] = frozenset({name})
            violations.extend((name, u) for u in sorted(deps - {name}))
            continue
        cl = closure(graph, name)
        if name in times:
            # baseline parents must also be strictly earlier
            cl = frozenset(u for u in cl if u == name or (u in times and times[u] < times[name]))
        allowed[name] = cl
        violations.extend((name, u) for u in sorted(deps - cl))
    return DependencyReport(declared, allowed, violations, missing)


def parse_graph(text: str) -> LocalIndependenceGraph:
    nodes: set[str] = set()
    edges: list[tuple[str, str]] = []
    stamps: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _NODE.match(line)
        if m:
            nodes.add(m.group(1))
            if m.group(2) is not None:
                try:
                    stamps[m.group(1)] = float(m.group(2))
                except ValueError:
                    raise GraphError(f"line {lineno}: bad timestamp {m.group(2)!r}") from None
            continue
        m = _EDGE.match(line)
        if m:
            edges.append((m.group(1), m.group(2)))
            continue
        raise GraphError(f"line {lineno}: cannot parse {raw.strip()!r}")
    return LocalIndependenceGraph.from_edges(edges, nodes, stamps)


def format_graph(graph: LocalIndependenceGraph) -> str:
    lines = []
    for v in sorted(graph.nodes):
        if v in graph.timestamps:
            lines.append(f"node {v} t={graph.timestamps[v]!r}")
        else:
            lines.append(f"node {v}")
    lines.extend(f"{u} -> {v}" for u, v in sorted(graph.edges))
    return "\n".join(lines) + "\n"
