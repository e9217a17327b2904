"""Identification at baseline: the g-formula for a controlled direct effect and
a brute-force truncated-factorization oracle over the full joint (latent
variables included).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np
import yaml

from .events import Cohort
from .expr import Expression
from .scenario import (BaselineSpec, InterventionSpec, ScenarioError, ScenarioSpec, baseline_block,
                       parse_baseline_block)

MAX_CELLS = 10**6
MASS_TOL = 1e-12


class IdentificationError(ValueError):
    pass


@dataclass(frozen=True)
class ConditionalTable:
    """P(variable | parents), one distribution per parent-value tuple."""

    variable: str
    parents: tuple[str, ...]
    values: tuple[int, ...]
    rows: Mapping[tuple[int, ...], tuple[float, ...]]
    counts: Mapping[tuple[int, ...], float] = field(default_factory=dict)
    latent: frozenset[str] = frozenset()

    @property
    def empty_cells(self) -> list[tuple[int, ...]]:
        """Parent configurations with zero observed (or exact) mass."""
        return [k for k, c in self.counts.items() if c == 0]

    def prob(self, value: int, parent_values: Sequence[int]) -> float:
        key = tuple(parent_values)
        if key in self.counts and self.counts[key] == 0:
            cell = ", ".join(f"{p}={v}" for p, v in zip(self.parents, key))
            raise IdentificationError(f"P({self.variable} | {cell}) undefined: cell has zero mass")
        return self.rows[key][self.values.index(value)]


@dataclass(frozen=True)
class JointModel:
    """Variables in timestamp order, each with a conditional table given strictly earlier parents."""

    variables: tuple[BaselineSpec, ...]

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise IdentificationError("duplicate variables")
        seen: set[str] = set()
        for v in self.variables:
            missing = set(v.parents) - seen
            if missing:
                raise IdentificationError(f"{v.name}: parents {sorted(missing)} do not precede it")
            seen.add(v.name)

    __hash__ = None  # type: ignore[assignment]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def latent(self) -> frozenset[str]:
        return frozenset(v.name for v in self.variables if v.latent)

    @property
    def observed(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if not v.latent)

    @property
    def alphabets(self) -> dict[str, tuple[int, ...]]:
        return {v.name: v.values for v in self.variables}

    def spec(self, name: str) -> BaselineSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise IdentificationError(f"unknown variable {name!r}")

    @property
    def size(self) -> int:
        return math.prod(len(v.values) for v in self.variables)

    def joint(self, order: Sequence[str] | None = None) -> dict[tuple[int, ...], float]:
        """Full joint over ``names`` by enumeration."""
        return _enumerate(self, {}, order)

    def to_scenario(self, horizon: float = 1.0) -> ScenarioSpec:
        return ScenarioSpec(horizon, tuple(sorted(self.variables, key=lambda b: (b.time, b.name))))


def parse_joint_model(text: str) -> JointModel:
    """YAML document ``variables: {NAME: {time, values, parents, table, latent}}``."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"parse error: {exc}") from None
    if not isinstance(data, dict) or not isinstance(data.get("variables"), dict) or not data["variables"]:
        raise ScenarioError("expected a non-empty 'variables' mapping")
    extra = set(data) - {"variables", "name"}
    if extra:
        raise ScenarioError(f"unknown sections {sorted(extra)}")
    return JointModel(parse_baseline_block(data["variables"], "variables"))


def load_joint_model(path: str | FsPath) -> JointModel:
    return parse_joint_model(FsPath(path).read_text(encoding="utf-8"))


def print_joint_model(model: JointModel) -> str:
    return yaml.safe_dump({"variables": baseline_block(model.variables)}, sort_keys=False,
                          default_flow_style=None, width=100)


# -- enumeration -----------------------------------------------------------


def _check_order(model: JointModel, order: Sequence[str]) -> list[BaselineSpec]:
    if sorted(order) != sorted(model.names):
        raise IdentificationError("order must list every variable exactly once")
    pos = {v: i for i, v in enumerate(order)}
    specs = [model.spec(v) for v in order]
    for s in specs:
        for p in s.parents:
            if pos[p] > pos[s.name]:
                raise IdentificationError(f"order places {s.name} before its parent {p}")
    return specs


def _enumerate(model: JointModel, replace: Mapping[str, Callable[[dict], int]],
               order: Sequence[str] | None) -> dict[tuple[int, ...], float]:
    if model.size > MAX_CELLS:
        raise IdentificationError(f"cell-space too large ({model.size} > {MAX_CELLS})")
    specs = _check_order(model, order) if order is not None else list(model.variables)
    names = model.names
    alph = model.alphabets
    out: dict[tuple[int, ...], float] = {}
    env: dict[str, int] = {}

    def rec(k: int, pr: float) -> None:
        if k == len(specs):
            key = tuple(env[n] for n in names)
            out[key] = out.get(key, 0.0) + pr
            return
        s = specs[k]
        if s.name in replace:
            forced = replace[s.name](env)
            for v in s.values:
                if v == forced:
                    env[s.name] = v
                    rec(k + 1, pr)
            env.pop(s.name, None)
            return
        dist = s.distribution([env[p] for p in s.parents], alph)
        for v, q in zip(s.values, dist):
            if q > 0.0:
                env[s.name] = v
                rec(k + 1, pr * q)
        env.pop(s.name, None)

    rec(0, 1.0)
    return out


def timestamp_orders(model: JointModel, limit: int = 10**5) -> Iterator[tuple[str, ...]]:
    """Every enumeration order in which each variable follows its parents."""
    parents = {v.name: set(v.parents) for v in model.variables}
    names = sorted(model.names)
    count = 0

    def rec(prefix: list[str], placed: set[str]):
        nonlocal count
        if len(prefix) == len(names):
            count += 1
            if count > limit:
                raise IdentificationError("too many orders")
            yield tuple(prefix)
            return
        for v in names:
            if v not in placed and parents[v] <= placed:
                prefix.append(v)
                placed.add(v)
                yield from rec(prefix, placed)
                placed.discard(v)
                prefix.pop()

    yield from rec([], set())


def _rule(value: int | str | Expression | Callable[[dict], int]) -> tuple[Callable[[dict], int], frozenset[str]]:
    if callable(value) and not isinstance(value, Expression):
        return value, frozenset()
    expr = value if isinstance(value, Expression) else Expression(str(value))
    return (lambda env: int(expr.evaluate(env))), expr.reads


def truncated_factorization_oracle(full: JointModel, theta: InterventionSpec | Mapping[str, object],
                                   order: Sequence[str] | None = None) -> dict[tuple[int, ...], float]:
    """Counterfactual law of the observed variables under a deterministic regime.

    Factors of intervened variables become point masses at the enforced
    values; every other factor (latent ones included) is kept, and latents are
    summed out.  Keys are tuples over ``full.observed``.
    """
    rules = dict(theta.baseline) if isinstance(theta, InterventionSpec) else dict(theta)
    replace: dict[str, Callable[[dict], int]] = {}
    for name, r in rules.items():
        spec = full.spec(name)
        fn, reads = _rule(r)
        for q in reads:
            if q not in full.names:
                raise IdentificationError(f"rule for {name} reads unknown {q!r}")
            if q in rules or full.spec(q).time >= spec.time or q in full.latent:
                raise IdentificationError(f"rule for {name} may not read {q!r}")
        replace[name] = fn
    cells = _enumerate(full, replace, order)
    total = math.fsum(cells.values())
    if abs(total - 1.0) > MASS_TOL:
        raise IdentificationError(f"counterfactual mass is {total!r}; enforced values fall outside an alphabet")
    obs_pos = [i for i, n in enumerate(full.names) if n not in full.latent]
    out: dict[tuple[int, ...], float] = {}
    for key in sorted(cells):
        k = tuple(key[i] for i in obs_pos)
        out[k] = out.get(k, 0.0) + cells[key]
    return out


def marginal_probability(dist: Mapping[tuple[int, ...], float], names: Sequence[str], event: Mapping[str, int]) -> float:
    pos = [names.index(k) for k in event]
    vals = list(event.values())
    return math.fsum(p for key, p in dist.items() if all(key[i] == v for i, v in zip(pos, vals)))


# -- tables ----------------------------------------------------------------


def fit_tables(source: Cohort | JointModel, variable: str, parents: Sequence[str],
               alphabets: Mapping[str, Sequence[int]] | None = None) -> ConditionalTable:
    """Empirical conditional frequencies from a cohort, or exact conditionals from a joint model."""
    parents = tuple(parents)
    if isinstance(source, JointModel):
        alph = source.alphabets
        for v in (variable, *parents):
            source.spec(v)
        names = source.names
        joint = source.joint()
        pi = [names.index(p) for p in parents]
        vi = names.index(variable)
        mass: dict[tuple, dict[int, float]] = {}
        for key, pr in sorted(joint.items()):
            pk = tuple(key[i] for i in pi)
            mass.setdefault(pk, {}).setdefault(key[vi], []).append(pr)
        latent = frozenset(x for x in (variable, *parents) if x in source.latent)
    else:
        if not source.paths or variable not in source.paths[0].baseline:
            raise IdentificationError(f"unknown variable {variable!r}")
        for p in parents:
            if p not in source.paths[0].baseline:
                raise IdentificationError(f"unknown variable {p!r}")
        obs = {}
        for x in (variable, *parents):
            obs[x] = sorted({int(p.baseline[x]) for p in source.paths})
        alph = dict(obs)
        if alphabets:
            alph.update({k: tuple(v) for k, v in alphabets.items()})
        mass = {}
        for path in source.paths:
            pk = tuple(int(path.baseline[p]) for p in parents)
            mass.setdefault(pk, {}).setdefault(int(path.baseline[variable]), []).append(1.0)
        latent = frozenset()
    values = tuple(alph[variable])
    rows: dict[tuple[int, ...], tuple[float, ...]] = {}
    counts: dict[tuple[int, ...], float] = {}
    for pk in itertools.product(*(alph[p] for p in parents)):
        cell = mass.get(pk, {})
        per = [math.fsum(cell.get(v, [])) for v in values]
        tot = math.fsum(per)
        counts[pk] = tot
        rows[pk] = tuple(x / tot for x in per) if tot > 0 else tuple(math.nan for _ in values)
    return ConditionalTable(variable, parents, values, rows, counts, latent)


def _as_rule(k_rule) -> Callable[[int], int]:
    if isinstance(k_rule, Mapping):
        return lambda l: int(k_rule[l])
    if callable(k_rule):
        return k_rule
    return lambda l: int(k_rule)


def _as_h(h) -> Callable[[int], float]:
    if isinstance(h, Mapping):
        return lambda b: float(h.get(b, 0.0))
    return h


def gformula_direct_effect(tables: Mapping[str, ConditionalTable], a: int, k_rule, h=None,
                           treatment: str = "A", covariate: str = "L", mediator: str = "K",
                           outcome: str = "B") -> float:
    """sum_l P(l | A=a) sum_b h(b) P(b | A=a, L=l, K=k_rule(l)).

    ``tables`` holds P(L | A) and P(B | A, L, K) under the keys ``covariate``
    and ``outcome``.  ``k_rule`` is a constant, a mapping or a function of l;
    ``h`` defaults to the indicator of B=1.
    """
    tl, tb = tables[covariate], tables[outcome]
    for t in (tl, tb):
        if t.latent:
            raise IdentificationError(f"table for {t.variable} involves latent {sorted(t.latent)}")
    if tl.parents != (treatment,) or tb.parents != (treatment, covariate, mediator):
        raise IdentificationError(
            f"need P({covariate} | {treatment}) and P({outcome} | {treatment}, {covariate}, {mediator})")
    k_of = _as_rule(k_rule)
    h_of = _as_h(h) if h is not None else (lambda b: 1.0 if b == 1 else 0.0)
    total = []
    for l in tl.values:
        pl = tl.prob(l, (a,))
        if pl == 0.0:
            continue
        k = k_of(l)
        key = (a, l, k)
        if key not in tb.rows:
            raise IdentificationError(f"cell {treatment}={a}, {covariate}={l}, {mediator}={k} outside alphabets")
        inner = math.fsum(h_of(b) * tb.prob(b, key) for b in tb.values)
        total.append(pl * inner)
    return math.fsum(total)


def relative_direct_risk(tables: Mapping[str, ConditionalTable], a1: int, a2: int, k_rule, **names) -> float:
    num = gformula_direct_effect(tables, a1, k_rule, **names)
    den = gformula_direct_effect(tables, a2, k_rule, **names)
    if den == 0.0:
        raise IdentificationError("relative direct risk undefined: zero denominator")
    return num / den


def observed_tables(model: JointModel | Cohort, treatment: str = "A", covariate: str = "L",
                    mediator: str = "K", outcome: str = "B") -> dict[str, ConditionalTable]:
    return {
        covariate: fit_tables(model, covariate, [treatment]),
        outcome: fit_tables(model, outcome, [treatment, covariate, mediator]),
    }


# -- random confounded models ----------------------------------------------

CONFOUNDED_PARENTS = {"W": (), "A": (), "L": ("A", "W"), "K": ("A", "L"), "B": ("A", "L", "K", "W")}
CONFOUNDED_TIMES = {"W": -5.0, "A": -4.0, "L": -3.0, "K": -2.0, "B": -1.0}


def random_confounded_model(rng: np.random.Generator, low: float = 0.05) -> JointModel:
    """Binary W, A, L, K, B with latent W confounding L and B; probabilities in [low, 1-low]."""
    specs = []
    for name, parents in CONFOUNDED_PARENTS.items():
        rows = []
        for _ in range(2 ** len(parents)):
            p = float(rng.uniform(low, 1.0 - low))
            rows.append((1.0 - p, p))
        specs.append(BaselineSpec(name, CONFOUNDED_TIMES[name], (0, 1), parents, tuple(rows), latent=name == "W"))
    return JointModel(tuple(specs))
