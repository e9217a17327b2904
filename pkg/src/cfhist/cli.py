"""Command-line entry point: ``cfhist <subcommand> ...``.

Exit status is 0 on success, 1 on a validation error and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path as FsPath
from typing import Sequence

import yaml

from . import report
from .estimators import aalen_fit, counterfactual_hazard, hazard_to_survival, sequential_g_fit
from .events import read_cohort, write_cohort
from .expr import Expression
from .graph import GraphError, parse_graph, validate_dependencies
from .identify import (IdentificationError, gformula_direct_effect, load_joint_model, marginal_probability,
                       observed_tables, truncated_factorization_oracle)
from .scenario import ScenarioError, load_intervention, load_scenario
from .simulate import simulate_cohort, simulate_counterfactual
from .study import replicate_study
from .weights import WeightModel, positivity_check


class ValidationError(Exception):
    pass


def _cohort(args, scenario=None):
    return read_cohort(args.cohort, scenario=scenario)


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.intervene:
        theta = load_intervention(args.intervene)
        cohort = simulate_counterfactual(scenario, theta, args.n, args.seed, args.threads)
    else:
        cohort = simulate_cohort(scenario, args.n, args.seed, args.threads)
    ev, base = write_cohort(cohort, args.out)
    print(f"wrote {len(cohort)} paths to {ev} and {base}")
    return 0


def cmd_weights(args) -> int:
    scenario = load_scenario(args.scenario)
    theta = load_intervention(args.intervene)
    cohort = _cohort(args, scenario)
    model = WeightModel(scenario, theta)
    names = model.names
    rows = []
    for path in cohort.paths:
        traj = model.trajectory(path)
        times = sorted({0.0, *traj.total.jump_times.tolist()})
        for t in times:
            rows.append([path.id, t, traj.total(t)] + [traj.modules[m](t) for m in names])
    report.write_rows(FsPath(args.out), ["id", "t", "log_w_total"] + [f"log_w_{m}" for m in names], rows)
    print(f"wrote weight trajectories for {len(cohort)} paths to {args.out}")
    return 0


def cmd_check_positivity(args) -> int:
    scenario = load_scenario(args.scenario)
    theta = load_intervention(args.intervene)
    cohort = _cohort(args, scenario)
    rep = positivity_check(cohort, scenario, theta)
    text = yaml.safe_dump(rep.as_dict(), sort_keys=False, default_flow_style=False)
    _emit(text, args.out)
    return 0 if rep.passed else 1


def cmd_check_graph(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.graph:
        try:
            graph = parse_graph(FsPath(args.graph).read_text(encoding="utf-8"))
        except GraphError as exc:
            raise ValidationError(f"{args.graph}: {exc}") from None
    elif scenario.graph is not None:
        graph = scenario.graph
    else:
        raise ValidationError("scenario has no graph; pass --graph")
    rep = validate_dependencies(graph, scenario)
    lines = rep.lines()
    _emit("".join(line + "\n" for line in lines) or "no violations\n", args.out)
    return 0 if rep.ok else 1


def cmd_estimate_aalen(args) -> int:
    cohort = _cohort(args)
    censoring = None if args.censoring is None else [c for c in args.censoring.split(",") if c]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = aalen_fit(cohort, args.outcome, args.covariates, censoring)
    rows = []
    for lab in fit.covariates:
        rows += report.step_rows(lab, fit.coefficients[lab], fit.skipped)
    report.write_rows(FsPath(args.out), ["t", "coefficient", "value", "flag"], rows)
    print(f"{len(fit.event_times)} event times, {len(fit.skipped)} skipped; wrote {args.out}")
    return 0


def cmd_estimate_gcde(args) -> int:
    scenario = load_scenario(args.scenario) if args.scenario else None
    cohort = _cohort(args, scenario)
    fit = sequential_g_fit(cohort, scenario)
    rows = report.step_rows("gamma0", fit.gamma0, fit.skipped)
    rows += report.step_rows("gammaA", fit.gammaA, fit.skipped)
    rows += report.step_rows("psiK", fit.psiK, fit.stage1.skipped)
    if args.intervene:
        theta = load_intervention(args.intervene)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lam = counterfactual_hazard(fit, theta)
            rows += report.step_rows("lambda", lam)
            rows += report.step_rows("survival", hazard_to_survival(lam))
    report.write_rows(FsPath(args.out), ["t", "coefficient", "value", "flag"], rows)
    print(f"GammaA(T) = {fit.gammaA.final():.6g}; wrote {args.out}")
    return 0


def _load_krule(path: str):
    data = yaml.safe_load(FsPath(path).read_text(encoding="utf-8"))
    if isinstance(data, dict) and "table" in data and isinstance(data["table"], dict):
        return {int(k): int(v) for k, v in data["table"].items()}
    if isinstance(data, dict) and "rule" in data:
        return str(data["rule"])
    raise ValidationError(f"{path}: expected 'rule: <expression in L>' or 'table: {{l: k}}'")


def cmd_gformula(args) -> int:
    model = load_joint_model(args.model)
    krule = _load_krule(args.krule)
    var, _, val = args.h.partition("=")
    if var.strip() != "B" or not val.strip().lstrip("-").isdigit():
        raise ValidationError("--h must have the form B=<value>")
    target = int(val)
    h = {target: 1.0}
    tables = observed_tables(model)
    if isinstance(krule, str):
        expr = Expression(krule)
        if expr.reads - {"L"}:
            raise ValidationError("k-rule may read only L")
        k_of = lambda l: int(expr.evaluate({"L": l}))  # noqa: E731
    else:
        k_of = krule
    value = gformula_direct_effect(tables, args.a, k_of, h)
    out = {"a": args.a, "h": args.h, "gformula": value}
    if args.oracle:
        dist = truncated_factorization_oracle(model, {"A": args.a, "K": krule if isinstance(krule, str)
                                                      else (lambda env: krule[env["L"]])})
        out["oracle"] = marginal_probability(dist, list(model.observed), {"B": target})
    _emit(json.dumps(out, sort_keys=True) + "\n", args.out)
    return 0


def cmd_replicate_study(args) -> int:
    t1 = load_intervention(args.theta1) if args.theta1 else None
    t2 = load_intervention(args.theta2) if args.theta2 else None
    summary = replicate_study(args.n, args.seed, args.out, threads=args.threads, oracle_n=args.oracle_n,
                              bootstrap_reps=args.bootstrap, theta1=t1, theta2=t2, figures=not args.no_figures)
    for name, ok in summary["criteria"].items():
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    print(f"sup |GammaA_hat - GammaA| = {summary['sup_error_gammaA']:.4g}")
    return 0


def _emit(text: str, out: str | None) -> None:
    if out:
        FsPath(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cfhist", description="Counterfactual event-history simulation and estimation.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate a factual or counterfactual cohort")
    s.add_argument("--scenario", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--intervene")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("weights", help="log-weight trajectories per path")
    s.add_argument("--scenario", required=True)
    s.add_argument("--intervene", required=True)
    s.add_argument("--cohort", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_weights)

    s = sub.add_parser("check-positivity", help="positivity diagnostics for an intervention")
    s.add_argument("--scenario", required=True)
    s.add_argument("--intervene", required=True)
    s.add_argument("--cohort", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_check_positivity)

    s = sub.add_parser("check-graph", help="check declared dependencies against a graph")
    s.add_argument("--scenario", required=True)
    s.add_argument("--graph")
    s.add_argument("--out")
    s.set_defaults(func=cmd_check_graph)

    s = sub.add_parser("estimate-aalen", help="Aalen additive hazards fit")
    s.add_argument("--cohort", required=True)
    s.add_argument("--outcome", required=True)
    s.add_argument("--covariates", default="1")
    s.add_argument("--censoring", help="comma-separated censoring modules (default: C if present)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_estimate_aalen)

    s = sub.add_parser("estimate-gcde", help="sequential G-estimator and counterfactual hazard")
    s.add_argument("--cohort", required=True)
    s.add_argument("--intervene")
    s.add_argument("--scenario")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_estimate_gcde)

    s = sub.add_parser("gformula", help="static controlled direct effect by the g-formula")
    s.add_argument("--model", required=True)
    s.add_argument("--a", type=int, required=True)
    s.add_argument("--krule", required=True)
    s.add_argument("--h", default="B=1")
    s.add_argument("--oracle", action="store_true", help="also report the truncated-factorization value")
    s.add_argument("--out")
    s.set_defaults(func=cmd_gformula)

    s = sub.add_parser("replicate-study", help="run the bundled dynamic study end to end")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", default="study_out")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--oracle-n", type=int)
    s.add_argument("--bootstrap", type=int, default=20)
    s.add_argument("--theta1")
    s.add_argument("--theta2")
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_replicate_study)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ValidationError, ScenarioError, GraphError, IdentificationError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
