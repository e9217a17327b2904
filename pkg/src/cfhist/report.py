"""Figures and tidy CSV writers for study outputs."""

from __future__ import annotations

import csv
from pathlib import Path as FsPath
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .events import StepFunction  # noqa: E402

PNG_META = {"Software": None}


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return "" if x is None else str(x)


def write_rows(path: FsPath, header: Sequence[str], rows: Iterable[Sequence]) -> FsPath:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def step_rows(name: str, f: StepFunction, flagged: Iterable[float] = ()) -> list[tuple]:
    """Long-format rows ``t,coefficient,value,flag``, one per jump plus t=0."""
    flagged = set(float(t) for t in flagged)
    rows = [(0.0, name, f.initial_value, "")]
    for t, v in zip(f.jump_times, f.values):
        rows.append((float(t), name, float(v), "skipped" if float(t) in flagged else ""))
    for t in flagged - set(f.jump_times.tolist()):
        rows.append((t, name, float(f(t)), "skipped"))
    return sorted(rows, key=lambda r: r[0])


def _steps(ax, f: StepFunction, t_max: float, **kw):
    t = np.concatenate([[0.0], f.jump_times, [t_max]])
    v = np.concatenate([[f.initial_value], f.values, [f.final()]])
    ax.step(t, v, where="post", **kw)


def plot_gamma(path: FsPath, gamma0: StepFunction, gammaA: StepFunction, grid: np.ndarray,
               oracle0: np.ndarray, oracleA: np.ndarray, horizon: float) -> FsPath:
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6), sharex=True)
    for ax, est, orc, title in ((axes[0], gamma0, oracle0, "Gamma0"), (axes[1], gammaA, oracleA, "GammaA")):
        _steps(ax, est, horizon, label="estimate", color="C0")
        ax.plot(grid, orc, label="oracle", color="k", lw=1, ls="--")
        ax.set_title(title)
        ax.set_xlabel("t")
    axes[0].legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=PNG_META)
    plt.close(fig)
    return path


def plot_survival(path: FsPath, curves: dict[str, StepFunction], oracles: dict[str, tuple[np.ndarray, np.ndarray]],
                  horizon: float) -> FsPath:
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for k, (name, s) in enumerate(curves.items()):
        _steps(ax, s, horizon, label=f"{name} estimate", color=f"C{k}")
        if name in oracles:
            g, v = oracles[name]
            ax.plot(g, v, color=f"C{k}", ls="--", lw=1, label=f"{name} oracle")
    ax.set_xlabel("t")
    ax.set_ylabel("counterfactual survival")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=PNG_META)
    plt.close(fig)
    return path


def plot_weights(path: FsPath, series: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]) -> FsPath:
    fig, ax = plt.subplots(figsize=(5, 3.6))
    for k, (name, (g, m, se)) in enumerate(series.items()):
        ax.errorbar(g, m, yerr=3 * se, fmt="o-", ms=3, lw=1, capsize=2, color=f"C{k}", label=name)
    ax.axhline(1.0, color="k", lw=0.8, ls=":")
    ax.set_xlabel("t")
    ax.set_ylabel("mean weight (3 SE bars)")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=PNG_META)
    plt.close(fig)
    return path
