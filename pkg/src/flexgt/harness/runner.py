"""Experiment drivers: multi-seed runs, algorithm comparisons and (d1, d2) sweeps.

Work items (algorithm x seed, or grid cell x seed) own their state and may run
on a thread pool sized by ``FLEXGT_THREADS`` (``0`` or unset means one worker
per CPU). Results are always collected and written in canonical order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence, TypeVar

import numpy as np

from .. import engine
from ..analysis import (
    comm_complexity,
    comp_complexity,
    minimize_weighted_cost,
    steady_state,
    steps_to_accuracy,
)
from ..engine import AlgoConfig, Trace
from .config import ConfigError, ExperimentConfig, ResolvedExperiment, algorithm_name, resolve
from .export import export_csv, export_json, export_problem_csv, write_rows
from .svg import render_svg

__all__ = [
    "run_experiment",
    "run_comparison",
    "run_sweep",
    "average_curve",
    "Curve",
    "ComparisonResult",
    "SweepResult",
    "worker_count",
]

T = TypeVar("T")


def worker_count() -> int:
    raw = os.environ.get("FLEXGT_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError([f"FLEXGT_THREADS: not an integer: {raw!r}"]) from None
    if n < 0:
        raise ConfigError(["FLEXGT_THREADS: must be >= 0"])
    return n or (os.cpu_count() or 1)


def _map(fn: Callable[..., T], jobs: Sequence[tuple]) -> list[T]:
    workers = min(worker_count(), len(jobs))
    if workers <= 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def _run_one(res: ResolvedExperiment, algo: AlgoConfig, seed: int, run_id: str) -> Trace:
    trace = engine.run(res.problem.with_seed(seed), algo, res.W)
    trace.run_id = run_id
    trace.fingerprint = res.config.fingerprint()
    return trace


def run_experiment(config: ExperimentConfig, resolved: ResolvedExperiment | None = None) -> list[Trace]:
    """One trace per (algorithm, seed), sorted by run id."""
    res = resolved or resolve(config)
    jobs = []
    for ai, algo in enumerate(res.algos()):
        for si, seed in enumerate(config.seeds):
            jobs.append((res, algo, seed, f"a{ai:02d}-s{si:03d}"))
    return sorted(_map(_run_one, jobs), key=lambda t: t.run_id)


class CurvePoint(NamedTuple):
    round: int
    grad_evals: int
    comm_steps: int
    opt_gap: float


@dataclass
class Curve:
    """Seed-averaged optimality gap; index 0 is the initial state."""

    label: str
    algo: AlgoConfig
    rounds: np.ndarray
    grad_evals: np.ndarray
    comm_steps: np.ndarray
    opt_gap: np.ndarray
    diverged_seeds: int = 0

    def points(self) -> list[CurvePoint]:
        return [CurvePoint(*row) for row in zip(self.rounds, self.grad_evals, self.comm_steps, self.opt_gap)]


def average_curve(traces: Sequence[Trace], label: str | None = None) -> Curve:
    """Arithmetic mean of ``opt_gap`` across seeds, truncated to the shortest trace."""
    if not traces:
        raise ValueError("no traces to average")
    k = min(len(t.metrics) for t in traces)
    rows = [[t.initial] + t.metrics[:k] for t in traces]
    ref = rows[0]
    gap = np.mean([[m.opt_gap for m in r] for r in rows], axis=0)
    algo = traces[0].algo
    return Curve(
        label or algorithm_name(algo.variant, algo.d1, algo.d2),
        algo,
        np.array([m.round for m in ref]),
        np.array([m.grad_evals for m in ref]),
        np.array([m.comm_steps for m in ref]),
        gap,
        sum(t.diverged for t in traces),
    )


def _curve_summary(curve: Curve, eps: float) -> dict:
    diverged = curve.diverged_seeds > 0
    reached = None if diverged else steps_to_accuracy(curve.points(), eps)
    return {
        "algorithm": curve.label,
        "variant": curve.algo.variant,
        "d1": curve.algo.d1,
        "d2": curve.algo.d2,
        "gamma": float(curve.algo.gamma),
        "steady_state_opt_gap": steady_state(curve.opt_gap[1:]) if len(curve.opt_gap) > 1 else float("nan"),
        "final_opt_gap": float(curve.opt_gap[-1]),
        "reached": "reached" if reached else ("diverged" if diverged else "not reached"),
        "rounds_to_eps": reached.rounds if reached else "",
        "grad_evals_to_eps": reached.grad_evals if reached else "",
        "comm_steps_to_eps": reached.comm_steps if reached else "",
        "diverged_seeds": curve.diverged_seeds,
    }


@dataclass
class ComparisonResult:
    traces: list[Trace]
    curves: list[Curve]
    summary: list[dict]
    files: dict[str, Path] = field(default_factory=dict)

    def by_label(self, label: str) -> dict:
        return next(s for s in self.summary if s["algorithm"] == label)


def _out_dir(config: ExperimentConfig, out_dir) -> Path:
    path = Path(out_dir if out_dir is not None else config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def run_comparison(config: ExperimentConfig, out_dir: str | Path | None = None, write: bool = True) -> ComparisonResult:
    """Seed-averaged convergence of every configured algorithm.

    Writes ``runs.csv``, ``comparison.csv`` (averaged curves), ``summary.csv``,
    ``config.json`` and two log-scale charts of the optimality gap against
    gradient evaluations and against gossip steps.
    """
    if len(config.algorithms) < 2:
        raise ConfigError(["algorithms: a comparison needs at least two algorithms"])
    res = resolve(config)
    traces = run_experiment(config, res)
    per_algo = len(config.seeds)
    curves = [average_curve(traces[i : i + per_algo]) for i in range(0, len(traces), per_algo)]
    summary = [_curve_summary(c, config.eps) for c in curves]
    result = ComparisonResult(traces, curves, summary)
    if not write:
        return result

    out = _out_dir(config, out_dir)
    files = result.files
    files["runs"] = export_csv(traces, out / "runs.csv")
    files["config"] = export_json(res, out / "config.json")
    files["problem"] = export_problem_csv(res.problem, out / "problem.csv")
    files["comparison"] = write_rows(
        out / "comparison.csv",
        ["algorithm", "d1", "d2", "round", "grad_evals", "comm_steps", "mean_opt_gap"],
        (
            (c.label, c.algo.d1, c.algo.d2, r, g, s, float(v))
            for c in curves
            for r, g, s, v in zip(c.rounds, c.grad_evals, c.comm_steps, c.opt_gap)
        ),
    )
    files["summary"] = write_rows(out / "summary.csv", list(summary[0]), (list(s.values()) for s in summary))
    for axis, xlabel in (("grad_evals", "gradient evaluations"), ("comm_steps", "communication steps")):
        files[f"plot_{axis}"] = render_svg(
            "lines",
            {
                "series": [(c.label, getattr(c, axis), c.opt_gap) for c in curves],
                "title": f"optimality gap vs {xlabel} ({len(config.seeds)} seeds)",
                "xlabel": xlabel,
                "ylabel": "mean ||xbar - x*||^2",
            },
            out / f"comparison_{axis}.svg",
        )
    return result


@dataclass
class SweepResult:
    """Theory and empirical weighted costs on the ``(d1, d2)`` grid.

    Grids are indexed ``[d1 - 1, d2 - 1]``; empirical cells that never reach
    the target accuracy are NaN and excluded from the argmin.
    """

    theory_grid: np.ndarray
    empirical_grid: np.ndarray
    cells: list[dict]
    theory_argmin: tuple[int, int]
    empirical_argmin: tuple[int, int] | None
    files: dict[str, Path] = field(default_factory=dict)


def _argmin(grid: np.ndarray) -> tuple[int, int] | None:
    if not np.any(np.isfinite(grid)):
        return None
    i, j = np.unravel_index(int(np.nanargmin(grid)), grid.shape)
    return int(i) + 1, int(j) + 1


def run_sweep(
    config: ExperimentConfig,
    d1_max: int,
    d2_max: int,
    out_dir: str | Path | None = None,
    write: bool = True,
) -> SweepResult:
    """Sweep the first configured algorithm over ``[1, d1_max] x [1, d2_max]``.

    The empirical cost of a cell is ``w1 * comm_steps + w2 * grad_evals / n``
    at the first round where the seed-averaged optimality gap stays below
    ``eps``.
    """
    if d1_max < 1 or d2_max < 1:
        raise ConfigError(["sweep grid bounds must be >= 1"])
    res = resolve(config)
    variant = config.algorithms[0].variant
    tradeoff = minimize_weighted_cost(res.theory_params(1, 1), d1_max, d2_max)

    grid_cells = [(d1, d2) for d1 in range(1, d1_max + 1) for d2 in range(1, d2_max + 1)]
    jobs = []
    for d1, d2 in grid_cells:
        algo = res.algo(variant, d1, d2)
        for si, seed in enumerate(config.seeds):
            jobs.append((res, algo, seed, f"c{d1:02d}x{d2:02d}-s{si:03d}"))
    traces = _map(_run_one, jobs)

    per_cell = len(config.seeds)
    w1, w2 = config.weights.w1, config.weights.w2
    n = res.problem.n
    empirical = np.full((d1_max, d2_max), np.nan)
    cells = []
    for idx, (d1, d2) in enumerate(grid_cells):
        curve = average_curve(traces[idx * per_cell : (idx + 1) * per_cell])
        info = _curve_summary(curve, config.eps)
        tp = res.theory_params(d1, d2)
        cost = ""
        if info["reached"] == "reached":
            cost = w1 * info["comm_steps_to_eps"] + w2 * info["grad_evals_to_eps"] / n
            empirical[d1 - 1, d2 - 1] = cost
        cells.append(
            {
                "d1": d1,
                "d2": d2,
                "gamma": info["gamma"],
                "theory_comp": comp_complexity(tp),
                "theory_comm": comm_complexity(tp),
                "theory_cost": float(tradeoff.grid[d1 - 1, d2 - 1]),
                "status": info["reached"],
                "rounds": info["rounds_to_eps"],
                "grad_evals": info["grad_evals_to_eps"],
                "comm_steps": info["comm_steps_to_eps"],
                "empirical_cost": cost,
                "final_opt_gap": info["final_opt_gap"],
                "diverged_seeds": info["diverged_seeds"],
            }
        )
    result = SweepResult(
        tradeoff.grid, empirical, cells, (tradeoff.d1, tradeoff.d2), _argmin(empirical)
    )
    if not write:
        return result

    out = _out_dir(config, out_dir)
    result.files["grid"] = write_rows(out / "sweep.csv", list(cells[0]), (list(c.values()) for c in cells))
    result.files["config"] = export_json(res, out / "config.json")
    result.files["heatmap_theory"] = render_svg(
        "heatmap",
        {"grid": tradeoff.grid, "title": f"theory weighted cost (w1={w1:g}, w2={w2:g})"},
        out / "sweep_theory.svg",
    )
    result.files["heatmap_empirical"] = render_svg(
        "heatmap",
        {"grid": empirical, "title": f"empirical weighted cost to eps={config.eps:g}"},
        out / "sweep_empirical.svg",
    )
    return result
