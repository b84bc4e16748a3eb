"""CSV and JSON persistence of traces, sweeps and configs."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..engine import Trace
from .config import ExperimentConfig, ResolvedExperiment

__all__ = [
    "TRACE_COLUMNS",
    "ExportError",
    "export_csv",
    "export_json",
    "export_problem_csv",
    "fmt",
    "write_rows",
]

TRACE_COLUMNS = (
    "run_id", "algorithm", "d1", "d2", "gamma", "seed", "round", "grad_evals", "comm_steps",
    "opt_gap", "f_gap", "consensus_err", "tracking_err", "lyapunov", "client_div",
)  # fmt: skip


class ExportError(OSError):
    pass


def fmt(value) -> str:
    """Render floats with 17 significant digits; pass other values through ``str``."""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _trace_rows(traces: Sequence[Trace]):
    for tr in sorted(traces, key=lambda t: t.run_id):
        a = tr.algo
        for m in tr.metrics:
            # "round" is the zero-based index of the round just completed
            yield (
                tr.run_id, a.variant, a.d1, a.d2, float(a.gamma), tr.seed, m.round - 1,
                m.grad_evals, m.comm_steps, m.opt_gap, m.f_gap, m.consensus_err,
                m.tracking_err, m.lyapunov, m.client_div,
            )  # fmt: skip


def export_csv(traces: Sequence[Trace], path: str | Path) -> Path:
    """Round-level CSV with the columns of :data:`TRACE_COLUMNS`, ordered by run id."""
    return write_rows(path, TRACE_COLUMNS, _trace_rows(traces))


def export_json(config: ExperimentConfig | ResolvedExperiment, path: str | Path) -> Path:
    """Write the config with defaults filled in; a resolved experiment adds a ``derived`` block."""
    if isinstance(config, ResolvedExperiment):
        data = config.config.model_dump(mode="json", exclude={"derived"})
        data["derived"] = config.derived()
    else:
        data = config.model_dump(mode="json", exclude={"derived"})
    path = Path(path)
    try:
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def export_problem_csv(problem, path: str | Path) -> Path:
    """Dump ``h_i`` and ``vbar_i``, one node per row."""
    header = ["node"] + [f"h{j}" for j in range(problem.p)] + ["vbar"]
    rows = ([i, *problem.H[i], problem.vbar[i]] for i in range(problem.n))
    return write_rows(path, header, rows)
