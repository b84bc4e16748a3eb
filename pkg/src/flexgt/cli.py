"""Command line entry point.

Exit codes: 0 success, 1 validation or usage error, 2 I/O error, 3 a run
diverged.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import analysis
from .harness import ConfigError, load_config, resolve, run_comparison, run_experiment, run_sweep
from .harness.export import export_csv, export_json, export_problem_csv, fmt, write_rows

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_DIVERGED = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


def _parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flexgt", description="FlexGT experiment laboratory")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_out(p):
        p.add_argument("--out", metavar="DIR", help="output directory (default: config output_dir)")
        return p

    with_out(sub.add_parser("run", help="run every algorithm x seed")).add_argument("config")
    with_out(sub.add_parser("compare", help="seed-averaged comparison with charts")).add_argument("config")
    sweep = with_out(sub.add_parser("sweep", help="(d1, d2) grid of theory and empirical costs"))
    sweep.add_argument("config")
    sweep.add_argument("--d1-max", type=int, default=6)
    sweep.add_argument("--d2-max", type=int, default=6)
    with_out(sub.add_parser("topo", help="mixing matrix checks")).add_argument("config")

    theory = with_out(sub.add_parser("theory", help="evaluate the closed-form bounds"))
    theory.add_argument("--mu", type=float, required=True)
    theory.add_argument("--L", type=float, required=True)
    theory.add_argument("--rho", type=float, required=True)
    theory.add_argument("--d1", type=int, default=1)
    theory.add_argument("--d2", type=int, default=1)
    theory.add_argument("--sigma", type=float, default=0.0)
    theory.add_argument("--n", type=int, default=1)
    theory.add_argument("--eps", type=float, default=1e-5)
    theory.add_argument("--gamma", type=float, help="stepsize (default: the bound)")
    theory.add_argument("--w1", type=float, default=1.0)
    theory.add_argument("--w2", type=float, default=1.0)
    return parser


def _print_table(rows: list[dict]) -> None:
    if not rows:
        return
    keys = list(rows[0])
    cells = [[fmt(r[k]) if not isinstance(r[k], float) else f"{r[k]:.6g}" for k in keys] for r in rows]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
    print("  ".join(k.ljust(w) for k, w in zip(keys, widths)))
    for c in cells:
        print("  ".join(v.ljust(w) for v, w in zip(c, widths)))


def _cmd_run(args) -> int:
    config = load_config(args.config)
    res = resolve(config)
    traces = run_experiment(config, res)
    out = Path(args.out or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    export_csv(traces, out / "runs.csv")
    export_json(res, out / "config.json")
    export_problem_csv(res.problem, out / "problem.csv")
    rows = []
    for tr in traces:
        last = tr.metrics[-1] if tr.metrics else None
        rows.append(
            {
                "run_id": tr.run_id,
                "algorithm": tr.algo.label,
                "seed": tr.seed,
                "gamma": float(tr.algo.gamma),
                "rounds": len(tr.metrics),
                "final_opt_gap": last.opt_gap if last else float("nan"),
                "diverged": tr.diverged,
            }
        )
    _print_table(rows)
    print(f"wrote {out}")
    return EXIT_DIVERGED if any(t.diverged for t in traces) else EXIT_OK


def _cmd_compare(args) -> int:
    config = load_config(args.config)
    result = run_comparison(config, args.out)
    _print_table(result.summary)
    for path in result.files.values():
        print(f"wrote {path}")
    return EXIT_DIVERGED if any(t.diverged for t in result.traces) else EXIT_OK


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    result = run_sweep(config, args.d1_max, args.d2_max, args.out)
    print(f"theory argmin (d1, d2): {result.theory_argmin}")
    emp = result.empirical_argmin
    print(f"empirical argmin (d1, d2): {emp if emp else 'not reached in any cell'}")
    for path in result.files.values():
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_topo(args) -> int:
    config = load_config(args.config)
    res = resolve(config)
    w = res.W.entries
    n = res.W.n
    checks = {
        "n": n,
        "kind": config.topology.kind,
        "rho_W": res.W.rho,
        "max_row_sum_error": float(np.max(np.abs(w.sum(axis=1) - 1))),
        "max_col_sum_error": float(np.max(np.abs(w.sum(axis=0) - 1))),
        "symmetric": bool(np.array_equal(w, w.T)),
        "min_entry": float(w.min()),
        "max_degree": int(np.max(np.count_nonzero(w, axis=1)) - 1),
    }
    for k, v in checks.items():
        print(f"{k}: {fmt(v)}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(out / "weights.csv", [f"w{j}" for j in range(n)], w.tolist())
        (out / "topology.json").write_text(json.dumps(checks, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _cmd_theory(args) -> int:
    try:
        tp = analysis.TheoryParams(
            mu=args.mu, L=args.L, rho=args.rho, d1=args.d1, d2=args.d2,
            sigma=args.sigma, n=args.n, eps=args.eps, w1=args.w1, w2=args.w2,
        )  # fmt: skip
        bound = analysis.max_stepsize(tp)
        tp = tp.replace(gamma=bound if args.gamma is None else args.gamma)
        c1, c2 = analysis.lyapunov_coeffs(tp)
        values = {
            "max_stepsize": bound,
            "gamma": tp.gamma,
            "contraction_factor": analysis.contraction_factor(tp),
            "m_sigma": analysis.m_sigma(tp),
            "c1": c1,
            "c2": c2,
            "comp_complexity": analysis.comp_complexity(tp),
            "comm_complexity": analysis.comm_complexity(tp),
            "weighted_cost": analysis.weighted_cost(tp),
        }
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError([str(exc)]) from None
    for k, v in values.items():
        print(f"{k}: {fmt(v)}")
    if tp.gamma > bound:
        print("warning: gamma exceeds max_stepsize", file=sys.stderr)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "theory.json").write_text(json.dumps(values, indent=2) + "\n")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "compare": _cmd_compare,
    "sweep": _cmd_sweep,
    "topo": _cmd_topo,
    "theory": _cmd_theory,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except _UsageError:
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        with np.errstate(over="ignore", invalid="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore", analysis.StepsizeWarning)
            return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"flexgt: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
