"""Command-line driver.

Usage::

    qdexciton spectrum --m 0 --g 1 [--k 5] [--numerov]
    qdexciton qes --m 0 1 --degree 1 2
    qdexciton check --m 0 --g 1 --alpha 3
    qdexciton refute --config material.json --m 0 1 2 --degree 1 --format csv --out report.csv

Exit status: 0 ran, 1 input error, 2 convergence failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from pathlib import Path

from . import __version__
from .errors import ConvergenceError, QdExcitonError
from .oracle import GridSpec, numerov_eigenvalues, spectrum
from .qes import constraint_residual, solve_qes
from .report import _round, emit, parse_config, render, run_refutation
from .series import (
    coefficients,
    count_polynomial_nodes,
    ode_residual,
    tail_diagnostic,
    termination_degree,
    truncated_candidate,
)

EXIT_OK, EXIT_INPUT, EXIT_CONVERGENCE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def real(text: str) -> float:
    """Float, or ``sqrt(x)`` for exact-looking couplings such as ``sqrt(2)``."""
    m = re.fullmatch(r"\s*sqrt\((.+)\)\s*", text)
    try:
        return math.sqrt(float(m.group(1))) if m else float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a real number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qdexciton", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, with_grid=True):
        sp.add_argument("--m", type=int, nargs="+", default=[0], help="angular numbers (|m| is used)")
        sp.add_argument("--format", choices=["json", "csv"], default="json")
        sp.add_argument("--out", type=Path, help="output file (default: stdout)")
        if with_grid:
            sp.add_argument("--grid-points", type=int, default=4000, help="coarse grid size; fine grid doubles it")
            sp.add_argument("--r-max", type=float, default=12.0)

    sp = sub.add_parser("spectrum", help="numerical eigenvalues of the radial problem")
    common(sp)
    sp.add_argument("--g", type=real, required=True)
    sp.add_argument("--k", type=int, default=5)
    sp.add_argument("--numerov", action="store_true", help="also cross-check with Numerov shooting")

    sp = sub.add_parser("qes", help="couplings and energies at which the series terminates")
    common(sp, with_grid=False)
    sp.add_argument("--degree", type=int, nargs="+", default=[1])
    sp.add_argument("--method", choices=["auto", "exact", "float"], default="auto")

    sp = sub.add_parser("check", help="residual and termination of the series at given (m, g, abar)")
    common(sp, with_grid=False)
    sp.add_argument("--g", type=real, required=True)
    sp.add_argument("--alpha", type=real, required=True, help="dimensionless energy abar = 2E/(hbar omega0)")
    sp.add_argument("--degree", type=int, default=1, help="truncation degree of the trial polynomial")
    sp.add_argument("--order", type=int, default=200, help="number of series coefficients")

    sp = sub.add_parser("refute", help="full pipeline for a material config or bare coupling")
    sp.add_argument("--config", type=Path)
    sp.add_argument("--g", type=real)
    sp.add_argument("--m", type=int, nargs="+", default=[0, 1, 2])
    sp.add_argument("--degree", type=int, nargs="+", default=[1])
    sp.add_argument("--format", choices=["json", "csv", "plot-data"], default="json")
    sp.add_argument("--out", type=Path)
    sp.add_argument("--grid-points", type=int, default=4000)
    sp.add_argument("--r-max", type=float, default=12.0)
    return p


def _table(records: list[dict], fmt: str) -> str:
    records = [_round(r) for r in records]
    if fmt == "json":
        return json.dumps(records, indent=2) + "\n"
    buf = io.StringIO()
    cols = list(records[0]) if records else []
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({k: ("" if v is None else (f"{v:.12g}" if isinstance(v, float) else v)) for k, v in r.items()})
    return buf.getvalue()


def _write(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_spectrum(args) -> int:
    spec = GridSpec(args.r_max, args.grid_points)
    records = []
    for m in args.m:
        res = spectrum(m, args.g, args.k, spec)
        numerov = numerov_eigenvalues(res.m, args.g, res.eigenvalues) if args.numerov else None
        for k, val in enumerate(res.eigenvalues):
            rec = {
                "m": res.m,
                "g": args.g,
                "k": k,
                "alpha_bar": float(val),
                "error_estimate": float(res.extrapolation_error[k]),
                "nodes": res.node_counts[k],
            }
            if numerov is not None:
                rec["alpha_bar_numerov"] = float(numerov[k])
            records.append(rec)
    _write(_table(records, args.format), args.out)
    return EXIT_OK


def cmd_qes(args) -> int:
    records = []
    for m in args.m:
        for d in args.degree:
            sol = solve_qes(abs(m), d, args.method)
            for p in sol.points:
                records.append(
                    {
                        "m": p.m,
                        "degree": p.degree,
                        "alpha_bar": p.alpha_bar,
                        "g_squared": p.g_squared,
                        "g": p.g,
                        "energy_hbar_omega": p.energy_physical,
                        "alpha_exact": None if p.alpha_exact is None else str(p.alpha_exact),
                        "g_squared_exact": None if p.g_squared_exact is None else str(p.g_squared_exact),
                        "residual": p.residual,
                        "method": p.method,
                        "discarded_nonpositive": sol.discarded_nonpositive,
                        "discarded_lower_degree": sol.discarded_lower_degree,
                    }
                )
    _write(_table(records, args.format), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    records = []
    for m in args.m:
        m = abs(m)
        state = coefficients(m, args.g, args.alpha, max(args.order, args.degree + 22))
        cand = truncated_candidate(state, args.degree)
        res = ode_residual(cand, args.alpha, args.g)
        tail = tail_diagnostic(state)
        records.append(
            {
                "m": m,
                "g": args.g,
                "alpha_bar": args.alpha,
                "degree": args.degree,
                "a_next": float(state.coeffs[args.degree + 1]),
                "a_next2": float(state.coeffs[args.degree + 2]),
                "ode_max_residual": res.max_abs,
                "ode_l2_residual": res.l2,
                "series_termination": tail.kind,
                "termination_degree": termination_degree(state),
                "candidate_node_count": count_polynomial_nodes(cand),
                "constraint_residual": float(constraint_residual(m, args.g)),
            }
        )
    _write(_table(records, args.format), args.out)
    return EXIT_OK


def cmd_refute(args) -> int:
    if (args.config is None) == (args.g is None):
        raise _InputError("refute needs exactly one of --config or --g")
    source = parse_config(args.config) if args.config is not None else args.g
    report = run_refutation(source, args.m, args.degree, GridSpec(args.r_max, args.grid_points))
    if args.format == "plot-data":
        if args.out is None:
            raise _InputError("plot-data needs --out DIRECTORY")
        for path in emit(report, "plot-data", args.out):
            print(path)
    elif args.out is None:
        sys.stdout.write(render(report, args.format))
    else:
        emit(report, args.format, args.out)
    return EXIT_OK


class _InputError(QdExcitonError):
    pass


COMMANDS = {"spectrum": cmd_spectrum, "qes": cmd_qes, "check": cmd_check, "refute": cmd_refute}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConvergenceError as exc:
        print(f"qdexciton: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (QdExcitonError, OSError) as exc:
        print(f"qdexciton: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
