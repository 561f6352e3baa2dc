"""Command-line front end.

Subcommands::

    openquad steady   MODEL [--grid N...] [--method auto|dense|momentum] [--space real|momentum]
    openquad gap      MODEL [--sweep NAME=START:STOP:COUNT] [--kappa K] [--grid N...]
    openquad gap-path MODEL [--path-param NAME] [--waypoints P:K,P:K,...] [--samples S]
    openquad decay    MODEL [--fit-extent N]
    openquad figure   NAME  [--grid N]

``MODEL`` is ``--model PATH`` or ``--preset NAME [--param KEY=VALUE ...]``.
All subcommands accept ``--out PATH`` (default: standard output),
``--format csv|json`` and ``--tol``. The environment variable
``OPENQUAD_NUM_THREADS`` caps the BLAS/OpenMP thread pools.

Exit codes: 0 success, 2 model parse error, 3 solver error, 4 usage error.
On failure a JSON object ``{"error", "category", "message"}`` is written to
standard error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_SOLVER = 3
EXIT_USAGE = 4

THREAD_ENV = "OPENQUAD_NUM_THREADS"
_POOL_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class UsageError(Exception):
    """Invalid command-line usage."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _configure_threads() -> None:
    """Propagate ``OPENQUAD_NUM_THREADS`` to the thread pools (before numpy loads them)."""
    n = os.environ.get(THREAD_ENV)
    if n is None:
        return
    if not n.isdigit() or int(n) < 1:
        raise UsageError(f"{THREAD_ENV} must be a positive integer, got {n!r}")
    for var in _POOL_VARS:
        os.environ[var] = n


def _model_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="path to a TOML model-definition file")
    src.add_argument("--preset", help="built-in model: xy_chain or critical_boson")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="preset parameter (repeatable)")
    p.add_argument("--extent", type=int, nargs="+", help="periodic lattice length per axis (overrides the model)")


def _common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", type=int, nargs="+", help="grid points per axis")
    p.add_argument("--tol", type=float, default=None, help="residual tolerance")
    p.add_argument("--out", help="output path (default: standard output)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="openquad", description="Steady states, gaps and correlation decay of quadratic open systems.")
    parser.add_argument("--version", action="store_true", help="print the library version and exit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("steady", help="steady-state covariance field")
    _model_args(p)
    _common_args(p)
    p.add_argument("--method", choices=("auto", "dense", "momentum"), default="auto")
    p.add_argument("--space", choices=("real", "momentum"), default="real")
    p.add_argument("--shift", type=float, default=0.0, help="momentum-mesh offset in units of 2 pi / L")

    p = sub.add_parser("gap", help="dissipative gap, optionally swept over a parameter")
    _model_args(p)
    _common_args(p)
    p.add_argument("--sweep", metavar="NAME=START:STOP:COUNT", help="preset parameter (or kappa) to sweep")
    p.add_argument("--kappa", type=float, default=0.0, help="auxiliary dissipator rate")
    p.add_argument("--route", choices=("auto", "momentum", "dense"), default="auto")

    p = sub.add_parser("gap-path", help="gap along a path with an auxiliary-dissipator schedule")
    _model_args(p)
    _common_args(p)
    p.add_argument("--path-param", default=None, help="preset parameter varied along the path (default: phi or eta)")
    p.add_argument("--waypoints", default=None, metavar="P:K,P:K,...", help="(parameter, kappa) waypoints")
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--route", choices=("auto", "momentum", "dense"), default="auto")

    p = sub.add_parser("decay", help="decay modes of a one-dimensional model")
    _model_args(p)
    _common_args(p)
    p.add_argument("--fit-extent", type=int, default=None, help="also fit the decay of a dense solve on this many cells")

    p = sub.add_parser("figure", help="dataset of a figure panel")
    p.add_argument("name", help="fig1-left, fig1-right or fig2-a ... fig2-f")
    _common_args(p)
    return parser


# -- helpers -------------------------------------------------------------------


def _parse_value(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"parameter value {text!r} is not a number") from None


def _parse_params(items) -> dict:
    out = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects KEY=VALUE, got {item!r}")
        out[key.strip()] = _parse_value(val.strip())
    return out


def _extent(args):
    if not args.extent:
        return None
    return args.extent[0] if len(args.extent) == 1 else tuple(args.extent)


def _stencil_factory(args):
    """``(stencil, family)``: ``family(name, value)`` rebuilds the model with one parameter changed."""
    from .modelfile import load_model, preset_stencil

    if args.model:
        if args.param:
            raise UsageError("--param applies to --preset only")
        st = load_model(args.model)
        if args.extent:
            st = st.with_extent(_extent(args))
        return st, None, {"model": os.path.basename(args.model)}
    params = _parse_params(args.param)
    st = preset_stencil(args.preset, params, _extent(args))

    def family(name, value):
        return preset_stencil(args.preset, {**params, name: value}, _extent(args))

    return st, family, {"preset": args.preset, "params": params}


def _config(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "version") and v is not None}
    return {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.items()}


def _emit(table, args) -> None:
    from .io import write_table

    text = write_table(table, args.out, args.format)
    if args.out is None:
        sys.stdout.write(text)


def _parse_sweep(spec: str):
    name, sep, rng = spec.partition("=")
    parts = rng.split(":")
    if not sep or len(parts) != 3:
        raise UsageError("--sweep expects NAME=START:STOP:COUNT")
    start, stop = float(_parse_value(parts[0])), float(_parse_value(parts[1]))
    count = _parse_value(parts[2])
    if not isinstance(count, int) or count < 1:
        raise UsageError("sweep COUNT must be a positive integer")
    return name, start, stop, count


def _parse_waypoints(spec: str):
    pts = []
    for item in spec.split(","):
        a, sep, b = item.partition(":")
        if not sep:
            raise UsageError("--waypoints expects P:K,P:K,...")
        pts.append((float(_parse_value(a)), float(_parse_value(b))))
    return pts


# -- commands ------------------------------------------------------------------


def cmd_steady(args) -> None:
    import numpy as np

    from .dense import build_dense
    from .io import covariance_table
    from .steady import DENSE_RESIDUAL_TOL, fourier_pair, solve_steady_dense, solve_steady_momentum

    st, _, meta = _stencil_factory(args)
    method = args.method
    if method == "auto":
        method = "momentum" if (st.quasifree and args.grid) or st.lattice.extent is None else "dense"
    if method == "dense":
        if st.lattice.extent is None:
            raise UsageError("the dense solver needs a finite lattice: set extent in the model or pass --extent")
        cov = solve_steady_dense(build_dense(st), tol=args.tol or DENSE_RESIDUAL_TOL)
    else:
        grid = tuple(args.grid) if args.grid else st.lattice.extent
        if grid is None:
            raise UsageError("the momentum route needs --grid or a finite extent")
        if len(grid) == 1 and st.dims > 1:
            grid = grid * st.dims
        cov = solve_steady_momentum(st, grid=grid, shift=args.shift)
    if args.space == "momentum" and cov.momentum_space is None:
        cov = fourier_pair(cov, "to_momentum")
    elif args.space == "real" and cov.real_space is None:
        cov = fourier_pair(cov, "to_real")
    meta.update({"config": _config(args), "max_abs_entry": float(np.max(np.abs(cov.real_space))) if cov.real_space is not None else None})
    _emit(covariance_table(cov, meta, args.space), args)


def cmd_gap(args) -> None:
    import numpy as np

    from .io import gap_curve_table
    from .spectral import GapCurve, append_aux_dissipator, dissipative_gap

    st, family, meta = _stencil_factory(args)
    grid = tuple(args.grid) if args.grid else None
    meta["config"] = _config(args)
    if args.sweep is None:
        gp = dissipative_gap(append_aux_dissipator(st, args.kappa), grid, args.route)
        curve = GapCurve(np.array([args.kappa]), np.array([gp.gap]), [gp.k], "kappa", {"degeneracy": gp.degeneracy, "route": gp.route})
    else:
        name, start, stop, count = _parse_sweep(args.sweep)
        values = np.linspace(start, stop, count)
        gaps, ks = [], []
        for v in values:
            if name == "kappa":
                s = append_aux_dissipator(st, float(v))
            else:
                if family is None:
                    raise UsageError("only 'kappa' can be swept for a model file; use --preset to sweep model parameters")
                s = append_aux_dissipator(family(name, float(v)), args.kappa)
            gp = dissipative_gap(s, grid, args.route)
            gaps.append(gp.gap)
            ks.append(gp.k)
        curve = GapCurve(values, np.array(gaps), ks, name, {"kappa": args.kappa} if name != "kappa" else {})
    table = gap_curve_table(curve, meta)
    if args.out is not None and args.format == "csv":
        from .io import write_gap_curve

        write_gap_curve(curve, args.out, "csv", meta)
    else:
        _emit(table, args)


def cmd_gap_path(args) -> None:
    import numpy as np

    from .io import gap_curve_table, write_gap_curve
    from .spectral import FamilyPath, gap_along_path

    st, family, meta = _stencil_factory(args)
    if family is None:
        raise UsageError("gap-path needs --preset (the path varies a model parameter)")
    name = args.path_param or ("phi" if args.preset == "xy_chain" else "eta")
    if args.waypoints:
        pts = _parse_waypoints(args.waypoints)
    elif args.preset == "xy_chain" and name == "phi":
        a, b = np.pi / 4, 9 * np.pi / 4
        pts = [(a, 0.0), (a, 1.0), (b, 1.0), (b, 0.0)]
    else:
        raise UsageError("--waypoints is required for this preset/parameter")
    path = FamilyPath(lambda v: family(name, v), pts)
    grid = tuple(args.grid) if args.grid else None
    curve = gap_along_path(path, args.samples, grid, args.route)
    meta.update({"config": _config(args), "path_param": name, "waypoints": [list(p) for p in pts]})
    if args.out is not None and args.format == "csv":
        write_gap_curve(curve, args.out, "csv", meta)
    else:
        _emit(gap_curve_table(curve, meta), args)


def cmd_decay(args) -> None:
    import dataclasses

    import numpy as np

    from .correlation import decay_report_1d, fit_exponential_decay, momentum_poles_1d
    from .dense import build_dense
    from .errors import PoleOnUnitCircle, QuadraticNotSupported
    from .io import decay_table
    from .steady import DENSE_RESIDUAL_TOL, solve_steady_dense

    st, _, meta = _stencil_factory(args)
    report = decay_report_1d(st)
    meta["config"] = _config(args)
    try:
        poles = momentum_poles_1d(st)
        report = dataclasses.replace(report, poles=poles.poles, residues=poles.residues, xi_bound=poles.xi_bound)
        meta["max_pole_modulus"] = poles.info["max_pole_modulus"]
    except (PoleOnUnitCircle, QuadraticNotSupported) as exc:
        # the modes stay valid; record why no pole set is reported
        meta["poles_unavailable"] = f"{type(exc).__name__}: {exc}"
    if args.fit_extent:
        cov = solve_steady_dense(build_dense(st.with_extent(args.fit_extent)), tol=args.tol or DENSE_RESIDUAL_TOL)
        r = np.arange(1, args.fit_extent // 2)
        g = np.array([cov.gamma((int(i),)) for i in r])
        n = g.shape[-1]
        # fit the entry with the largest weight; individual entries give clean envelopes
        a, b = np.unravel_index(np.argmax(np.abs(g[1]).reshape(-1)), (n, n))
        fit = fit_exponential_decay(r, g[:, a, b], burn_in=4)
        report = dataclasses.replace(report, fit=fit)
        meta.update({"fit_entry": [int(a), int(b)], "dense_residual": cov.residual})
    _emit(decay_table(report, meta), args)


def cmd_figure(args) -> None:
    from .figures import figure_table

    grid = args.grid[0] if args.grid else None
    table = figure_table(args.name, grid)
    table.meta["config"] = _config(args)
    _emit(table, args)


COMMANDS = {"steady": cmd_steady, "gap": cmd_gap, "gap-path": cmd_gap_path, "decay": cmd_decay, "figure": cmd_figure}


def _fail(code: int, err: BaseException, category: str) -> int:
    sys.stderr.write(json.dumps({"error": type(err).__name__, "category": category, "message": str(err)}) + "\n")
    return code


def run(argv=None) -> int:
    """Execute one command; returns the process exit code."""
    try:
        _configure_threads()
        args = build_parser().parse_args(argv)
        if args.version:
            from . import __version__

            sys.stdout.write(__version__ + "\n")
            return EXIT_OK
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        from .errors import InvalidStencil, OpenQuadError, ParseError, SolverError

        try:
            COMMANDS[args.command](args)
        except (ParseError, InvalidStencil) as exc:
            return _fail(EXIT_PARSE, exc, "parse")
        except SolverError as exc:
            return _fail(EXIT_SOLVER, exc, "solver")
        except (OpenQuadError, ValueError) as exc:
            return _fail(EXIT_USAGE, exc, "usage")
    except UsageError as exc:
        return _fail(EXIT_USAGE, exc, "usage")
    return EXIT_OK


def main() -> None:
    sys.exit(run())
