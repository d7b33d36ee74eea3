"""Command-line front end: `ssvbounds bound` and `ssvbounds sweep`.

Exit codes: 0 success, 1 input error, 2 a solver did not converge (the
report is still written).
"""

import argparse
import json
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from .formats import (
    FormatError,
    matrix_to_obj,
    parse_matrix_file,
    parse_structure,
    peaks_obj,
    read_state_space,
    sweep_csv,
)
from .kernels import BACKEND
from .sweep import bounds_at, check_methods, default_methods, make_grid, sweep_bounds
from .upper import MocConfig

log = logging.getLogger("ssvbounds")

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2

UPPER_NAMES = {"moc": "method_of_centers", "osborne": "osborne", "genosborne": "gen_osborne"}

# sweep settings that may come from --config; flags win over the file
SWEEP_KEYS = ("model", "structure", "upper", "lower", "omega_min", "omega_max", "omega_count",
              "omega_signs", "omega", "p", "gamma", "theta", "eps", "max_iters", "power_iters",
              "workers", "seed")
SWEEP_DEFAULTS = {"omega_min": 1e-2, "omega_max": 1e2, "omega_count": 100,
                  "omega_signs": "both", "power_iters": 60, "workers": 1}


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors are input errors (exit 1), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _solver_flags(p):
    g = p.add_argument_group("solver settings")
    g.add_argument("--structure", help="inline JSON or path to a structure file")
    g.add_argument("--upper", choices=sorted(UPPER_NAMES), help="upper-bound method")
    g.add_argument("--lower", choices=["standard", "generalized"], help="lower-bound method")
    g.add_argument("--p", type=float, help="method-of-centers stopping ratio (default 1.05)")
    g.add_argument("--gamma", type=float, help="box bound on R (default 1e6)")
    g.add_argument("--theta", type=float, help="lambda update fraction (default 1e-3)")
    g.add_argument("--eps", type=float, help="initial lambda offset above alpha (default 2e-4)")
    g.add_argument("--max-iters", type=int, help="method-of-centers iteration cap (default 500)")
    g.add_argument("--power-iters", type=int, help="power-iteration cap (default 60)")
    g.add_argument("--seed", type=int,
                   help="start power iterations from seeded random vectors instead of the SVD")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="more diagnostics on stderr")
    common.add_argument("-q", "--quiet", action="store_true", help="no summary line on stdout")
    parser = _Parser(prog="ssvbounds", description="Upper and lower bounds on mu.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bound", parents=[common], help="bounds for one matrix")
    b.add_argument("matrix", help="matrix JSON file")
    _solver_flags(b)
    b.add_argument("--out", required=True, help="JSON report path")

    s = sub.add_parser("sweep", parents=[common], help="bounds over a frequency grid")
    s.add_argument("model", nargs="?", help="state-space JSON file {A, B, C}")
    s.add_argument("--config", help="JSON file providing defaults for the sweep settings")
    _solver_flags(s)
    g = s.add_argument_group("grid")
    g.add_argument("--omega-min", type=float, help="smallest |omega| (default 1e-2)")
    g.add_argument("--omega-max", type=float, help="largest |omega| (default 1e2)")
    g.add_argument("--omega-count", type=int, help="points per sign (default 100)")
    g.add_argument("--omega-signs", choices=["pos", "neg", "both"], help="default both")
    g.add_argument("--omega", type=float, nargs="+", help="explicit grid, overrides the above")
    s.add_argument("--workers", type=int, help="worker processes (default 1)")
    s.add_argument("--out", required=True, help="CSV path")
    s.add_argument("--peaks", help="peaks JSON path (default: <out>.peaks.json)")
    return parser


def _moc_config(args):
    try:
        return MocConfig().with_overrides(p=args.p, gamma=args.gamma, theta=args.theta,
                                          epsilon=args.eps, k_m=args.max_iters)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _methods(structure, args):
    d_up, d_lo = default_methods(structure)
    upper = UPPER_NAMES[args.upper] if args.upper else d_up
    lower = args.lower or d_lo
    try:
        check_methods(structure, upper, lower)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return upper, lower


def _structure(spec):
    if spec is None:
        raise InputError("--structure is required")
    return parse_structure(spec)


def _perturbation_obj(pert, residual, beta):
    if pert is None or beta <= 0:
        return None
    return {
        "block_values": [matrix_to_obj(np.atleast_2d(v)) for v in pert.block_values],
        "delta": matrix_to_obj(pert.assembled),
        "norm": pert.norm,
        "norm_times_beta": pert.norm * beta,
        "residual": residual,
    }


def run_bound(args):
    M = parse_matrix_file(args.matrix)
    structure = _structure(args.structure)
    try:
        structure.check_matrix(M)
    except ValueError as exc:
        raise InputError(f"{args.matrix}: {exc}") from None
    upper, lower = _methods(structure, args)
    moc = _moc_config(args)
    iters = 60 if args.power_iters is None else args.power_iters

    t0 = time.perf_counter()
    up, lo = bounds_at(M, structure, upper, lower, moc, iters, seed=args.seed)
    elapsed = time.perf_counter() - t0
    alpha, beta = float(up.alpha), float(lo.beta)
    gap = 100.0 * (alpha - beta) / alpha if alpha > 0 else 0.0
    report = {
        "alpha": alpha,
        "beta": beta,
        "gap_percent": gap,
        "upper_method": upper,
        "lower_method": lower,
        "converged_upper": bool(up.converged_by_ratio),
        "converged_lower": bool(lo.converged),
        "upper_iterations": int(up.iterations_used),
        "lower_iterations": int(lo.iterations_used),
        "upper_stop_reason": up.diagnostics.get("stop_reason"),
        "structure": structure.to_dict(),
        "scaling": matrix_to_obj(up.scaling),
        "r_matrix": None if up.r_matrix is None else matrix_to_obj(up.r_matrix),
        "certificate": _perturbation_obj(lo.perturbation, lo.residual, beta),
        "wall_time": elapsed,
        "backend": BACKEND,
    }
    Path(args.out).write_text(json.dumps(report, indent=1) + "\n", encoding="utf-8")
    log.info("upper %s: alpha=%.6g after %d iterations", upper, alpha, up.iterations_used)
    log.info("lower %s: beta=%.6g residual=%.3g after %d iterations", lower, beta,
             lo.residual, lo.iterations_used)
    if not args.quiet:
        print(f"alpha={alpha:.6g} beta={beta:.6g} gap={gap:.3g}%")
    ok = report["converged_upper"] and report["converged_lower"]
    if not ok:
        log.warning("a bound did not converge; report written to %s", args.out)
    return EXIT_OK if ok else EXIT_NONCONVERGED


def _merge_config(args):
    if args.config is None:
        cfg, base = {}, Path.cwd()
    else:
        path = Path(args.config)
        try:
            cfg = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"{path}: cannot read config: {exc}") from None
        if not isinstance(cfg, dict):
            raise InputError(f"{path}: config must be a JSON object")
        unknown = set(cfg) - set(SWEEP_KEYS)
        if unknown:
            raise InputError(f"{path}: unknown config keys {sorted(unknown)}")
        base = path.parent
        if isinstance(cfg.get("model"), str):
            cfg["model"] = str(base / cfg["model"])
        if isinstance(cfg.get("structure"), str) and not cfg["structure"].lstrip().startswith("{"):
            cfg["structure"] = str(base / cfg["structure"])
    for key in SWEEP_KEYS:
        if getattr(args, key) is None:
            setattr(args, key, cfg.get(key, SWEEP_DEFAULTS.get(key)))
    return args


def run_sweep(args):
    args = _merge_config(args)
    if args.model is None:
        raise InputError("a model file is required (positional or in --config)")
    ss = read_state_space(args.model)
    structure = _structure(args.structure)
    if (structure.col_dim, structure.row_dim) != ss.shape:
        raise InputError(f"structure expects M of shape {(structure.col_dim, structure.row_dim)}, "
                         f"model gives {ss.shape}")
    upper, lower = _methods(structure, args)
    moc = _moc_config(args)
    if args.omega is not None:
        grid = [float(w) for w in args.omega]
    else:
        try:
            grid = make_grid(args.omega_min, args.omega_max, args.omega_count, args.omega_signs)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    if args.workers < 1:
        raise InputError("--workers must be >= 1")

    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        table = sweep_bounds(ss, grid, structure, moc, args.power_iters, upper, lower,
                             workers=args.workers, seed=args.seed)
    for w in caught:
        log.warning("%s", w.message)
    log.info("%d points in %.2f s (%s kernels, %d workers)", len(grid),
             time.perf_counter() - t0, BACKEND, args.workers)

    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(sweep_csv(table))
    peaks_path = Path(args.peaks) if args.peaks else out.with_name(out.name + ".peaks.json")
    peaks_path.write_text(json.dumps(peaks_obj(table), indent=1) + "\n", encoding="utf-8")

    bad = 0
    for r in table.records:
        if r.error:
            log.warning("omega=%.12g failed: %s", r.omega, r.error)
        if r.error or not (r.converged_upper and r.converged_lower):
            bad += 1
    if bad:
        log.warning("%d of %d points did not converge", bad, len(table.records))
    pk = table.peaks
    if not args.quiet and pk.get("alpha_max") is not None:
        print(f"alpha_max={pk['alpha_max']:.6g} at omega={pk['omega_at_alpha_max']:.6g} "
              f"beta_max={pk['beta_max']:.6g} at omega={pk['omega_at_beta_max']:.6g}")
    return EXIT_NONCONVERGED if bad else EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("ssvbounds")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False
    try:
        if args.command == "bound":
            return run_bound(args)
        return run_sweep(args)
    except (InputError, FormatError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
