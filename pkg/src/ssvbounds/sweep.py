"""Frequency sweeps of mu bounds for state-space models."""

import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .linalg import as_matrix
from .lower import init_vectors, power_iteration_repeated_full, power_iteration_standard
from .structure import BlockStructure, RepeatedScalar
from .upper import MocConfig, gen_osborne, method_of_centers, osborne_balance

__all__ = [
    "StateSpace",
    "SweepRecord",
    "SweepTable",
    "SingularFrequencyError",
    "freq_response",
    "make_grid",
    "default_methods",
    "check_methods",
    "bounds_at",
    "random_vectors",
    "sweep_bounds",
    "best_bounds",
]

UPPER_METHODS = ("method_of_centers", "osborne", "gen_osborne")
LOWER_METHODS = ("standard", "generalized")


class SingularFrequencyError(ValueError):
    pass


@dataclass(frozen=True)
class StateSpace:
    """M(s) = C (sI - A)^-1 B."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A, B, C = as_matrix(self.A, "A"), as_matrix(self.B, "B"), as_matrix(self.C, "C")
        s = A.shape[0]
        if A.shape != (s, s):
            raise ValueError("A must be square")
        if B.shape[0] != s or C.shape[1] != s:
            raise ValueError(f"B {B.shape} and C {C.shape} do not conform with A {A.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def shape(self):
        """(outputs, inputs) of M."""
        return self.C.shape[0], self.B.shape[1]

    def is_stable(self):
        return bool(np.all(np.linalg.eigvals(self.A).real < 0))


def freq_response(ss, omega):
    """C (i*omega*I - A)^-1 B by LU solve."""
    s = ss.A.shape[0]
    K = 1j * omega * np.eye(s) - ss.A
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            with np.errstate(divide="ignore", invalid="ignore"):
                X = scipy.linalg.solve(K, ss.B)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise SingularFrequencyError(
                f"i*omega*I - A is singular at omega={omega!r}") from exc
    if not np.all(np.isfinite(X)):
        raise SingularFrequencyError(f"i*omega*I - A is singular at omega={omega!r}")
    return ss.C @ X


def make_grid(omega_min_mag, omega_max_mag, count, signs="positive"):
    """Log-spaced magnitudes, optionally mirrored to negative frequencies."""
    if not 0 < omega_min_mag <= omega_max_mag:
        raise ValueError("need 0 < omega_min_mag <= omega_max_mag")
    if count < 1:
        raise ValueError("count must be >= 1")
    if count == 1:
        mags = np.array([float(omega_min_mag)])
    else:
        mags = np.logspace(np.log10(omega_min_mag), np.log10(omega_max_mag), int(count))
    signs = {"pos": "positive", "neg": "negative"}.get(signs, signs)
    if signs == "positive":
        return mags.tolist()
    if signs == "negative":
        return (-mags[::-1]).tolist()
    if signs == "both":
        return np.concatenate([-mags[::-1], mags]).tolist()
    raise ValueError(f"unknown signs {signs!r}")


@dataclass
class SweepRecord:
    omega: float
    alpha: Optional[float]
    beta: Optional[float]
    gap_percent: float
    converged_upper: bool
    converged_lower: bool
    wall_time: float = 0.0
    error: Optional[str] = None


@dataclass
class SweepTable:
    records: list
    peaks: dict = field(default_factory=dict)


def _single_scalar(structure):
    return len(structure.blocks) == 1 and isinstance(structure.blocks[0], RepeatedScalar)


def _repeated_params(structure):
    """(v, m1, n1) when the structure is I_v kron Delta_1 (a lone repeated scalar counts)."""
    if structure.is_repeated_full:
        b = structure.repeated
        return b.v, b.m1, b.n1
    if _single_scalar(structure):
        return structure.blocks[0].v, 1, 1
    return None


def default_methods(structure):
    """(upper, lower) pairing used when the caller does not choose."""
    if structure.is_repeated_full:
        return "method_of_centers", "generalized"
    if _single_scalar(structure):
        return "method_of_centers", "standard"
    return "osborne", "standard"


def check_methods(structure, upper, lower):
    if upper not in UPPER_METHODS:
        raise ValueError(f"unknown upper method {upper!r}")
    if lower not in LOWER_METHODS:
        raise ValueError(f"unknown lower method {lower!r}")
    rep = _repeated_params(structure)
    if upper in ("method_of_centers", "gen_osborne") and rep is None:
        raise ValueError(f"{upper} needs a repeated full-block (or lone repeated-scalar) structure")
    if lower == "generalized" and rep is None:
        raise ValueError("generalized power iteration needs a repeated full-block structure")
    if structure.is_repeated_full and (upper == "osborne" or lower == "standard"):
        raise ValueError("osborne / standard methods need a non-repeated structure")
    if upper == "gen_osborne" and rep[1] != rep[2]:
        raise ValueError("gen_osborne needs square blocks")


def _osborne_dims(structure):
    rep = _repeated_params(structure)
    if structure.is_repeated_full:
        v, m1, n1 = rep
        return [m1] * v if m1 == n1 else None
    if any(b.rows != b.cols for b in structure.blocks):
        return None
    return [b.rows for b in structure.blocks]


def random_vectors(n, seed):
    """Unit complex (b0, w0) drawn from a seeded generator."""
    rng = np.random.default_rng(seed)
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return b / np.linalg.norm(b), w / np.linalg.norm(w)


def bounds_at(M, structure, upper=None, lower=None, moc=None, power_iters=60,
              residual_tol=None, seed=None):
    """(upper result, lower result) for one matrix.

    Power iterations start from the Osborne-balanced singular vector, or from
    seeded random vectors when `seed` is given.
    """
    d_up, d_lo = default_methods(structure)
    upper = upper or d_up
    lower = lower or d_lo
    check_methods(structure, upper, lower)
    structure.check_matrix(M)
    dims = _osborne_dims(structure)
    if seed is None:
        d_star = osborne_balance(M, dims).scaling if dims is not None else None
        b0, w0 = init_vectors(M, d_star)
    else:
        b0, w0 = random_vectors(M.shape[1], seed)

    if lower == "standard":
        lo = power_iteration_standard(M, structure, b0, w0, power_iters, residual_tol)
    else:
        v, m1, n1 = _repeated_params(structure)
        lo = power_iteration_repeated_full(M, v, m1, b0, w0, power_iters, residual_tol, n1=n1)

    if upper == "osborne":
        up = osborne_balance(M, dims)
        up.converged_by_ratio = up.diagnostics["converged"]
    elif upper == "gen_osborne":
        v, m1, _ = _repeated_params(structure)
        up = gen_osborne(M, v, m1)
        up.converged_by_ratio = True
    else:
        v, m1, n1 = _repeated_params(structure)
        up = method_of_centers(M, v, m1, lo.beta, moc or MocConfig(), n1=n1)
    return up, lo


def _gap(alpha, beta):
    if alpha is None or beta is None or alpha <= 0:
        return 0.0
    return 100.0 * (alpha - beta) / alpha


def _point(args):
    idx, ss, omega, structure, upper, lower, moc, power_iters, residual_tol, seed = args
    t0 = time.perf_counter()
    try:
        M = freq_response(ss, omega)
        up, lo = bounds_at(M, structure, upper, lower, moc, power_iters, residual_tol,
                           None if seed is None else [seed, idx])
    except Exception as exc:  # noqa: BLE001 - recorded per point, sweep continues
        return SweepRecord(omega, None, None, 0.0, False, False,
                           time.perf_counter() - t0, f"{type(exc).__name__}: {exc}")
    alpha, beta = float(up.alpha), float(lo.beta)
    return SweepRecord(omega, alpha, beta, _gap(alpha, beta), bool(up.converged_by_ratio),
                       bool(lo.converged), time.perf_counter() - t0)


def sweep_bounds(ss, grid, structure, moc=None, power_iters=60, upper=None, lower=None,
                 workers=1, residual_tol=None, seed=None):
    """Evaluate bounds at every grid frequency; records keep grid order."""
    if not isinstance(structure, BlockStructure):
        structure = BlockStructure(tuple(structure))
    d_up, d_lo = default_methods(structure)
    upper = upper or d_up
    lower = lower or d_lo
    check_methods(structure, upper, lower)
    if (structure.col_dim, structure.row_dim) != ss.shape:
        raise ValueError(f"structure expects M of shape {(structure.col_dim, structure.row_dim)}, "
                         f"model gives {ss.shape}")
    if not ss.is_stable():
        warnings.warn("A has eigenvalues with nonnegative real part; bounds are still computed "
                      "pointwise", RuntimeWarning, stacklevel=2)
    moc = moc or MocConfig()
    jobs = [(i, ss, float(w), structure, upper, lower, moc, power_iters, residual_tol, seed)
            for i, w in enumerate(grid)]
    if workers <= 1 or len(jobs) <= 1:
        records = [_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_point, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    table = SweepTable(records)
    table.peaks = best_bounds(table) if any(r.alpha is not None for r in records) else {}
    return table


def best_bounds(table):
    """Maxima of alpha and beta over the grid (ties go to the smallest omega)."""
    records = table.records if isinstance(table, SweepTable) else list(table)
    if not records:
        raise ValueError("empty sweep table")
    out = {}
    for key in ("alpha", "beta"):
        valid = [r for r in records if getattr(r, key) is not None]
        if not valid:
            out[f"{key}_max"] = None
            out[f"omega_at_{key}_max"] = None
            continue
        best = min(valid, key=lambda r: (-getattr(r, key), r.omega))
        out[f"{key}_max"] = getattr(best, key)
        out[f"omega_at_{key}_max"] = best.omega
    return out
