"""D-scale upper bounds on mu.

Three solvers:

* `osborne_balance` -- block-diagonal Frobenius balancing for non-repeated
  full blocks.
* `method_of_centers` -- gradient-based analytic-center iteration on the
  generalized eigenvalue problem for I_v kron Delta_1 structures.
* `gen_osborne` -- Osborne followed by one complex off-diagonal entry of the
  v x v scaling at a time, each fitted by minimizing a quartic.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import block_diag

from . import kernels
from .linalg import (
    block_trace,
    hermitian_sqrt,
    hermitize,
    kron_identity,
    sigma_max,
)

logger = logging.getLogger(__name__)

__all__ = [
    "MocConfig",
    "UpperBoundResult",
    "InfeasibleError",
    "osborne_balance",
    "method_of_centers",
    "barrier_value",
    "barrier_gradient",
    "line_search",
    "offdiag_coeffs",
    "quartic_objective",
    "damped_newton_quartic",
    "gen_osborne",
]


class InfeasibleError(ValueError):
    """An LMI constraint of the barrier is not strictly satisfied."""

    def __init__(self, constraint, detail=""):
        self.constraint = constraint
        super().__init__(f"constraint {constraint} is not positive definite{detail}")


@dataclass(frozen=True)
class MocConfig:
    p: float = 1.05
    k_m: int = 500
    theta: float = 1e-3
    gamma: float = 1e6
    epsilon: float = 2e-4
    inner_steps: int = 2
    step0: float = 1.0
    shrink: float = 0.5
    max_backtracks: int = 40

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must be > 1")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if not self.gamma > 1:
            raise ValueError("gamma must be > 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.inner_steps < 1 or self.k_m < 0:
            raise ValueError("inner_steps must be >= 1 and k_m >= 0")
        if not 0 < self.shrink < 1 or self.step0 <= 0:
            raise ValueError("line search needs step0 > 0 and 0 < shrink < 1")

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


@dataclass
class UpperBoundResult:
    alpha: float
    scaling: np.ndarray = field(repr=False)
    scaled_matrix: np.ndarray = field(repr=False)
    r_matrix: Optional[np.ndarray] = field(default=None, repr=False)
    converged_by_ratio: bool = False
    iterations_used: int = 0
    alpha_history: list = field(default_factory=list, repr=False)
    diagnostics: dict = field(default_factory=dict, repr=False)


# --------------------------------------------------------------------------
# Osborne


def _block_norms(M, dims):
    edges = np.concatenate([[0], np.cumsum(dims)])
    P = np.abs(M) ** 2
    # sum over the blocks of P
    rows = np.add.reduceat(P, edges[:-1], axis=0)
    return np.ascontiguousarray(np.add.reduceat(rows, edges[:-1], axis=1))


def osborne_balance(M, block_dims, max_sweeps=200, tol=1e-12):
    """Balance M with D = diag(d_1 I, ..., d_v I) to minimize ||D M D^-1||_F.

    Coordinates are updated one at a time with the closed-form minimizer
    d_i = (sum_r ||M_ri||^2 / sum_r ||M_ir||^2)^(1/4). Only the v x v matrix of
    squared block norms is iterated; M is scaled once at the end.
    """
    M = np.asarray(M, dtype=np.complex128)
    dims = [int(k) for k in block_dims]
    if M.shape[0] != M.shape[1] or sum(dims) != M.shape[0]:
        raise ValueError(f"block dims {dims} do not partition a {M.shape} matrix")
    if any(k < 1 for k in dims):
        raise ValueError("block dims must be positive")
    N = _block_norms(M, dims)
    d, sweeps, history, clamped = kernels.osborne_sweeps(N, int(max_sweeps), float(tol))
    dvec = np.repeat(np.asarray(d), dims)
    scaled = (dvec[:, None] * M) / dvec[None, :]
    converged = len(history) > 1 and abs(history[-2] - history[-1]) <= tol * history[-2]
    if clamped.any():
        logger.debug("osborne: clamped scalings for blocks %s", np.flatnonzero(clamped))
    return UpperBoundResult(
        alpha=sigma_max(scaled),
        scaling=np.diag(dvec).astype(np.complex128),
        scaled_matrix=scaled,
        iterations_used=sweeps,
        alpha_history=[],
        diagnostics={
            "d": np.asarray(d),
            "frobenius_sq_history": list(history),
            "clamped": np.asarray(clamped, dtype=bool),
            "converged": bool(converged or history[0] == 0.0),
        },
    )


# --------------------------------------------------------------------------
# Method of centers


def _dims(M, v, m1, n1):
    n1 = m1 if n1 is None else n1
    if M.shape != (v * n1, v * m1):
        raise ValueError(f"M has shape {M.shape}, expected {(v * n1, v * m1)} for v={v}, m1={m1}")
    return n1


def _chol(A, name):
    try:
        return np.linalg.cholesky(hermitize(A))
    except np.linalg.LinAlgError:
        raise InfeasibleError(name) from None


def _lmis(M, R, lam, gamma, v, m1, n1):
    Xr = kron_identity(R, n1)
    Xc = kron_identity(R, m1)
    L1 = lam ** 2 * Xc - M.conj().T @ Xr @ M
    L2 = gamma * np.eye(v) - R
    L3 = R - np.eye(v) / gamma
    return L1, L2, L3


def barrier_value(M, R, lam, gamma, v, m1, n1=None):
    """J(R) = -sum log det L_k; +inf outside the feasible set."""
    M = np.asarray(M, dtype=np.complex128)
    n1 = _dims(M, v, m1, n1)
    total = 0.0
    for name, L in zip(("L1", "L2", "L3"), _lmis(M, R, lam, gamma, v, m1, n1)):
        try:
            C = _chol(L, name)
        except InfeasibleError:
            return np.inf
        total -= 2.0 * np.sum(np.log(np.real(np.diag(C))))
    return float(total)


def _chol_inv(L, name):
    C = _chol(L, name)
    Ci = np.linalg.inv(C)
    return Ci.conj().T @ Ci


def barrier_gradient(M, R, lam, gamma, v, m1, n1=None):
    """Hermitian Phi with dJ = tr(Phi dR) for Hermitian dR.

    Phi = Gamma(M L1^-1 M^H) - lam^2 Gamma(L1^-1) + L2^-1 - L3^-1.
    """
    M = np.asarray(M, dtype=np.complex128)
    n1 = _dims(M, v, m1, n1)
    L1, L2, L3 = _lmis(M, R, lam, gamma, v, m1, n1)
    L1i = _chol_inv(L1, "L1")
    L2i = _chol_inv(L2, "L2")
    L3i = _chol_inv(L3, "L3")
    phi = (block_trace(M @ L1i @ M.conj().T, v, n1)
           - lam ** 2 * block_trace(L1i, v, m1) + L2i - L3i)
    return hermitize(phi)


def line_search(R, phi, lam, gamma, M, v, m1, n1=None, step0=1.0, shrink=0.5,
                max_backtracks=40, j0=None):
    """Largest delta in step0 * shrink^j keeping R - delta*phi feasible with lower J.

    Returns 0.0 when no trial step qualifies.
    """
    if not np.any(phi):
        return 0.0
    if j0 is None:
        j0 = barrier_value(M, R, lam, gamma, v, m1, n1)
    delta = step0
    for _ in range(max_backtracks + 1):
        trial = hermitize(R - delta * phi)
        if barrier_value(M, trial, lam, gamma, v, m1, n1) < j0:
            return delta
        delta *= shrink
    return 0.0


def _scaled_alpha(M, R, v, m1, n1):
    """alpha(R) = sqrt(lambda_max(D_c^-H M^H (R kron I) M D_c^-1)) and the scaled matrix."""
    Rh = hermitian_sqrt(R)
    Rhi = hermitian_sqrt(R, inverse=True)
    Dc_inv = kron_identity(Rhi, m1)
    G = Dc_inv.conj().T @ M.conj().T @ kron_identity(R, n1) @ M @ Dc_inv
    lam_max = float(np.linalg.eigvalsh(hermitize(G))[-1])
    scaled = kron_identity(Rh, n1) @ M @ Dc_inv
    return float(np.sqrt(max(lam_max, 0.0))), scaled, Rh


def _initial_r(M, v, m1, n1, gamma):
    if m1 == n1 and v > 1:
        d = osborne_balance(M, [m1] * v).diagnostics["d"]
        r = d ** 2
    else:
        r = np.ones(v)
    # R is scale invariant; center its spectrum in the [1/gamma, gamma] box
    r = r / np.exp(np.mean(np.log(r)))
    lo, hi = (1.0 + 1e-9) / gamma, gamma * (1.0 - 1e-9)
    return np.diag(np.clip(r, lo, hi)).astype(np.complex128)


def method_of_centers(M, v, m1, beta=0.0, cfg=None, r_init=None, n1=None):
    """Upper bound for Delta = I_v kron Delta_1 by the method of centers.

    Each outer iteration pulls lambda toward the current alpha, takes
    `cfg.inner_steps` barrier-gradient steps on R and re-evaluates alpha. The
    loop stops once alpha/beta < p or after k_m iterations; the smallest alpha
    seen is returned with its scaling (R kron I)^(1/2).
    """
    cfg = cfg or MocConfig()
    M = np.asarray(M, dtype=np.complex128)
    n1 = _dims(M, v, m1, n1)
    gamma = cfg.gamma

    if r_init is None:
        R = _initial_r(M, v, m1, n1, gamma)
    else:
        R = np.array(r_init, dtype=np.complex128)
        if R.shape != (v, v) or not np.allclose(R, R.conj().T):
            raise ValueError("r_init must be a Hermitian v x v matrix")
        R = hermitize(R)
        for name, L in zip(("L2", "L3"), _lmis(M, R, 1.0, gamma, v, m1, n1)[1:]):
            _chol(L, name)

    alpha, scaled, Rh = _scaled_alpha(M, R, v, m1, n1)
    lam = alpha + cfg.epsilon
    if r_init is not None:
        _chol(_lmis(M, R, lam, gamma, v, m1, n1)[0], "L1")

    best = (alpha, R, Rh, scaled)
    history = [alpha]
    stop_reason = "max_iterations"
    k = 0

    def ratio_met(a):
        return beta > 0 and a / beta < cfg.p

    while k < cfg.k_m:
        if ratio_met(best[0]):
            stop_reason = "ratio"
            break
        lam = (1.0 - cfg.theta) * alpha + cfg.theta * lam
        steps = 0
        try:
            for _ in range(cfg.inner_steps):
                phi = barrier_gradient(M, R, lam, gamma, v, m1, n1)
                delta = line_search(R, phi, lam, gamma, M, v, m1, n1, cfg.step0,
                                    cfg.shrink, cfg.max_backtracks)
                if delta == 0.0:
                    break
                R = hermitize(R - delta * phi)
                steps += 1
        except InfeasibleError:
            # lambda - alpha has shrunk below what L1 can resolve in floating point
            stop_reason = "lambda_collapse"
            break
        if steps == 0:
            # no feasible descent step: lambda would only contract onto alpha
            stop_reason = "stalled"
            break
        k += 1
        alpha, scaled, Rh = _scaled_alpha(M, R, v, m1, n1)
        history.append(alpha)
        if alpha < best[0]:
            best = (alpha, R, Rh, scaled)

    alpha_best, R_best, Rh_best, scaled_best = best
    return UpperBoundResult(
        alpha=alpha_best,
        scaling=kron_identity(Rh_best, m1),
        scaled_matrix=scaled_best,
        r_matrix=R_best,
        converged_by_ratio=ratio_met(alpha_best),
        iterations_used=k,
        alpha_history=history,
        diagnostics={"stop_reason": stop_reason, "lambda": lam,
                     "best_alpha_history": np.minimum.accumulate(history).tolist()},
    )


# --------------------------------------------------------------------------
# Generalized Osborne


def _inner(X, Y):
    return complex(np.vdot(X, Y))


def offdiag_coeffs(Mk, i, j, v, m1):
    """Coefficients of f(s) = ||D_ij Mk D_ij^-1||_F^2 with D_ij = (I + s E_ij) kron I.

    Returns (c0, c1, c2, c3, c4, c5) such that
    f(s) = c0 + 2 Re(c1 s) + c2 |s|^2 + 2 Re(c3 s^2) + 2 Re(c4 s)|s|^2 + c5 |s|^4.
    Indices are zero-based.
    """
    Mk = np.asarray(Mk, dtype=np.complex128)
    if Mk.shape != (v * m1, v * m1):
        raise ValueError("Mk does not match v * m1")
    if not (0 <= i < v and 0 <= j < v) or i == j:
        raise IndexError(f"invalid pair ({i}, {j}) for v={v}")
    B = Mk.reshape(v, m1, v, m1)

    def blk(p, q):
        return B[p, :, q, :]

    c0 = float(np.vdot(Mk, Mk).real)
    Y = blk(j, j) - blk(i, i)
    c1 = _inner(blk(i, j), Y)
    c2 = float(np.vdot(Y, Y).real)
    for q in range(v):
        if q != j:
            c1 += _inner(blk(i, q), blk(j, q))
            c2 += float(np.vdot(blk(j, q), blk(j, q)).real)
    for p in range(v):
        if p != i:
            c1 -= _inner(blk(p, j), blk(p, i))
            c2 += float(np.vdot(blk(p, i), blk(p, i)).real)
    Mji = blk(j, i)
    c3 = -_inner(blk(i, j), Mji)
    c4 = -_inner(Y, Mji)
    c5 = float(np.vdot(Mji, Mji).real)
    return c0, c1, c2, c3, c4, c5


def _real_params(coeffs):
    c0, c1, c2, c3, c4, c5 = coeffs
    return np.array([c0, c1.real, c1.imag, c2, c3.real, c3.imag, c4.real, c4.imag, c5])


def quartic_objective(coeffs, s):
    """f(s) evaluated through the real two-variable form."""
    s = complex(s)
    return kernels.quartic_value(_real_params(coeffs), s.real, s.imag)


def damped_newton_quartic(coeffs, max_iter=50, gtol=1e-10):
    """Local minimizer of the quartic from s = 0; returns 0 if it does not descend."""
    p = _real_params(coeffs)
    x, y, _ = kernels.quartic_newton(p, int(max_iter), float(gtol))
    if not np.isfinite(x) or not np.isfinite(y):
        return 0j
    if kernels.quartic_value(p, x, y) > kernels.quartic_value(p, 0.0, 0.0):
        return 0j
    return complex(x, y)


def gen_osborne(M, v, m1, passes=1, newton_iters=50):
    """Frobenius-type upper bound with a full (non-diagonal) v x v scaling.

    Returns the bound sigma_max(D'' M D''^-1) with D'' = (prod S_ij kron I) D_nr.
    """
    M = np.asarray(M, dtype=np.complex128)
    if M.shape != (v * m1, v * m1):
        raise ValueError("M does not match v * m1")
    osb = osborne_balance(M, [m1] * v)
    Mk = osb.scaled_matrix
    S_total = np.diag(osb.diagnostics["d"]).astype(np.complex128)
    fro = [float(np.vdot(Mk, Mk).real)]
    s_values = {}
    for _ in range(int(passes)):
        for i in range(v):
            for j in range(v):
                if i == j:
                    continue
                s = damped_newton_quartic(offdiag_coeffs(Mk, i, j, v, m1), newton_iters)
                s_values[(i, j)] = s
                if s == 0:
                    fro.append(fro[-1])
                    continue
                S = np.eye(v, dtype=np.complex128)
                S[i, j] = s
                S_inv = np.eye(v, dtype=np.complex128)
                S_inv[i, j] = -s
                Mk = kron_identity(S, m1) @ Mk @ kron_identity(S_inv, m1)
                S_total = S @ S_total
                fro.append(float(np.vdot(Mk, Mk).real))
    D = kron_identity(S_total, m1)
    return UpperBoundResult(
        alpha=sigma_max(Mk),
        scaling=D,
        scaled_matrix=Mk,
        iterations_used=len(s_values),
        diagnostics={"frobenius_sq_history": fro, "s": s_values,
                     "osborne_sweeps": osb.iterations_used},
    )


def block_diag_scaling(d, dims):
    """diag(d_1 I_{dims_1}, ...)."""
    return block_diag(*[di * np.eye(k) for di, k in zip(d, dims)]).astype(np.complex128)
