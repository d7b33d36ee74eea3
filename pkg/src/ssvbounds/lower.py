"""Power-iteration lower bounds on mu with destabilizing certificates.

Every bound returned here comes with a structured Delta whose norm is
1/beta and for which sigma_min(I - M Delta) is (numerically) zero, so beta is
a lower bound however well the iteration itself converged.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .linalg import q_factor_outer, sigma_max, singularity_residual, stack, unstack
from .structure import (
    BlockStructure,
    FullBlock,
    Perturbation,
    RepeatedFullBlock,
    RepeatedScalar,
)

__all__ = [
    "LowerBoundResult",
    "init_vectors",
    "power_iteration_standard",
    "power_iteration_repeated_full",
    "fallback_lower_bound",
]

DEFAULT_ITERS = 60
STEP_TOL = 1e-9


@dataclass
class LowerBoundResult:
    beta: float
    perturbation: Optional[Perturbation] = field(repr=False)
    residual: float
    converged: bool
    iterations_used: int
    beta_history: list = field(default_factory=list, repr=False)
    diagnostics: dict = field(default_factory=dict, repr=False)


def init_vectors(M, d_star=None):
    """Dominant right singular vector of D M D^-1 (or of M), used as b0 = w0."""
    M = np.asarray(M, dtype=np.complex128)
    if d_star is not None:
        D = np.asarray(d_star, dtype=np.complex128)
        M = D @ M @ np.linalg.inv(D)
    _, _, Vh = np.linalg.svd(M)
    b0 = Vh[0].conj()
    b0 = b0 / np.linalg.norm(b0)
    return b0, b0.copy()


def _unit(x, name):
    x = np.asarray(x, dtype=np.complex128).ravel()
    n = np.linalg.norm(x)
    if n == 0:
        raise ValueError(f"{name} must be nonzero")
    return x / n


def _dominant(DM):
    lam = np.linalg.eigvals(DM)
    k = int(np.argmax(np.abs(lam)))
    return lam[k]


def _zero_result(structure, history, iters, diag):
    zero = Perturbation.build(structure, [np.zeros_like(np.asarray(v_))
                                          for v_ in _zero_values(structure)])
    return LowerBoundResult(0.0, zero, 1.0, False, iters, history, diag)


def _zero_values(structure):
    out = []
    for b in structure.blocks:
        if isinstance(b, RepeatedScalar):
            out.append(np.zeros(()))
        elif isinstance(b, FullBlock):
            out.append(np.zeros((b.dim, b.dim)))
        else:
            out.append(np.zeros((b.m1, b.n1)))
    return out


class _Best:
    """Largest certified beta seen so far."""

    def __init__(self, M, tol):
        self.M = M
        self.tol = tol
        self.beta = 0.0
        self.pert = None
        self.residual = np.inf
        self.candidates = []

    def offer(self, cycle, kind, beta, pert, eligible=True):
        if not np.isfinite(beta) or beta <= 0:
            return
        res = singularity_residual(self.M, pert)
        self.candidates.append((cycle, kind, float(beta), float(res)))
        if eligible and res <= self.tol and beta > self.beta:
            self.beta, self.pert, self.residual = float(beta), pert, float(res)


def _spectral(M, unit):
    lam = _dominant(M @ unit.assembled)
    if lam == 0 or unit.norm == 0:
        return 0.0, None
    return abs(lam), unit.scaled(1.0 / lam)


def _run(M, structure, b, w, k_m, residual_tol, z_update, b_update, shape_of, record,
         refine=None):
    """Shared power-iteration driver.

    shape_of(a, w, b) returns the structured matrix D0 (as block values) with
    b = D0 a. D0 / beta only satisfies det(I - M Delta) = 0 once the iteration
    has converged, so it is recorded but never reported. The reported bound
    comes from D0 / lambda_max(M D0) (or `refine(a, w)`), which is singular up
    to eigensolver accuracy at every cycle.
    """
    if residual_tol is None:
        residual_tol = 1e-6 * sigma_max(M)
    best = _Best(M, residual_tol)
    history = []
    trajectory = []
    converged = False
    k = 0
    MH = M.conj().T
    while k < k_m:
        a = M @ b
        beta_a = np.linalg.norm(a)
        if beta_a == 0.0:
            break
        a = a / beta_a
        z = z_update(a, w)
        w_new = MH @ z
        beta = np.linalg.norm(w_new)
        if beta == 0.0:
            break
        w_new = w_new / beta
        b_new = b_update(a, w_new)
        k += 1
        history.append(float(beta))
        if record:
            trajectory.append((a, z, b_new, w_new))

        unit = Perturbation.build(structure, shape_of(a, w_new, b_new))
        if unit.norm > 0:
            unit = unit.scaled(1.0 / unit.norm)
            best.offer(k, "alignment", beta, unit.scaled(1.0 / beta), eligible=False)
        if refine is None:
            rb, rp = _spectral(M, unit)
        else:
            rb, rp = refine(a, w_new)
        if rp is not None:
            best.offer(k, "spectral", rb, rp)

        step = max(np.linalg.norm(b_new - b), np.linalg.norm(w_new - w))
        b, w = b_new, w_new
        if step < STEP_TOL:
            converged = True
            break

    diag = {"candidates": best.candidates, "residual_tol": residual_tol,
            "final_vectors": (b, w)}
    if record:
        diag["trajectory"] = trajectory
    if best.pert is None:
        return _zero_result(structure, history, k, diag)
    return LowerBoundResult(best.beta, best.pert, best.residual, converged, k, history, diag)


def power_iteration_standard(M, structure, b0=None, w0=None, k_m=DEFAULT_ITERS,
                             residual_tol=None, record=False):
    """Lower bound for block-diagonal structures of repeated scalars and full blocks."""
    M = np.asarray(M, dtype=np.complex128)
    if not isinstance(structure, BlockStructure):
        structure = BlockStructure(tuple(structure))
    if structure.is_repeated_full:
        raise ValueError("use power_iteration_repeated_full for repeated full blocks")
    structure.check_matrix(M)
    if b0 is None or w0 is None:
        b0, w0 = init_vectors(M)
    b0, w0 = _unit(b0, "b0"), _unit(w0, "w0")

    kinds = np.array([kernels.KIND_SCALAR if isinstance(bk, RepeatedScalar) else kernels.KIND_FULL
                      for bk in structure.blocks], dtype=np.int_)
    sl = structure.row_slices()
    starts = np.array([s.start for s in sl], dtype=np.int_)
    stops = np.array([s.stop for s in sl], dtype=np.int_)

    def z_update(a, w):
        return kernels.align(a, w, kinds, starts, stops)

    def b_update(a, w):
        return kernels.align(w, a, kinds, starts, stops)

    def shape_of(a, w, b):
        vals = []
        for bk, s in zip(structure.blocks, sl):
            ai, bi = a[s], b[s]
            if isinstance(bk, RepeatedScalar):
                c = np.vdot(ai, w[s])
                vals.append(c / abs(c) if abs(c) > 0 else 1.0 + 0j)
            else:
                na2 = float(np.vdot(ai, ai).real)
                vals.append(np.outer(bi, ai.conj()) / na2 if na2 > 0
                            else np.zeros((bk.dim, bk.dim), dtype=np.complex128))
        return vals

    return _run(M, structure, b0, w0, int(k_m), residual_tol, z_update, b_update,
                shape_of, record)


def _repeated_dims(M, v, m1, n1):
    n1 = m1 if n1 is None else int(n1)
    if M.shape != (v * n1, v * m1):
        raise ValueError(f"M has shape {M.shape}, expected {(v * n1, v * m1)}")
    return n1


def _q_or_identity(A, B):
    """Q(A B^H), or the identity pattern when the product vanishes."""
    if not np.any(A @ B.conj().T):
        return np.eye(A.shape[0], B.shape[0], dtype=np.complex128)
    return q_factor_outer(A, B)


def power_iteration_repeated_full(M, v, m1, b0=None, w0=None, k_m=DEFAULT_ITERS,
                                  residual_tol=None, n1=None, record=False):
    """Generalized power iteration for Delta = I_v kron Delta_1.

    Works on the restacked vectors L(x) = [x_1, ..., x_v]; a and z have block
    width n1, b and w block width m1.
    """
    M = np.asarray(M, dtype=np.complex128)
    v, m1 = int(v), int(m1)
    n1 = _repeated_dims(M, v, m1, n1)
    structure = BlockStructure.of(RepeatedFullBlock(v, m1, n1))
    if b0 is None or w0 is None:
        b0, w0 = init_vectors(M)
    b0, w0 = _unit(b0, "b0"), _unit(w0, "w0")

    def z_update(a, w):
        La, Lw = stack(a, n1), stack(w, m1)
        return unstack(_q_or_identity(La, Lw) @ Lw)

    def b_update(a, w):
        La, Lw = stack(a, n1), stack(w, m1)
        return unstack(_q_or_identity(Lw, La) @ La)

    def shape_of(a, w, b):
        return [_q_or_identity(stack(w, m1), stack(a, n1))]

    def refine(a, w):
        return fallback_lower_bound(a, w, M, v, m1, n1)

    return _run(M, structure, b0, w0, int(k_m), residual_tol, z_update, b_update,
                shape_of, record, refine)


def fallback_lower_bound(a, w, M, v, m1, n1=None):
    """beta = max(rho(Delta_a^H M), rho(Delta_b M)) from the last iterates.

    Delta_a = I_v kron Q(L(a) L(w)^H), Delta_b = I_v kron Q(L(w) L(a)^H).
    Returns (beta, Perturbation) with the perturbation scaled to norm 1/beta,
    or (0.0, None) when both spectral radii vanish.
    """
    M = np.asarray(M, dtype=np.complex128)
    v, m1 = int(v), int(m1)
    n1 = _repeated_dims(M, v, m1, n1)
    a = np.asarray(a, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    if not np.any(a) or not np.any(w):
        raise ValueError("fallback needs nonzero a and w")
    structure = BlockStructure.of(RepeatedFullBlock(v, m1, n1))
    La, Lw = stack(a, n1), stack(w, m1)
    cands = []
    for Q1 in (_q_or_identity(La, Lw).conj().T, _q_or_identity(Lw, La)):
        D = np.kron(np.eye(v), Q1)
        lam = _dominant(D @ M)
        cands.append((abs(lam), lam, Q1))
    beta, lam, Q1 = max(cands, key=lambda c: c[0])
    if beta == 0:
        return 0.0, None
    return float(beta), Perturbation.build(structure, [Q1 / lam])
