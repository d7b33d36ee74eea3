"""Dense complex matrix helpers and the repeated-block structure operators."""

import numpy as np

__all__ = [
    "as_matrix",
    "kron_identity",
    "block_trace",
    "stack",
    "unstack",
    "q_factor",
    "q_factor_outer",
    "sigma_max",
    "sigma_min",
    "spectral_radius",
    "singularity_residual",
    "hermitian_sqrt",
    "hermitize",
]

EPS = np.finfo(float).eps


def as_matrix(x, name="matrix"):
    """Return `x` as a read-only 2-D complex128 array, rejecting NaN/Inf."""
    a = np.array(x, dtype=np.complex128, copy=True)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"{name} must be a nonempty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    a.setflags(write=False)
    return a


def _square(a, name="matrix"):
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")


def kron_identity(S, m1):
    """S kron I_m1."""
    S = np.asarray(S, dtype=np.complex128)
    if S.ndim != 2:
        raise ValueError("S must be 2-D")
    if int(m1) < 1:
        raise ValueError("m1 must be >= 1")
    return np.kron(S, np.eye(int(m1)))


def block_trace(H, v, m1):
    """v x v matrix of traces of the m1 x m1 blocks of H."""
    H = np.asarray(H, dtype=np.complex128)
    if H.shape != (v * m1, v * m1):
        raise ValueError(f"block_trace: H has shape {H.shape}, expected {(v * m1, v * m1)}")
    return np.trace(H.reshape(v, m1, v, m1), axis1=1, axis2=3)


def stack(y, m1):
    """Restack y = [y_1; ...; y_v] into the m1 x v matrix [y_1, ..., y_v]."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError("stack expects a 1-D vector")
    if m1 < 1 or y.size % m1:
        raise ValueError(f"length {y.size} is not divisible by m1={m1}")
    return y.reshape(-1, m1).T


def unstack(Y):
    """Inverse of `stack`: concatenate the columns of Y."""
    Y = np.asarray(Y)
    if Y.ndim != 2:
        raise ValueError("unstack expects a 2-D array")
    return Y.T.reshape(-1)


def _default_tol(shape):
    return max(shape) * EPS


def q_factor(G, rank_tol=None):
    """U1 V1^H from the SVD of G, dropping singular values <= rank_tol * sigma_max."""
    G = np.asarray(G, dtype=np.complex128)
    if rank_tol is None:
        rank_tol = _default_tol(G.shape)
    U, s, Vh = np.linalg.svd(G, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise ValueError("q_factor of a zero matrix is undefined")
    k = int(np.count_nonzero(s > rank_tol * s[0]))
    return U[:, :k] @ Vh[:k, :]


def q_factor_outer(A, B, rank_tol=None):
    """Q(A B^H) without forming the (possibly large, low-rank) product.

    Both factors are reduced by thin QR first, so the SVD only sees the
    small core and the exact null space of A B^H never reaches the rank test.
    """
    A = np.asarray(A, dtype=np.complex128)
    B = np.asarray(B, dtype=np.complex128)
    p, k = A.shape
    if k >= p and k >= B.shape[0]:
        return q_factor(A @ B.conj().T, rank_tol)
    Qa, Ra = np.linalg.qr(A)
    Qb, Rb = np.linalg.qr(B)
    core = q_factor(Ra @ Rb.conj().T, rank_tol)
    return Qa @ core @ Qb.conj().T


def sigma_max(M):
    return float(np.linalg.norm(np.asarray(M), 2))


def sigma_min(M):
    return float(np.linalg.svd(np.asarray(M), compute_uv=False)[-1])


def spectral_radius(M):
    M = np.asarray(M)
    _square(M)
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def singularity_residual(M, delta):
    """sigma_min(I - M Delta); zero means Delta destabilizes M.

    `delta` may be a `Perturbation` or a plain matrix.
    """
    D = getattr(delta, "assembled", delta)
    M = np.asarray(M)
    D = np.asarray(D)
    if M.shape[1] != D.shape[0] or D.shape[1] != M.shape[0]:
        raise ValueError(f"shape mismatch: M {M.shape}, Delta {D.shape}")
    return sigma_min(np.eye(M.shape[0]) - M @ D)


def hermitize(A):
    return 0.5 * (A + A.conj().T)


def hermitian_sqrt(R, inverse=False):
    """R^{1/2} (or R^{-1/2}) of a Hermitian positive definite matrix."""
    lam, V = np.linalg.eigh(hermitize(np.asarray(R)))
    if lam[0] <= 0:
        raise ValueError("matrix is not positive definite")
    f = lam ** (-0.5 if inverse else 0.5)
    return (V * f) @ V.conj().T
