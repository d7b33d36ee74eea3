import numpy as np
import pytest
from conftest import crandn

from ssvbounds.linalg import sigma_max, singularity_residual, spectral_radius
from ssvbounds.lower import (
    fallback_lower_bound,
    init_vectors,
    power_iteration_repeated_full,
    power_iteration_standard,
)
from ssvbounds.structure import BlockStructure, FullBlock, RepeatedScalar
from ssvbounds.upper import osborne_balance


def check_certificate(M, res):
    assert res.perturbation.norm * res.beta == pytest.approx(1, rel=1e-10)
    assert singularity_residual(M, res.perturbation) <= 1e-6 * sigma_max(M)


def test_init_vectors():
    b0, w0 = init_vectors(np.diag([1.0, 5.0]))
    assert abs(b0[1]) == pytest.approx(1) and np.array_equal(b0, w0)
    b0, _ = init_vectors(np.eye(3))
    assert np.linalg.norm(b0) == pytest.approx(1)


def test_init_vectors_balanced(rng):
    M = crandn(rng, 4, 4)
    D = osborne_balance(M, [1, 2, 1]).scaling
    b0, _ = init_vectors(M, D)
    _, _, Vh = np.linalg.svd(D @ M @ np.linalg.inv(D))
    assert abs(np.vdot(Vh[0].conj(), b0)) == pytest.approx(1, abs=1e-12)


def test_standard_repeated_scalar_diag():
    M = np.diag([2.0, 3.0]).astype(complex)
    res = power_iteration_standard(M, BlockStructure.of(RepeatedScalar(2)))
    assert res.beta == pytest.approx(3, rel=1e-12)
    check_certificate(M, res)


def test_standard_full_block_is_sigma_max(rng):
    M = crandn(rng, 4, 4)
    res = power_iteration_standard(M, BlockStructure.of(FullBlock(4)))
    assert res.beta == pytest.approx(sigma_max(M), rel=1e-8)
    check_certificate(M, res)


def test_standard_nonnormal_repeated_scalar():
    M = np.array([[1, 10], [0, 1]], dtype=complex)
    res = power_iteration_standard(M, BlockStructure.of(RepeatedScalar(2)))
    assert res.beta == pytest.approx(1, rel=1e-12)
    assert res.residual <= 1e-8


def test_standard_zero_matrix():
    res = power_iteration_standard(np.zeros((3, 3)), BlockStructure.of(FullBlock(3)))
    assert res.beta == 0 and not res.converged


def test_standard_rejects_repeated_full():
    from ssvbounds.structure import RepeatedFullBlock

    with pytest.raises(ValueError):
        power_iteration_standard(np.eye(4), BlockStructure.of(RepeatedFullBlock(2, 2)))


def test_standard_mixed_structure(rng):
    M = crandn(rng, 5, 5)
    s = BlockStructure.of(RepeatedScalar(2), FullBlock(3))
    res = power_iteration_standard(M, s)
    assert 0 < res.beta <= sigma_max(M) * (1 + 1e-12)
    check_certificate(M, res)
    b, w = res.diagnostics["final_vectors"]
    assert np.linalg.norm(b) == pytest.approx(1, abs=1e-12)
    assert np.linalg.norm(w) == pytest.approx(1, abs=1e-12)


def test_generalized_special_cases(rng):
    M = crandn(rng, 4, 4)
    res = power_iteration_repeated_full(M, 1, 4)
    assert res.beta == pytest.approx(sigma_max(M), rel=1e-8)
    res = power_iteration_repeated_full(M, 4, 1)
    assert res.beta == pytest.approx(spectral_radius(M), rel=1e-8)
    check_certificate(M, res)


def test_generalized_identity():
    res = power_iteration_repeated_full(np.eye(4), 2, 2)
    assert res.beta == pytest.approx(1)
    # the SVD start makes L(a) L(w)^H rank one, so Q is a rank-one partial isometry
    assert res.perturbation.norm == pytest.approx(1)
    assert res.residual == pytest.approx(0, abs=1e-12)


def test_generalized_certificate_structure(rng):
    M = crandn(rng, 6, 6)
    res = power_iteration_repeated_full(M, 3, 2)
    Q = res.perturbation.block_values[0]
    np.testing.assert_array_equal(res.perturbation.assembled, np.kron(np.eye(3), Q))
    check_certificate(M, res)
    assert res.beta <= sigma_max(M) * (1 + 1e-12)


def test_generalized_shape_error():
    with pytest.raises(ValueError):
        power_iteration_repeated_full(np.eye(5), 2, 2)


def test_best_beta_is_max_of_certified_candidates(rng):
    M = crandn(rng, 6, 6)
    res = power_iteration_repeated_full(M, 3, 2)
    tol = res.diagnostics["residual_tol"]
    ok = [c[2] for c in res.diagnostics["candidates"] if c[3] <= tol and c[1] != "alignment"]
    assert res.beta == max(ok)
    assert res.residual <= 1e-12 * sigma_max(M)


def test_fallback_identity():
    e1 = np.eye(4)[0].astype(complex)
    beta, pert = fallback_lower_bound(e1, e1, np.eye(4), 2, 2)
    assert beta == pytest.approx(1)


def test_fallback_on_early_iterate(rng):
    M = crandn(rng, 6, 6)
    res = power_iteration_repeated_full(M, 3, 2, k_m=2, record=True)
    a, _, _, w = res.diagnostics["trajectory"][-1]
    beta, pert = fallback_lower_bound(a, w, M, 3, 2)
    assert pert.norm * beta == pytest.approx(1, rel=1e-10)
    assert singularity_residual(M, pert) <= 1e-6 * sigma_max(M)


def test_fallback_rayleigh(rng):
    M = crandn(rng, 4, 4)
    w = crandn(rng, 4)
    a = M @ w / np.linalg.norm(M @ w)
    beta, _ = fallback_lower_bound(a, w, M, 1, 4)
    assert beta >= abs(np.vdot(w, M @ w)) / np.vdot(w, w).real - 1e-12


def test_fallback_needs_nonzero():
    with pytest.raises(ValueError):
        fallback_lower_bound(np.zeros(4), np.ones(4), np.eye(4), 2, 2)


def test_rectangular_repeated_block(rng):
    # Delta_1 is 2x3, so M maps C^(2*2)... M is (v*n1) x (v*m1) = 4 x 6
    M = crandn(rng, 2 * 3, 2 * 2)
    res = power_iteration_repeated_full(M, 2, 2, n1=3)
    assert res.perturbation.block_values[0].shape == (2, 3)
    assert res.beta > 0
    check_certificate(M, res)
