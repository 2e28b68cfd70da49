"""
Tests for the local cascade system and the chain-trick quadrature.
"""
import numpy as np
import pytest
from scipy.integrate import solve_ivp

from analysis.chain_trick import (
    build_system,
    chain_transforms,
    chain_trick_residual,
    diagonalize,
    eigen_structure,
    gamma_tail_mass,
    matrices_to_dict,
)
from analysis.errors import HyperbolicityError, InsufficientHistoryError
from analysis.kernel_model import KernelSpec


def test_exponential_kernel_gives_cattaneo_system():
    m = build_system(KernelSpec.from_theta((2.5,)))
    np.testing.assert_array_equal(m.a0, np.eye(2))
    np.testing.assert_array_equal(m.a1, [[0.0, 2.5], [1.0, 0.0]])
    np.testing.assert_array_equal(m.b, np.diag([0.0, 1.0]))


def test_k1_structure():
    m = build_system(KernelSpec.from_theta((1.0, 1.0)))
    np.testing.assert_array_equal(m.a1[0], [0.0, 1.0, 1.0])
    assert m.b[1, 1] == m.b[2, 2] == 1.0
    assert m.b[2, 1] == -1.0
    assert m.size == 3


def test_characteristic_polynomial_of_principal_part(rng):
    for _ in range(20):
        k = int(rng.integers(0, 6))
        theta = np.concatenate([[rng.uniform(0.1, 3.0)], rng.uniform(0, 2, size=k)])
        m = build_system(KernelSpec.from_theta(theta))
        for lam in rng.normal(size=3):
            expected = (-lam) ** k * (lam ** 2 - theta[0])
            assert np.linalg.det(m.a1 - lam * m.a0) == pytest.approx(expected, abs=1e-10 * max(1, abs(expected)))


def test_reference_determinant_k2():
    m = build_system(KernelSpec.from_theta((1.0, 0.4, 1.0)))
    lam = 0.7
    assert np.linalg.det(m.a1 - lam * m.a0) == pytest.approx(lam ** 2 * (lam ** 2 - 1), abs=1e-12)


def test_eigen_structure_reference_cases():
    spec = KernelSpec.from_theta((1.0, 0.0, 0.0))
    eig = eigen_structure(build_system(spec), spec)
    assert eig.wave_speeds == (-1.0, 1.0)
    assert eig.zero_multiplicity == 2

    spec = KernelSpec.from_theta((4.0,))
    eig = eigen_structure(build_system(spec), spec)
    assert eig.wave_speeds == (-2.0, 2.0)
    assert eig.zero_multiplicity == 0


def test_eigenvector_for_positive_speed():
    spec = KernelSpec.from_theta((0.25, 0.1))
    m = build_system(spec)
    eig = eigen_structure(m, spec)
    np.testing.assert_allclose(eig.eigenvectors[:, 1], [1.0, 2.0, 0.0])
    np.testing.assert_allclose(m.a1 @ eig.eigenvectors[:, 1], 0.5 * eig.eigenvectors[:, 1])


def test_eigenvectors_diagonalise_principal_part(rng):
    for _ in range(20):
        k = int(rng.integers(0, 6))
        theta = np.concatenate([[rng.uniform(0.1, 3.0)], rng.uniform(0, 2, size=k)])
        spec = KernelSpec.from_theta(theta)
        m = build_system(spec)
        eig = eigen_structure(m, spec)
        c = eig.eigenvectors
        assert np.linalg.matrix_rank(c) == k + 2
        transformed = np.linalg.solve(c, np.linalg.solve(m.a0, m.a1) @ c)
        np.testing.assert_allclose(transformed, np.diag(eig.eigenvalues), atol=1e-10)


def test_diagonalize_returns_lower_order_matrix():
    spec = KernelSpec.from_theta((1.0, 0.4, 1.0))
    m = build_system(spec)
    c, d, e = diagonalize(m, spec)
    np.testing.assert_allclose(np.diag(d), [-1.0, 1.0, 0.0, 0.0])
    np.testing.assert_allclose(c @ e, m.b @ c, atol=1e-12)


def test_vanishing_first_weight_is_not_hyperbolic():
    spec = KernelSpec(k=2, theta=(0.0, 1.0, 1.0), strict=False)
    with pytest.raises(HyperbolicityError) as exc:
        eigen_structure(build_system(spec), spec)
    assert "case (i)" in exc.value.case
    assert "multiplicity 4" in exc.value.case


def test_negative_first_weight_is_not_hyperbolic():
    spec = KernelSpec(k=0, theta=(-1.0,), strict=False)
    with pytest.raises(HyperbolicityError):
        eigen_structure(build_system(spec), spec)


def test_matrices_to_dict_is_json_ready():
    payload = matrices_to_dict(build_system(KernelSpec.from_theta((1.0, 0.5))))
    assert payload["a1"][0] == [0.0, 1.0, 0.5]
    assert set(payload) == {"a0", "a1", "b"}


# ============================================================================
# Chain-trick quadrature
# ============================================================================

def test_gamma_tail_mass():
    assert gamma_tail_mass(1, 0.0) == pytest.approx(1.0)
    assert gamma_tail_mass(1, 2.0) == pytest.approx(np.exp(-2.0))


def test_short_history_is_rejected():
    spec = KernelSpec.from_theta((1.0, 0.4, 1.0))
    with pytest.raises(InsufficientHistoryError) as exc:
        chain_trick_residual(spec, np.ones_like, t0=5.0, t_end=1.0, h=1e-2)
    assert exc.value.tail_mass > 1e-10


def test_constant_history_is_fixed_point():
    spec = KernelSpec.from_theta((1.0, 0.4, 1.0))
    report = chain_trick_residual(spec, np.ones_like, t0=40.0, t_end=2.0, h=2e-4)
    assert len(report.residuals) == 3
    assert report.max_residual <= 1e-8


def test_cosine_history_through_exponential_kernel():
    spec = KernelSpec.from_theta((1.0,))
    t, psi = chain_transforms(spec, np.cos, t0=40.0, t_end=5.0, h=1e-3)
    np.testing.assert_allclose(psi[1], (np.cos(t) + np.sin(t)) / 2, atol=1e-6)


def test_oscillating_history_multiplier_and_residual_convergence():
    spec = KernelSpec.from_theta((1.0, 0.5, 0.5))

    def mode(x):
        return np.exp(1j * x)

    t, psi = chain_transforms(spec, mode, t0=50.0, t_end=5.0, h=1e-3)
    for j in range(1, 4):
        np.testing.assert_allclose(psi[j], (1 + 1j) ** (-j) * np.exp(1j * t), atol=1e-6)

    coarse = chain_trick_residual(spec, mode, t0=50.0, t_end=5.0, h=1e-2).max_residual
    fine = chain_trick_residual(spec, mode, t0=50.0, t_end=5.0, h=5e-3).max_residual
    assert fine < 0.6 * coarse


def test_cascade_without_input_decays():
    # psi_0 = 0: the cascade is lower triangular with eigenvalue -1
    k = 3

    def rhs(_, psi):
        shifted = np.concatenate([[0.0], psi[:-1]])
        return shifted - psi

    solution = solve_ivp(rhs, (0, 30), np.ones(k + 1), rtol=1e-10, atol=1e-20, dense_output=True)
    late = np.abs(solution.sol(30.0)).max()
    assert late < 1e-8
    rate = np.log(np.abs(solution.sol(30.0)[0])) - np.log(np.abs(solution.sol(20.0)[0]))
    assert rate / 10 == pytest.approx(-1.0, abs=1e-6)
