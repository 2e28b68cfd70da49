"""
Tests for Gamma densities, kernel evaluation and the k=2 shape regions.
"""
import math

import numpy as np
import pytest
from scipy import integrate

from analysis.errors import DomainError, KernelSpecError, UnsupportedOrderError
from analysis.kernel_model import (
    KernelSpec,
    classify_shape_k2,
    eta_coordinates,
    eval_gamma,
    eval_kernel,
    in_convex_region,
    in_monotone_region,
    kernel_derivative_polynomials_k2,
    rescale_time,
    sample_gamma_family,
    spec_from_eta,
    total_mass,
)


# ============================================================================
# KernelSpec
# ============================================================================

def test_spec_rejects_wrong_length():
    with pytest.raises(KernelSpecError) as exc:
        KernelSpec(k=2, theta=(1.0, 0.4))
    assert exc.value.field == "theta"


@pytest.mark.parametrize("theta", [(0.0, 0.1), (-1.0, 0.1), (1.0, -0.1)])
def test_spec_rejects_invalid_weights(theta):
    with pytest.raises(KernelSpecError):
        KernelSpec(k=1, theta=theta)


def test_spec_rejects_non_positive_tau():
    with pytest.raises(KernelSpecError) as exc:
        KernelSpec(k=0, theta=(1.0,), tau=0.0)
    assert exc.value.field == "tau"


def test_spec_non_strict_allows_degenerate_weights():
    spec = KernelSpec(k=1, theta=(0.0, 1.0), strict=False)
    assert spec.theta == (0.0, 1.0)


def test_from_dict_infers_k_and_round_trips():
    spec = KernelSpec.from_dict({"theta": [1, 0.4, 1.0]})
    assert spec.k == 2
    assert spec.tau == 1.0
    assert KernelSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("payload, field", [
    ({}, "theta"),
    ({"theta": []}, "theta"),
    ({"theta": "1,2"}, "theta"),
    ({"theta": [1.0], "tau": "fast"}, "tau"),
    ({"k": 3, "theta": [1.0, 0.5]}, "theta"),
])
def test_from_dict_names_the_bad_field(payload, field):
    with pytest.raises(KernelSpecError) as exc:
        KernelSpec.from_dict(payload)
    assert exc.value.field == field


def test_normalized_scales_weights_by_tau():
    spec = KernelSpec(k=1, theta=(1.0, 0.5), tau=2.0)
    unit = spec.normalized()
    assert unit.tau == 1.0
    assert unit.theta == (2.0, 1.0)
    assert unit.normalized() is unit


def test_rescale_time():
    assert rescale_time(2.0, 3.0) == 1.5
    np.testing.assert_allclose(rescale_time(0.5, [1.0, 2.0]), [2.0, 4.0])
    with pytest.raises(DomainError):
        rescale_time(0.0, 1.0)


# ============================================================================
# Gamma densities and kernels
# ============================================================================

def test_eval_gamma_reference_values():
    assert eval_gamma(1, 1.0, 0.0) == 1.0
    assert eval_gamma(2, 1.0, 0.0) == 0.0
    assert eval_gamma(2, 1.0, 1.0) == pytest.approx(math.exp(-1), rel=1e-12)


@pytest.mark.parametrize("args", [(0, 1.0, 1.0), (1, 0.0, 1.0), (1, -1.0, 1.0), (2, 1.0, -0.5), (1.5, 1.0, 1.0)])
def test_eval_gamma_domain_errors(args):
    with pytest.raises(DomainError):
        eval_gamma(*args)


@pytest.mark.parametrize("j", [1, 2, 3, 5])
@pytest.mark.parametrize("tau", [0.5, 1.0, 2.0])
def test_eval_gamma_has_unit_mass(j, tau):
    upper = 60 * tau * (j + 5)
    peak = [tau * (j - 1)] if j > 1 else None
    mass, _ = integrate.quad(lambda s: eval_gamma(j, tau, s), 0, upper, limit=400, points=peak,
                             epsabs=1e-12, epsrel=1e-12)
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert np.all(eval_gamma(j, tau, np.linspace(0, upper, 500)) >= 0)


def test_eval_kernel_matches_k2_closed_form():
    spec = KernelSpec(k=2, theta=(1.0, 0.2, 0.5))
    assert eval_kernel(spec, 2.0) == pytest.approx(2.4 * math.exp(-2), rel=1e-12)
    assert eval_kernel(KernelSpec(k=2, theta=(1.0, 0.4, 1.0)), 0.0) == 1.0


def test_eval_kernel_exponential_case():
    t = np.linspace(0, 5, 11)
    np.testing.assert_allclose(eval_kernel(KernelSpec(k=0, theta=(3.0,)), t), 3.0 * np.exp(-t), rtol=1e-12)


@pytest.mark.parametrize("theta, expected", [((1, 0, 0), 1.0), ((1, 0.4, 1.0), 2.4), ((0.5, 0.25, 0.25), 1.0)])
def test_total_mass(theta, expected):
    assert total_mass(KernelSpec.from_theta(theta)) == pytest.approx(expected)


def test_total_mass_matches_quadrature():
    spec = KernelSpec.from_theta((0.5, 0.25, 0.25))
    mass, _ = integrate.quad(lambda s: eval_kernel(spec, s), 0, 60, limit=200, epsabs=1e-12, epsrel=1e-12)
    assert mass == pytest.approx(total_mass(spec), abs=1e-8)


def test_sample_gamma_family_columns():
    frame = sample_gamma_family([1, 2, 3, 4], 1.0, np.linspace(0, 10, 101))
    assert list(frame.columns) == ["t", "gamma_1", "gamma_2", "gamma_3", "gamma_4"]
    assert frame["gamma_1"].iloc[0] == 1.0
    # the peak of shape j sits at t = j - 1
    assert frame["t"][frame["gamma_3"].idxmax()] == pytest.approx(2.0)


# ============================================================================
# Shape classification (k = 2)
# ============================================================================

def test_eta_coordinates():
    assert eta_coordinates(KernelSpec.from_theta((2.0, 1.0, 3.0))).eta == (0.5, 1.5)
    assert spec_from_eta(0.4, 1.0, theta1=2.0).theta == (2.0, 0.8, 2.0)


def test_reference_kernels_shapes(reference_points):
    for (eta2, eta3), (monotone, convex, _) in reference_points.items():
        report = classify_shape_k2(spec_from_eta(eta2, eta3))
        assert report.monotone_decreasing is monotone, (eta2, eta3)
        assert report.convex is convex, (eta2, eta3)


def test_classify_shape_requires_k2():
    with pytest.raises(UnsupportedOrderError):
        classify_shape_k2(KernelSpec.from_theta((1.0, 0.5)))


def test_boundary_points_are_inside():
    assert in_monotone_region(1.0, 0.0)
    assert in_monotone_region(0.0, 2.0)
    assert in_convex_region(0.5, 0.0)
    assert not in_monotone_region(1.01, 0.5)


def test_regions_vectorise():
    e2 = np.array([0.2, 0.8])
    e3 = np.array([0.5, 2.0])
    np.testing.assert_array_equal(in_monotone_region(e2, e3), [True, False])
    np.testing.assert_array_equal(in_convex_region(e2, e3), [True, False])


def test_derivative_polynomials_match_finite_differences():
    eta2, eta3 = 0.6, 1.5
    p1, p2 = kernel_derivative_polynomials_k2(eta2, eta3)
    spec = spec_from_eta(eta2, eta3)
    t = np.linspace(0.5, 5.0, 10)
    h = 1e-4
    g1 = (eval_kernel(spec, t + h) - eval_kernel(spec, t - h)) / (2 * h)
    g2 = (eval_kernel(spec, t + h) - 2 * eval_kernel(spec, t) + eval_kernel(spec, t - h)) / h ** 2
    np.testing.assert_allclose(g1, -np.exp(-t) * np.polyval(p1[::-1], t) / 2, atol=1e-7)
    np.testing.assert_allclose(g2, np.exp(-t) * np.polyval(p2[::-1], t) / 2, atol=1e-5)


def _near_shape_boundary(eta2, eta3, band=0.02):
    distances = [
        abs(eta2 - 1),
        abs(eta2 - eta3),
        abs(eta2 ** 2 + (eta3 - 1) ** 2 - 1),
        abs(2 * eta2 - eta3 - 1),
        abs(eta2 - 2 * eta3),
        abs(2 * eta2 ** 2 + 4 * (eta3 - 0.5) ** 2 - 1),
        eta3,
    ]
    return min(distances) < band


def test_shape_regions_agree_with_sign_sampling(rng):
    h = 1e-4
    t = np.concatenate([[h], np.arange(0.01, 50.0, 0.01)])
    checked = 0
    for eta2, eta3 in rng.uniform(0, 2, size=(1000, 2)):
        if _near_shape_boundary(eta2, eta3):
            continue
        spec = spec_from_eta(eta2, eta3)
        plus, mid, minus = eval_kernel(spec, t + h), eval_kernel(spec, t), eval_kernel(spec, t - h)
        first = np.exp(t) * (plus - minus) / (2 * h)
        second = np.exp(t) * (plus - 2 * mid + minus) / h ** 2
        assert (first.max() <= 1e-6) == bool(in_monotone_region(eta2, eta3)), (eta2, eta3)
        assert (second.min() >= -1e-4) == bool(in_convex_region(eta2, eta3)), (eta2, eta3)
        checked += 1
    assert checked > 500


def test_k1_second_derivative_changes_sign():
    theta1, theta2 = 1.0, 0.7
    spec = KernelSpec.from_theta((theta1, theta2))
    crossing = 2 - theta1 / theta2
    h = 1e-3

    def second(t):
        return (eval_kernel(spec, t + h) - 2 * eval_kernel(spec, t) + eval_kernel(spec, t - h)) / h ** 2

    assert second(crossing - 0.1) < 0
    assert second(crossing + 0.1) > 0
    assert abs(second(crossing)) < 1e-5
