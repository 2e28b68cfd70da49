"""
Dispersion relation of the cascade system and its spectrum.

For plane waves (U, V) exp(lambda t + mu x) the system admits non-trivial
solutions iff

    p(lambda, mu) = lambda (lambda+1)^{k+1} - mu^2 sum_j theta_j (lambda+1)^{k+1-j} = 0.

With mu = i xi the polynomial has real coefficients in lambda, so the root set
Lambda(xi) is closed under conjugation and Lambda(-xi) = Lambda(xi).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from numpy.polynomial import polynomial as P
from scipy.optimize import linear_sum_assignment

from analysis.errors import ConvergenceError
from analysis.kernel_model import KernelSpec
from analysis.settings import get_settings

logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class DispersionPolynomial:
    """Closed-form evaluator and coefficient extractor for p(lambda, mu)."""
    spec: KernelSpec

    def __call__(self, lam, mu):
        return eval_p(self.spec, lam, mu)

    @property
    def degree(self) -> int:
        return self.spec.k + 2

    def coefficients(self, xi: float) -> np.ndarray:
        return coefficients(self.spec, xi)


@dataclass(frozen=True)
class Spectrum:
    """
    Branch-tracked roots over a frequency grid.

    Attributes:
        xi_grid: (n,) frequencies
        branches: (n, k+2) complex roots; column b is branch b
        envelope: (n,) max real part per frequency
    """
    xi_grid: np.ndarray
    branches: np.ndarray
    envelope: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        n, m = self.branches.shape
        return pd.DataFrame({
            "xi": np.repeat(self.xi_grid, m),
            "branch_index": np.tile(np.arange(m), n),
            "re_lambda": self.branches.real.ravel(),
            "im_lambda": self.branches.imag.ravel(),
            "envelope": np.repeat(self.envelope, m),
        })

    def envelope_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"xi": self.xi_grid, "max_re": self.envelope})


def eval_p(spec: KernelSpec, lam, mu):
    """Evaluate p(lambda, mu) (scalars or broadcastable arrays)."""
    k = spec.k
    shifted = lam + 1
    flux = sum(theta * shifted ** (k + 1 - j) for j, theta in enumerate(spec.theta, start=1))
    return lam * shifted ** (k + 1) - mu ** 2 * flux


def _coefficient_parts(spec: KernelSpec):
    """Ascending coefficients of lambda(lambda+1)^{k+1} and of sum_j theta_j (lambda+1)^{k+1-j}."""
    k = spec.k
    base = P.polymulx(P.polypow([1.0, 1.0], k + 1))
    flux = np.zeros(k + 3)
    for j, theta in enumerate(spec.theta, start=1):
        term = P.polypow([1.0, 1.0], k + 1 - j)
        flux[:term.size] += theta * term
    return base, flux


def coefficients(spec: KernelSpec, xi: float) -> np.ndarray:
    """Monic coefficients of p(., i xi), highest degree first."""
    base, flux = _coefficient_parts(spec)
    return (base + xi ** 2 * flux)[::-1]


def _horner(coeffs, z):
    """Evaluate rows of highest-first coefficients at z (same leading shape)."""
    value = np.zeros_like(z)
    for i in range(coeffs.shape[-1]):
        value = value * z + coeffs[..., i, None]
    return value


def _residual_ratio(coeffs, roots, tol):
    value = np.abs(_horner(coeffs, roots))
    size = np.abs(roots)
    degree = coeffs.shape[-1] - 1
    # scale grows with the coefficient magnitudes once xi^2 dominates them
    scale = np.maximum((1 + size) ** degree, _horner(np.abs(coeffs), size))
    return value / (tol * scale)


def _polish(coeffs, roots, max_iter: int):
    """
    Newton steps that never move a root more than half way to its nearest neighbour.

    Stops after max_iter steps or as soon as no root lowers its residual.
    """
    derivative = coeffs[..., :-1] * np.arange(coeffs.shape[-1] - 1, 0, -1)
    for _ in range(max_iter):
        gaps = np.abs(roots[..., :, None] - roots[..., None, :])
        gaps[..., np.arange(roots.shape[-1]), np.arange(roots.shape[-1])] = np.inf
        nearest = gaps.min(axis=-1)
        value = _horner(coeffs, roots)
        slope = _horner(derivative, roots)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = value / slope
        safe = np.isfinite(step) & (np.abs(step) < 0.5 * nearest)
        candidate = np.where(safe, roots - step, roots)
        improved = safe & (np.abs(_horner(coeffs, candidate)) < np.abs(value))
        if not improved.any():
            break
        roots = np.where(improved, candidate, roots)
    return roots


def roots_batch(spec: KernelSpec, xi) -> np.ndarray:
    """
    Roots of p(., i xi) for every xi of an array.

    Companion-matrix eigenvalues are computed for the whole stack and then
    polished with guarded Newton steps. xi = 0 returns the exact roots
    {0, -1 (k+1 times)}.

    Returns:
        np.ndarray: (n, k+2) complex roots

    Raises:
        ConvergenceError: if a root misses the residual contract
    """
    settings = get_settings()
    spec = spec.normalized()
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    degree = spec.k + 2
    base, flux = _coefficient_parts(spec)
    coeffs = (base[None, :] + (xi ** 2)[:, None] * flux[None, :])[:, ::-1]

    companion = np.zeros((xi.size, degree, degree))
    companion[:, 0, :] = -coeffs[:, 1:]
    companion[:, np.arange(1, degree), np.arange(degree - 1)] = 1.0
    roots = np.linalg.eigvals(companion).astype(complex)
    roots = _polish(coeffs, roots, settings.max_iter)

    at_zero = xi == 0
    if np.any(at_zero):
        exact = np.concatenate([[0.0], -np.ones(degree - 1)]).astype(complex)
        roots[at_zero] = exact

    ratio = _residual_ratio(coeffs, roots, settings.root_tol)
    ratio[at_zero] = 0.0
    worst = ratio.max(axis=1)
    if np.any(worst > 1.0):
        bad = int(np.argmax(worst))
        raise ConvergenceError(float(worst[bad] * settings.root_tol), xi=float(xi[bad]))
    logger.debug("Solved %d dispersion polynomials of degree %d", xi.size, degree)
    return roots


def roots_at(spec: KernelSpec, xi: float) -> np.ndarray:
    """All k+2 roots of p(., i xi), closed under conjugation."""
    return roots_batch(spec, [xi])[0]


def default_grid() -> np.ndarray:
    """xi = 0 followed by the logarithmic grid from the settings."""
    settings = get_settings()
    return np.concatenate([[0.0], np.geomspace(settings.xi_min, settings.xi_max, settings.xi_points)])


def frequency_grid(xi_min: float, xi_max: float, n_points: int, log_spacing: bool) -> np.ndarray:
    if not 0 <= xi_min < xi_max:
        raise ValueError(f"need 0 <= xi_min < xi_max, got [{xi_min}, {xi_max}]")
    if n_points < 2:
        raise ValueError(f"n_points must be at least 2, got {n_points}")
    if not log_spacing:
        return np.linspace(xi_min, xi_max, n_points)
    if xi_min > 0:
        return np.geomspace(xi_min, xi_max, n_points)
    lower = min(get_settings().xi_min, xi_max * 1e-3)
    return np.concatenate([[0.0], np.geomspace(lower, xi_max, n_points - 1)])


def _match_branches(roots: np.ndarray) -> np.ndarray:
    """Reorder columns so consecutive rows pair by minimal total distance."""
    tracked = np.empty_like(roots)
    order = np.lexsort((-roots[0].imag, -roots[0].real))
    tracked[0] = roots[0][order]
    for i in range(1, roots.shape[0]):
        cost = np.abs(tracked[i - 1][:, None] - roots[i][None, :])
        _, cols = linear_sum_assignment(cost)
        tracked[i] = roots[i][cols]
    return tracked


def spectrum_on_grid(spec: KernelSpec, xi_grid) -> Spectrum:
    xi_grid = np.asarray(xi_grid, dtype=float)
    try:
        roots = roots_batch(spec, xi_grid)
    except ConvergenceError as e:
        logger.error("Root finding failed at xi=%s (residual %.3e)", e.xi, e.worst_residual)
        raise
    branches = _match_branches(roots)
    envelope = branches.real.max(axis=1)
    envelope[xi_grid == 0] = 0.0
    return Spectrum(xi_grid=xi_grid, branches=branches, envelope=envelope)


def spectrum(spec: KernelSpec, xi_min: float, xi_max: float, n_points: int, log_spacing: bool = True) -> Spectrum:
    """
    Sweep Lambda(xi) over a grid and track its branches.

    With log spacing and xi_min = 0 the grid is xi = 0 followed by
    n_points - 1 logarithmically spaced frequencies.
    """
    grid = frequency_grid(xi_min, xi_max, n_points, log_spacing)
    return spectrum_on_grid(spec, grid)


def envelope(spec: KernelSpec, xi) -> np.ndarray:
    """max Re lambda over Lambda(xi), without branch tracking."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    values = roots_batch(spec, xi).real.max(axis=1)
    values[xi == 0] = 0.0
    return values


def slow_branch_expansion(spec: KernelSpec) -> float:
    """
    Diffusion coefficient theta . 1 of the branch through lambda = 0.

    The branch satisfies lambda_0(xi) = -(theta . 1) xi^2 + o(xi^2).
    """
    return float(sum(spec.normalized().theta))


@dataclass(frozen=True)
class FastBranchLimit:
    speed: float
    damping: float


def fast_branch_limit(spec: KernelSpec) -> FastBranchLimit:
    """
    Large-frequency behaviour of the two wave-like branches.

    lambda = +-i sqrt(theta_1) xi + C + o(1) with C = -(theta_1 - theta_2) / (2 theta_1).
    """
    theta = spec.normalized().theta
    theta1 = theta[0]
    theta2 = theta[1] if len(theta) > 1 else 0.0
    return FastBranchLimit(speed=math.sqrt(theta1), damping=-(theta1 - theta2) / (2 * theta1))


def slow_branch_limits(spec: KernelSpec) -> np.ndarray:
    """Limits of the k bounded branches as xi -> inf: the roots of Q."""
    from analysis.stability import build_Q

    q = np.asarray(build_Q(spec), dtype=float)
    if q.size <= 1:
        return np.empty(0, dtype=complex)
    return np.roots(q[::-1]).astype(complex)
