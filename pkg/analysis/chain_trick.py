"""
Local hyperbolic system equivalent to the heat equation with a Gamma-combination
memory kernel.

The flux history is replaced by the cascade psi_j' = psi_{j-1} - psi_j, giving
A0 dW/dt + A1 dW/dx + B W = 0 for W = (u, psi_1, ..., psi_{k+1}).
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy import signal, stats

from analysis.errors import HyperbolicityError, InsufficientHistoryError
from analysis.kernel_model import KernelSpec, eval_gamma

logger = logging.getLogger(__name__)

HISTORY_TAIL_TOL = 1e-10


@dataclass(frozen=True)
class SystemMatrices:
    """The (k+2)x(k+2) triple (A0, A1, B)."""
    a0: np.ndarray
    a1: np.ndarray
    b: np.ndarray

    @property
    def size(self) -> int:
        return self.a0.shape[0]


@dataclass(frozen=True)
class EigenStructure:
    """
    Eigenstructure of A0^{-1} A1.

    ``eigenvectors`` holds one column per eigenvalue, ordered as
    (-sqrt(theta_1), +sqrt(theta_1), 0, ..., 0).
    """
    wave_speeds: Tuple[float, float]
    zero_multiplicity: int
    eigenvectors: np.ndarray

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.concatenate([self.wave_speeds, np.zeros(self.zero_multiplicity)])


@dataclass(frozen=True)
class ResidualReport:
    """Residuals of psi_j' = psi_{j-1} - psi_j for the quadrature-built psi_j."""
    residuals: Tuple[float, ...]
    h: float
    t0: float

    @property
    def max_residual(self) -> float:
        return max(self.residuals)


def build_system(spec: KernelSpec) -> SystemMatrices:
    """
    Assemble A0, A1 and B for the cascade system.

    Rows: u_t + sum_j theta_j (psi_j)_x = 0, psi_1 + (psi_1)_t + u_x = 0,
    (psi_j)_t + psi_j - psi_{j-1} = 0 for j >= 2.
    """
    n = spec.k + 2
    a0 = np.eye(n)
    a1 = np.zeros((n, n))
    a1[0, 1:] = spec.theta
    a1[1, 0] = 1.0
    b = np.eye(n)
    b[0, 0] = 0.0
    for row in range(2, n):
        b[row, row - 1] = -1.0
    return SystemMatrices(a0=a0, a1=a1, b=b)


def eigen_structure(m: SystemMatrices, spec: KernelSpec) -> EigenStructure:
    """
    Wave speeds and the explicit eigenvector basis of A0^{-1} A1.

    Speed eigenvectors: u=1, psi_1 = +-1/sqrt(theta_1), other psi_j = 0.
    Kernel eigenvectors (i = 2..k+1): u=0, psi_1 = -theta_i, psi_j = theta_1 delta_ij.

    Raises:
        HyperbolicityError: if theta_1 <= 0
    """
    theta1 = spec.theta[0]
    k = spec.k
    if theta1 == 0:
        raise HyperbolicityError(
            theta1,
            f"case (i): single eigenvalue 0 with algebraic multiplicity {k + 2} "
            f"and geometric multiplicity {k}",
        )
    if theta1 < 0:
        raise HyperbolicityError(theta1, "wave speeds +-i*sqrt(|theta_1|) are not real")

    kappa = math.sqrt(theta1)
    n = m.size
    vectors = np.zeros((n, n))
    for col, sign in enumerate((-1.0, 1.0)):
        vectors[0, col] = 1.0
        vectors[1, col] = sign / kappa
    for i in range(2, k + 2):
        # column i holds the eigenvector attached to theta_i (W index i)
        vectors[1, i] = -spec.theta[i - 1]
        vectors[i, i] = theta1
    return EigenStructure(wave_speeds=(-kappa, kappa), zero_multiplicity=k, eigenvectors=vectors)


def diagonalize(m: SystemMatrices, spec: KernelSpec):
    """
    Change of coordinates Z = C^{-1} W diagonalising the principal part.

    Returns:
        tuple: (C, D, E) with D = diag(-sqrt(theta_1), sqrt(theta_1), 0, ..., 0)
        and E = C^{-1} A0^{-1} B C
    """
    eig = eigen_structure(m, spec)
    c = eig.eigenvectors
    d = np.diag(eig.eigenvalues)
    e = np.linalg.solve(c, np.linalg.solve(m.a0, m.b) @ c)
    return c, d, e


def matrices_to_dict(m: SystemMatrices) -> dict:
    return {"a0": m.a0.tolist(), "a1": m.a1.tolist(), "b": m.b.tolist()}


def gamma_tail_mass(j: int, t0: float) -> float:
    """Mass of the unit-scale Gamma density of shape j beyond t0."""
    return float(stats.gamma.sf(t0, a=j))


def chain_transforms(
    spec: KernelSpec,
    history: Callable[[np.ndarray], np.ndarray],
    t0: float,
    t_end: float,
    h: float,
):
    """
    Quadrature values of psi_j = T_j psi_0 on [0, t_end].

    psi_j(t) = int_0^{T0} g_j(s) psi_0(t - s) ds is computed with the composite
    trapezoid rule on unit-scale Gamma densities.

    Args:
        spec: kernel spec; only k (the cascade length) is used
        history: vectorised psi_0, evaluated on [-t0, t_end]
        t0: history window length
        t_end: end of the evaluation window [0, t_end]
        h: quadrature and grid step

    Returns:
        tuple: (t, psi) with psi[j] the samples of psi_j, j = 0..k+1

    Raises:
        InsufficientHistoryError: if the Gamma tail beyond t0 exceeds 1e-10
    """
    if h <= 0:
        raise ValueError(f"quadrature step must be positive, got {h}")
    n_shapes = spec.k + 1
    tail = gamma_tail_mass(n_shapes, t0)
    if tail > HISTORY_TAIL_TOL:
        raise InsufficientHistoryError(t0, tail, HISTORY_TAIL_TOL)

    n_s = int(round(t0 / h)) + 1
    n_t = int(round(t_end / h)) + 1
    s = h * np.arange(n_s)
    x = -s[-1] + h * np.arange(n_s + n_t - 1)
    samples = np.asarray(history(x))
    weights = np.full(n_s, h)
    weights[0] = weights[-1] = h / 2
    logger.debug("Chain transforms: %d history nodes, %d evaluation nodes", n_s, n_t)

    psi = [samples[n_s - 1:n_s - 1 + n_t]]
    for j in range(1, n_shapes + 1):
        kernel = weights * eval_gamma(j, 1.0, s)
        psi.append(signal.fftconvolve(samples, kernel)[n_s - 1:n_s - 1 + n_t])
    return h * np.arange(n_t), np.array(psi)


def chain_trick_residual(
    spec: KernelSpec,
    history: Callable[[np.ndarray], np.ndarray],
    t0: float,
    t_end: float,
    h: float,
) -> ResidualReport:
    """
    Check that quadrature-built psi_j solve psi_j' = psi_{j-1} - psi_j.

    The derivative is taken with second-order finite differences.

    Returns:
        ResidualReport: max_t |psi_j' - (psi_{j-1} - psi_j)| for j = 1..k+1
    """
    _, psi = chain_transforms(spec, history, t0, t_end, h)
    residuals = []
    for j in range(1, psi.shape[0]):
        derivative = np.gradient(psi[j], h, edge_order=2)
        residuals.append(float(np.max(np.abs(derivative - (psi[j - 1] - psi[j])))))
    return ResidualReport(residuals=tuple(residuals), h=h, t0=float(round(t0 / h) * h))
