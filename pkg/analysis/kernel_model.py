"""
Memory kernels built from Gamma densities.

A kernel is g(t) = sum_j theta_j g_j(t; tau) with g_j the Gamma density of
integer shape j and scale tau. The k=2 family additionally gets a closed-form
monotonicity / convexity classification in the (eta2, eta3) plane.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
import pandas as pd

from analysis.errors import DomainError, KernelSpecError, UnsupportedOrderError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KernelSpec:
    """
    Weights of a Gamma-combination memory kernel.

    Attributes:
        k: number of extra shapes; the kernel uses shapes 1..k+1
        theta: k+1 non-negative weights, theta[0] > 0
        tau: common scale of the Gamma densities
        strict: when False only the structural checks run, which lets
            degenerate weights (theta_1 <= 0) reach the hyperbolicity test
    """
    k: int
    theta: Tuple[float, ...]
    tau: float = 1.0
    strict: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)) or self.k < 0:
            raise KernelSpecError("k", f"must be a non-negative integer, got {self.k!r}")
        try:
            theta = tuple(float(v) for v in self.theta)
        except (TypeError, ValueError):
            raise KernelSpecError("theta", f"must be a list of numbers, got {self.theta!r}") from None
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "tau", float(self.tau))

        if len(theta) != self.k + 1:
            raise KernelSpecError("theta", f"expected {self.k + 1} entries for k={self.k}, got {len(theta)}")
        if not all(math.isfinite(v) for v in theta):
            raise KernelSpecError("theta", "entries must be finite")
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise KernelSpecError("tau", f"must be positive, got {self.tau}")
        if not self.strict:
            return
        if theta[0] <= 0:
            raise KernelSpecError("theta", f"theta_1 must be positive, got {theta[0]}")
        if any(v < 0 for v in theta[1:]):
            raise KernelSpecError("theta", "theta_j must be non-negative")

    @classmethod
    def from_theta(cls, theta: Sequence[float], tau: float = 1.0) -> "KernelSpec":
        """Build a spec whose k is inferred from the number of weights."""
        theta = tuple(theta)
        if not theta:
            raise KernelSpecError("theta", "at least one weight is required")
        return cls(k=len(theta) - 1, theta=theta, tau=tau)

    @classmethod
    def from_dict(cls, payload: dict) -> "KernelSpec":
        """
        Parse the JSON object {"k": int, "theta": [floats], "tau": float}.

        ``k`` may be omitted, in which case it is inferred from ``theta``.

        Raises:
            KernelSpecError: naming the missing or malformed field
        """
        if not isinstance(payload, dict):
            raise KernelSpecError("spec", "must be a JSON object")
        if "theta" not in payload:
            raise KernelSpecError("theta", "field is required")
        theta = payload["theta"]
        if not isinstance(theta, (list, tuple)) or not theta:
            raise KernelSpecError("theta", "must be a non-empty list")
        tau = payload.get("tau", 1.0)
        if not isinstance(tau, (int, float)) or isinstance(tau, bool):
            raise KernelSpecError("tau", f"must be a number, got {tau!r}")
        k = payload.get("k", len(theta) - 1)
        return cls(k=k, theta=tuple(theta), tau=tau)

    def to_dict(self) -> dict:
        return {"k": self.k, "theta": list(self.theta), "tau": self.tau}

    def normalized(self) -> "KernelSpec":
        """
        Express the spec in units of tau (time t' = t/tau).

        In rescaled time the kernel weights become tau * theta and the scale
        becomes 1, so every ratio theta_j/theta_1 is preserved.
        """
        if self.tau == 1.0:
            return self
        logger.debug("Rescaling kernel with tau=%s to unit scale", self.tau)
        return KernelSpec(k=self.k, theta=tuple(self.tau * v for v in self.theta), tau=1.0, strict=self.strict)


@dataclass(frozen=True)
class EtaCoordinates:
    """Weight ratios eta_j = theta_{j+1} / theta_1, j = 1..k."""
    eta: Tuple[float, ...]


@dataclass(frozen=True)
class ShapeReport:
    monotone_decreasing: bool
    convex: bool


def rescale_time(tau: float, t):
    """Map physical time to units of the kernel scale."""
    if tau <= 0:
        raise DomainError(f"tau must be positive, got {tau}")
    return t / tau if np.isscalar(t) else np.asarray(t, dtype=float) / tau


def _factorial(n: int) -> float:
    # iterative product in floating point; shapes are small
    result = 1.0
    for i in range(2, n + 1):
        result *= i
    return result


def eval_gamma(j: int, tau: float, t):
    """
    Gamma density of integer shape j and scale tau.

    Args:
        j: shape, j >= 1
        tau: scale, tau > 0
        t: time (scalar or array), t >= 0

    Returns:
        float or np.ndarray: t^(j-1) exp(-t/tau) / ((j-1)! tau^j)

    Raises:
        DomainError: if j < 1, tau <= 0 or any t < 0
    """
    if isinstance(j, bool) or int(j) != j or j < 1:
        raise DomainError(f"shape j must be a positive integer, got {j!r}")
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    s = np.asarray(t, dtype=float)
    if np.any(s < 0):
        raise DomainError("t must be non-negative")
    j = int(j)
    values = s ** (j - 1) * np.exp(-s / tau) / (_factorial(j - 1) * tau ** j)
    return float(values) if values.ndim == 0 else values


def eval_kernel(spec: KernelSpec, t):
    """Evaluate g(t) = sum_j theta_j g_j(t; tau)."""
    total = sum(w * np.asarray(eval_gamma(j, spec.tau, t)) for j, w in enumerate(spec.theta, start=1))
    total = np.asarray(total, dtype=float)
    return float(total) if total.ndim == 0 else total


def total_mass(spec: KernelSpec) -> float:
    """Integral of g over (0, inf); every Gamma density has unit mass."""
    return float(sum(spec.theta))


def eta_coordinates(spec: KernelSpec) -> EtaCoordinates:
    first = spec.theta[0]
    if first <= 0:
        raise KernelSpecError("theta", "eta coordinates need theta_1 > 0")
    return EtaCoordinates(eta=tuple(v / first for v in spec.theta[1:]))


def spec_from_eta(eta2: float, eta3: float, theta1: float = 1.0) -> KernelSpec:
    """k=2 spec with theta = theta1 * (1, eta2, eta3)."""
    return KernelSpec(k=2, theta=(theta1, theta1 * eta2, theta1 * eta3))


def kernel_derivative_polynomials_k2(eta2: float, eta3: float):
    """
    Ascending coefficients of the quadratics behind the k=2 shape test.

    g'(t) = -theta_1 e^{-t} p1(t) / 2 and g''(t) = theta_1 e^{-t} p2(t) / 2.

    Returns:
        tuple: (p1, p2) as numpy arrays [c0, c1, c2]
    """
    p1 = np.array([2 * (1 - eta2), 2 * (eta2 - eta3), eta3], dtype=float)
    p2 = np.array([2 * (1 - 2 * eta2 + eta3), 2 * (eta2 - 2 * eta3), eta3], dtype=float)
    return p1, p2


def _as_bool(values):
    values = np.asarray(values)
    return bool(values) if values.ndim == 0 else values


def in_monotone_region(eta2, eta3):
    """
    Closed region where the k=2 kernel is non-increasing.

    g' = -theta_1 e^{-t} p1(t) / 2 with p1(t) = 2(1-eta2) + 2(eta2-eta3)t + eta3 t^2,
    so g is decreasing iff p1 >= 0 on t > 0.
    """
    e2 = np.asarray(eta2, dtype=float)
    e3 = np.asarray(eta3, dtype=float)
    strip = (e2 >= 0) & (e2 <= 1) & (e3 >= 0)
    inside = (e2 - e3 >= 0) | (e2 ** 2 + (e3 - 1) ** 2 <= 1)
    return _as_bool(strip & inside)


def in_convex_region(eta2, eta3):
    """
    Closed region where the k=2 kernel is convex.

    g'' = theta_1 e^{-t} p2(t) / 2 with p2(t) = 2(1-2eta2+eta3) + 2(eta2-2eta3)t + eta3 t^2.
    """
    e2 = np.asarray(eta2, dtype=float)
    e3 = np.asarray(eta3, dtype=float)
    base = (e2 >= 0) & (e3 >= 0) & (2 * e2 - e3 <= 1)
    inside = (e2 - 2 * e3 >= 0) | (2 * e2 ** 2 + 4 * (e3 - 0.5) ** 2 <= 1)
    return _as_bool(base & inside)


def classify_shape_k2(spec: KernelSpec) -> ShapeReport:
    """
    Monotonicity and convexity of a k=2 kernel.

    Raises:
        UnsupportedOrderError: if spec.k != 2
    """
    if spec.k != 2:
        raise UnsupportedOrderError(2, spec.k)
    eta2, eta3 = eta_coordinates(spec).eta
    return ShapeReport(
        monotone_decreasing=bool(in_monotone_region(eta2, eta3)),
        convex=bool(in_convex_region(eta2, eta3)),
    )


def sample_gamma_family(shapes: Sequence[int], tau: float, t) -> pd.DataFrame:
    """
    Tabulate Gamma densities on a time grid.

    Returns:
        pd.DataFrame: columns t, gamma_<j> for each requested shape
    """
    t = np.asarray(t, dtype=float)
    data = {"t": t}
    for j in shapes:
        data[f"gamma_{j}"] = eval_gamma(j, tau, t)
    return pd.DataFrame(data)
