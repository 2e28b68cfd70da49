"""
Analytic stability criteria for heat conduction with Gamma-combination memory.

Decision path of ``classify``:
    1. high-frequency test: theta_2 < theta_1 and Q is strictly Hurwitz;
    2. sufficient condition sum_{j>=2} theta_j < theta_1, or the sharp k=2 condition;
    3. otherwise search the imaginary axis for crossings and sweep the spectrum.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.polynomial import polynomial as P

from analysis import dispersion
from analysis.errors import DomainError, NotStableError, UnsupportedOrderError
from analysis.kernel_model import (
    KernelSpec,
    in_convex_region,
    in_monotone_region,
)
from analysis.settings import get_settings

logger = logging.getLogger(__name__)

# imaginary parts below this (relative) make a crossing root real
REAL_ROOT_TOL = 1e-8

# sample kernels of the k = 2 family, (eta2, eta3) -> shape and stability label
REFERENCE_LABELS = {
    (0.8, 2.0): "non-monotone, unstable",
    (0.6, 1.5): "monotone, non-convex, unstable",
    (0.4, 1.0): "monotone, non-convex, stable",
    (0.2, 0.5): "monotone, convex, stable",
}


class VerdictClass(str, Enum):
    STABLE = "Stable"
    HIGH_FREQ_UNSTABLE = "HighFreqUnstable"
    INTERMEDIATE_UNSTABLE = "IntermediateUnstable"


@dataclass(frozen=True)
class HurwitzReport:
    """Routh array of a real polynomial; q_coeffs are ascending."""
    q_coeffs: Tuple[float, ...]
    routh_array: Tuple[Tuple[float, ...], ...]
    is_strict_hurwitz: bool
    degenerate: bool = False

    @property
    def first_column(self) -> Tuple[float, ...]:
        return tuple(row[0] for row in self.routh_array)


@dataclass(frozen=True)
class HighFrequencyCheck:
    stable: bool
    eta2_condition: bool
    hurwitz: HurwitzReport
    marginal: bool
    trace: Tuple[str, ...]

    def __bool__(self):
        return self.stable


@dataclass(frozen=True)
class Crossing:
    """Purely imaginary root lambda = i zeta of p(., i xi); s = zeta^2."""
    zeta: float
    xi: float
    s: float


@dataclass(frozen=True)
class RegionMembership:
    in_S: bool
    in_M: bool
    in_C: bool


@dataclass(frozen=True)
class StabilityVerdict:
    verdict_class: VerdictClass
    c0: Optional[float] = None
    crossings: Tuple[Crossing, ...] = ()
    unstable_window: Tuple[Tuple[float, float], ...] = ()
    criteria_trace: Tuple[str, ...] = ()
    marginal: bool = False
    theorem_backed: bool = True

    @property
    def is_stable(self) -> bool:
        return self.verdict_class is VerdictClass.STABLE

    def to_dict(self) -> dict:
        payload = {"class": self.verdict_class.value, "trace": list(self.criteria_trace)}
        if self.c0 is not None:
            payload["c0"] = self.c0
        if self.crossings:
            payload["crossings"] = [{"zeta": c.zeta, "xi": c.xi} for c in self.crossings]
        if self.unstable_window:
            payload["unstable_window"] = [list(w) for w in self.unstable_window]
        payload["marginal"] = self.marginal
        payload["theorem_backed"] = self.theorem_backed
        return payload


def _weights(spec_or_theta) -> tuple:
    if isinstance(spec_or_theta, KernelSpec):
        return spec_or_theta.normalized().theta
    return tuple(spec_or_theta)


def build_Q(spec_or_theta) -> list:
    """
    Coefficients q_0..q_k of the high-frequency polynomial Q.

    q_l = sum_{j=1}^{k+1-l} C(k+1-j, l) theta_j. Accepts a KernelSpec or any
    sequence of weights (Fractions stay exact).
    """
    theta = _weights(spec_or_theta)
    k = len(theta) - 1
    return [
        sum(math.comb(k + 1 - j, ell) * theta[j - 1] for j in range(1, k + 2 - ell))
        for ell in range(k + 1)
    ]


def q_coeffs_alternate(spec_or_theta) -> list:
    """Same coefficients from Q(x) = sum_{j=0}^{k} theta_{k+1-j} (1+x)^j."""
    theta = _weights(spec_or_theta)
    k = len(theta) - 1
    return [
        sum(math.comb(j, ell) * theta[k - j] for j in range(ell, k + 1))
        for ell in range(k + 1)
    ]


def routh_hurwitz(coeffs: Sequence[float]) -> HurwitzReport:
    """
    Routh array of a real polynomial given by ascending coefficients.

    The polynomial is strictly Hurwitz iff every first-column entry is
    positive once the leading coefficient is made positive. A zero pivot
    stops the array and marks the report degenerate (not strict).

    Raises:
        ValueError: if the leading coefficient is zero
    """
    ascending = [float(c) for c in coeffs]
    if not ascending or ascending[-1] == 0:
        raise ValueError("leading coefficient must be nonzero")
    descending = ascending[::-1]
    if descending[0] < 0:
        descending = [-c for c in descending]
    degree = len(descending) - 1
    width = degree // 2 + 1

    def padded(values):
        return list(values) + [0.0] * (width - len(values))

    rows = [padded(descending[0::2])]
    if degree >= 1:
        rows.append(padded(descending[1::2]))
    degenerate = False
    for _ in range(2, degree + 1):
        upper, lower = rows[-2], rows[-1]
        pivot = lower[0]
        if pivot == 0:
            degenerate = True
            break
        new = [(pivot * upper[i + 1] - upper[0] * lower[i + 1]) / pivot for i in range(width - 1)]
        rows.append(padded(new))
    if not degenerate and any(row[0] == 0 for row in rows):
        degenerate = True
    strict = not degenerate and all(row[0] > 0 for row in rows)
    return HurwitzReport(
        q_coeffs=tuple(ascending),
        routh_array=tuple(tuple(row) for row in rows),
        is_strict_hurwitz=strict,
        degenerate=degenerate,
    )


def high_freq_stable(spec: KernelSpec) -> HighFrequencyCheck:
    """Large-frequency stability: theta_2 < theta_1 and Q strictly Hurwitz."""
    theta = spec.normalized().theta
    theta1 = theta[0]
    theta2 = theta[1] if len(theta) > 1 else 0.0
    eta2_ok = theta2 < theta1
    report = routh_hurwitz(build_Q(spec))
    trace = [
        f"high-frequency damping theta2<theta1: {eta2_ok}",
        f"Q strictly Hurwitz: {report.is_strict_hurwitz}",
    ]
    marginal = theta2 == theta1 or report.degenerate
    return HighFrequencyCheck(
        stable=eta2_ok and report.is_strict_hurwitz,
        eta2_condition=eta2_ok,
        hurwitz=report,
        marginal=marginal,
        trace=tuple(trace),
    )


def sufficient_stable_anyk(spec: KernelSpec) -> bool:
    """Sufficient condition for every k: sum_{j>=2} theta_j < theta_1."""
    theta = spec.normalized().theta
    return sum(theta[1:]) < theta[0]


def _re_power_poly(j: int) -> np.ndarray:
    """Ascending coefficients in s of Re((1 - i zeta)^j), s = zeta^2."""
    return np.array([math.comb(j, 2 * r) * (-1) ** r for r in range(j // 2 + 1)], dtype=float)


def _im_power_poly(j: int) -> np.ndarray:
    """Ascending coefficients in s of Im((1 - i zeta)^j) / zeta."""
    return np.array([math.comb(j, 2 * r + 1) * (-1) ** (r + 1) for r in range((j - 1) // 2 + 1)], dtype=float)


def crossing_polynomial(spec: KernelSpec) -> np.ndarray:
    """
    Ascending coefficients of F(s) (1+s)^{k+1}, where
    F(s) = sum_j theta_j (1+s)^{-j} Re((1 - i zeta)^j).

    For k = 2 this is (theta1-theta2) s^2 + 2(theta1 - 3/2 theta3) s + theta1+theta2+theta3.
    """
    theta = spec.normalized().theta
    k = len(theta) - 1
    total = np.zeros(k + 1)
    for j, weight in enumerate(theta, start=1):
        term = weight * P.polymul(P.polypow([1.0, 1.0], k + 1 - j), _re_power_poly(j))
        total[:term.size] += term
    return total


def xi_squared_at(spec: KernelSpec, s: float) -> float:
    """
    Frequency^2 at which lambda = i sqrt(s) solves the dispersion relation.

    Returns -1 / sum_j theta_j (1+s)^{-j} Im((1-i zeta)^j)/zeta; only positive
    values correspond to actual crossings.
    """
    theta = spec.normalized().theta
    total = sum(
        weight * P.polyval(s, _im_power_poly(j)) / (1 + s) ** j
        for j, weight in enumerate(theta, start=1)
    )
    if total == 0:
        return math.inf
    return -1.0 / total


def crossing_search(spec: KernelSpec, s_max: Optional[float] = None) -> List[Crossing]:
    """
    All purely imaginary roots (i zeta, i xi) with 0 < zeta^2 <= s_max.

    After clearing denominators the real-part equation is a polynomial in
    s = zeta^2, so every real root is found; s_max only bounds reporting.
    Crossings are reported with zeta > 0 and xi > 0; sign flips of either
    are crossings too.
    """
    if s_max is None:
        s_max = get_settings().s_max
    poly = np.trim_zeros(crossing_polynomial(spec), "b")
    if poly.size <= 1:
        return []
    found = []
    for root in P.polyroots(poly):
        if abs(root.imag) > REAL_ROOT_TOL * (1 + abs(root)):
            continue
        s = float(root.real)
        if not 0 < s <= s_max:
            continue
        xi2 = xi_squared_at(spec, s)
        if xi2 > 0 and math.isfinite(xi2):
            found.append(Crossing(zeta=math.sqrt(s), xi=math.sqrt(xi2), s=s))
    found.sort(key=lambda c: c.xi)
    logger.debug("Crossing search found %d candidate(s)", len(found))
    return found


def _require_k2(spec: KernelSpec):
    if spec.k != 2:
        raise UnsupportedOrderError(2, spec.k)


def sharp_stable_k2(spec: KernelSpec) -> bool:
    """
    Exact stability region for k = 2:
    theta2 < theta1 and (3 theta3 < 2 theta1 or (2theta2+theta3)^2 + 8(theta3-theta1)^2 < 8 theta1^2).

    Raises:
        UnsupportedOrderError: if spec.k != 2
    """
    _require_k2(spec)
    t1, t2, t3 = spec.normalized().theta
    ellipse = (2 * t2 + t3) ** 2 + 8 * (t3 - t1) ** 2 < 8 * t1 ** 2
    return t2 < t1 and (3 * t3 < 2 * t1 or ellipse)


def _sharp_k2_marginal(spec: KernelSpec) -> bool:
    t1, t2, t3 = spec.normalized().theta
    # the line 3 theta3 = 2 theta1 lies inside the ellipse, so only these equalities are reachable
    on_ellipse = (2 * t2 + t3) ** 2 + 8 * (t3 - t1) ** 2 == 8 * t1 ** 2
    return t2 == t1 or (3 * t3 >= 2 * t1 and on_ellipse)


def unstable_window(spectrum: dispersion.Spectrum) -> List[Tuple[float, float]]:
    """Maximal runs of grid frequencies xi > 0 with positive envelope."""
    positive = (spectrum.envelope > 0) & (spectrum.xi_grid > 0)
    windows = []
    start = None
    for i, flag in enumerate(positive):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            windows.append((float(spectrum.xi_grid[start]), float(spectrum.xi_grid[i - 1])))
            start = None
    if start is not None:
        windows.append((float(spectrum.xi_grid[start]), float(spectrum.xi_grid[-1])))
    return windows


def estimate_c0(spec: KernelSpec, grid: dispersion.Spectrum) -> float:
    """
    Dissipation constant of Re lambda <= -c0 xi^2 / (1 + xi^2).

    Frequencies below the configured xi_min are dominated by round-off in
    envelope / xi^2; that end is capped by the slow-branch coefficient.

    Raises:
        NotStableError: if the envelope is non-negative at some xi > 0
    """
    xi = grid.xi_grid
    env = grid.envelope
    usable = xi >= get_settings().xi_min * (1 - 1e-12)
    offending = usable & (env >= 0)
    if np.any(offending):
        first = float(xi[np.argmax(offending)])
        raise NotStableError(first, window=unstable_window(grid))
    if not np.any(usable):
        raise ValueError("spectrum grid has no frequency above the configured xi_min")
    ratio = -env[usable] * (1 + xi[usable] ** 2) / xi[usable] ** 2
    return float(min(ratio.min(), dispersion.slow_branch_expansion(spec)))


def in_stability_region(eta2, eta3):
    """Closed stability region S of the k = 2 family in the (eta2, eta3) plane."""
    e2 = np.asarray(eta2, dtype=float)
    e3 = np.asarray(eta3, dtype=float)
    strip = (e2 >= 0) & (e2 <= 1)
    inside = (e3 <= 2.0 / 3.0) | ((2 * e2 + e3) ** 2 / 8 + (e3 - 1) ** 2 <= 1)
    result = strip & inside
    return bool(result) if result.ndim == 0 else result


def region_membership_k2(eta2: float, eta3: float) -> RegionMembership:
    """Membership of (eta2, eta3) in S (stable), M (monotone) and C (convex)."""
    if eta2 < 0 or eta3 < 0:
        raise DomainError(f"eta coordinates must be non-negative, got ({eta2}, {eta3})")
    return RegionMembership(
        in_S=bool(in_stability_region(eta2, eta3)),
        in_M=bool(in_monotone_region(eta2, eta3)),
        in_C=bool(in_convex_region(eta2, eta3)),
    )


def verdict_k2(eta2, eta3):
    """Closed-form verdict class for theta = theta1 (1, eta2, eta3)."""
    e2 = np.asarray(eta2, dtype=float)
    e3 = np.asarray(eta3, dtype=float)
    stable = (e2 < 1) & ((3 * e3 < 2) | ((2 * e2 + e3) ** 2 + 8 * (e3 - 1) ** 2 < 8))
    labels = np.where(
        e2 >= 1,
        VerdictClass.HIGH_FREQ_UNSTABLE.value,
        np.where(stable, VerdictClass.STABLE.value, VerdictClass.INTERMEDIATE_UNSTABLE.value),
    )
    return str(labels) if labels.ndim == 0 else labels


def _nearest_node(value: float, upper: float, n: int) -> Optional[int]:
    if n < 2 or not 0 <= value <= upper:
        return None
    return int(round(value / upper * (n - 1)))


def _reference_labels(eta2_max: float, eta3_max: float, n2: int, n3: int) -> np.ndarray:
    """Sample-kernel labels on the nodes nearest each reference point; empty elsewhere."""
    labels = np.full(n2 * n3, "", dtype=object)
    for (eta2, eta3), label in REFERENCE_LABELS.items():
        i = _nearest_node(eta2, eta2_max, n2)
        j = _nearest_node(eta3, eta3_max, n3)
        if i is None or j is None:
            continue
        node = i * n3 + j
        labels[node] = f"{labels[node]}; {label}" if labels[node] else label
    return labels


def region_grid(eta2_max: float, eta3_max: float, n2: int, n3: int) -> pd.DataFrame:
    """
    Region map of the k = 2 family on a regular node grid of [0, eta2_max] x [0, eta3_max].

    The node nearest each of the four sample kernels of REFERENCE_LABELS
    carries its label in ``reference_point``.

    Returns:
        pd.DataFrame: columns eta2, eta3, in_S, in_M, in_C, verdict,
        reference_point (eta2-major order)
    """
    if n2 < 1 or n3 < 1:
        raise ValueError(f"grid resolution must be positive, got {n2}x{n3}")
    e2, e3 = np.meshgrid(np.linspace(0.0, eta2_max, n2), np.linspace(0.0, eta3_max, n3), indexing="ij")
    e2 = e2.ravel()
    e3 = e3.ravel()
    return pd.DataFrame({
        "eta2": e2,
        "eta3": e3,
        "in_S": in_stability_region(e2, e3),
        "in_M": in_monotone_region(e2, e3),
        "in_C": in_convex_region(e2, e3),
        "verdict": verdict_k2(e2, e3),
        "reference_point": _reference_labels(eta2_max, eta3_max, n2, n3),
    })


def count_containment_violations(frame: pd.DataFrame) -> int:
    """Nodes breaking C within S within M."""
    bad = (frame["in_C"] & ~frame["in_S"]) | (frame["in_S"] & ~frame["in_M"])
    return int(bad.sum())


def classify(spec: KernelSpec, xi_grid=None) -> StabilityVerdict:
    """
    Classify the dynamics generated by a Gamma-combination kernel.

    Args:
        spec: kernel with theta_1 > 0, theta_j >= 0
        xi_grid: frequency grid for the spectrum sweep (default grid if omitted)

    Returns:
        StabilityVerdict

    Raises:
        ValueError: if no stability condition applies and the grid has no
            frequency above the configured xi_min
    """
    spec = spec.normalized()
    grid = dispersion.default_grid() if xi_grid is None else np.asarray(xi_grid, dtype=float)
    trace: List[str] = []

    hf = high_freq_stable(spec)
    trace.extend(hf.trace)
    if not hf:
        logger.info("theta=%s is unstable at high frequencies", spec.theta)
        return StabilityVerdict(
            verdict_class=VerdictClass.HIGH_FREQ_UNSTABLE,
            criteria_trace=tuple(trace),
            marginal=hf.marginal,
        )

    sufficient = sufficient_stable_anyk(spec)
    trace.append(f"sufficient condition sum(theta[1:])<theta1: {sufficient}")
    sharp = None
    if spec.k == 2:
        sharp = sharp_stable_k2(spec)
        trace.append(f"sharp k=2 condition: {sharp}")

    swept = dispersion.spectrum_on_grid(spec, grid)
    if sufficient or sharp:
        try:
            c0 = estimate_c0(spec, swept)
        except NotStableError as e:
            logger.warning("Envelope touches zero at xi=%.6g despite a stability condition", e.xi)
            trace.append(f"numerical envelope non-negative at xi={e.xi:.6g}")
            c0 = None
        except ValueError as e:
            trace.append(f"c0 unavailable: {e}")
            c0 = None
        decided_by = "sufficient condition" if sufficient else "sharp k=2 condition"
        trace.append(f"decided by: {decided_by}")
        logger.info("theta=%s is stable (%s), c0=%s", spec.theta, decided_by, c0)
        return StabilityVerdict(verdict_class=VerdictClass.STABLE, c0=c0, criteria_trace=tuple(trace))

    crossings = tuple(crossing_search(spec))
    window = tuple(unstable_window(swept))
    trace.append(f"imaginary-axis crossings: {len(crossings)}")
    trace.append(f"positive-envelope windows: {len(window)}")
    marginal = spec.k == 2 and _sharp_k2_marginal(spec)
    if crossings or window:
        trace.append("decided by: crossing search and spectrum sweep")
        logger.info("theta=%s is unstable at intermediate frequencies, window=%s", spec.theta, window)
        return StabilityVerdict(
            verdict_class=VerdictClass.INTERMEDIATE_UNSTABLE,
            crossings=crossings,
            unstable_window=window,
            criteria_trace=tuple(trace),
            marginal=marginal,
        )

    if marginal:
        trace.append("decided by: marginal k=2 boundary (not stable)")
        return StabilityVerdict(
            verdict_class=VerdictClass.INTERMEDIATE_UNSTABLE,
            criteria_trace=tuple(trace),
            marginal=True,
        )

    try:
        c0 = estimate_c0(spec, swept)
    except NotStableError as e:
        trace.append("decided by: spectrum sweep")
        return StabilityVerdict(
            verdict_class=VerdictClass.INTERMEDIATE_UNSTABLE,
            unstable_window=tuple(e.window),
            criteria_trace=tuple(trace),
        )
    trace.append("decided by: spectrum sweep (numerical, not theorem-backed)")
    logger.warning("theta=%s classified stable numerically only", spec.theta)
    return StabilityVerdict(
        verdict_class=VerdictClass.STABLE,
        c0=c0,
        criteria_trace=tuple(trace),
        theorem_backed=False,
    )
