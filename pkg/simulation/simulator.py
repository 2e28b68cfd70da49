"""
Time-domain verification of the spectral predictions.

Three integrators share one explicit fourth-order Runge-Kutta step:
    - integrate_mode: one Fourier mode of the local cascade system;
    - integrate_memory_quadrature: the non-local equation
      u' = -xi^2 int_0^t g(t-s) u(s) ds with trapezoidal history;
    - simulate_physical: modal synthesis of a periodic field.

Times are in units of the kernel scale tau.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
import pandas as pd

from analysis import dispersion
from analysis.chain_trick import build_system
from analysis.errors import DomainError, MemstabError, ModeError, NonFiniteError, StepSizeError
from analysis.kernel_model import KernelSpec, eval_kernel
from analysis.settings import get_settings
from simulation.rate_fit import fit_growth_rate

logger = logging.getLogger(__name__)


@dataclass
class ModalState:
    """Amplitudes of (u, psi_1, ..., psi_{k+1}) for one frequency at time t."""
    xi: float
    w: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class SimResult:
    times: np.ndarray
    u: np.ndarray
    fitted_rate: float
    final_state: Optional[ModalState] = None

    @property
    def amplitude(self) -> np.ndarray:
        return np.abs(self.u)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.times,
            "re_u": self.u.real,
            "im_u": self.u.imag,
            "amplitude": self.amplitude,
        })


@dataclass(frozen=True)
class PhysicalResult:
    """
    Periodic field synthesised from independently integrated modes.

    Attributes:
        x: (n_x,) grid on [0, L)
        snapshot_times: (n_snap,) times of the stored fields
        field: (n_snap, n_x) real values of u
        modes: per-mode table with columns n, xi, fitted_rate, predicted_rate
    """
    x: np.ndarray
    snapshot_times: np.ndarray
    field: np.ndarray
    modes: pd.DataFrame

    def snapshot_frame(self) -> pd.DataFrame:
        """Long format (x, t, u), time-major."""
        n_snap, n_x = self.field.shape
        return pd.DataFrame({
            "x": np.tile(self.x, n_snap),
            "t": np.repeat(self.snapshot_times, n_x),
            "u": self.field.ravel(),
        })

    @property
    def growing_modes(self) -> pd.DataFrame:
        return self.modes[self.modes["fitted_rate"] > 0]


def max_stable_step(spec: KernelSpec, xi: float) -> float:
    """Step bound 0.5 / (sqrt(theta_1) |xi| + 1) of the explicit integrator."""
    theta1 = spec.normalized().theta[0]
    return 0.5 / (math.sqrt(theta1) * abs(xi) + 1.0)


def _step_grid(t_end: float, dt: float):
    if not t_end > 0:
        raise DomainError(f"t_end must be positive, got {t_end}")
    if not dt > 0:
        raise StepSizeError(f"dt must be positive, got {dt}")
    n_steps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    return n_steps, t_end / n_steps


def _rk4_propagator(m: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step for the linear system w' = m w, as a matrix."""
    hm = h * m
    identity = np.eye(m.shape[0], dtype=complex)
    return identity + hm @ (identity + hm @ (identity / 2 + hm @ (identity / 6 + hm / 24)))


def modal_matrix(spec: KernelSpec, xi: float) -> np.ndarray:
    """M = -(i xi A0^{-1} A1 + A0^{-1} B) for the unit-scale spec."""
    system = build_system(spec.normalized())
    return -np.linalg.solve(system.a0, 1j * xi * system.a1 + system.b)


def integrate_mode(spec: KernelSpec, xi: float, w0, t_end: float, dt: float,
                   window: float = 0.5) -> SimResult:
    """
    Integrate one Fourier mode of the cascade system.

    Args:
        spec: kernel spec
        xi: spatial frequency
        w0: initial amplitudes (u, psi_1, ..., psi_{k+1})
        t_end: final time
        dt: requested step; the grid uses t_end / ceil(t_end / dt)
        window: trailing fraction used for the rate fit

    Returns:
        SimResult: u trajectory, fitted rate and final state

    Raises:
        StepSizeError: if dt exceeds max_stable_step
        NonFiniteError: if the state overflows
    """
    spec = spec.normalized()
    w = np.asarray(w0, dtype=complex).copy()
    if w.shape != (spec.k + 2,):
        raise DomainError(f"w0 must have {spec.k + 2} entries, got shape {w.shape}")
    bound = max_stable_step(spec, xi)
    if dt > bound:
        raise StepSizeError(f"dt={dt} exceeds the stable step {bound:.6g} at xi={xi}")
    n_steps, h = _step_grid(t_end, dt)

    propagator = _rk4_propagator(modal_matrix(spec, xi), h)
    u = np.empty(n_steps + 1, dtype=complex)
    u[0] = w[0]
    for n in range(n_steps):
        w = propagator @ w
        if not np.all(np.isfinite(w)):
            raise NonFiniteError((n + 1) * h)
        u[n + 1] = w[0]

    times = h * np.arange(n_steps + 1)
    rate = fit_growth_rate(times, np.abs(u), window=window)
    logger.debug("Mode xi=%.6g: %d steps of %.3g, fitted rate %.6g", xi, n_steps, h, rate)
    return SimResult(times=times, u=u, fitted_rate=rate,
                     final_state=ModalState(xi=xi, w=w, t=times[-1]))


def integrate_memory_quadrature(spec: KernelSpec, xi: float, u0: complex, t_end: float, dt: float,
                                window: float = 0.5) -> SimResult:
    """
    Integrate u' = -xi^2 int_0^t g(t-s) u(s) ds with zero history before t = 0.

    Each RK4 stage evaluates the memory integral with the composite
    trapezoid rule on the stored grid values plus one trapezoid panel for
    the partial step to the stage time. The whole history is retained, so
    the cost grows quadratically with the number of steps.

    Raises:
        StepSizeError: if dt exceeds max_stable_step
        NonFiniteError: if the solution overflows
    """
    spec = spec.normalized()
    bound = max_stable_step(spec, xi)
    if dt > bound:
        raise StepSizeError(f"dt={dt} exceeds the stable step {bound:.6g} at xi={xi}")
    n_steps, h = _step_grid(t_end, dt)

    grid = h * np.arange(n_steps + 2)
    g_full = np.asarray(eval_kernel(spec, grid), dtype=float)
    g_half = np.asarray(eval_kernel(spec, grid[:-1] + h / 2), dtype=float)
    g0, g_h2, g_h = g_full[0], g_half[0], g_full[1]
    coupling = -xi ** 2

    u = np.zeros(n_steps + 1, dtype=complex)
    u[0] = u0

    def history(weights_rev, n):
        # trapezoid over nodes 0..n of g(t_stage - s_m) u_m
        if n == 0:
            return 0.0
        values = weights_rev * u[:n + 1]
        return h * (values.sum() - 0.5 * (values[0] + values[-1]))

    for n in range(n_steps):
        un = u[n]
        past_full = history(g_full[n::-1], n)
        past_half = history(g_half[n::-1], n)
        past_next = history(g_full[n + 1:0:-1], n)

        k1 = coupling * past_full
        stage = un + 0.5 * h * k1
        k2 = coupling * (past_half + 0.25 * h * (g_h2 * un + g0 * stage))
        stage = un + 0.5 * h * k2
        k3 = coupling * (past_half + 0.25 * h * (g_h2 * un + g0 * stage))
        stage = un + h * k3
        k4 = coupling * (past_next + 0.5 * h * (g_h * un + g0 * stage))

        u[n + 1] = un + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        if not np.isfinite(u[n + 1]):
            raise NonFiniteError((n + 1) * h)

    times = grid[:n_steps + 1]
    rate = fit_growth_rate(times, np.abs(u), window=window)
    logger.debug("Memory quadrature xi=%.6g: %d steps, fitted rate %.6g", xi, n_steps, rate)
    return SimResult(times=times, u=u, fitted_rate=rate)


def relative_discrepancy(reference, other) -> float:
    """max |reference - other| / max |reference|."""
    reference = np.asarray(reference)
    other = np.asarray(other)
    scale = np.max(np.abs(reference))
    if scale == 0:
        return float(np.max(np.abs(other)))
    return float(np.max(np.abs(reference - other)) / scale)


def _initial_samples(initial_u: Union[Callable, np.ndarray], length: float, n_x: int):
    if callable(initial_u):
        x = length * np.arange(n_x) / n_x
        return x, np.asarray(initial_u(x), dtype=float)
    samples = np.asarray(initial_u, dtype=float)
    if samples.ndim != 1 or samples.size < n_x:
        raise DomainError(f"initial_u needs at least {n_x} samples, got shape {samples.shape}")
    return length * np.arange(samples.size) / samples.size, samples


def simulate_physical(spec: KernelSpec, domain_length: float, n_modes: int,
                      initial_u: Union[Callable, np.ndarray], t_end: float,
                      dt: Optional[float] = None, n_snapshots: int = 5) -> PhysicalResult:
    """
    Evolve periodic initial data on [0, L) mode by mode.

    Each mode xi_n = 2 pi n / L, n = 0..n_modes, is integrated from unit
    amplitude u = 1, psi_j = 0 and scaled by the Fourier coefficient of the
    initial data. Modes run in a thread pool.

    Args:
        spec: kernel spec
        domain_length: period L
        n_modes: highest resolved mode index (>= 2)
        initial_u: callable of x or samples on an equispaced grid of [0, L)
        t_end: final time
        dt: time step; defaults to half the bound of the fastest mode
        n_snapshots: number of stored fields, equally spaced in [0, t_end]

    Returns:
        PhysicalResult

    Raises:
        StepSizeError: if dt is not positive or exceeds the step bound of the fastest mode
        ModeError: wrapping the failure of an individual mode
    """
    if not domain_length > 0:
        raise DomainError(f"domain_length must be positive, got {domain_length}")
    if n_modes < 2:
        raise DomainError(f"n_modes must be at least 2, got {n_modes}")
    if n_snapshots < 1:
        raise DomainError(f"n_snapshots must be positive, got {n_snapshots}")
    spec = spec.normalized()

    x, samples = _initial_samples(initial_u, domain_length, 2 * (n_modes + 1))
    coeffs = np.fft.rfft(samples)[:n_modes + 1] / samples.size
    indices = np.arange(n_modes + 1)
    xis = 2 * math.pi * indices / domain_length
    bound = max_stable_step(spec, xis[-1])
    if dt is None:
        dt = 0.5 * bound
    elif not 0 < dt <= bound:
        raise StepSizeError(f"dt={dt} must lie in (0, {bound:.6g}] for the fastest mode xi={xis[-1]:.6g}")
    w0 = np.zeros(spec.k + 2, dtype=complex)
    w0[0] = 1.0

    def run(n):
        try:
            return integrate_mode(spec, xis[n], w0, t_end, dt)
        except MemstabError as e:
            raise ModeError(int(n), e) from e

    workers = get_settings().workers
    logger.info("Integrating %d modes on L=%.6g up to t=%.6g (%d workers)", len(indices), domain_length, t_end, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run, indices))

    times = results[0].times
    snapshot_times = np.linspace(0.0, t_end, n_snapshots)
    steps = np.clip(np.rint(snapshot_times / (times[1] - times[0])).astype(int), 0, times.size - 1)
    trajectories = np.stack([r.u[steps] for r in results])

    amplitudes = coeffs[:, None] * trajectories
    amplitudes[1:] *= 2
    phases = np.exp(1j * np.outer(xis, x))
    field = np.real(np.einsum("ns,nx->sx", amplitudes, phases))

    modes = pd.DataFrame({
        "n": indices,
        "xi": xis,
        "fitted_rate": [r.fitted_rate for r in results],
        "predicted_rate": dispersion.envelope(spec, xis),
    })
    growing = int((modes["fitted_rate"] > 0).sum())
    logger.info("Physical simulation finished: %d growing mode(s)", growing)
    return PhysicalResult(x=x, snapshot_times=times[steps], field=field, modes=modes)
