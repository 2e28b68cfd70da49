"""
Growth-rate estimation for simulated trajectories.
Input: sampled times and amplitudes of one Fourier mode.
Output: exponential rate (least-squares slope of the log amplitude).
"""
import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression

# floor for log(amplitude) when a mode carries no u-component
AMPLITUDE_FLOOR = np.finfo(float).tiny


def _trailing_window(times: np.ndarray, window: float) -> np.ndarray:
    """Indices of the samples in the last ``window`` fraction of the run."""
    start = times[-1] - window * (times[-1] - times[0])
    return np.flatnonzero(times >= start)


def block_maxima(times, amplitude, n_blocks: int) -> pd.DataFrame:
    """
    Split a trajectory into consecutive blocks and keep each block's peak.

    Parameters
    ----------
    times : array-like
        Sample times, increasing.
    amplitude : array-like
        Non-negative amplitudes.
    n_blocks : int
        Number of blocks; capped by the number of samples.

    Returns
    -------
    pd.DataFrame
        Columns: t, amplitude (time and value of each block maximum).
    """
    times = np.asarray(times, dtype=float)
    amplitude = np.asarray(amplitude, dtype=float)
    rows = []
    for block in np.array_split(np.arange(times.size), min(n_blocks, times.size)):
        peak = block[np.argmax(amplitude[block])]
        rows.append((times[peak], amplitude[peak]))
    return pd.DataFrame(rows, columns=["t", "amplitude"])


def fit_growth_rate(times, amplitude, window: float = 0.5, n_blocks: int = 10) -> float:
    """
    Estimate the exponential growth rate of a mode (sklearn OLS).

    Oscillating modes pass through zero, so the regression runs on the
    logarithm of block maxima over the trailing window instead of on every
    sample.

    Parameters
    ----------
    times : array-like
        Sample times, increasing.
    amplitude : array-like
        |u| of the mode at each time.
    window : float
        Trailing fraction of the run used for the fit, in (0, 1].
    n_blocks : int
        Number of blocks the window is split into.

    Returns
    -------
    float
        Fitted rate; 0.0 for runs with fewer than two samples.
    """
    if not 0 < window <= 1:
        raise ValueError(f"window must lie in (0, 1], got {window}")
    if n_blocks < 2:
        raise ValueError(f"n_blocks must be at least 2, got {n_blocks}")
    times = np.asarray(times, dtype=float)
    amplitude = np.asarray(amplitude, dtype=float)
    if times.size < 2:
        return 0.0

    idx = _trailing_window(times, window)
    peaks = block_maxima(times[idx], amplitude[idx], n_blocks)
    if len(peaks) < 2:
        return 0.0

    X = peaks["t"].to_numpy().reshape(-1, 1)
    y = np.log(np.maximum(peaks["amplitude"].to_numpy(), AMPLITUDE_FLOOR))
    model = LinearRegression().fit(X, y)
    return float(model.coef_[0])
