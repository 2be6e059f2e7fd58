"""Hybrid structural signal and reasoning-band extraction.

The per-layer signal mixes two normalized geometric profiles: deviation
from the endpoint chord (global structure) and step length between
successive layers (local dynamics).  The mixed signal is smoothed with a
Savitzky-Golay filter, thresholded adaptively with Otsu's between-class
variance criterion, and the longest contiguous supra-threshold run of
layers becomes the band.

Both profiles are min-max normalized before mixing: they carry different
physical scales, and normalization makes the band invariant to a global
rescaling of the trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSignalError, UsageError
from .rdp import _chord_distances
from .trajectory import Trajectory

DEFAULT_ALPHA = 0.5
DEFAULT_WINDOW = 5
DEFAULT_POLYORDER = 2
DEFAULT_BINS = 64


@dataclass(frozen=True)
class BandReport:
    """All intermediate arrays of a band extraction, plus the band itself.

    ``band`` is an inclusive (l_lo, l_hi) interval of 0-based layer
    indices.  ``degenerate`` flags the whole-range fallback taken when the
    signal is constant and Otsu has no threshold to find.
    """

    dev: np.ndarray
    vel: np.ndarray
    raw_signal: np.ndarray
    smoothed: np.ndarray
    tau: float
    band: tuple[int, int]
    alpha: float
    threshold_on: str = "smoothed"
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "dev": [float(x) for x in self.dev],
            "vel": [float(x) for x in self.vel],
            "raw_signal": [float(x) for x in self.raw_signal],
            "smoothed": [float(x) for x in self.smoothed],
            "tau": float(self.tau),
            "band": [int(self.band[0]), int(self.band[1])],
            "alpha": float(self.alpha),
            "threshold_on": self.threshold_on,
            "degenerate": bool(self.degenerate),
        }


def _points(traj) -> np.ndarray:
    return traj.points if isinstance(traj, Trajectory) else np.asarray(traj, dtype=np.float64)


def deviation_profile(traj) -> np.ndarray:
    """Distance of each layer point from the line joining the endpoints."""
    pts = _points(traj)
    dev = _chord_distances(pts, pts[0], pts[-1])
    dev[0] = 0.0
    dev[-1] = 0.0
    return dev


def velocity_profile(traj) -> np.ndarray:
    """Step length between successive layers; last value replicated.

    Vel[l] = ||z_{l+1} - z_l|| for l < L-1, and Vel[L-1] = Vel[L-2] so the
    profile has one value per layer.
    """
    pts = _points(traj)
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return np.concatenate([steps, steps[-1:]])


def savgol_smooth(signal, window: int = DEFAULT_WINDOW, polyorder: int = DEFAULT_POLYORDER) -> np.ndarray:
    """Savitzky-Golay smoothing via per-position local polynomial fits.

    Each output value is the least-squares polynomial of degree
    ``polyorder`` fitted over the window centered there, evaluated at the
    center.  Near the edges the window is truncated one-sided (no signal
    mirroring) and the degree is capped at the point count minus one.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise UsageError(f"signal must be 1-d, got ndim={signal.ndim}")
    n = signal.shape[0]
    window = int(window)
    polyorder = int(polyorder)
    if window < 1 or window % 2 == 0:
        raise UsageError(f"window must be a positive odd integer, got {window}")
    if window > n:
        raise UsageError(f"window={window} exceeds signal length {n}")
    if polyorder < 0 or polyorder >= window:
        raise UsageError(f"polyorder must satisfy 0 <= polyorder < window, got {polyorder}")

    half = window // 2
    out = np.empty(n)
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        offsets = np.arange(lo, hi) - i
        degree = min(polyorder, len(offsets) - 1)
        vander = np.vander(offsets, degree + 1, increasing=True)
        coeffs, *_ = np.linalg.lstsq(vander, signal[lo:hi], rcond=None)
        out[i] = coeffs[0]  # polynomial value at offset 0
    return out


def otsu_threshold(signal, bins: int = DEFAULT_BINS) -> float:
    """Adaptive threshold maximizing between-class variance.

    The signal is min-max normalized to [0, 1] and histogrammed into
    equal-width bins; candidate thresholds are the interior bin edges and
    the winner (ties to the lower edge) is mapped back to the original
    scale.  A constant signal has no threshold and raises
    DegenerateSignalError.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1 or signal.shape[0] < 2:
        raise UsageError(f"signal must be 1-d with at least 2 values, got shape {signal.shape}")
    bins = int(bins)
    if bins < 2:
        raise UsageError(f"bins must be >= 2, got {bins}")
    lo, hi = float(signal.min()), float(signal.max())
    if hi <= lo:
        raise DegenerateSignalError("signal is constant; no threshold separates it")

    norm = (signal - lo) / (hi - lo)
    counts, _ = np.histogram(norm, bins=bins, range=(0.0, 1.0))
    total = counts.sum()
    levels = np.arange(bins, dtype=np.float64)

    best_k, best_var = 1, -1.0
    for k in range(1, bins):  # interior edges only
        w0 = counts[:k].sum() / total
        w1 = 1.0 - w0
        if w0 == 0.0 or w1 == 0.0:
            continue
        mu0 = (counts[:k] * levels[:k]).sum() / counts[:k].sum()
        mu1 = (counts[k:] * levels[k:]).sum() / counts[k:].sum()
        var = w0 * w1 * (mu1 - mu0) ** 2
        if var > best_var:  # strict: ties keep the lower edge
            best_var = var
            best_k = k
    return lo + (best_k / bins) * (hi - lo)


def _minmax(values: np.ndarray) -> np.ndarray:
    spread = values.max() - values.min()
    if spread <= 0.0:
        return np.zeros_like(values)
    return (values - values.min()) / spread


def _longest_run_above(signal: np.ndarray, tau: float) -> tuple[int, int]:
    """Longest contiguous run with signal > tau; earliest run wins ties."""
    above = signal > tau
    best = (0, -1)
    start = None
    for i, flag in enumerate(above):
        if flag and start is None:
            start = i
        if (not flag or i == len(above) - 1) and start is not None:
            end = i if flag else i - 1
            if end - start > best[1] - best[0]:
                best = (start, end)
            start = None
    if best[1] < best[0]:  # unreachable for interior-edge tau; keep interval valid
        peak = int(np.argmax(signal))
        best = (peak, peak)
    return best


def extract_band(
    traj,
    alpha: float = DEFAULT_ALPHA,
    window: int = DEFAULT_WINDOW,
    polyorder: int = DEFAULT_POLYORDER,
    bins: int = DEFAULT_BINS,
    threshold_on: str = "smoothed",
) -> BandReport:
    """Full band pipeline: profiles, mix, smooth, threshold, longest run.

    ``threshold_on`` selects whether Otsu (and the band comparison) run on
    the smoothed signal (default; the drawn curve) or the raw mixed one.
    On a constant signal the report degrades to the whole layer range with
    ``degenerate=True``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise UsageError(f"alpha must lie in [0, 1], got {alpha}")
    if threshold_on not in ("smoothed", "raw"):
        raise UsageError(f"threshold_on must be 'smoothed' or 'raw', got {threshold_on!r}")

    dev = deviation_profile(traj)
    vel = velocity_profile(traj)
    raw = alpha * _minmax(dev) + (1.0 - alpha) * _minmax(vel)
    smoothed = savgol_smooth(raw, window=window, polyorder=polyorder)
    target = smoothed if threshold_on == "smoothed" else raw
    L = raw.shape[0]
    try:
        tau = otsu_threshold(target, bins=bins)
    except DegenerateSignalError:
        return BandReport(
            dev=dev, vel=vel, raw_signal=raw, smoothed=smoothed,
            tau=float(target.max()), band=(0, L - 1), alpha=alpha,
            threshold_on=threshold_on, degenerate=True,
        )
    band = _longest_run_above(target, tau)
    return BandReport(
        dev=dev, vel=vel, raw_signal=raw, smoothed=smoothed,
        tau=tau, band=band, alpha=alpha, threshold_on=threshold_on,
    )
