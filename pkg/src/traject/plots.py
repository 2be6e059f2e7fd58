"""Diagnostic figures rendered to SVG files.

All figures are deterministic: a fixed SVG hash salt replaces the default
uuid-based element ids and the creation date is stripped, so repeated
runs produce byte-identical files.  PCA here is visualization-only and
explicitly lossy.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .band import BandReport
from .trajectory import Trajectory

_SVG_RC = {"svg.hashsalt": "traject", "svg.fonttype": "none"}

BAND_COLOR = "#c8a165"
SIGNAL_COLOR = "#7b4fa6"
PIVOT_COLOR = "#c44536"


def _save(fig, path):
    with plt.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def pca_project(points: np.ndarray, n_components: int = 3):
    """Deterministic PCA of the L points of a trajectory.

    Eigendecomposition of the coordinate covariance; components sorted by
    descending eigenvalue, each eigenvector's largest-magnitude entry made
    positive (first such entry on ties).  Returns ``(projected,
    explained_ratio, degenerate)``; a zero-variance input is flagged
    degenerate and projects to zeros.
    """
    pts = np.asarray(points, dtype=np.float64)
    L, D = pts.shape
    k = min(int(n_components), D, L)
    centered = pts - pts.mean(axis=0)
    total_var = float((centered**2).sum())
    if total_var <= 1e-30:
        return np.zeros((L, k)), np.zeros(k), True
    cov = centered.T @ centered / (L - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
    order = np.arange(D)[::-1][:k]
    eigvals = np.maximum(eigvals[order], 0.0)
    basis = eigvecs[:, order]
    for j in range(basis.shape[1]):
        lead = int(np.argmax(np.abs(basis[:, j])))
        if basis[lead, j] < 0:
            basis[:, j] = -basis[:, j]
    projected = centered @ basis
    ratio = eigvals * (L - 1) / total_var
    return projected, ratio, False


def plot_band(report: BandReport, path) -> None:
    """Hybrid-signal figure: raw + smoothed curves, threshold, shaded band."""
    L = report.raw_signal.shape[0]
    layers = np.arange(L)
    fig, ax = plt.subplots(figsize=(7.0, 3.6))
    ax.plot(layers, report.raw_signal, color=SIGNAL_COLOR, alpha=0.35, lw=1.0, label="mixed signal")
    ax.plot(layers, report.smoothed, color=SIGNAL_COLOR, lw=1.8, label="smoothed")
    ax.axhline(report.tau, color="0.25", ls="--", lw=1.0, label=r"threshold $\tau$")
    lo, hi = report.band
    ax.axvspan(lo - 0.5, hi + 0.5, color=BAND_COLOR, alpha=0.3,
               label=f"band [{lo}, {hi}]")
    ax.set_xlabel("layer index (0-based)")
    ax.set_ylabel("structural signal")
    title = "Hybrid structural signal"
    if report.degenerate:
        title += " (degenerate: constant signal, whole-range band)"
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_multiscale(scores: np.ndarray, hist_counts: np.ndarray, hist_target: int, path) -> None:
    """Score profile plus the pivot-frequency histogram at one target."""
    L = scores.shape[0]
    layers = np.arange(L)
    fig, (ax_top, ax_bot) = plt.subplots(2, 1, figsize=(7.0, 5.0), sharex=True)
    ax_top.bar(layers, scores, color=SIGNAL_COLOR, width=0.8)
    ax_top.set_ylabel("pivot score")
    ax_top.set_title("Multi-scale pivot scores")
    ax_bot.bar(layers, hist_counts, color=PIVOT_COLOR, width=0.8)
    ax_bot.set_ylabel("samples as pivot")
    ax_bot.set_xlabel("layer index (0-based)")
    ax_bot.set_title(f"Pivot frequency at target = {hist_target}")
    fig.tight_layout()
    _save(fig, path)


def plot_simplified(points: np.ndarray, kept_indices, epsilon: float, path) -> None:
    """Polyline vs its simplification, PCA-projected to 2D when D > 2."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[1] > 2:
        proj, _, degenerate = pca_project(pts, 2)
        if degenerate:
            proj = np.zeros((pts.shape[0], 2))
    else:
        proj = np.column_stack([pts[:, 0], pts[:, 1] if pts.shape[1] > 1 else np.zeros(len(pts))])
    kept = list(kept_indices)
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.plot(proj[:, 0], proj[:, 1], "-o", color="0.6", ms=3, lw=1.0, label=f"all {len(pts)} points")
    ax.plot(proj[kept, 0], proj[kept, 1], "-o", color=PIVOT_COLOR, ms=5, lw=1.6,
            label=f"{len(kept)} kept")
    ax.set_title(f"Simplification at epsilon = {epsilon:.6g}")
    ax.set_xlabel("PC 1" if pts.shape[1] > 2 else "x")
    ax.set_ylabel("PC 2" if pts.shape[1] > 2 else "y")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_pca_trajectory(traj: Trajectory, band: tuple[int, int] | None, path,
                        n_components: int = 3) -> None:
    """Layer trajectory projected onto the top principal components.

    3D when three components are requested and available, 2D otherwise;
    the band segment, when given, is highlighted.  A constant trajectory
    degrades to a single-point plot with a warning in the title.
    """
    pts = traj.points
    proj, ratio, degenerate = pca_project(pts, n_components)
    L = pts.shape[0]
    use_3d = proj.shape[1] >= 3 and not degenerate
    fig = plt.figure(figsize=(6.5, 5.0))
    if use_3d:
        ax = fig.add_subplot(111, projection="3d")
        coords = (proj[:, 0], proj[:, 1], proj[:, 2])
    else:
        ax = fig.add_subplot(111)
        if degenerate or proj.shape[1] < 2:
            coords = (proj[:, 0], np.zeros(L))
        else:
            coords = (proj[:, 0], proj[:, 1])
    ax.plot(*coords, "-o", color="0.55", ms=3.5, lw=1.1)
    if band is not None and not degenerate:
        lo, hi = band
        seg = tuple(c[lo : hi + 1] for c in coords)
        ax.plot(*seg, "-o", color=PIVOT_COLOR, ms=4.5, lw=1.8, label=f"band [{lo}, {hi}]")
        ax.legend(fontsize=8)
    ax.set_xlabel("PC 1")
    ax.set_ylabel("PC 2")
    if use_3d:
        ax.set_zlabel("PC 3")
    title = "Layer trajectory (PCA projection, visualization only)"
    if degenerate:
        title = "Layer trajectory: zero variance (degenerate single-point plot)"
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    _save(fig, path)
