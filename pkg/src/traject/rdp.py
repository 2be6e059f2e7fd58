"""Dimension-agnostic Ramer-Douglas-Peucker polyline simplification.

The recursion keeps the point of maximal orthogonal deviation from the
current chord whenever that deviation strictly exceeds epsilon, then
splits there.  The distance kernel works in any R^D, so the same code
simplifies 2D paths and high-dimensional layer trajectories.

Self-intersecting polylines are not special-cased; the output is exactly
what the recursion produces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .trajectory import Trajectory

#: Chords shorter than this are treated as degenerate (point distance).
DEGENERATE_CHORD = 1e-12


@dataclass(frozen=True)
class SimplificationResult:
    """Sorted original-point indices kept at a given epsilon.

    Always contains 0 and L-1: the first and last points survive every
    simplification.
    """

    kept_indices: tuple[int, ...]
    epsilon: float

    def __len__(self) -> int:
        return len(self.kept_indices)


def _as_points(traj) -> np.ndarray:
    pts = traj.points if isinstance(traj, Trajectory) else np.asarray(traj, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise UsageError(f"expected an (L>=2, D) point array, got shape {pts.shape}")
    return pts


def _chord_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Orthogonal distances from each row of `points` to the line a--b.

    Falls back to plain point distance from `a` when the chord is
    degenerate.  Uses the rejection-vector form, which stays accurate for
    points very close to the line.

    Deliberately built from elementwise ufuncs and pairwise-sum
    reductions rather than BLAS dot products: BLAS switches kernels (and
    FMA use) with the vector length, which would let zero-padding a
    trajectory to a higher dimension perturb distances by an ulp and
    break exact dimension-agnosticism.
    """
    diff = points - a
    chord = b - a
    chord_len = float(np.sqrt(np.sum(chord * chord)))
    if chord_len < DEGENERATE_CHORD:
        return np.sqrt(np.sum(diff * diff, axis=-1))
    u = chord / chord_len
    comp = np.sum(diff * u, axis=-1)
    rejection = diff - comp[:, None] * u
    return np.sqrt(np.sum(rejection * rejection, axis=-1))


def perpendicular_distance(p, a, b) -> float:
    """Euclidean distance from point p to the infinite line through a and b.

    All three points must share the same dimension D.
    """
    p = np.asarray(p, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not (p.shape == a.shape == b.shape) or p.ndim != 1:
        raise UsageError(
            f"points must be same-dimension vectors, got shapes {p.shape}, {a.shape}, {b.shape}"
        )
    return float(_chord_distances(p[None, :], a, b)[0])


def rdp(traj, epsilon: float) -> SimplificationResult:
    """Simplify a polyline, keeping points that deviate more than epsilon.

    Recursive max-deviation split, implemented with an explicit stack so
    depth stays bounded for long inputs.  Deterministic: the comparison is
    strict (points at distance exactly epsilon are dropped) and ties in
    the maximal deviation go to the smallest index, i.e. the first
    maximizer of a left-to-right scan.
    """
    pts = _as_points(traj)
    epsilon = float(epsilon)
    if not np.isfinite(epsilon) or epsilon < 0:
        raise UsageError(f"epsilon must be finite and >= 0, got {epsilon}")
    n = pts.shape[0]
    kept = np.zeros(n, dtype=bool)
    kept[0] = kept[-1] = True
    stack = [(0, n - 1)]
    while stack:
        first, last = stack.pop()
        if last - first < 2:
            continue
        dists = _chord_distances(pts[first + 1 : last], pts[first], pts[last])
        local = int(np.argmax(dists))  # first maximizer on ties
        if dists[local] > epsilon:
            split = first + 1 + local
            kept[split] = True
            stack.append((first, split))
            stack.append((split, last))
    indices = tuple(int(i) for i in np.flatnonzero(kept))
    return SimplificationResult(kept_indices=indices, epsilon=epsilon)
