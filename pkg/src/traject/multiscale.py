"""Target-driven epsilon inversion and multi-scale pivot voting.

Instead of hand-picking a simplification threshold, each target point
count t gets the minimal epsilon_t with |rdp(traj, epsilon_t)| <= t,
found by bisection (the retained count is a non-increasing step function
of epsilon).  Pivot sets across all targets are then combined into a
per-layer score: each target at which a layer survives contributes
1/sqrt(t), so pivots that persist at coarse resolutions dominate without
fine-scale structure being discarded.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .rdp import _chord_distances, rdp
from .trajectory import Trajectory, TrajectoryEnsemble

#: Relative bisection tolerance for the epsilon search.
EPSILON_SEARCH_RTOL = 1e-9

#: Smallest meaningful target: endpoints always survive, so t = 3 is the
#: first count that admits an interior pivot.
MIN_TARGET = 3

NO_PARALLEL_ENV = "TRAJECT_NO_PARALLEL"


@dataclass(frozen=True)
class MultiScaleResult:
    """Per-target thresholds and pivot sets plus accumulated layer scores.

    ``scores[l]`` is exactly ``sum(1/sqrt(t) for t in targets if l in
    pivot_sets[t])``.  Epsilons are non-increasing in t.
    """

    targets: tuple[int, ...]
    epsilons: dict[int, float]
    pivot_sets: dict[int, tuple[int, ...]]
    scores: np.ndarray

    def to_dict(self) -> dict:
        return {
            "targets": list(self.targets),
            "epsilons": {str(t): self.epsilons[t] for t in self.targets},
            "pivot_sets": {str(t): list(self.pivot_sets[t]) for t in self.targets},
            "scores": [float(s) for s in self.scores],
        }


@dataclass(frozen=True)
class PivotHistogram:
    """Number of samples in which each layer was a pivot at one target."""

    target: int
    counts: np.ndarray

    def to_list(self) -> list[int]:
        return [int(c) for c in self.counts]


def _validate_target(t: int, L: int) -> int:
    t = int(t)
    if t < MIN_TARGET or t > L:
        raise UsageError(f"target must satisfy {MIN_TARGET} <= t <= L={L}, got {t}")
    return t


def _max_chord_deviation(pts: np.ndarray) -> float:
    if pts.shape[0] == 2:
        return 0.0
    return float(_chord_distances(pts[1:-1], pts[0], pts[-1]).max())


def _bisect_epsilon(traj, t: int, hi: float, tol: float):
    """Minimal feasible epsilon on [0, hi]; hi must already be feasible."""
    base = rdp(traj, 0.0)
    if len(base) <= t:
        return 0.0, base.kept_indices
    lo = 0.0
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if len(rdp(traj, mid)) <= t:
            hi = mid
        else:
            lo = mid
    result = rdp(traj, hi)  # feasible end of the final bracket
    return hi, result.kept_indices


def epsilon_for_target(traj, t: int):
    """Minimal epsilon whose simplification retains at most t points.

    Returns ``(epsilon_t, pivots)``.  The search brackets on [0, e_max]
    where e_max is the largest deviation from the global chord (there the
    count is 2, always feasible) and bisects to a relative tolerance of
    1e-9; the feasible upper end of the final bracket is returned.
    """
    pts = traj.points if isinstance(traj, Trajectory) else np.asarray(traj, dtype=np.float64)
    t = _validate_target(t, pts.shape[0])
    hi = _max_chord_deviation(pts)
    tol = EPSILON_SEARCH_RTOL * max(1.0, hi)
    return _bisect_epsilon(pts, t, hi, tol)


def default_targets(L: int) -> tuple[int, ...]:
    """Every integer target from the minimal 3 up to full recovery at L."""
    if L < MIN_TARGET:
        raise UsageError(f"multi-scale analysis needs L >= {MIN_TARGET}, got L={L}")
    return tuple(range(MIN_TARGET, L + 1))


def multiscale_analyze(traj, targets=None) -> MultiScaleResult:
    """Run the epsilon inversion at every target and accumulate scores.

    Targets default to {3, ..., L}.  Successive bisections warm-start at
    the previous (smaller) target's epsilon, which also enforces the
    monotonicity epsilons[t1] >= epsilons[t2] for t1 < t2.
    """
    pts = traj.points if isinstance(traj, Trajectory) else np.asarray(traj, dtype=np.float64)
    L = pts.shape[0]
    if targets is None:
        targets = default_targets(L)
    targets = tuple(sorted({_validate_target(t, L) for t in targets}))
    if not targets:
        raise UsageError("target set is empty")

    hi = _max_chord_deviation(pts)
    tol = EPSILON_SEARCH_RTOL * max(1.0, hi)
    epsilons: dict[int, float] = {}
    pivot_sets: dict[int, tuple[int, ...]] = {}
    scores = np.zeros(L)
    bracket_hi = hi
    for t in targets:  # ascending: feasible sets only grow
        eps, pivots = _bisect_epsilon(pts, t, bracket_hi, tol)
        epsilons[t] = eps
        pivot_sets[t] = pivots
        scores[list(pivots)] += 1.0 / math.sqrt(t)
        bracket_hi = eps
    return MultiScaleResult(targets=targets, epsilons=epsilons, pivot_sets=pivot_sets, scores=scores)


def _parallelism_enabled() -> bool:
    return os.environ.get(NO_PARALLEL_ENV, "") != "1"


def ensemble_vote(ensemble: TrajectoryEnsemble, targets=None):
    """Per-sample multi-scale analysis, averaged into a consensus score.

    Returns ``(mean_scores, histograms)`` where ``mean_scores`` is the
    arithmetic mean of the per-sample layer scores and ``histograms``
    maps each target to the per-layer count of samples whose pivot set
    contains that layer.  Samples are analyzed independently (in a thread
    pool unless TRAJECT_NO_PARALLEL=1); the reduction order is fixed by
    sample index, so results do not depend on scheduling.
    """
    trajs = ensemble.trajectories
    if targets is None:
        targets = default_targets(ensemble.n_layers)
    if len(trajs) > 1 and _parallelism_enabled():
        with ThreadPoolExecutor(max_workers=min(8, len(trajs))) as pool:
            results = list(pool.map(lambda tr: multiscale_analyze(tr, targets), trajs))
    else:
        results = [multiscale_analyze(tr, targets) for tr in trajs]

    mean_scores = np.mean(np.stack([r.scores for r in results]), axis=0)
    histograms = {}
    for t in results[0].targets:
        counts = np.zeros(ensemble.n_layers, dtype=np.int64)
        for r in results:
            counts[list(r.pivot_sets[t])] += 1
        histograms[t] = PivotHistogram(target=t, counts=counts)
    return mean_scores, histograms
