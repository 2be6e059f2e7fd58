"""Core domain types and the attention-weighted layer projection.

A *trajectory* is the ordered sequence of per-layer summary vectors of a
deep network, treated as a polyline in R^D.  Index ``i`` of a trajectory
corresponds to layer ``i + 1`` of the source model; all machine-readable
output in this package uses 0-based layer indices and says so.

All types are immutable after construction (arrays are copied and marked
read-only) and therefore safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, FormatError, UsageError

#: Attention rows must sum to 1 within this tolerance to count as
#: probability distributions.
ATTN_ROW_TOL = 1e-4

#: Ensembles larger than this use compensated summation when averaged.
_KAHAN_THRESHOLD = 1024


def _frozen_f64(arr, name: str, ndim: int) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    if out.ndim != ndim:
        raise UsageError(f"{name} must be a {ndim}-d array, got ndim={out.ndim}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Trajectory:
    """An ordered polyline of L points in R^D, one point per layer.

    Points are stored as the rows of an (L, D) float64 array.  L >= 2,
    D >= 1 and every coordinate finite.
    """

    points: np.ndarray
    meta: str | None = None

    def __post_init__(self):
        pts = _frozen_f64(self.points, "points", ndim=2)
        if pts.shape[0] < 2:
            raise UsageError(f"a trajectory needs at least 2 points, got L={pts.shape[0]}")
        if pts.shape[1] < 1:
            raise UsageError("points must have D >= 1 coordinates")
        if not np.isfinite(pts).all():
            raise DataError("trajectory coordinates must be finite (no NaN/Inf)")
        object.__setattr__(self, "points", pts)

    @property
    def n_layers(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class RawActivationBundle:
    """Per-sample activations before projection.

    ``hidden``    -- (L, T, D) per-layer, per-token hidden states.
    ``attn_last`` -- (L, K_h, T) per-layer, per-head attention that the
                     final token distributes over the sequence; every
                     (layer, head) row is a probability distribution.
    """

    hidden: np.ndarray
    attn_last: np.ndarray
    sample_id: str = ""

    def __post_init__(self):
        hidden = _frozen_f64(self.hidden, "hidden", ndim=3)
        attn = _frozen_f64(self.attn_last, "attn_last", ndim=3)
        L, T, _D = hidden.shape
        if T < 1:
            raise UsageError("hidden needs T >= 1 tokens")
        if attn.shape[0] != L or attn.shape[2] != T:
            raise FormatError(
                f"hidden {hidden.shape} and attn_last {attn.shape} disagree: "
                f"expected attn_last shape (L={L}, K_h, T={T})"
            )
        if attn.shape[1] < 1:
            raise UsageError("attn_last needs K_h >= 1 heads")
        if not np.isfinite(hidden).all():
            raise DataError(f"hidden states contain NaN/Inf (sample_id={self.sample_id!r})")
        if not np.isfinite(attn).all():
            raise DataError(f"attention rows contain NaN/Inf (sample_id={self.sample_id!r})")
        if (attn < 0).any():
            raise DataError(f"attention weights must be nonnegative (sample_id={self.sample_id!r})")
        row_sums = attn.sum(axis=2)
        if (np.abs(row_sums - 1.0) > ATTN_ROW_TOL).any():
            worst = float(np.abs(row_sums - 1.0).max())
            raise DataError(
                f"attention rows must each sum to 1 within {ATTN_ROW_TOL} "
                f"(worst deviation {worst:.3e}, sample_id={self.sample_id!r})"
            )
        object.__setattr__(self, "hidden", hidden)
        object.__setattr__(self, "attn_last", attn)

    @property
    def n_layers(self) -> int:
        return self.hidden.shape[0]

    @property
    def n_tokens(self) -> int:
        return self.hidden.shape[1]

    @property
    def dim(self) -> int:
        return self.hidden.shape[2]

    @property
    def n_heads(self) -> int:
        return self.attn_last.shape[1]


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """S trajectories with identical L and D, one per domain sample."""

    trajectories: tuple[Trajectory, ...] = field(default_factory=tuple)

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        if not trajs:
            raise UsageError("an ensemble needs at least one trajectory")
        L, D = trajs[0].n_layers, trajs[0].dim
        for i, t in enumerate(trajs):
            if t.n_layers != L or t.dim != D:
                raise FormatError(
                    f"ensemble shape disagreement: sample 0 is (L={L}, D={D}) but "
                    f"sample {i} ({t.meta or 'unnamed'}) is (L={t.n_layers}, D={t.dim})"
                )
        object.__setattr__(self, "trajectories", trajs)

    @property
    def n_samples(self) -> int:
        return len(self.trajectories)

    @property
    def n_layers(self) -> int:
        return self.trajectories[0].n_layers

    @property
    def dim(self) -> int:
        return self.trajectories[0].dim


def project_attention_weighted(bundle: RawActivationBundle) -> Trajectory:
    """Reduce each layer's token matrix to one vector via attention weights.

    Per layer l the head-averaged final-token attention gives token weights
    w_{l,t} = mean_k attn_last[l, k, t]; the layer vector is the weighted
    sum z_l = sum_t w_{l,t} * hidden[l, t].  Weights sum to 1 (inputs are
    probability rows), so z_l lies in the convex hull of the layer's token
    states.
    """
    weights = bundle.attn_last.mean(axis=1)  # (L, T)
    points = np.einsum("lt,ltd->ld", weights, bundle.hidden)
    return Trajectory(points, meta=bundle.sample_id or None)


def aggregate_mean(ensemble: TrajectoryEnsemble) -> Trajectory:
    """Pointwise arithmetic mean across samples, per layer.

    Uses compensated (Kahan) summation for S > 1024 to bound drift on
    large ensembles; plain pairwise summation otherwise.
    """
    stack = np.stack([t.points for t in ensemble.trajectories])
    if ensemble.n_samples > _KAHAN_THRESHOLD:
        total = np.zeros(stack.shape[1:])
        comp = np.zeros_like(total)
        for sample in stack:  # fixed order: sample index ascending
            y = sample - comp
            t = total + y
            comp = (t - total) - y
            total = t
        mean = total / ensemble.n_samples
    else:
        mean = stack.mean(axis=0)
    return Trajectory(mean, meta=f"mean_of_{ensemble.n_samples}")
