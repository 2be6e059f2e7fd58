"""Structural importance ranking and layer-adaptation plan emission.

The per-layer importance index mixes the multi-scale pivot score with the
layer velocity profile, each min-max normalized, under a weight beta.
Plans translate a ranking, a band interval and a layer budget into the
concrete strategies a fine-tuning harness consumes: which layers to adapt
and at what per-layer adapter rank.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .errors import UsageError

DEFAULT_BETA = 0.5
DEFAULT_BASE_RANK = 32
DEFAULT_LORA_ALPHA = 64

#: Floor for importance-weighted ranks; keeps every adapted layer trainable.
MIN_WEIGHTED_RANK = 4

STRATEGIES = (
    "none",
    "full",
    "geometry_selected",
    "geometry_weighted",
    "reduced_geometry_weighted",
    "inverse_geometry",
    "random_sparse",
    "reasoning_band",
)


@dataclass(frozen=True)
class ImportanceRanking:
    """Per-layer importance values and the induced descending order.

    ``order`` is a permutation of 0..L-1 sorted by descending index value,
    ties broken by the lower layer index.
    """

    index: np.ndarray
    beta: float
    order: tuple[int, ...]

    @property
    def n_layers(self) -> int:
        return self.index.shape[0]

    def to_dict(self) -> dict:
        return {
            "index": [float(x) for x in self.index],
            "beta": float(self.beta),
            "order": list(self.order),
        }


@dataclass(frozen=True)
class AdaptationPlan:
    """The hand-off contract: adapted layers and per-layer rank capacity."""

    strategy: str
    layers: tuple[int, ...]
    ranks: dict[int, int]
    base_rank: int
    lora_alpha: int
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "base_rank": int(self.base_rank),
            "lora_alpha": int(self.lora_alpha),
            "layers": [int(l) for l in self.layers],
            "ranks": {str(l): int(self.ranks[l]) for l in self.layers},
            "seed": self.seed,
        }


def _minmax_or_zeros(values: np.ndarray) -> np.ndarray:
    # All-equal components normalize to all-zeros (documented degenerate rule).
    spread = values.max() - values.min()
    if spread <= 0.0:
        return np.zeros_like(values)
    return (values - values.min()) / spread


def importance_index(omega, vel, beta: float = DEFAULT_BETA) -> ImportanceRanking:
    """Mix normalized pivot scores and velocities into one ranking.

    index[l] = beta * norm(omega[l]) + (1 - beta) * norm(vel[l]), with
    norm = min-max over layers.
    """
    omega = np.asarray(omega, dtype=np.float64)
    vel = np.asarray(vel, dtype=np.float64)
    if omega.shape != vel.shape or omega.ndim != 1:
        raise UsageError(f"omega and vel must be equal-length 1-d arrays, got {omega.shape} vs {vel.shape}")
    if not 0.0 <= beta <= 1.0:
        raise UsageError(f"beta must lie in [0, 1], got {beta}")
    index = beta * _minmax_or_zeros(omega) + (1.0 - beta) * _minmax_or_zeros(vel)
    order = tuple(sorted(range(index.shape[0]), key=lambda l: (-index[l], l)))
    return ImportanceRanking(index=index, beta=float(beta), order=order)


def choose_k(band: tuple[int, int]) -> int:
    """Half the band width, rounded half down, floored at 1."""
    lo, hi = int(band[0]), int(band[1])
    if hi < lo:
        raise UsageError(f"invalid band interval [{lo}, {hi}]")
    size = hi - lo + 1
    return max(1, size // 2)


def _top_k_candidates(
    ranking: ImportanceRanking,
    band: tuple[int, int] | None,
    restrict_to_band: bool,
    include_endpoints: bool,
) -> list[int]:
    L = ranking.n_layers
    allowed = set(range(L))
    if restrict_to_band:
        if band is None:
            raise UsageError("band-restricted selection needs a band interval")
        allowed = set(range(int(band[0]), int(band[1]) + 1))
    if not include_endpoints:
        # Trajectory endpoints survive every simplification and carry an
        # inflated pivot score; drop them from candidacy.
        allowed -= {0, L - 1}
    return [l for l in ranking.order if l in allowed]


def _uniform_ranks(layers, rank: int) -> dict[int, int]:
    return {int(l): int(rank) for l in layers}


def _weighted_ranks(layers, index: np.ndarray, base_rank: int) -> dict[int, int]:
    top = max(float(index[l]) for l in layers)
    if top <= 0.0:  # degenerate all-zero importance: uniform fallback
        return _uniform_ranks(layers, base_rank)
    return {
        int(l): max(MIN_WEIGHTED_RANK, int(round(base_rank * float(index[l]) / top)))
        for l in layers
    }


def build_plan(
    strategy: str,
    ranking: ImportanceRanking | None = None,
    band: tuple[int, int] | None = None,
    k: int | None = None,
    base_rank: int = DEFAULT_BASE_RANK,
    lora_alpha: int = DEFAULT_LORA_ALPHA,
    seed: int | None = None,
    restrict_to_band: bool = True,
    include_endpoints: bool = False,
) -> AdaptationPlan:
    """Emit one adaptation strategy as a concrete plan.

    Geometry strategies pick the top-k layers of the ranking, restricted
    to the band unless ``restrict_to_band`` is off; the inverse strategy
    takes the band layers outside that top-k set.  ``random_sparse``
    requires an explicit seed.  Plans are pure functions of their inputs.
    """
    if strategy not in STRATEGIES:
        raise UsageError(f"unknown strategy {strategy!r}; choose one of {', '.join(STRATEGIES)}")
    if base_rank < 1:
        raise UsageError(f"base_rank must be >= 1, got {base_rank}")
    if ranking is None:
        raise UsageError("build_plan needs an ImportanceRanking")
    L = ranking.n_layers

    def plan(layers, ranks, rank_base=base_rank, used_seed=None):
        layers = tuple(sorted(int(l) for l in layers))
        return AdaptationPlan(
            strategy=strategy, layers=layers, ranks=ranks,
            base_rank=rank_base, lora_alpha=lora_alpha, seed=used_seed,
        )

    if strategy == "none":
        return plan((), {})
    if strategy == "full":
        layers = tuple(range(L))
        return plan(layers, _uniform_ranks(layers, base_rank))
    if strategy == "reasoning_band":
        if band is None:
            raise UsageError("reasoning_band needs a band interval")
        layers = tuple(range(int(band[0]), int(band[1]) + 1))
        return plan(layers, _uniform_ranks(layers, base_rank))
    if strategy == "random_sparse":
        if seed is None:
            raise UsageError("random_sparse needs an explicit --seed for reproducibility")
        if k is None:
            raise UsageError("random_sparse needs k")
        if k > L:
            raise UsageError(f"k={k} exceeds the {L} available layers")
        layers = random.Random(seed).sample(range(L), k)
        return plan(layers, _uniform_ranks(layers, base_rank), used_seed=int(seed))

    # Geometry family: top-k of the ranking within the candidate pool.
    if k is None:
        raise UsageError(f"{strategy} needs k")
    candidates = _top_k_candidates(ranking, band, restrict_to_band, include_endpoints)
    if k > len(candidates):
        raise UsageError(f"k={k} exceeds the {len(candidates)} candidate layers")
    top_k = candidates[:k]

    if strategy == "geometry_selected":
        return plan(top_k, _uniform_ranks(top_k, base_rank))
    if strategy == "geometry_weighted":
        return plan(top_k, _weighted_ranks(top_k, ranking.index, base_rank))
    if strategy == "reduced_geometry_weighted":
        halved = max(1, base_rank // 2)
        return plan(top_k, _weighted_ranks(top_k, ranking.index, halved), rank_base=halved)
    if strategy == "inverse_geometry":
        if band is None:
            raise UsageError("inverse_geometry needs a band interval")
        band_layers = set(range(int(band[0]), int(band[1]) + 1))
        layers = sorted(band_layers - set(top_k))
        return plan(layers, _uniform_ranks(layers, base_rank))
    raise AssertionError(f"unhandled strategy {strategy}")
