"""Layer-trajectory geometry analysis and layer-adaptation planning.

Treats the per-layer hidden-state path of a deep network as a polyline in
R^D, finds its structural pivots by multi-scale polyline simplification,
locates the band of peak representational change, ranks layers, and emits
concrete layer-adaptation plans.
"""

from .band import (
    BandReport,
    deviation_profile,
    extract_band,
    otsu_threshold,
    savgol_smooth,
    velocity_profile,
)
from .errors import (
    DataError,
    DegenerateSignalError,
    FormatError,
    TrajectError,
    UsageError,
)
from .formats import (
    load_bundle,
    load_ensemble,
    load_manifest,
    save_bundle,
    save_ensemble,
    save_trajectory,
)
from .multiscale import (
    MultiScaleResult,
    PivotHistogram,
    default_targets,
    ensemble_vote,
    epsilon_for_target,
    multiscale_analyze,
)
from .ranking import (
    AdaptationPlan,
    ImportanceRanking,
    STRATEGIES,
    build_plan,
    choose_k,
    importance_index,
)
from .rdp import SimplificationResult, perpendicular_distance, rdp
from .trajectory import (
    RawActivationBundle,
    Trajectory,
    TrajectoryEnsemble,
    aggregate_mean,
    project_attention_weighted,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptationPlan",
    "BandReport",
    "DataError",
    "DegenerateSignalError",
    "FormatError",
    "ImportanceRanking",
    "MultiScaleResult",
    "PivotHistogram",
    "RawActivationBundle",
    "STRATEGIES",
    "SimplificationResult",
    "Trajectory",
    "TrajectoryEnsemble",
    "TrajectError",
    "UsageError",
    "aggregate_mean",
    "build_plan",
    "choose_k",
    "default_targets",
    "deviation_profile",
    "ensemble_vote",
    "epsilon_for_target",
    "extract_band",
    "importance_index",
    "load_bundle",
    "load_ensemble",
    "load_manifest",
    "multiscale_analyze",
    "otsu_threshold",
    "perpendicular_distance",
    "project_attention_weighted",
    "rdp",
    "save_bundle",
    "save_ensemble",
    "save_trajectory",
    "savgol_smooth",
    "velocity_profile",
]
