"""Out-of-distribution detection by rectified feature-map norms."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DataError,
    DegenerateRatioError,
    EngineError,
    ExportError,
    FormatError,
    InputError,
    IoError,
    ManifestError,
    SelectionError,
    ShapeError,
    StageError,
)
from .featurenorm import FeatureNormResult, channel_norm, feature_norm, norm_ratio
from .jigsaw import JigsawConfig, make_jigsaw
from .metrics import EvalResult, auroc, evaluate, evaluate_score_set, fpr_at_tpr
from .scoring import (
    DetectorConfig,
    ScoreSet,
    calibrate_threshold,
    decide,
    norm_replaced_logits,
    react_clip,
    score_energy,
    score_featurenorm,
    score_msp,
    score_msp_temp,
)
from .selection import SelectionReport, select_block
from .tensorio import Manifest, load_manifest, read_tensor, write_tensor

__all__ = [
    "__version__",
    "EngineError",
    "FormatError",
    "DataError",
    "IoError",
    "ManifestError",
    "ShapeError",
    "ConfigError",
    "InputError",
    "DegenerateRatioError",
    "SelectionError",
    "ExportError",
    "StageError",
    "channel_norm",
    "feature_norm",
    "norm_ratio",
    "FeatureNormResult",
    "JigsawConfig",
    "make_jigsaw",
    "SelectionReport",
    "select_block",
    "DetectorConfig",
    "ScoreSet",
    "calibrate_threshold",
    "decide",
    "norm_replaced_logits",
    "react_clip",
    "score_energy",
    "score_featurenorm",
    "score_msp",
    "score_msp_temp",
    "EvalResult",
    "auroc",
    "fpr_at_tpr",
    "evaluate",
    "evaluate_score_set",
    "Manifest",
    "load_manifest",
    "read_tensor",
    "write_tensor",
]
