"""lusscore: CPU-only lung ultrasound severity scoring.

Features come from a frozen pretrained convolutional backbone (ONNX); the
only trainable part is a dropout + 4-way softmax head.  Frame predictions
aggregate into per-zone region scores and a 0-36 global patient score,
with patient-level cross-validated metrics throughout.
"""

__version__ = "0.1.0"

from .aggregate import (
    CohortSummary,
    PatientReport,
    RegionTally,
    build_patient_report,
    build_patient_report_from_counts,
    cohort_report,
    plurality_score,
    tally_region,
)
from .augment import AugmentParams, augment, resize_bilinear
from .backbone import (
    BACKBONE_REGISTRY,
    BackboneSpec,
    FeatureVector,
    extract,
    extract_all,
    load_backbone,
    load_image,
)
from .cache import FeatureCache
from .data import (
    ALL_ZONES,
    FoldPlan,
    ImageRecord,
    Zone,
    check_severity,
    class_histogram,
    load_manifest,
    make_folds,
    write_manifest,
)
from .errors import (
    ConfigError,
    DataError,
    LusScoreError,
    ModelError,
)
from .estimator import BackboneFeaturizer, SoftmaxHeadClassifier
from .head import (
    AdamState,
    HeadParameters,
    Prediction,
    TrainConfig,
    TrainResult,
    adam_step,
    cross_entropy,
    forward,
    gradients,
    load_head,
    predict,
    predict_proba,
    save_head,
    softmax,
    train,
)
from .metrics import (
    ConfusionMatrix,
    MetricsSummary,
    evaluate,
    roc_auc_binary,
    roc_curve,
    trapezoid_area,
)
from .rng import CounterRng, derive_seed
from .synthetic import (
    SyntheticData,
    SyntheticSpec,
    TimingReport,
    gen_synthetic_features,
    time_pipeline,
)

__all__ = [
    "ALL_ZONES",
    "AdamState",
    "AugmentParams",
    "BACKBONE_REGISTRY",
    "BackboneFeaturizer",
    "BackboneSpec",
    "CohortSummary",
    "ConfigError",
    "ConfusionMatrix",
    "CounterRng",
    "DataError",
    "FeatureCache",
    "FeatureVector",
    "FoldPlan",
    "HeadParameters",
    "ImageRecord",
    "LusScoreError",
    "MetricsSummary",
    "ModelError",
    "PatientReport",
    "Prediction",
    "RegionTally",
    "SoftmaxHeadClassifier",
    "SyntheticData",
    "SyntheticSpec",
    "TimingReport",
    "TrainConfig",
    "TrainResult",
    "Zone",
    "adam_step",
    "augment",
    "build_patient_report",
    "build_patient_report_from_counts",
    "check_severity",
    "class_histogram",
    "cohort_report",
    "cross_entropy",
    "derive_seed",
    "evaluate",
    "extract",
    "extract_all",
    "forward",
    "gen_synthetic_features",
    "gradients",
    "load_backbone",
    "load_head",
    "load_image",
    "load_manifest",
    "make_folds",
    "plurality_score",
    "predict",
    "predict_proba",
    "resize_bilinear",
    "roc_auc_binary",
    "roc_curve",
    "save_head",
    "softmax",
    "tally_region",
    "time_pipeline",
    "train",
    "trapezoid_area",
    "write_manifest",
]
