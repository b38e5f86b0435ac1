"""Desk-scale synthetic features and the timing harness.

Real clinical frames are not reproducible, so end-to-end behaviour is
exercised on seeded Gaussian clusters in feature space: four isotropic
unit-variance clusters whose centroids sit on orthogonal axes at mutual
distance ``class_separation``.  Frames are dealt round-robin to pseudo
patients and zones so folds and score aggregation run exactly as they
would on a real cohort.
"""

from __future__ import annotations

import platform
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .backbone import SYNTHETIC_FINGERPRINT
from .cache import FeatureCache
from .data import ALL_ZONES, ImageRecord
from .errors import ConfigError
from .head import TrainConfig, predict, train
from .metrics import MetricsSummary, evaluate
from .rng import CounterRng, derive_seed
from .validation import N_CLASSES

SYNTHETIC_BACKBONE_ID = "synthetic"


@dataclass(frozen=True)
class SyntheticSpec:
    n_per_class: int = 250
    feature_dim: int = 64
    class_separation: float = 8.0
    n_patients: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.n_per_class < 1 or self.feature_dim < 1 or self.n_patients < 1:
            raise ConfigError("n_per_class, feature_dim and n_patients must be >= 1")
        if self.feature_dim < N_CLASSES:
            raise ConfigError(
                f"feature_dim must be >= {N_CLASSES} to hold orthogonal class centroids"
            )
        if not self.class_separation >= 0:
            raise ConfigError("class_separation must be >= 0")


@dataclass
class SyntheticData:
    features: np.ndarray  # (n, feature_dim) float32
    labels: np.ndarray  # (n,) int64
    records: list[ImageRecord]

    @property
    def n_frames(self) -> int:
        return self.features.shape[0]

    def to_cache(self) -> FeatureCache:
        cache = FeatureCache(
            SYNTHETIC_BACKBONE_ID, SYNTHETIC_FINGERPRINT, self.features.shape[1]
        )
        for record, row in zip(self.records, self.features):
            cache.put(record.image_id, 0, row)
        return cache


def gen_synthetic_features(spec: SyntheticSpec) -> SyntheticData:
    """Seeded cluster data with patient and zone assignments.

    Class blocks are laid out sample-major (all of class 0 first); frame i
    goes to patient i mod n_patients and, within a patient, cycles the 12
    zones, so every patient accumulates a spread of zones and classes.
    """
    n_total = spec.n_per_class * N_CLASSES
    rng = CounterRng(derive_seed(spec.seed, "synthetic-features"))
    noise = rng.normals(n_total * spec.feature_dim).reshape(n_total, spec.feature_dim)

    # centroids on orthogonal axes at distance sep/sqrt(2) from the origin
    # have pairwise distance exactly class_separation
    radius = spec.class_separation / np.sqrt(2.0)
    labels = np.repeat(np.arange(N_CLASSES, dtype=np.int64), spec.n_per_class)
    features = noise
    for c in range(N_CLASSES):
        features[labels == c, c] += radius

    records = []
    for i in range(n_total):
        patient = i % spec.n_patients
        zone = ALL_ZONES[(i // spec.n_patients) % len(ALL_ZONES)]
        image_id = f"syn-{i:06d}"
        records.append(
            ImageRecord(
                image_id=image_id,
                patient_id=f"patient-{patient:03d}",
                covid_status="positive",
                zone=zone,
                label=int(labels[i]),
                image_path=f"synthetic/{image_id}.png",
            )
        )
    return SyntheticData(features=features.astype(np.float32), labels=labels, records=records)


@dataclass
class TimingReport:
    backbone_id: str
    extraction_seconds: float
    training_seconds: float
    evaluation_seconds: float
    n_frames: int
    epochs: int
    hardware: str

    def to_key_values(self) -> dict[str, str]:
        return {
            "backbone_id": self.backbone_id,
            "extraction_seconds": f"{self.extraction_seconds:.6f}",
            "training_seconds": f"{self.training_seconds:.6f}",
            "evaluation_seconds": f"{self.evaluation_seconds:.6f}",
            "n_frames": str(self.n_frames),
            "epochs": str(self.epochs),
            "hardware": self.hardware,
        }

    def save(self, path: str | Path, header_lines: Sequence[str] = ()) -> None:
        lines = list(header_lines)
        lines += [f"{k}={v}" for k, v in self.to_key_values().items()]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def hardware_note() -> str:
    machine = platform.machine() or "unknown"
    processor = platform.processor() or machine
    return f"{processor} ({platform.system()})"


def time_pipeline(
    features: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig,
    backbone_id: str = SYNTHETIC_BACKBONE_ID,
    extraction_seconds: float = 0.0,
):
    """Train then evaluate on the given features, timing each phase.

    Returns (TimingReport, HeadParameters, MetricsSummary).  Extraction
    time is supplied by the caller when features came from a backbone; for
    synthetic features it is the generation time.
    """
    result = train(features, labels, config)

    eval_start = time.perf_counter()
    predictions = predict(result.params, features)
    summary: MetricsSummary = evaluate(predictions, labels)
    evaluation_seconds = time.perf_counter() - eval_start

    report = TimingReport(
        backbone_id=backbone_id,
        extraction_seconds=extraction_seconds,
        training_seconds=result.seconds,
        evaluation_seconds=evaluation_seconds,
        n_frames=int(features.shape[0]),
        epochs=config.epochs,
        hardware=hardware_note(),
    )
    return report, result.params, summary
