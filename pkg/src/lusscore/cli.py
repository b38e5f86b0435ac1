"""Command-line pipeline: ingest, split, extract, train, evaluate, crossval,
score-patient, bench, report.

Configuration is a flat ``key = value`` text file; command-line flags win
over file values.  Every artifact starts with a header line carrying the
tool version, a hash of the effective configuration, and the seed, so runs
are self-describing.  Exit codes: 0 success, 2 config error, 3 data error,
4 model-file error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, head
from .aggregate import (
    PatientReport,
    build_patient_report,
    build_patient_report_from_counts,
    cohort_report,
    write_cohort_summary,
    write_patient_report_csv,
    write_patient_report_json,
)
from .augment import AugmentParams
from .backbone import (
    BACKBONE_REGISTRY,
    BackboneSpec,
    extract_all,
    features_for_records,
    load_backbone,
    load_image,
)
from .cache import FeatureCache
from .data import (
    FoldPlan,
    ImageRecord,
    Zone,
    class_histogram,
    load_manifest,
    make_folds,
    patients_by_status,
    write_manifest,
)
from .errors import ConfigError, DataError, LusScoreError, MalformedRow, ModelError
from .metrics import evaluate, roc_curve, write_metrics, write_roc_csv
from .synthetic import SyntheticSpec, gen_synthetic_features, time_pipeline
from .validation import N_CLASSES


@dataclass
class RunConfig:
    manifest: str = ""
    features: str = ""
    model_file: str = ""
    backbone: str = "resnet50"
    input_size: int = 64
    feature_dim: int = 8
    preprocess_mode: str = "scale_pm1"
    pre_pooled: bool = False
    augment_mode: str = "cached"  # cached | faithful
    augment_copies: int = 3
    max_rotation_deg: float = 10.0
    max_shift_frac: float = 0.1
    max_scale_delta: float = 0.1
    hflip_prob: float = 0.5
    epochs: int = 3
    batch_size: int = 32
    learning_rate: float = 0.001
    dropout_rate: float = 0.5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    folds: int = 3
    seed: int = 0
    out: str = "out"
    tie_break: str = "high"
    class_weights: bool = False
    jobs: int = 1

    def augment_params(self) -> AugmentParams:
        return AugmentParams(
            max_rotation_deg=self.max_rotation_deg,
            max_shift_frac=self.max_shift_frac,
            max_scale_delta=self.max_scale_delta,
            hflip_prob=self.hflip_prob,
        )

    def train_config(self) -> head.TrainConfig:
        return head.TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            dropout_rate=self.dropout_rate,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_epsilon=self.adam_epsilon,
            seed=self.seed,
            class_weights=self.class_weights,
        )

    def training_copies(self) -> int:
        if self.augment_mode == "faithful":
            return self.epochs
        if self.augment_mode == "cached":
            return self.augment_copies
        raise ConfigError(f"augment_mode must be cached or faithful, got {self.augment_mode!r}")

    def hash(self) -> str:
        # out and jobs cannot change artifact content, so they stay out of
        # the hash: phase-by-phase runs match a crossval run byte for byte
        skipped = {"out", "jobs"}
        payload = "".join(
            f"{f.name}={getattr(self, f.name)}\n"
            for f in sorted(fields(self), key=lambda f: f.name)
            if f.name not in skipped
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]

    def header_lines(self) -> list[str]:
        return [f"# lusscore {__version__} config_hash={self.hash()} seed={self.seed}"]


_BOOL_VALUES = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def parse_config_file(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    file_values = parse_config_file(args.config) if getattr(args, "config", None) else {}
    valid = {f.name: f.type for f in fields(RunConfig)}
    for key, raw in file_values.items():
        if key not in valid:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(config, key, _coerce(key, raw, getattr(config, key)))
    for key in valid:
        override = getattr(args, key, None)
        if override is not None:
            setattr(config, key, override)
    # validate enum-ish fields up front so every subcommand fails the same way
    config.training_copies()
    if config.tie_break not in ("high", "low"):
        raise ConfigError(f"tie_break must be high or low, got {config.tie_break!r}")
    if config.folds < 2:
        raise ConfigError(f"folds must be >= 2, got {config.folds}")
    if config.jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {config.jobs}")
    return config


def _coerce(key: str, raw: str, default):
    if isinstance(default, bool):
        if raw.lower() not in _BOOL_VALUES:
            raise ConfigError(f"config key {key!r}: expected a boolean, got {raw!r}")
        return _BOOL_VALUES[raw.lower()]
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"config key {key!r}: expected an integer, got {raw!r}") from None
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"config key {key!r}: expected a number, got {raw!r}") from None
    return raw


def write_config(config: RunConfig, path: Path) -> None:
    lines = config.header_lines()
    lines += [f"{f.name} = {getattr(config, f.name)}" for f in fields(RunConfig)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- shared pipeline pieces -------------------------------------------------------


def _require(value: str, flag: str) -> str:
    if not value:
        raise ConfigError(f"missing required setting {flag!r}")
    return value


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _backbone_spec(config: RunConfig) -> BackboneSpec:
    model_file = _require(config.model_file, "model_file")
    if config.backbone in BACKBONE_REGISTRY:
        return BackboneSpec.named(config.backbone, model_file, config.pre_pooled)
    if config.backbone == "custom":
        return BackboneSpec.custom(
            model_file,
            config.input_size,
            config.feature_dim,
            config.preprocess_mode,
            config.pre_pooled,
        )
    raise ConfigError(f"backbone must be one of {sorted(BACKBONE_REGISTRY)} or custom")


def _load_backbone_checked(spec: BackboneSpec):
    try:
        return load_backbone(spec)
    except ModelError:
        raise
    except LusScoreError as exc:
        raise ModelError(f"model file {spec.model_file}: {exc}") from exc


def _load_cache(config: RunConfig) -> FeatureCache:
    return FeatureCache.load(_require(config.features, "features"))


def _training_features(
    cache: FeatureCache, records: list[ImageRecord], config: RunConfig
):
    """Per-epoch feature source honouring the augmentation copy schedule."""
    copies = config.training_copies()
    if copies == 0:
        return features_for_records(cache, records, copy_index=0)
    return [
        features_for_records(cache, records, copy_index=1 + (epoch % copies))
        for epoch in range(config.epochs)
    ]


def _labels(records: list[ImageRecord]) -> np.ndarray:
    return np.asarray([r.label for r in records], dtype=np.int64)


def _write_predictions(path: Path, records, predictions, header_lines) -> None:
    lines = list(header_lines)
    lines.append("image_id,patient_id,zone,label,predicted," + ",".join(f"p{c}" for c in range(N_CLASSES)))
    for record, pred in zip(records, predictions):
        zone = record.zone.name if record.zone is not None else ""
        probs = ",".join(f"{v:.17g}" for v in pred.probs)
        lines.append(
            f"{record.image_id},{record.patient_id},{zone},{record.label},{pred.predicted},{probs}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_predictions(path: Path) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    body = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
    if not body or not body[0].startswith("image_id,"):
        raise MalformedRow(f"{path}: not a predictions file")
    rows = []
    for ln in body[1:]:
        parts = ln.split(",")
        rows.append(
            {
                "image_id": parts[0],
                "patient_id": parts[1],
                "zone": parts[2],
                "label": int(parts[3]),
                "predicted": int(parts[4]),
            }
        )
    return rows


def _evaluate_and_export(
    out: Path, records, predictions, labels, config: RunConfig
):
    summary = evaluate(predictions, labels)
    write_metrics(summary, out / "metrics.txt", config.header_lines())
    probs = np.stack([p.probs for p in predictions])
    y = np.asarray(labels)
    for c in range(N_CLASSES):
        positives = y == c
        if positives.any() and (~positives).any():
            write_roc_csv(
                roc_curve(probs[:, c], positives),
                out / f"roc_class{c}.csv",
                config.header_lines(),
            )
    _write_predictions(out / "predictions.csv", records, predictions, config.header_lines())
    return summary


def _patient_reports(
    records, predictions, config: RunConfig
) -> tuple[list[PatientReport], list[tuple[Zone, int, int]]]:
    by_patient: dict[str, list[tuple[Zone, int, int]]] = {}
    triplets: list[tuple[Zone, int, int]] = []
    for record, pred in zip(records, predictions):
        if record.zone is None:
            continue
        item = (record.zone, record.label, pred.predicted)
        by_patient.setdefault(record.patient_id, []).append(item)
        triplets.append(item)
    reports = [
        build_patient_report(pid, frames, config.tie_break)
        for pid, frames in sorted(by_patient.items())
    ]
    return reports, triplets


def _export_patient_reports(out: Path, reports, config: RunConfig) -> None:
    patients_dir = out / "patients"
    patients_dir.mkdir(parents=True, exist_ok=True)
    for report in reports:
        write_patient_report_csv(
            report, patients_dir / f"{report.patient_id}.csv", config.header_lines()
        )
        write_patient_report_json(report, patients_dir / f"{report.patient_id}.json")


# --- subcommands -----------------------------------------------------------------


def cmd_ingest(config: RunConfig, args) -> int:
    records = load_manifest(_require(config.manifest, "manifest"))
    histogram = class_histogram(records)
    groups = patients_by_status(records)
    out = _out_dir(config)
    lines = config.header_lines()
    lines.append(f"records={len(records)}")
    for level, count in histogram.items():
        lines.append(f"score_{level}_frames={count}")
    for status in sorted(groups):
        lines.append(f"{status}_patients={len(groups[status])}")
    lines.append(f"zoned_frames={sum(1 for r in records if r.zone is not None)}")
    (out / "ingest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"{len(records)} records, histogram {histogram}")
    return 0


def cmd_split(config: RunConfig, args) -> int:
    records = load_manifest(_require(config.manifest, "manifest"))
    plan = make_folds(records, config.folds, config.seed)
    out = _out_dir(config)
    plan.save(out / "folds.csv", config.header_lines())
    sizes = [len(plan.patients_in_fold(f)) for f in range(plan.k)]
    print(f"{plan.k} folds, patients per fold {sizes}")
    return 0


def cmd_extract(config: RunConfig, args) -> int:
    records = load_manifest(_require(config.manifest, "manifest"))
    spec = _backbone_spec(config)
    handle = _load_backbone_checked(spec)
    cache = FeatureCache(spec.backbone_id, handle.fingerprint, spec.feature_dim)
    out = _out_dir(config)
    cache_path = Path(config.features) if config.features else out / "features.lusf"
    if cache_path.exists():
        cache = FeatureCache.load(cache_path)
    started = time.perf_counter()
    extract_all(
        handle,
        records,
        lambda record: load_image(record.image_path),
        cache,
        copies=config.training_copies(),
        augment_params=config.augment_params(),
        seed=config.seed,
        jobs=config.jobs,
    )
    seconds = time.perf_counter() - started
    cache.save(cache_path)
    print(f"{len(cache)} feature vectors -> {cache_path} ({seconds:.1f}s)")
    return 0


def _train_on(records, cache, config: RunConfig):
    features = _training_features(cache, records, config)
    return head.train(features, _labels(records), config.train_config())


def cmd_train(config: RunConfig, args) -> int:
    records = load_manifest(_require(config.manifest, "manifest"))
    cache = _load_cache(config)
    if args.folds_file and args.holdout is not None:
        plan = FoldPlan.load(args.folds_file)
        records = plan.train_records(records, args.holdout)
    result = _train_on(records, cache, config)
    out = _out_dir(config)
    head.save_head(result.params, out / "head.lush", cache.fingerprint)
    lines = config.header_lines()
    lines += [f"epoch_{i}_loss={loss:.17g}" for i, loss in enumerate(result.epoch_losses)]
    lines.append(f"train_frames={len(records)}")
    (out / "train.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"trained on {len(records)} frames, final loss {result.epoch_losses[-1]:.4f}")
    return 0


def cmd_evaluate(config: RunConfig, args) -> int:
    records = load_manifest(_require(config.manifest, "manifest"))
    cache = _load_cache(config)
    if args.folds_file and args.holdout is not None:
        plan = FoldPlan.load(args.folds_file)
        records = plan.test_records(records, args.holdout)
    params, _ = head.load_head(_require(args.head, "--head"), cache.fingerprint)
    X = features_for_records(cache, records, copy_index=0)
    predictions = head.predict(params, X, [r.image_id for r in records])
    out = _out_dir(config)
    summary = _evaluate_and_export(out, records, predictions, _labels(records), config)
    print(f"accuracy {summary.accuracy:.4f} over {summary.n_frames} frames")
    return 0


def cmd_report(config: RunConfig, args) -> int:
    records = load_manifest(_require(config.manifest, "manifest"))
    by_id = {r.image_id: r for r in records}
    rows = _read_predictions(Path(_require(args.predictions, "--predictions")))
    paired: list[tuple[ImageRecord, head.Prediction]] = []
    for row in rows:
        record = by_id.get(row["image_id"])
        if record is None:
            raise DataError(f"prediction for unknown image_id {row['image_id']!r}")
        fake_probs = np.zeros(N_CLASSES)
        fake_probs[row["predicted"]] = 1.0
        paired.append(
            (record, head.Prediction(row["image_id"], fake_probs, row["predicted"]))
        )
    out = _out_dir(config)
    reports, triplets = _patient_reports(
        [r for r, _ in paired], [p for _, p in paired], config
    )
    _export_patient_reports(out, reports, config)
    write_cohort_summary(
        cohort_report(reports, triplets), out / "cohort_summary.txt", config.header_lines()
    )
    print(f"{len(reports)} patient reports -> {out / 'patients'}")
    return 0


def _parse_counts_csv(path: Path) -> tuple[dict, dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    body = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
    expected = (
        "zone,"
        + ",".join(f"truth_{c}" for c in range(N_CLASSES))
        + ","
        + ",".join(f"pred_{c}" for c in range(N_CLASSES))
    )
    if not body or body[0] != expected:
        raise MalformedRow(f"{path}: header must be {expected!r}")
    truth_counts: dict[Zone, dict[int, int]] = {}
    predicted_counts: dict[Zone, dict[int, int]] = {}
    for ln in body[1:]:
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != 1 + 2 * N_CLASSES:
            raise MalformedRow(f"{path}: bad column count in {ln!r}")
        zone = Zone.parse(parts[0])
        truth_counts[zone] = {
            c: int(parts[1 + c]) if parts[1 + c] else 0 for c in range(N_CLASSES)
        }
        predicted_counts[zone] = {
            c: int(parts[1 + N_CLASSES + c]) if parts[1 + N_CLASSES + c] else 0
            for c in range(N_CLASSES)
        }
    return truth_counts, predicted_counts


def cmd_score_patient(config: RunConfig, args) -> int:
    out = _out_dir(config)
    if args.count_injection:
        truth_counts, predicted_counts = _parse_counts_csv(Path(args.count_injection))
        patient_id = args.patient or Path(args.count_injection).stem
        report = build_patient_report_from_counts(
            patient_id, truth_counts, predicted_counts, config.tie_break
        )
    else:
        patient_id = _require(args.patient, "--patient")
        records = load_manifest(_require(config.manifest, "manifest"))
        mine = [r for r in records if r.patient_id == patient_id and r.zone is not None]
        if not mine:
            raise DataError(f"patient {patient_id!r} has no zoned frames in the manifest")
        cache = _load_cache(config)
        params, _ = head.load_head(_require(args.head, "--head"), cache.fingerprint)
        X = features_for_records(cache, mine, copy_index=0)
        predictions = head.predict(params, X, [r.image_id for r in mine])
        report = build_patient_report(
            patient_id,
            [(r.zone, r.label, p.predicted) for r, p in zip(mine, predictions)],
            config.tie_break,
        )
    write_patient_report_csv(report, out / f"{report.patient_id}.csv", config.header_lines())
    write_patient_report_json(report, out / f"{report.patient_id}.json")
    print(
        f"patient {report.patient_id}: global truth {report.global_truth}, "
        f"predicted {report.global_predicted}"
        + (" (partial)" if report.partial else "")
    )
    return 0


def cmd_bench(config: RunConfig, args) -> int:
    spec = SyntheticSpec(
        n_per_class=args.n_per_class,
        feature_dim=args.bench_dim,
        class_separation=args.separation,
        n_patients=args.patients,
        seed=config.seed,
    )
    out = _out_dir(config)
    started = time.perf_counter()
    data = gen_synthetic_features(spec)
    generation_seconds = time.perf_counter() - started

    write_manifest(data.records, out / "synthetic_manifest.csv")
    cache = data.to_cache()
    cache.save(out / "synthetic_features.lusf")

    report, params, summary = time_pipeline(
        data.features,
        data.labels,
        config.train_config(),
        extraction_seconds=generation_seconds,
    )
    report.save(out / "timing.txt", config.header_lines())
    write_metrics(summary, out / "bench_metrics.txt", config.header_lines())
    head.save_head(params, out / "head.lush", cache.fingerprint)

    bench_config = RunConfig(**{f.name: getattr(config, f.name) for f in fields(RunConfig)})
    bench_config.manifest = str(out / "synthetic_manifest.csv")
    bench_config.features = str(out / "synthetic_features.lusf")
    bench_config.augment_copies = 0
    write_config(bench_config, out / "synthetic.config")

    print(
        f"bench: {data.n_frames} frames, train {report.training_seconds:.2f}s, "
        f"accuracy {summary.accuracy:.4f}"
    )
    return 0


def cmd_crossval(config: RunConfig, args) -> int:
    records = load_manifest(_require(config.manifest, "manifest"))
    out = _out_dir(config)

    extraction_seconds = 0.0
    if config.features:
        cache = _load_cache(config)
    else:
        spec = _backbone_spec(config)
        handle = _load_backbone_checked(spec)
        cache = FeatureCache(spec.backbone_id, handle.fingerprint, spec.feature_dim)
        started = time.perf_counter()
        extract_all(
            handle,
            records,
            lambda record: load_image(record.image_path),
            cache,
            copies=config.training_copies(),
            augment_params=config.augment_params(),
            seed=config.seed,
            jobs=config.jobs,
        )
        extraction_seconds = time.perf_counter() - started
        cache.save(out / "features.lusf")

    if args.folds_file:
        plan = FoldPlan.load(args.folds_file)
    else:
        plan = make_folds(records, config.folds, config.seed)
    plan.save(out / "folds.csv", config.header_lines())

    training_seconds = 0.0
    evaluation_seconds = 0.0
    fold_summaries = []
    all_reports: list[PatientReport] = []
    all_triplets: list[tuple[Zone, int, int]] = []

    for fold in range(plan.k):
        fold_dir = out / f"fold{fold}"
        fold_dir.mkdir(parents=True, exist_ok=True)
        train_records = plan.train_records(records, fold)
        test_records = plan.test_records(records, fold)
        if not train_records or not test_records:
            raise DataError(f"fold {fold}: empty train or test partition")

        result = _train_on(train_records, cache, config)
        training_seconds += result.seconds
        head.save_head(result.params, fold_dir / "head.lush", cache.fingerprint)

        eval_start = time.perf_counter()
        X_test = features_for_records(cache, test_records, copy_index=0)
        predictions = head.predict(result.params, X_test, [r.image_id for r in test_records])
        summary = _evaluate_and_export(
            fold_dir, test_records, predictions, _labels(test_records), config
        )
        evaluation_seconds += time.perf_counter() - eval_start
        fold_summaries.append(summary)

        reports, triplets = _patient_reports(test_records, predictions, config)
        _export_patient_reports(fold_dir, reports, config)
        all_reports.extend(reports)
        all_triplets.extend(triplets)

    lines = config.header_lines()
    lines.append(f"folds={plan.k}")
    for name in ("accuracy", "macro_precision", "macro_recall", "macro_auc"):
        values = [getattr(s, name) for s in fold_summaries]
        for fold, value in enumerate(values):
            lines.append(f"fold{fold}_{name}={value:.17g}")
        defined = [v for v in values if not np.isnan(v)]
        mean = float(np.mean(defined)) if defined else float("nan")
        lines.append(f"mean_{name}={mean:.17g}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    write_cohort_summary(
        cohort_report(all_reports, all_triplets), out / "cohort_summary.txt",
        config.header_lines(),
    )

    from .synthetic import TimingReport, hardware_note

    TimingReport(
        backbone_id=cache.backbone_id,
        extraction_seconds=extraction_seconds,
        training_seconds=training_seconds,
        evaluation_seconds=evaluation_seconds,
        n_frames=len(records),
        epochs=config.epochs,
        hardware=hardware_note(),
    ).save(out / "timing.txt", config.header_lines())

    mean_acc = float(np.mean([s.accuracy for s in fold_summaries]))
    print(f"crossval: {plan.k} folds, mean accuracy {mean_acc:.4f}")
    return 0


# --- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="flat key = value config file")
    shared.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
    shared.add_argument("--out", default=None, help="output directory")
    shared.add_argument("--jobs", type=int, default=None, help="extraction parallelism")
    shared.add_argument("--manifest", default=None, help="manifest csv path")
    shared.add_argument("--features", default=None, help="feature cache path")

    parser = argparse.ArgumentParser(prog="lusscore", description=__doc__)
    parser.add_argument("--version", action="version", version=f"lusscore {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", parents=[shared]).set_defaults(func=cmd_ingest)

    p_split = sub.add_parser("split", parents=[shared])
    p_split.add_argument("--folds", type=int, default=None)
    p_split.set_defaults(func=cmd_split)

    p_extract = sub.add_parser("extract", parents=[shared])
    p_extract.add_argument("--model-file", dest="model_file", default=None)
    p_extract.add_argument("--backbone", default=None)
    p_extract.set_defaults(func=cmd_extract)

    p_train = sub.add_parser("train", parents=[shared])
    p_train.add_argument("--folds-file", default=None)
    p_train.add_argument("--holdout", type=int, default=None, help="fold excluded from training")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", parents=[shared])
    p_eval.add_argument("--head", default=None, help="head parameter file")
    p_eval.add_argument("--folds-file", default=None)
    p_eval.add_argument("--holdout", type=int, default=None, help="fold to evaluate")
    p_eval.set_defaults(func=cmd_evaluate)

    p_cv = sub.add_parser("crossval", parents=[shared])
    p_cv.add_argument("--folds", type=int, default=None)
    p_cv.add_argument("--folds-file", default=None)
    p_cv.add_argument("--model-file", dest="model_file", default=None)
    p_cv.add_argument("--backbone", default=None)
    p_cv.set_defaults(func=cmd_crossval)

    p_score = sub.add_parser("score-patient", parents=[shared])
    p_score.add_argument("--patient", default=None)
    p_score.add_argument("--head", default=None)
    p_score.add_argument("--count-injection", default=None, help="per-zone counts csv")
    p_score.set_defaults(func=cmd_score_patient)

    p_bench = sub.add_parser("bench", parents=[shared])
    p_bench.add_argument("--n-per-class", type=int, default=250)
    p_bench.add_argument("--bench-dim", type=int, default=64)
    p_bench.add_argument("--separation", type=float, default=8.0)
    p_bench.add_argument("--patients", type=int, default=20)
    p_bench.set_defaults(func=cmd_bench)

    p_report = sub.add_parser("report", parents=[shared])
    p_report.add_argument("--predictions", default=None, help="predictions csv from evaluate")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = build_config(args)
        return args.func(config, args)
    except LusScoreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
