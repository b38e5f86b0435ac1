"""Cohort data model: severity labels, scanning zones, manifests, and folds.

A manifest is a comma-delimited UTF-8 table with a required header row and
columns ``image_id, patient_id, covid_status, zone, score, image_path``.
Fields are never quoted, so image paths must not contain commas.  The zone
field may be empty for frames without an anatomical assignment; such frames
train and score like any other but are excluded from per-zone aggregation.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    ConfigError,
    ContradictoryStatus,
    DuplicateImageId,
    InvalidScore,
    MalformedRow,
    TooFewPatients,
    UnknownZone,
)
from .rng import CounterRng, derive_seed

SEVERITY_LEVELS = (0, 1, 2, 3)
SIDES = ("left", "right")
ASPECTS = ("anterior", "lateral", "posterior")
LEVELS = ("superior", "inferior")
COVID_STATUSES = ("positive", "healthy")

MANIFEST_COLUMNS = ("image_id", "patient_id", "covid_status", "zone", "score", "image_path")


def check_severity(value) -> int:
    """Return value as an int severity score, rejecting anything outside 0..3."""
    try:
        score = int(value)
    except (TypeError, ValueError):
        raise InvalidScore(f"severity label {value!r} is not an integer") from None
    if score != float(value) or score not in SEVERITY_LEVELS:
        raise InvalidScore(f"severity label {value!r} outside {{0, 1, 2, 3}}")
    return score


@dataclass(frozen=True)
class Zone:
    """One of the 12 scanning zones: side x aspect x level."""

    side: str
    aspect: str
    level: str

    def __post_init__(self):
        if self.side not in SIDES or self.aspect not in ASPECTS or self.level not in LEVELS:
            raise UnknownZone(f"no such zone: {self.side}_{self.aspect}_{self.level}")

    @property
    def name(self) -> str:
        return f"{self.side}_{self.aspect}_{self.level}"

    @property
    def display(self) -> str:
        return f"{self.side.capitalize()} {self.aspect.capitalize()} {self.level.capitalize()}"

    @classmethod
    def parse(cls, text: str) -> "Zone":
        parts = text.strip().lower().split("_")
        if len(parts) != 3:
            raise UnknownZone(f"zone {text!r} is not side_aspect_level")
        return cls(*parts)


# Report row order: left before right, anterior/lateral/posterior, superior first.
ALL_ZONES: tuple[Zone, ...] = tuple(
    Zone(side, aspect, level) for side in SIDES for aspect in ASPECTS for level in LEVELS
)
ZONE_BY_NAME = {z.name: z for z in ALL_ZONES}


@dataclass(frozen=True)
class ImageRecord:
    """One labeled ultrasound frame."""

    image_id: str
    patient_id: str
    covid_status: str
    zone: Zone | None
    label: int
    image_path: str


def load_manifest(path: str | Path) -> list[ImageRecord]:
    """Read a manifest file into validated records, preserving row order."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedRow(f"cannot read manifest {path}: {exc}") from exc

    lines = text.splitlines()
    if not lines:
        raise MalformedRow(f"{path}: empty manifest (missing header row)")
    header = tuple(field.strip() for field in lines[0].split(","))
    if header != MANIFEST_COLUMNS:
        raise MalformedRow(
            f"{path}: header must be {','.join(MANIFEST_COLUMNS)!r}, got {lines[0]!r}"
        )

    records: list[ImageRecord] = []
    seen_ids: set[str] = set()
    patient_status: dict[str, str] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(MANIFEST_COLUMNS):
            raise MalformedRow(
                f"{path}:{lineno}: expected {len(MANIFEST_COLUMNS)} fields, got {len(fields)}"
            )
        image_id, patient_id, status, zone_text, score_text, image_path = fields
        if not image_id or not patient_id or not image_path:
            raise MalformedRow(f"{path}:{lineno}: empty image_id/patient_id/image_path")
        if status not in COVID_STATUSES:
            raise MalformedRow(f"{path}:{lineno}: covid_status {status!r} not in {COVID_STATUSES}")
        if image_id in seen_ids:
            raise DuplicateImageId(f"{path}:{lineno}: duplicate image_id {image_id!r}")
        seen_ids.add(image_id)
        prev = patient_status.get(patient_id)
        if prev is not None and prev != status:
            raise ContradictoryStatus(
                f"{path}:{lineno}: patient {patient_id!r} appears as both {prev} and {status}"
            )
        patient_status[patient_id] = status
        try:
            score = int(score_text)
        except ValueError:
            raise MalformedRow(f"{path}:{lineno}: score {score_text!r} is not an integer") from None
        if score not in SEVERITY_LEVELS:
            raise InvalidScore(f"{path}:{lineno}: score {score} outside {{0, 1, 2, 3}}")
        try:
            zone = Zone.parse(zone_text) if zone_text else None
        except UnknownZone as exc:
            raise UnknownZone(f"{path}:{lineno}: {exc}") from None
        records.append(ImageRecord(image_id, patient_id, status, zone, score, image_path))
    return records


def write_manifest(records: Iterable[ImageRecord], path: str | Path) -> None:
    path = Path(path)
    lines = [",".join(MANIFEST_COLUMNS)]
    for r in records:
        zone = r.zone.name if r.zone is not None else ""
        lines.append(f"{r.image_id},{r.patient_id},{r.covid_status},{zone},{r.label},{r.image_path}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def class_histogram(records: Iterable[ImageRecord]) -> dict[int, int]:
    """Count records per severity score; absent classes report 0."""
    counts = {score: 0 for score in SEVERITY_LEVELS}
    for r in records:
        counts[r.label] += 1
    return counts


def patients_by_status(records: Iterable[ImageRecord]) -> dict[str, list[str]]:
    """Map covid_status -> sorted unique patient ids."""
    groups: dict[str, set[str]] = {}
    for r in records:
        groups.setdefault(r.covid_status, set()).add(r.patient_id)
    return {status: sorted(pids) for status, pids in groups.items()}


@dataclass(frozen=True)
class FoldPlan:
    """Patient-level fold assignment: every image follows its patient."""

    k: int
    assignment: Mapping[str, int]

    def fold_of(self, patient_id: str) -> int:
        return self.assignment[patient_id]

    def patients_in_fold(self, fold: int) -> list[str]:
        return sorted(p for p, f in self.assignment.items() if f == fold)

    def test_records(self, records: Sequence[ImageRecord], fold: int) -> list[ImageRecord]:
        return [r for r in records if self.assignment[r.patient_id] == fold]

    def train_records(self, records: Sequence[ImageRecord], fold: int) -> list[ImageRecord]:
        return [r for r in records if self.assignment[r.patient_id] != fold]

    def save(self, path: str | Path, header_lines: Sequence[str] = ()) -> None:
        lines = list(header_lines)
        lines.append("patient_id,fold")
        for pid in sorted(self.assignment):
            lines.append(f"{pid},{self.assignment[pid]}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "FoldPlan":
        assignment: dict[str, int] = {}
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        body = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
        if not body or body[0] != "patient_id,fold":
            raise MalformedRow(f"{path}: expected 'patient_id,fold' header")
        for ln in body[1:]:
            pid, fold = ln.split(",")
            assignment[pid] = int(fold)
        if not assignment:
            raise MalformedRow(f"{path}: no fold assignments")
        return cls(k=max(assignment.values()) + 1, assignment=assignment)


def make_folds(records: Sequence[ImageRecord], k: int, seed: int) -> FoldPlan:
    """Assign patients to k folds, stratified by covid status.

    Within each status group the (sorted) patients are shuffled with a
    seeded generator and dealt round-robin, which keeps per-fold counts
    within +/-1 of each other per group.  The result depends only on the
    patient set, k, and the seed, never on manifest row order.
    """
    if k < 2:
        raise ConfigError(f"fold count must be >= 2, got {k}")
    groups = patients_by_status(records)
    if not groups:
        raise TooFewPatients("manifest contains no patients")
    assignment: dict[str, int] = {}
    for status in sorted(groups):
        patients = groups[status]
        if len(patients) < k:
            raise TooFewPatients(
                f"status {status!r} has {len(patients)} patients, fewer than k={k}"
            )
        rng = CounterRng(derive_seed(seed, "folds", status))
        for j, idx in enumerate(rng.permutation(len(patients))):
            assignment[patients[idx]] = j % k
    return FoldPlan(k=k, assignment=assignment)
