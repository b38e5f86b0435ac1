"""Fold frame classifications into region scores and global 0-36 scores.

A region's score is the severity class holding the most frames in that
zone ("plurality"); exact ties resolve toward the higher severity by
default, the safer failure mode for a triage aid (configurable).  Zones
with no frames are missing: they are excluded from the global sum and the
report is flagged partial instead of silently imputing zeros.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .data import ALL_ZONES, SEVERITY_LEVELS, Zone, check_severity
from .errors import ConfigError

TIE_BREAK_MODES = ("high", "low")


def plurality_score(counts: Mapping[int, int], tie_break: str = "high") -> int | None:
    """Class with the largest count; None when all counts are zero."""
    if tie_break not in TIE_BREAK_MODES:
        raise ConfigError(f"tie_break must be one of {TIE_BREAK_MODES}")
    best = None
    best_count = 0
    levels = SEVERITY_LEVELS if tie_break == "low" else reversed(SEVERITY_LEVELS)
    for level in levels:
        count = int(counts.get(level, 0))
        if count > best_count:
            best, best_count = level, count
    return best


@dataclass(frozen=True)
class RegionTally:
    zone: Zone
    counts: Mapping[int, int]
    region_score: int | None

    @classmethod
    def from_labels(cls, zone: Zone, labels: Iterable[int], tie_break: str = "high"):
        counts = {level: 0 for level in SEVERITY_LEVELS}
        for label in labels:
            counts[check_severity(label)] += 1
        return cls(zone=zone, counts=counts, region_score=plurality_score(counts, tie_break))

    @classmethod
    def from_counts(cls, zone: Zone, counts: Mapping[int, int], tie_break: str = "high"):
        full = {level: int(counts.get(level, 0)) for level in SEVERITY_LEVELS}
        if any(v < 0 for v in full.values()):
            raise ConfigError(f"zone {zone.name}: negative frame count")
        return cls(zone=zone, counts=full, region_score=plurality_score(full, tie_break))

    @property
    def n_frames(self) -> int:
        return sum(self.counts.values())


def tally_region(zone: Zone, labels: Iterable[int], tie_break: str = "high") -> RegionTally:
    """Histogram one zone's frame classes and pick the region score."""
    return RegionTally.from_labels(zone, labels, tie_break)


@dataclass(frozen=True)
class PatientReport:
    patient_id: str
    truth: Mapping[Zone, RegionTally]
    predicted: Mapping[Zone, RegionTally]
    global_truth: int
    global_predicted: int
    missing_zones: tuple[Zone, ...]
    agreement: Mapping[Zone, bool]

    @property
    def partial(self) -> bool:
        return len(self.missing_zones) > 0

    @property
    def zones_present(self) -> tuple[Zone, ...]:
        return tuple(z for z in ALL_ZONES if z in self.truth)

    @property
    def disagreeing_zones(self) -> tuple[Zone, ...]:
        return tuple(z for z in self.zones_present if not self.agreement[z])


def build_patient_report(
    patient_id: str,
    zoned_frames: Iterable[tuple[Zone, int, int]],
    tie_break: str = "high",
) -> PatientReport:
    """Aggregate (zone, truth label, predicted label) frames for one patient."""
    truth_labels: dict[Zone, list[int]] = {}
    predicted_labels: dict[Zone, list[int]] = {}
    for zone, truth, predicted in zoned_frames:
        truth_labels.setdefault(zone, []).append(truth)
        predicted_labels.setdefault(zone, []).append(predicted)
    truth_counts = {
        z: {level: labels.count(level) for level in SEVERITY_LEVELS}
        for z, labels in truth_labels.items()
    }
    predicted_counts = {
        z: {level: labels.count(level) for level in SEVERITY_LEVELS}
        for z, labels in predicted_labels.items()
    }
    return build_patient_report_from_counts(patient_id, truth_counts, predicted_counts, tie_break)


def build_patient_report_from_counts(
    patient_id: str,
    truth_counts: Mapping[Zone, Mapping[int, int]],
    predicted_counts: Mapping[Zone, Mapping[int, int]],
    tie_break: str = "high",
) -> PatientReport:
    """Build a report straight from per-zone count tables (count injection)."""
    present = [z for z in ALL_ZONES if z in truth_counts or z in predicted_counts]
    truth: dict[Zone, RegionTally] = {}
    predicted: dict[Zone, RegionTally] = {}
    agreement: dict[Zone, bool] = {}
    for zone in present:
        t = RegionTally.from_counts(zone, truth_counts.get(zone, {}), tie_break)
        p = RegionTally.from_counts(zone, predicted_counts.get(zone, {}), tie_break)
        truth[zone] = t
        predicted[zone] = p
        agreement[zone] = t.region_score == p.region_score
    return PatientReport(
        patient_id=patient_id,
        truth=truth,
        predicted=predicted,
        global_truth=sum(t.region_score for t in truth.values() if t.region_score is not None),
        global_predicted=sum(
            p.region_score for p in predicted.values() if p.region_score is not None
        ),
        missing_zones=tuple(z for z in ALL_ZONES if z not in truth),
        agreement=agreement,
    )


@dataclass(frozen=True)
class ZoneSummary:
    zone: Zone
    n_frames: int
    n_patients: int
    frame_accuracy: float | None  # frames with pred == truth in this zone
    score_agreement: float | None  # patients whose region score matches


@dataclass(frozen=True)
class CohortSummary:
    n_patients: int
    zone_agreement_rate: float | None
    global_mae: float | None
    per_zone: Mapping[Zone, ZoneSummary]


def cohort_report(
    reports: Sequence[PatientReport],
    zoned_frames: Iterable[tuple[Zone, int, int]] = (),
) -> CohortSummary:
    """Cohort aggregates over held-out patient reports.

    Region-level quality is reported two ways, per zone: the fraction of
    frames classified correctly, and the fraction of patients whose region
    score agrees with truth.
    """
    agree_flags: list[bool] = []
    per_zone_patients: dict[Zone, list[bool]] = {z: [] for z in ALL_ZONES}
    abs_errors: list[int] = []
    for report in reports:
        abs_errors.append(abs(report.global_truth - report.global_predicted))
        for zone in report.zones_present:
            flag = report.agreement[zone]
            agree_flags.append(flag)
            per_zone_patients[zone].append(flag)

    per_zone_frames: dict[Zone, list[bool]] = {z: [] for z in ALL_ZONES}
    for zone, truth, predicted in zoned_frames:
        per_zone_frames[zone].append(truth == predicted)

    per_zone: dict[Zone, ZoneSummary] = {}
    for zone in ALL_ZONES:
        frames = per_zone_frames[zone]
        patients = per_zone_patients[zone]
        per_zone[zone] = ZoneSummary(
            zone=zone,
            n_frames=len(frames),
            n_patients=len(patients),
            frame_accuracy=(sum(frames) / len(frames)) if frames else None,
            score_agreement=(sum(patients) / len(patients)) if patients else None,
        )
    return CohortSummary(
        n_patients=len(reports),
        zone_agreement_rate=(sum(agree_flags) / len(agree_flags)) if agree_flags else None,
        global_mae=(sum(abs_errors) / len(abs_errors)) if abs_errors else None,
        per_zone=per_zone,
    )


# --- exports ---------------------------------------------------------------------

def _cell(value) -> str:
    return "" if value is None else str(value)


def write_patient_report_csv(
    report: PatientReport, path: str | Path, header_lines: Sequence[str] = ()
) -> None:
    """One row per zone in display order, then a trailing global row."""
    lines = list(header_lines)
    if report.partial:
        lines.append(f"# partial: {len(report.missing_zones)} zone(s) missing")
    columns = ["zone"]
    columns += [f"truth_{level}" for level in SEVERITY_LEVELS]
    columns += [f"predicted_{level}" for level in SEVERITY_LEVELS]
    columns += ["truth_region_score", "predicted_region_score", "agree"]
    lines.append(",".join(columns))
    for zone in ALL_ZONES:
        if zone in report.truth:
            t, p = report.truth[zone], report.predicted[zone]
            row = [zone.name]
            row += [str(t.counts[level]) for level in SEVERITY_LEVELS]
            row += [str(p.counts[level]) for level in SEVERITY_LEVELS]
            row += [_cell(t.region_score), _cell(p.region_score)]
            row.append("yes" if report.agreement[zone] else "no")
        else:
            row = [zone.name] + [""] * 10
        lines.append(",".join(row))
    global_agree = "yes" if report.global_truth == report.global_predicted else "no"
    lines.append(
        f"global,,,,,,,,,{report.global_truth},{report.global_predicted},{global_agree}"
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def report_to_dict(report: PatientReport) -> dict:
    zones = {}
    for zone in ALL_ZONES:
        if zone in report.truth:
            t, p = report.truth[zone], report.predicted[zone]
            zones[zone.name] = {
                "truth_counts": {str(level): t.counts[level] for level in SEVERITY_LEVELS},
                "predicted_counts": {str(level): p.counts[level] for level in SEVERITY_LEVELS},
                "truth_region_score": t.region_score,
                "predicted_region_score": p.region_score,
                "agree": report.agreement[zone],
            }
        else:
            zones[zone.name] = None
    return {
        "patient_id": report.patient_id,
        "zones": zones,
        "global_truth": report.global_truth,
        "global_predicted": report.global_predicted,
        "partial": report.partial,
        "missing_zones": [z.name for z in report.missing_zones],
    }


def write_patient_report_json(report: PatientReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_cohort_summary(
    summary: CohortSummary, path: str | Path, header_lines: Sequence[str] = ()
) -> None:
    def fmt(x) -> str:
        return "undefined" if x is None else f"{x:.17g}"

    lines = list(header_lines)
    lines.append(f"n_patients={summary.n_patients}")
    lines.append(f"zone_agreement_rate={fmt(summary.zone_agreement_rate)}")
    lines.append(f"global_score_mae={fmt(summary.global_mae)}")
    lines.append("zone,n_frames,n_patients,frame_accuracy,score_agreement")
    for zone in ALL_ZONES:
        z = summary.per_zone[zone]
        lines.append(
            f"{zone.name},{z.n_frames},{z.n_patients},{fmt(z.frame_accuracy)},{fmt(z.score_agreement)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
