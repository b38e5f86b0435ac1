import itertools
import json

import pytest

from lusscore.aggregate import (
    RegionTally,
    build_patient_report,
    build_patient_report_from_counts,
    cohort_report,
    plurality_score,
    report_to_dict,
    tally_region,
    write_patient_report_csv,
    write_patient_report_json,
)
from lusscore.data import ALL_ZONES, Zone
from lusscore.errors import ConfigError
from tests.fig4_fixture import (
    PATIENT_ONE,
    PATIENT_ONE_DISAGREEMENTS,
    PATIENT_ONE_GLOBALS,
    PATIENT_ONE_REGION_SCORES,
    PATIENT_TWO,
    PATIENT_TWO_DISAGREEMENTS,
    PATIENT_TWO_GLOBALS,
    PATIENT_TWO_REGION_SCORES,
    as_zone_counts,
)

LAS = Zone.parse("left_anterior_superior")
LPS = Zone.parse("left_posterior_superior")


class TestPlurality:
    def test_published_row_examples(self):
        assert plurality_score({0: 5, 1: 44, 2: 0, 3: 0}) == 1
        assert plurality_score({0: 65, 1: 2, 2: 0, 3: 0}) == 0

    def test_tie_goes_high_by_default(self):
        assert plurality_score({0: 10, 1: 0, 2: 10, 3: 0}) == 2

    def test_tie_low_mode(self):
        assert plurality_score({0: 10, 1: 0, 2: 10, 3: 0}, tie_break="low") == 0

    def test_empty_is_none(self):
        assert plurality_score({0: 0, 1: 0, 2: 0, 3: 0}) is None

    def test_bad_mode(self):
        with pytest.raises(ConfigError):
            plurality_score({0: 1}, tie_break="random")

    def test_tie_rule_monotone_upward(self):
        """Raising a frame's class never lowers the region score when the
        move creates a tie at the new maximum or breaks an existing top tie
        upward.  Exhaustive over count maps with at most 6 frames."""

        def argmax_set(counts):
            top = max(counts.values())
            return {k for k, v in counts.items() if v == top and top > 0}

        checked = 0
        for counts in itertools.product(range(7), repeat=4):
            if not 0 < sum(counts) <= 6:
                continue
            base = dict(enumerate(counts))
            score = plurality_score(base)
            top_before = argmax_set(base)
            for src in range(4):
                if counts[src] == 0:
                    continue
                for dst in range(src + 1, 4):
                    moved = dict(base)
                    moved[src] -= 1
                    moved[dst] += 1
                    top_after = argmax_set(moved)
                    creates_tie_up = (
                        dst in top_after and len(top_after) >= 2 and dst not in top_before
                    )
                    breaks_tie_up = (
                        len(top_before) >= 2
                        and dst == max(top_before)
                        and top_after == {dst}
                    )
                    if creates_tie_up or breaks_tie_up:
                        checked += 1
                        assert plurality_score(moved) >= score, (base, src, dst)
        assert checked == 221  # qualifying moves for totals <= 6


class TestTally:
    def test_from_labels(self):
        tally = tally_region(LAS, [0, 1, 1, 1, 2])
        assert tally.counts == {0: 1, 1: 3, 2: 1, 3: 0}
        assert tally.region_score == 1
        assert tally.n_frames == 5

    def test_order_invariant(self):
        labels = [0, 2, 2, 1, 3, 2]
        assert tally_region(LAS, labels) == tally_region(LAS, labels[::-1])

    def test_from_counts_matches_published_first_row(self):
        tally = RegionTally.from_counts(LAS, {0: 5, 1: 44})
        assert tally.region_score == 1


class TestPatientOne:
    @pytest.fixture
    def report(self):
        truth, predicted = as_zone_counts(PATIENT_ONE)
        return build_patient_report_from_counts("patient-one", truth, predicted)

    def test_region_scores(self, report):
        truth_scores = tuple(report.truth[z].region_score for z in ALL_ZONES)
        predicted_scores = tuple(report.predicted[z].region_score for z in ALL_ZONES)
        assert truth_scores == PATIENT_ONE_REGION_SCORES["truth"]
        assert predicted_scores == PATIENT_ONE_REGION_SCORES["predicted"]

    def test_global_scores(self, report):
        assert (report.global_truth, report.global_predicted) == PATIENT_ONE_GLOBALS

    def test_exact_disagreement_set(self, report):
        assert tuple(z.name for z in report.disagreeing_zones) == PATIENT_ONE_DISAGREEMENTS

    def test_complete(self, report):
        assert not report.partial
        assert report.missing_zones == ()


class TestPatientTwo:
    @pytest.fixture
    def report(self):
        truth, predicted = as_zone_counts(PATIENT_TWO)
        return build_patient_report_from_counts("patient-two", truth, predicted)

    def test_region_scores(self, report):
        truth_scores = tuple(report.truth[z].region_score for z in ALL_ZONES)
        predicted_scores = tuple(report.predicted[z].region_score for z in ALL_ZONES)
        assert truth_scores == PATIENT_TWO_REGION_SCORES["truth"]
        assert predicted_scores == PATIENT_TWO_REGION_SCORES["predicted"]

    def test_global_scores(self, report):
        assert (report.global_truth, report.global_predicted) == PATIENT_TWO_GLOBALS

    def test_exact_disagreement_set(self, report):
        assert tuple(z.name for z in report.disagreeing_zones) == PATIENT_TWO_DISAGREEMENTS


class TestBuildFromFrames:
    def test_frames_equal_counts_path(self):
        frames = [(LAS, 1, 1), (LAS, 1, 0), (LAS, 0, 0), (LPS, 2, 2)]
        report = build_patient_report("p", frames)
        assert report.truth[LAS].counts == {0: 1, 1: 2, 2: 0, 3: 0}
        assert report.predicted[LAS].counts == {0: 2, 1: 1, 2: 0, 3: 0}
        assert report.global_truth == 1 + 2
        assert report.global_predicted == 0 + 2
        assert len(report.missing_zones) == 10
        assert report.partial

    def test_empty_patient(self):
        report = build_patient_report("p", [])
        assert report.partial
        assert report.global_truth == 0
        assert report.global_predicted == 0
        assert len(report.missing_zones) == 12

    def test_global_bounds_when_complete(self):
        frames = [(z, 3, 3) for z in ALL_ZONES]
        report = build_patient_report("p", frames)
        assert report.global_truth == 36
        assert not report.partial


class TestCohort:
    def test_published_pair_mean_absolute_error(self):
        reports = [
            build_patient_report_from_counts("one", *as_zone_counts(PATIENT_ONE)),
            build_patient_report_from_counts("two", *as_zone_counts(PATIENT_TWO)),
        ]
        summary = cohort_report(reports)
        assert summary.global_mae == pytest.approx(0.5, abs=0)
        assert summary.n_patients == 2
        # 24 zones scored, 3 disagreements
        assert summary.zone_agreement_rate == pytest.approx(21 / 24, abs=1e-12)

    def test_identical_streams_perfect(self):
        frames = [(z, 1, 1) for z in ALL_ZONES]
        reports = [build_patient_report("p", frames)]
        summary = cohort_report(reports, frames)
        assert summary.zone_agreement_rate == 1.0
        assert summary.global_mae == 0.0
        for z in ALL_ZONES:
            assert summary.per_zone[z].frame_accuracy == 1.0
            assert summary.per_zone[z].score_agreement == 1.0

    def test_single_zone_off_by_one(self):
        frames = [(z, 1, 1) for z in ALL_ZONES[:-1]] + [(ALL_ZONES[-1], 1, 2)]
        report = build_patient_report("p", frames)
        summary = cohort_report([report], frames)
        assert summary.zone_agreement_rate == pytest.approx(11 / 12, abs=1e-12)
        assert summary.global_mae == 1.0

    def test_empty_cohort(self):
        summary = cohort_report([])
        assert summary.n_patients == 0
        assert summary.zone_agreement_rate is None
        assert summary.global_mae is None


class TestExports:
    def test_csv_layout(self, tmp_path):
        truth, predicted = as_zone_counts(PATIENT_ONE)
        report = build_patient_report_from_counts("one", truth, predicted)
        path = tmp_path / "one.csv"
        write_patient_report_csv(report, path, ["# hdr"])
        lines = path.read_text().splitlines()
        assert lines[0] == "# hdr"
        assert lines[1].startswith("zone,truth_0")
        zone_rows = lines[2:14]
        assert [r.split(",")[0] for r in zone_rows] == [z.name for z in ALL_ZONES]
        first = zone_rows[0].split(",")
        assert first[1:5] == ["5", "44", "0", "0"]
        assert first[5:9] == ["2", "45", "2", "0"]
        assert first[9:11] == ["1", "1"]
        global_row = lines[14].split(",")
        assert global_row[0] == "global"
        assert global_row[9:12] == ["9", "9", "yes"]

    def test_json_round_trip(self, tmp_path):
        truth, predicted = as_zone_counts(PATIENT_TWO)
        report = build_patient_report_from_counts("two", truth, predicted)
        path = tmp_path / "two.json"
        write_patient_report_json(report, path)
        loaded = json.loads(path.read_text())
        assert loaded["global_truth"] == 16
        assert loaded["global_predicted"] == 15
        assert loaded["zones"]["right_anterior_inferior"]["agree"] is False
        assert loaded == report_to_dict(report)

    def test_missing_zone_rows_blank(self, tmp_path):
        report = build_patient_report("p", [(LAS, 0, 0)])
        path = tmp_path / "p.csv"
        write_patient_report_csv(report, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# partial")
        las_row = next(ln for ln in lines if ln.startswith("left_anterior_superior"))
        assert las_row.split(",")[1] == "1"
        lps_row = next(ln for ln in lines if ln.startswith("left_posterior_superior"))
        assert lps_row.split(",")[1:] == [""] * 10
