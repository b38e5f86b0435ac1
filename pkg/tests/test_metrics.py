import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lusscore.errors import DegenerateClasses, EmptyInput, LengthMismatch
from lusscore.head import Prediction
from lusscore.metrics import (
    ConfusionMatrix,
    evaluate,
    roc_auc_binary,
    roc_curve,
    trapezoid_area,
    write_metrics,
)


def brute_force_auc(scores, positives):
    """Independent oracle: literal enumeration over (positive, negative) pairs."""
    pos = [s for s, flag in zip(scores, positives) if flag]
    neg = [s for s, flag in zip(scores, positives) if not flag]
    if not pos or not neg:
        return None
    wins = sum(1 for sp in pos for sn in neg if sp > sn)
    ties = sum(1 for sp in pos for sn in neg if sp == sn)
    num2 = 2 * wins + ties
    den2 = 2 * len(pos) * len(neg)
    if 2 * num2 <= den2:
        return num2 / den2
    return 1.0 - (den2 - num2) / den2


def one_hot_prediction(image_id, cls):
    probs = np.zeros(4)
    probs[cls] = 1.0
    return Prediction(image_id, probs, cls)


class TestAucExamples:
    def test_perfect_separation(self):
        assert roc_auc_binary([0.9, 0.8, 0.3, 0.1], [True, True, False, False]) == 1.0

    def test_all_ties(self):
        assert roc_auc_binary([0.5] * 4, [True, True, False, False]) == 0.5

    def test_hand_enumerated_pairs(self):
        scores = [0.8, 0.4, 0.6, 0.2]
        assert roc_auc_binary(scores, [True, False, True, False]) == 1.0
        assert roc_auc_binary(scores, [False, True, False, True]) == 0.0

    def test_undefined_when_single_class(self):
        assert roc_auc_binary([0.1, 0.2], [True, True]) is None
        assert roc_auc_binary([0.1, 0.2], [False, False]) is None

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            roc_auc_binary([0.1, 0.2], [True])


class TestAucProperties:
    @settings(max_examples=300, deadline=None)
    @given(
        data=st.lists(
            st.tuples(st.integers(0, 5), st.booleans()), min_size=2, max_size=12
        )
    )
    def test_equals_brute_force_exactly(self, data):
        scores = [s / 5.0 for s, _ in data]
        positives = [p for _, p in data]
        mine = roc_auc_binary(scores, positives)
        assert mine == brute_force_auc(scores, positives)

    @settings(max_examples=200, deadline=None)
    @given(
        data=st.lists(
            st.tuples(st.floats(-5, 5, allow_nan=False), st.booleans()),
            min_size=2,
            max_size=20,
        )
    )
    def test_complement_sums_to_one_exactly(self, data):
        scores = [s for s, _ in data]
        positives = [p for _, p in data]
        if all(positives) or not any(positives):
            return
        a = roc_auc_binary(scores, positives)
        b = roc_auc_binary(scores, [not p for p in positives])
        assert a + b == 1.0

    def test_invariant_under_increasing_transform(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            scores = rng.normal(size=15)
            positives = rng.random(15) < 0.4
            if positives.all() or not positives.any():
                continue
            transformed = np.exp(3.0 * scores) + 7.0
            assert roc_auc_binary(scores, positives) == roc_auc_binary(
                transformed, positives
            )


class TestRocCurve:
    def test_perfect_curve_through_corner(self):
        points = roc_curve([0.9, 0.8, 0.2, 0.1], [True, True, False, False])
        assert (0.0, 1.0) in {tuple(p) for p in points}

    def test_two_sample_curve(self):
        points = roc_curve([0.9, 0.1], [True, False])
        assert points.tolist() == [[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]]

    def test_monotone_and_bracketed(self):
        rng = np.random.default_rng(3)
        scores = rng.normal(size=50)
        positives = rng.random(50) < 0.5
        points = roc_curve(scores, positives)
        assert tuple(points[0]) == (0.0, 0.0)
        assert tuple(points[-1]) == (1.0, 1.0)
        assert np.all(np.diff(points[:, 0]) >= 0)
        assert np.all(np.diff(points[:, 1]) >= 0)

    def test_area_equals_auc_random_instances(self):
        rng = np.random.default_rng(4)
        for trial in range(100):
            n = int(rng.integers(2, 60))
            scores = rng.choice([0.1, 0.3, 0.5, 0.7], size=n) if trial % 2 else rng.normal(size=n)
            positives = rng.random(n) < 0.5
            if positives.all() or not positives.any():
                continue
            area = trapezoid_area(roc_curve(scores, positives))
            assert abs(area - roc_auc_binary(scores, positives)) < 1e-9

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateClasses):
            roc_curve([0.5, 0.6], [True, True])


class TestConfusion:
    def test_counts_and_normalization(self):
        labels = np.asarray([0, 0, 1, 2, 3, 3])
        predicted = np.asarray([0, 1, 1, 2, 3, 2])
        cm = ConfusionMatrix.from_pairs(labels, predicted)
        assert cm.total == 6
        assert cm.counts[0, 0] == 1 and cm.counts[0, 1] == 1
        norm = cm.normalized
        supported = cm.counts.sum(axis=1) > 0
        assert np.abs(norm[supported].sum(axis=1) - 1.0).max() < 1e-9

    def test_zero_support_rows_flagged(self):
        cm = ConfusionMatrix.from_pairs(np.asarray([0, 0]), np.asarray([0, 1]))
        assert cm.zero_support_rows == (1, 2, 3)
        assert np.all(cm.normalized[1] == 0)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(1)
        labels = rng.integers(0, 4, 40)
        predicted = rng.integers(0, 4, 40)
        cm1 = ConfusionMatrix.from_pairs(labels, predicted)
        perm = rng.permutation(40)
        cm2 = ConfusionMatrix.from_pairs(labels[perm], predicted[perm])
        assert np.array_equal(cm1.counts, cm2.counts)


class TestEvaluate:
    def test_perfect_classifier(self):
        labels = [0, 1, 2, 3, 2, 1]
        predictions = [one_hot_prediction(f"i{k}", c) for k, c in enumerate(labels)]
        summary = evaluate(predictions, labels)
        assert summary.accuracy == 1.0
        assert summary.macro_precision == 1.0
        assert summary.macro_recall == 1.0
        assert summary.macro_auc == 1.0
        norm = summary.confusion.normalized
        assert np.array_equal(norm, np.eye(4))

    def test_hand_computed_macro_metrics(self):
        """4 frames, labels 0..3, predicted [0,1,2,2]."""
        labels = [0, 1, 2, 3]
        predictions = [one_hot_prediction(f"i{k}", c) for k, c in enumerate([0, 1, 2, 2])]
        summary = evaluate(predictions, labels)
        assert summary.accuracy == 0.75
        assert np.allclose(summary.recall_per_class, [1.0, 1.0, 1.0, 0.0])
        assert summary.macro_recall == 0.75
        # class 3 never predicted: precision undefined, excluded from macro
        assert np.isnan(summary.precision_per_class[3])
        assert summary.undefined_precision_classes == (3,)
        assert summary.macro_precision == pytest.approx((1.0 + 1.0 + 0.5) / 3, abs=1e-12)

    def test_macro_matches_naive_recomputation(self):
        rng = np.random.default_rng(7)
        labels = rng.integers(0, 4, 200)
        probs = rng.dirichlet(np.ones(4), size=200)
        predictions = [
            Prediction(f"i{k}", probs[k], int(np.argmax(probs[k]))) for k in range(200)
        ]
        summary = evaluate(predictions, labels)
        predicted = np.asarray([p.predicted for p in predictions])
        per_class_precision = []
        per_class_recall = []
        for c in range(4):
            tp = int(np.sum((predicted == c) & (labels == c)))
            fp = int(np.sum((predicted == c) & (labels != c)))
            fn = int(np.sum((predicted != c) & (labels == c)))
            if tp + fp:
                per_class_precision.append(tp / (tp + fp))
            if tp + fn:
                per_class_recall.append(tp / (tp + fn))
        assert summary.macro_precision == pytest.approx(np.mean(per_class_precision), abs=0)
        assert summary.macro_recall == pytest.approx(np.mean(per_class_recall), abs=0)
        assert summary.accuracy == np.mean(predicted == labels)

    def test_auc_uses_probabilities_not_argmax(self):
        # class 1 never wins argmax but its probability still ranks perfectly
        probs = np.asarray(
            [[0.6, 0.3, 0.05, 0.05], [0.55, 0.05, 0.3, 0.1], [0.6, 0.25, 0.1, 0.05]]
        )
        labels = [1, 2, 0]
        predictions = [Prediction(f"i{k}", probs[k], int(np.argmax(probs[k]))) for k in range(3)]
        summary = evaluate(predictions, labels)
        assert summary.auc_per_class[1] == 1.0

    def test_errors(self):
        with pytest.raises(EmptyInput):
            evaluate([], [])
        with pytest.raises(LengthMismatch):
            evaluate([one_hot_prediction("a", 0)], [0, 1])


def test_write_metrics_format(tmp_path):
    labels = [0, 1, 2, 3]
    predictions = [one_hot_prediction(f"i{k}", k) for k in range(4)]
    summary = evaluate(predictions, labels)
    path = tmp_path / "metrics.txt"
    write_metrics(summary, path, ["# header"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# header"
    assert "accuracy=1" in "\n".join(lines)
    block_at = lines.index("confusion_counts=")
    rows = lines[block_at + 1 : block_at + 5]
    assert [r.split(",") for r in rows] == [
        ["1", "0", "0", "0"],
        ["0", "1", "0", "0"],
        ["0", "0", "1", "0"],
        ["0", "0", "0", "1"],
    ]
