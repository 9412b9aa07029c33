"""Regression metrics against hand values and the loop-based oracle."""

import numpy as np
import pytest

import oracles
from safrlm.errors import ValidationError
from safrlm.metrics import (
    MetricsReport,
    average_reports,
    compute_metrics,
    round_half_away,
    seven_class,
)


class TestKnownValues:
    def test_identity_predictions(self):
        labels = np.array([1.0, -2.0, 0.5, 3.0])
        r = compute_metrics(labels.copy(), labels)
        assert r.acc7 == 100.0
        assert r.acc2 == 100.0
        assert r.f1 == 100.0
        assert r.mae == 0.0
        assert abs(r.corr - 1.0) < 1e-12

    def test_rounding_rule(self):
        r = compute_metrics(np.array([1.4]), np.array([1.0]))
        assert r.acc7 == 100.0

    def test_binarization_and_mae(self):
        r = compute_metrics(np.array([-0.2, 0.3]), np.array([-1.0, 2.0]))
        assert r.acc2 == 100.0
        assert abs(r.mae - 1.25) < 1e-12

    def test_half_rounds_away_from_zero(self):
        np.testing.assert_array_equal(
            round_half_away(np.array([0.5, -0.5, 1.5, -1.5, 2.49])),
            [1.0, -1.0, 2.0, -2.0, 2.0])

    def test_seven_classes_cover_range(self):
        rng = np.random.default_rng(0)
        classes = seven_class(rng.uniform(-10, 10, size=5000))
        assert set(np.unique(classes)) <= {-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0}
        classes_in = seven_class(rng.uniform(-3, 3, size=5000))
        assert set(np.unique(classes_in)) == {-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0}

    def test_zero_variance_corr_undefined(self):
        r = compute_metrics(np.array([1.0, 1.0]), np.array([0.0, 1.0]))
        assert r.corr is None
        r = compute_metrics(np.array([0.0, 1.0]), np.array([1.0, 1.0]))
        assert r.corr is None

    def test_exclude_zero_mode(self):
        preds = np.array([0.5, -0.5, 0.2])
        labels = np.array([0.0, -1.0, 1.0])
        geq = compute_metrics(preds, labels, binarize="geq_zero")
        exc = compute_metrics(preds, labels, binarize="exclude_zero")
        assert geq.acc2 == 100.0          # label 0 counts as positive, pred 0.5 too
        assert exc.acc2 == 100.0          # zero label dropped, other two correct
        labels2 = np.array([0.0, -1.0, -1.0])
        assert compute_metrics(preds, labels2, "exclude_zero").acc2 == 50.0

    def test_validation(self):
        with pytest.raises(ValidationError):
            compute_metrics(np.array([1.0]), np.array([1.0, 2.0]))
        with pytest.raises(ValidationError):
            compute_metrics(np.array([]), np.array([]))
        with pytest.raises(ValidationError):
            compute_metrics(np.array([1.0]), np.array([1.0]), binarize="nope")


class TestOracleEquivalence:
    @pytest.mark.parametrize("binarize", ["geq_zero", "exclude_zero"])
    def test_random_vectors(self, binarize):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            n = int(rng.integers(1, 40))
            preds = rng.uniform(-4, 4, size=n)
            labels = rng.uniform(-3, 3, size=n)
            if rng.random() < 0.3:  # sprinkle exact zeros and integer labels
                labels = np.round(labels)
            r = compute_metrics(preds, labels, binarize=binarize)
            acc7, acc2, f1, mae, corr = oracles.metrics(
                preds.tolist(), labels.tolist(), binarize=binarize)
            assert abs(r.acc7 - acc7) < 1e-9
            assert abs(r.acc2 - acc2) < 1e-9
            assert abs(r.f1 - f1) < 1e-9
            assert abs(r.mae - mae) < 1e-9
            if corr is None:
                assert r.corr is None
            else:
                assert abs(r.corr - corr) < 1e-9


class TestAveraging:
    def test_arithmetic_mean(self):
        a = MetricsReport(acc7=30.0, acc2=80.0, f1=81.0, mae=0.9, corr=0.6)
        b = MetricsReport(acc7=40.0, acc2=82.0, f1=83.0, mae=1.1, corr=0.8)
        avg = average_reports([a, b])
        assert avg.acc2 == 81.0
        assert abs(avg.mae - 1.0) < 1e-12
        assert abs(avg.corr - 0.7) < 1e-12

    def test_single_report_identity(self):
        a = MetricsReport(acc7=30.0, acc2=80.0, f1=81.0, mae=0.9, corr=0.6)
        avg = average_reports([a])
        assert avg.to_dict() == a.to_dict()

    def test_undefined_corr_skipped(self):
        a = MetricsReport(acc7=30.0, acc2=80.0, f1=81.0, mae=0.9, corr=None)
        b = MetricsReport(acc7=40.0, acc2=82.0, f1=83.0, mae=1.1, corr=0.8)
        assert average_reports([a, b]).corr == 0.8
        assert average_reports([a, a]).corr is None
