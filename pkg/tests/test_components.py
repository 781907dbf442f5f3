import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cveval.components import (
    AnnotationTable,
    correlation_report,
    estimate_alpha_rho,
    estimate_annotator_variance,
    estimate_human_metric_variance,
    item_means,
    variance_components,
)
from cveval.errors import DegenerateF, DegenerateInput, LengthMismatch, NoReplicatedItems, TooFewItems
from cveval.estimators import fit_standardization


def spearman_no_ties(x, y):
    """Textbook formula, valid only without ties."""
    n = len(x)
    rx = np.argsort(np.argsort(x))
    ry = np.argsort(np.argsort(y))
    d2 = float(np.sum((rx - ry) ** 2))
    return 1 - 6 * d2 / (n * (n * n - 1))


class TestAnnotatorVariance:
    def test_no_spread(self):
        assert estimate_annotator_variance(AnnotationTable({"A": [1, 1], "B": [2, 2]})) == 0

    def test_hand(self):
        assert estimate_annotator_variance(AnnotationTable({"A": [0, 2], "B": [1, 1]})) == 1

    def test_unreplicated(self):
        with pytest.raises(NoReplicatedItems):
            estimate_annotator_variance(AnnotationTable({"A": [5], "B": [7]}))

    def test_singletons_excluded(self):
        t = AnnotationTable({"A": [0, 2], "B": [9]})
        assert estimate_annotator_variance(t) == 2

    def test_empty_judgment_list(self):
        with pytest.raises(Exception):
            AnnotationTable({"A": []})

    def test_duplicate_rows(self):
        with pytest.raises(ValueError):
            AnnotationTable.from_rows([("A", [1]), ("A", [2])])


class TestHumanMetricVariance:
    def test_no_correction(self):
        assert estimate_human_metric_variance(AnnotationTable({"A": [0, 0], "B": [2, 2]}), 0.0) == 2

    def test_correction(self):
        assert estimate_human_metric_variance(AnnotationTable({"A": [0, 0], "B": [2, 2]}), 2.0) == 1

    def test_constant_means(self):
        t = AnnotationTable({"A": [1], "B": [0, 2], "C": [1, 1, 1]})
        assert estimate_human_metric_variance(t, 0.0) == 0

    def test_clamps_at_zero(self):
        t = AnnotationTable({"A": [0, 2], "B": [1, 1]})
        vc = variance_components(t)
        assert vc.sigma_f2 == 0 and vc.clamped and vc.gamma is None

    def test_too_few_items(self):
        with pytest.raises(TooFewItems):
            estimate_human_metric_variance(AnnotationTable({"A": [1, 2]}), 0.0)

    def test_converges_on_two_level_gaussian(self):
        rng = np.random.default_rng(11)
        sf2, sa2, k, items = 0.7, 0.4, 3, 10_000
        f = rng.normal(2.0, np.sqrt(sf2), items)
        y = f[:, None] + rng.normal(0, np.sqrt(sa2), (items, k))
        vc = variance_components(AnnotationTable({str(i): row for i, row in enumerate(y)}))
        assert abs(vc.sigma_a2 / sa2 - 1) < 0.05
        assert abs(vc.sigma_f2 / sf2 - 1) < 0.05
        assert vc.n_items == items and vc.n_judgments == items * k


def test_item_means():
    assert item_means(AnnotationTable({"A": [1, 3]})) == {"A": 2}
    assert item_means(AnnotationTable({"A": [2], "B": [4, 6]})) == {"A": 2, "B": 5}
    assert item_means(AnnotationTable({})) == {}


class TestAlphaRho:
    def _std(self, g):
        return fit_standardization(g).transform(g)

    def test_perfect(self):
        assert estimate_alpha_rho([1, 2, 3], self._std([1, 2, 3]))[1] == pytest.approx(1, abs=1e-15)
        assert estimate_alpha_rho([1, 2, 3], self._std([3, 2, 1]))[1] == pytest.approx(-1, abs=1e-15)

    def test_hand(self):
        alpha, rho = estimate_alpha_rho([1, 2, 3], self._std([1, 3, 2]))
        # population cov(f, g_raw) = 1/3 and sd(g_raw) = sqrt(2/3)
        assert alpha == pytest.approx((1 / 3) / np.sqrt(2 / 3), abs=1e-12)
        assert rho == pytest.approx(0.5, abs=1e-12)
        assert rho == pytest.approx(alpha / np.std([1, 2, 3]), abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateF):
            estimate_alpha_rho([1, 1, 1], [0, 1, 2])
        with pytest.raises(LengthMismatch):
            estimate_alpha_rho([1, 2], [1, 2, 3])

    @given(
        st.lists(st.floats(-100, 100), min_size=3, max_size=30).filter(lambda v: np.ptp(v) > 1e-3),
        st.floats(0.01, 100),
        st.floats(-100, 100),
    )
    def test_affine_invariance(self, f, a, b):
        rng = np.random.default_rng(len(f))
        g = rng.standard_normal(len(f))
        _, rho = estimate_alpha_rho(f, g)
        _, rho2 = estimate_alpha_rho(a * np.array(f) + b, g)
        assert rho2 == pytest.approx(rho, abs=1e-9)


class TestCorrelationReport:
    def test_linear(self):
        r = correlation_report([1, 2, 3], [2, 4, 6])
        assert r.pearson == pytest.approx(1, abs=1e-15) and r.spearman == 1 and r.n == 3

    def test_monotone_nonlinear(self):
        r = correlation_report([1, 2, 3], [1, 4, 9])
        assert r.pearson < 1 and r.spearman == 1

    def test_spearman_hand(self):
        x, y = [1, 2, 3, 4], [1, 3, 2, 4]
        assert spearman_no_ties(x, y) == pytest.approx(0.8, abs=1e-15)
        assert correlation_report(x, y).spearman == pytest.approx(0.8, abs=1e-12)

    def test_ties_use_mean_rank(self):
        # ranks of x are [1.5, 1.5, 3]
        r = correlation_report([1, 1, 2], [1, 2, 3])
        expected = np.corrcoef([1.5, 1.5, 3], [1, 2, 3])[0, 1]
        assert r.spearman == pytest.approx(expected, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateInput):
            correlation_report([1, 1, 1], [1, 2, 3])

    @given(st.lists(st.integers(-50, 50), min_size=2, max_size=40, unique=True))
    def test_monotone_transform_spearman_one(self, x):
        x = np.array(x, dtype=float)
        r = correlation_report(x, np.exp(x / 10) + x**3)
        assert r.spearman == 1.0
        assert -1 <= r.pearson <= 1

    @given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=2, max_size=30))
    def test_bounded(self, pairs):
        x, y = map(np.array, zip(*pairs))
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            return
        r = correlation_report(x, y, "system")
        assert -1 <= r.pearson <= 1 and -1 <= r.spearman <= 1 and r.level == "system"
