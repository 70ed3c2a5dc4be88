import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatalign import (
    ALL_METRICS,
    Heatmap,
    Metric,
    ScoreTable,
    bray_curtis,
    canberra,
    chebyshev,
    compute,
    compute_score_table,
    correlation_distance,
    cosine_distance,
    euclidean,
    jensen_shannon,
    manhattan,
    min_max_normalize,
    minkowski,
    squared_euclidean,
    wasserstein_1d,
    weighted_jaccard,
)
from heatalign.errors import (
    DegenerateInput,
    DimensionMismatch,
    LengthMismatch,
    NegativeValue,
    TooFewMethods,
    ZeroMass,
)

nonneg_vectors = st.lists(
    st.floats(min_value=0, max_value=1e3, allow_nan=False), min_size=1, max_size=64
)


def test_metric_enum():
    assert len(Metric) == 12
    assert [m.name for m in Metric] == [
        "WJ", "WA", "BC", "CA", "CY", "MA", "CR", "CS", "EU", "JS", "MI", "SE",
    ]
    assert Metric.WJ.display_name == "Weighted Jaccard"
    assert Metric.SE.display_name == "squared Euclidean"


class TestWeightedJaccard:
    def test_identity(self):
        assert weighted_jaccard([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_disjoint_support(self):
        assert weighted_jaccard([1, 0], [0, 1]) == 1.0

    def test_direct_evaluation(self):
        assert weighted_jaccard([0.5, 1.0], [1.0, 0.5]) == pytest.approx(0.5)

    def test_both_zero_degenerate(self):
        with pytest.raises(DegenerateInput):
            weighted_jaccard([0, 0], [0, 0])

    def test_negative_rejected(self):
        with pytest.raises(NegativeValue):
            weighted_jaccard([-1, 0], [0, 1])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            weighted_jaccard([1], [1, 2])


class TestWasserstein:
    def test_identical(self):
        assert wasserstein_1d([0.2, 0.8], [0.2, 0.8]) == 0.0

    def test_point_masses(self):
        assert wasserstein_1d([1, 0, 0, 0], [0, 0, 0, 1]) == 3.0

    def test_cdf_difference(self):
        assert wasserstein_1d([1, 1, 0, 0], [0, 0, 1, 1]) == 2.0

    def test_zero_mass(self):
        with pytest.raises(ZeroMass):
            wasserstein_1d([0, 0], [1, 0])

    def test_matches_lp_transport_solver(self):
        from scipy.optimize import linprog

        def emd_lp(u, v):
            p = np.asarray(u, float)
            q = np.asarray(v, float)
            p, q = p / p.sum(), q / q.sum()
            n = len(p)
            cost = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).reshape(-1)
            a_eq = np.zeros((2 * n, n * n))
            for i in range(n):
                a_eq[i, i * n:(i + 1) * n] = 1.0  # row marginals
                a_eq[n + i, i::n] = 1.0  # column marginals
            res = linprog(cost, A_eq=a_eq, b_eq=np.concatenate([p, q]),
                          bounds=(0, None), method="highs")
            assert res.success
            return res.fun

        rng = np.random.default_rng(2024)
        for _ in range(60):
            n = int(rng.integers(1, 9))
            u = rng.random(n) * rng.choice([0.1, 1.0, 100.0])
            v = rng.random(n) * rng.choice([0.1, 1.0, 100.0])
            u[rng.random(n) < 0.3] = 0.0
            v[rng.random(n) < 0.3] = 0.0
            if u.sum() == 0 or v.sum() == 0:
                continue
            assert wasserstein_1d(u, v) == pytest.approx(emd_lp(u, v), abs=1e-9)


class TestSimpleMetrics:
    def test_bray_curtis(self):
        assert bray_curtis([1, 1], [1, 1]) == 0.0
        assert bray_curtis([1, 0], [0, 1]) == 1.0
        assert bray_curtis([1, 1], [3, 1]) == pytest.approx(2 / 6)
        with pytest.raises(DegenerateInput):
            bray_curtis([0, 0], [0, 0])

    def test_canberra(self):
        assert canberra([1, 2], [1, 2]) == 0.0
        assert canberra([0, 1], [0, 0]) == 1.0  # 0/0 term contributes 0
        assert canberra([1, 3], [3, 1]) == pytest.approx(1.0)

    def test_chebyshev(self):
        assert chebyshev([1, 2], [1, 2]) == 0.0
        assert chebyshev([0, 0.2], [0.9, 0.1]) == pytest.approx(0.9)

    def test_manhattan(self):
        assert manhattan([1, 2], [1, 2]) == 0.0
        assert manhattan([1, 0, 1], [0, 0, 0]) == 2.0
        assert manhattan([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.5)

    def test_correlation(self):
        assert correlation_distance([1.0, 2.0, 4.0], [1.0, 2.0, 4.0]) == pytest.approx(0.0, abs=1e-12)
        u = np.array([0.1, 0.7, 0.4])
        assert correlation_distance(u, -u + 1.0) == pytest.approx(2.0)
        assert correlation_distance([1, 0], [0, 1]) == pytest.approx(2.0)
        with pytest.raises(DegenerateInput):
            correlation_distance([1, 1], [0, 1])

    def test_cosine(self):
        assert cosine_distance([1, 2], [1, 2]) == pytest.approx(0.0, abs=1e-12)
        assert cosine_distance([1, 0], [0, 1]) == 1.0
        assert cosine_distance([1, 1], [2, 2]) == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(DegenerateInput):
            cosine_distance([0, 0], [1, 0])

    def test_euclidean(self):
        assert euclidean([1, 2], [1, 2]) == 0.0
        assert euclidean([3, 0], [0, 4]) == 5.0

    def test_squared_euclidean(self):
        assert squared_euclidean([1, 2], [1, 2]) == 0.0
        assert squared_euclidean([3, 0], [0, 4]) == 25.0

    def test_minkowski(self):
        assert minkowski([1, 2], [1, 2]) == 0.0
        assert minkowski([1, 0], [0, 0], order=3) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            minkowski([1], [1], order=0.5)


class TestJensenShannon:
    def test_identical(self):
        assert jensen_shannon([0.5, 0.5], [0.5, 0.5]) == 0.0

    def test_disjoint_supports(self):
        assert jensen_shannon([1, 0], [0, 1]) == pytest.approx(1.0)

    def test_direct_summation(self):
        # frozen from a term-by-term base-2 evaluation of the divergence
        assert jensen_shannon([0.5, 0.5], [0.25, 0.75]) == pytest.approx(
            0.22089576884901735, abs=1e-12
        )

    def test_zero_mass(self):
        with pytest.raises(ZeroMass):
            jensen_shannon([0, 0], [1, 0])

    @settings(max_examples=100)
    @given(
        st.lists(
            # 0 or well above the denormal range, so scaling cannot underflow
            st.one_of(st.just(0.0), st.floats(min_value=1e-6, max_value=1e3)),
            min_size=1, max_size=64,
        ).filter(lambda v: sum(v) > 0),
        st.floats(min_value=1e-3, max_value=1e3),
        st.floats(min_value=1e-3, max_value=1e3),
    )
    def test_invariant_to_positive_prescaling(self, values, s1, s2):
        u = np.array(values)
        v = u[::-1].copy()
        base = jensen_shannon(u, v)
        scaled = jensen_shannon(u * s1, v * s2)
        # the squared distance (the divergence) is scale-invariant to 1e-12;
        # the sqrt amplifies rounding near zero, so the distance gets 1e-7
        assert scaled ** 2 == pytest.approx(base ** 2, abs=1e-12)
        assert scaled == pytest.approx(base, abs=1e-7)


class TestCrossFamilyIdentities:
    def test_minkowski_orders_match_named_metrics(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            n = int(rng.integers(1, 64))
            u, v = rng.random(n), rng.random(n)
            assert minkowski(u, v, 1) == pytest.approx(manhattan(u, v), abs=1e-9)
            assert minkowski(u, v, 2) == pytest.approx(euclidean(u, v), abs=1e-9)

    def test_squared_euclidean_is_euclidean_squared(self):
        rng = np.random.default_rng(12)
        for _ in range(30):
            u, v = rng.random(20), rng.random(20)
            assert squared_euclidean(u, v) == pytest.approx(euclidean(u, v) ** 2, abs=1e-9)

    def test_agrees_with_scipy_reference(self):
        # independent implementations of the standard formulas
        from scipy.spatial import distance as sd
        from scipy.stats import wasserstein_distance

        rng = np.random.default_rng(13)
        pairs = [(rng.random(40) * 2, rng.random(40)) for _ in range(20)]
        for u, v in pairs:
            assert bray_curtis(u, v) == pytest.approx(sd.braycurtis(u, v), abs=1e-12)
            assert canberra(u, v) == pytest.approx(sd.canberra(u, v), abs=1e-12)
            assert chebyshev(u, v) == pytest.approx(sd.chebyshev(u, v), abs=1e-12)
            assert manhattan(u, v) == pytest.approx(sd.cityblock(u, v), abs=1e-12)
            assert correlation_distance(u, v) == pytest.approx(sd.correlation(u, v), abs=1e-9)
            assert cosine_distance(u, v) == pytest.approx(sd.cosine(u, v), abs=1e-9)
            assert euclidean(u, v) == pytest.approx(sd.euclidean(u, v), abs=1e-9)
            assert squared_euclidean(u, v) == pytest.approx(sd.sqeuclidean(u, v), abs=1e-9)
            assert minkowski(u, v, 3) == pytest.approx(sd.minkowski(u, v, 3), abs=1e-9)
            assert jensen_shannon(u, v) == pytest.approx(
                sd.jensenshannon(u, v, base=2), abs=1e-9
            )
            n = len(u)
            assert wasserstein_1d(u, v) == pytest.approx(
                wasserstein_distance(np.arange(n), np.arange(n), u, v), abs=1e-9
            )


@st.composite
def vector_pairs(draw, max_size=64):
    n = draw(st.integers(min_value=1, max_value=max_size))
    element = st.floats(min_value=0, max_value=1e3, allow_nan=False)
    u = draw(st.lists(element, min_size=n, max_size=n))
    v = draw(st.lists(element, min_size=n, max_size=n))
    return np.array(u), np.array(v)


@settings(max_examples=150)
@given(vector_pairs())
def test_metric_axioms(pair):
    u, v = pair
    for metric in ALL_METRICS:
        try:
            duv = compute(metric, u, v)
            dvu = compute(metric, v, u)
            duu = compute(metric, u, u)
        except (DegenerateInput, ZeroMass):
            continue
        assert duv >= 0.0
        assert duv == pytest.approx(dvu, abs=1e-12)
        assert abs(duu) <= 1e-12
        if metric in (Metric.WJ, Metric.BC, Metric.CS, Metric.JS):
            assert duv <= 1.0 + 1e-12
        if metric is Metric.CR:
            assert duv <= 2.0 + 1e-12


class TestMinMaxNormalize:
    def test_basic(self):
        assert min_max_normalize([2.0, 4.0, 3.0]) == (0.0, 1.0, 0.5)

    def test_constant_row_maps_to_zero(self):
        assert min_max_normalize([3.0, 3.0]) == (0.0, 0.0)

    def test_missing_cells_ignored(self):
        assert min_max_normalize([2.0, None, 4.0]) == (0.0, None, 1.0)


class TestComputeScoreTable:
    def _heatmaps(self):
        annotation = Heatmap([[0.0, 1.0], [0.5, 0.25]])
        explanations = {
            "A": Heatmap([[0.0, 1.0], [0.5, 0.25]]),  # identical to the annotation
            "B": Heatmap([[1.0, 0.0], [0.25, 0.5]]),
        }
        return annotation, explanations

    def test_identical_method_normalizes_to_zero(self):
        annotation, explanations = self._heatmaps()
        table = compute_score_table(annotation, explanations, image_id="x")
        for metric in table.metrics:
            value = table.normalized_score(metric, "A")
            if value is not None:
                assert value == 0.0

    def test_requires_two_methods(self):
        annotation, explanations = self._heatmaps()
        with pytest.raises(TooFewMethods):
            compute_score_table(annotation, {"A": explanations["A"]})

    def test_dimension_mismatch(self):
        annotation, explanations = self._heatmaps()
        explanations["B"] = Heatmap([[1.0, 0.0, 0.0]])
        with pytest.raises(DimensionMismatch):
            compute_score_table(annotation, explanations)

    def test_degenerate_cells_are_missing_not_fatal(self):
        annotation = Heatmap([[0.0, 1.0], [0.5, 0.25]])
        explanations = {
            "flat": Heatmap(np.zeros((2, 2))),  # zero vector: degenerate for several metrics
            "B": Heatmap([[1.0, 0.0], [0.25, 0.5]]),
        }
        table = compute_score_table(annotation, explanations, image_id="x")
        for metric in (Metric.CS, Metric.CR, Metric.WA, Metric.JS):
            assert table.raw_score(metric, "flat") is None
            assert (metric, "flat") in table.errors
        assert table.raw_score(Metric.MA, "flat") is not None

    def test_normalized_ordering_matches_raw(self):
        rng = np.random.default_rng(3)
        annotation = Heatmap(rng.random((4, 4)))
        explanations = {f"m{i}": Heatmap(rng.random((4, 4))) for i in range(5)}
        table = compute_score_table(annotation, explanations, image_id="x")
        for metric in table.metrics:
            raw = table.raw[metric]
            norm = table.normalized[metric]
            assert all(x is not None for x in raw)
            raw_order = np.argsort(raw, kind="stable")
            norm_order = np.argsort(norm, kind="stable")
            assert raw_order.tolist() == norm_order.tolist()
            assert min(norm) == 0.0
            if max(raw) > min(raw):
                assert max(norm) == 1.0

    def test_all_equal_row_normalizes_to_zero(self):
        annotation = Heatmap([[0.2, 0.4]])
        same = Heatmap([[0.4, 0.2]])
        table = compute_score_table(annotation, {"A": same, "B": same}, image_id="x")
        for metric in table.metrics:
            row = [x for x in table.normalized[metric] if x is not None]
            assert all(x == 0.0 for x in row)

    def test_best_methods_flags_ties(self):
        annotation = Heatmap([[0.2, 0.4]])
        same = Heatmap([[0.4, 0.2]])
        table = compute_score_table(annotation, {"A": same, "B": same}, image_id="x")
        assert table.best_methods(Metric.MA) == ("A", "B")
