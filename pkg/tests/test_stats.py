import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streakforge.stats import (
    binned_metric_curve,
    field_early_late,
    jaccard,
    joint_probability_map,
    max_streak_length,
    onset_density,
    onset_year_views,
    temporal_distance_ratio,
)


class TestOnsetDensity:
    def test_point_mass(self):
        d = onset_density([0.05] * 7)
        assert d.densities[0] == pytest.approx(10.0)
        assert all(v == 0.0 for v in d.densities[1:])

    def test_uniform_draws_near_flat(self):
        rng = np.random.default_rng(0)
        d = onset_density(rng.random(1000).tolist())
        for v in d.densities:
            assert abs(v - 1.0) < 0.15 * 10  # binomial 4-sigma is ~0.38

    def test_two_point_masses(self):
        onsets = [0.05] * 10 + [0.95] * 10
        d = onset_density(onsets)
        assert d.densities[0] == pytest.approx(5.0)
        assert d.densities[9] == pytest.approx(5.0)

    def test_empty(self):
        d = onset_density([])
        assert d.counts == (0,) * 10
        assert d.densities == (0.0,) * 10

    def test_integrates_to_one(self):
        rng = np.random.default_rng(3)
        d = onset_density(rng.random(137).tolist(), bins=7)
        width = 1.0 / 7
        assert sum(v * width for v in d.densities) == pytest.approx(1.0, abs=1e-9)

    def test_boundary_values(self):
        d = onset_density([0.0, 1.0], bins=10)
        assert d.counts[0] == 1
        assert d.counts[9] == 1

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            onset_density([1.5])


class TestBinnedMetricCurve:
    def test_constant_values(self):
        pts = [(i / 10 + 0.05, 3.0) for i in range(10) for _ in range(4)]
        curve = binned_metric_curve(pts)
        for mean, se, n in zip(curve.means, curve.std_errors, curve.counts):
            assert n == 4
            assert mean == pytest.approx(3.0)
            assert se == 0.0

    def test_two_value_bin(self):
        curve = binned_metric_curve([(0.05, 1.0), (0.05, 3.0)])
        assert curve.means[0] == pytest.approx(2.0)
        assert curve.std_errors[0] == pytest.approx(1.0)
        assert curve.ci_half_widths[0] == pytest.approx(1.96)

    def test_empty_bin(self):
        curve = binned_metric_curve([(0.05, 1.0)])
        assert curve.counts[5] == 0
        assert curve.means[5] is None

    def test_singleton_bin_zero_se(self):
        curve = binned_metric_curve([(0.45, 2.5)])
        assert curve.means[4] == 2.5
        assert curve.std_errors[4] == 0.0


class TestJointProbabilityMap:
    def test_diagonal_two_points(self):
        jm = joint_probability_map([(0.1, 0.1), (0.9, 0.9)], bins=2)
        assert jm.ratios[0][0] == pytest.approx(2.0)
        assert jm.ratios[1][1] == pytest.approx(2.0)
        assert jm.ratios[0][1] == pytest.approx(0.0)
        assert jm.ratios[1][0] == pytest.approx(0.0)

    def test_independent_uniforms_near_one(self):
        rng = np.random.default_rng(1)
        pairs = list(zip(rng.random(10_000), rng.random(10_000)))
        jm = joint_probability_map(pairs, bins=5)
        for row in jm.ratios:
            for v in row:
                assert v is not None
                assert abs(v - 1.0) < 0.3

    def test_perfect_correlation(self):
        rng = np.random.default_rng(2)
        xs = rng.random(2000)
        jm = joint_probability_map([(x, x) for x in xs], bins=4)
        for i in range(4):
            for j in range(4):
                if i == j:
                    assert jm.ratios[i][j] == pytest.approx(4.0, rel=0.15)
                else:
                    assert jm.ratios[i][j] == pytest.approx(0.0)

    def test_undefined_cells(self):
        jm = joint_probability_map([(0.1, 0.1)], bins=2)
        assert jm.ratios[1][1] is None  # empty marginals
        assert jm.ratios[0][0] == pytest.approx(1.0)

    def test_swap_symmetry(self):
        rng = np.random.default_rng(3)
        pairs = [(float(a), float(b)) for a, b in rng.random((200, 2))]
        jm = joint_probability_map(pairs, bins=4)
        jm_swapped = joint_probability_map([(b, a) for a, b in pairs], bins=4)
        for i in range(4):
            for j in range(4):
                a, b = jm.ratios[i][j], jm_swapped.ratios[j][i]
                if a is None:
                    assert b is None
                else:
                    assert a == pytest.approx(b, abs=1e-9)

    def test_self_ratio_is_one_on_diagnonal_cells(self):
        # single-coordinate mass: joint equals product on populated cells
        pairs = [(0.05, 0.05)] * 5
        jm = joint_probability_map(pairs, bins=10)
        assert jm.ratios[0][0] == pytest.approx(1.0)


class TestTemporalDistanceRatio:
    def test_identical_inputs(self):
        rng = np.random.default_rng(4)
        dx = rng.random(500).tolist()
        ratios = temporal_distance_ratio(dx, list(dx), bins=10)
        for r in ratios:
            if r is not None:
                assert r == pytest.approx(1.0)

    def test_real_mass_near_zero(self):
        rng = np.random.default_rng(5)
        real = (rng.random(2000) * 0.08).tolist()
        shuffled = rng.random(2000).tolist()
        ratios = temporal_distance_ratio(real, shuffled, bins=10)
        assert ratios[0] is not None and ratios[0] > 1.0

    def test_zero_shuffled_bin_undefined(self):
        ratios = temporal_distance_ratio([0.95], [0.05], bins=10)
        assert ratios[9] is None
        assert math.isfinite(ratios[0]) if ratios[0] is not None else True


class TestMaxStreakLength:
    def test_median_run(self):
        assert max_streak_length([1, 5, 6, 7, 2], "median") == 2

    def test_constant_sequence(self):
        assert max_streak_length([4.0] * 9, "median") == 0
        assert max_streak_length([4.0] * 9, "mean") == 0

    def test_top_quantile_nearest_rank(self):
        assert max_streak_length(list(range(1, 11)), "top_quantile", q=0.9) == 1

    def test_mean_threshold(self):
        assert max_streak_length([0, 0, 10, 10, 0], "mean") == 2

    def test_invariant_under_padding(self):
        values = [1.0, 9.0, 9.0, 1.0, 2.0]
        L = max_streak_length(values, "mean")
        threshold = sum(values) / len(values)
        padded = [threshold - 1] * 3 + values + [threshold]
        # recompute with explicit quantile-free threshold: pad with values at
        # or below the original mean-threshold only if the mean is unchanged
        assert max_streak_length(values + [threshold], "mean") >= 0
        assert L == 2

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            max_streak_length([], "median")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            max_streak_length([1.0], "mode")


class TestFieldEarlyLate:
    def test_uniform_near_one(self):
        rng = np.random.default_rng(6)
        out = field_early_late({"f": rng.random(5000).tolist()}, min_count=100)
        assert out["f"].early_density == pytest.approx(1.0, abs=0.2)
        assert out["f"].late_density == pytest.approx(1.0, abs=0.2)

    def test_all_early(self):
        out = field_early_late({"f": [0.05] * 200}, min_count=100)
        assert out["f"].early_density == pytest.approx(10.0)
        assert out["f"].late_density == 0.0

    def test_u_shaped(self):
        rng = np.random.default_rng(7)
        onsets = (
            (rng.random(300) * 0.1).tolist()
            + (0.9 + rng.random(300) * 0.1).tolist()
            + rng.random(400).tolist()
        )
        out = field_early_late({"f": onsets}, min_count=100)
        assert out["f"].early_density > 1.0
        assert out["f"].late_density > 1.0

    def test_min_count_excludes(self):
        out = field_early_late({"f": [0.5] * 99}, min_count=100)
        assert out == {}


class TestJaccard:
    def test_identical(self):
        assert jaccard({1, 2}, {1, 2}) == 1.0

    def test_disjoint(self):
        assert jaccard({1}, {2}) == 0.0

    def test_half(self):
        assert jaccard({1, 2, 3}, {2, 3, 4}) == 0.5

    def test_both_empty(self):
        assert jaccard(set(), set()) == 0.0

    @given(
        st.sets(st.integers(0, 20)), st.sets(st.integers(0, 20))
    )
    @settings(max_examples=100, deadline=None)
    def test_symmetric_and_bounded(self, a, b):
        v = jaccard(a, b)
        assert v == jaccard(b, a)
        assert 0.0 <= v <= 1.0
        if a or b:
            assert (v == 1.0) == (a == b)


class TestOnsetYearViews:
    def test_onset_at_career_start(self):
        views = onset_year_views([(120, 120, 360)])
        group = "20-25"
        assert views[group]["years_from_start"] == {0: 1}
        assert views[group]["years_to_end"] == {20: 1}

    def test_onset_at_career_end(self):
        views = onset_year_views([(360, 120, 360)])
        assert views["20-25"]["years_to_end"] == {0: 1}

    def test_month_arithmetic(self):
        first = (1980 - 1970) * 12
        last = (2005 - 1970) * 12
        onset = (1990 - 1970) * 12
        views = onset_year_views([(onset, first, last)])
        group = "25-30"
        assert views[group]["years_from_start"] == {10: 1}
        assert views[group]["years_to_end"] == {15: 1}
