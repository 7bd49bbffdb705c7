"""Limit-process simulation: marginals, sups, laws, determinism."""

import numpy as np
import pytest

from ucpd import (
    BadGrid,
    BadParams,
    bridge_path,
    build_limit_law,
    damped_bridge_path,
    gamma_path,
    ks_two_sample,
    p_value,
    parse_weight,
    simulate_wiener,
    weighted_sup,
)
from ucpd.verify import kolmogorov_sup_cdf, kolmogorov_sup_quantile

ONE = parse_weight("one")


def collect_marginals(seed, reps=10_000, grid=64):
    """Process values at t = 0.25, 0.3, 0.5, 0.75, 1 over many paths."""
    idx = {0.25: grid // 4, 0.3: round(0.3 * grid), 0.5: grid // 2,
           0.75: 3 * grid // 4, 1.0: grid}
    out = {("w", t): np.empty(reps) for t in (0.25, 0.5, 1.0)}
    for proc in ("gamma", "bridge", "damped"):
        for t in (0.25, 0.3, 0.5, 0.75):
            out[(proc, t)] = np.empty(reps)
    for r in range(reps):
        w = simulate_wiener(grid, seed, r)
        paths = {"gamma": gamma_path(w), "bridge": bridge_path(w),
                 "damped": damped_bridge_path(w)}
        for t in (0.25, 0.5, 1.0):
            out[("w", t)][r] = w[idx[t]]
        for proc, values in paths.items():
            for t in (0.25, 0.3, 0.5, 0.75):
                out[(proc, t)][r] = values[idx[t]]
    return out


@pytest.fixture(scope="module")
def marginals():
    return collect_marginals(seed=17)


class TestWienerSimulation:
    def test_path_shape_and_origin(self):
        w = simulate_wiener(128, master_seed=5, rep_index=3)
        assert w.shape == (129,)
        assert w[0] == 0.0

    def test_repeatable(self):
        a = simulate_wiener(256, 5, 3)
        b = simulate_wiener(256, 5, 3)
        np.testing.assert_array_equal(a, b)
        c = simulate_wiener(256, 5, 4)
        assert not np.array_equal(a, c)

    def test_terminal_variance(self, marginals):
        assert float(np.var(marginals[("w", 1.0)])) == pytest.approx(1.0,
                                                                     abs=0.05)

    def test_half_time_variance(self, marginals):
        assert float(np.var(marginals[("w", 0.5)])) == pytest.approx(0.5,
                                                                     abs=0.03)

    def test_independent_increments(self, marginals):
        first = marginals[("w", 0.5)]
        second = marginals[("w", 1.0)] - marginals[("w", 0.5)]
        assert float(np.cov(first, second)[0, 1]) == pytest.approx(0.0,
                                                                   abs=0.03)

    @pytest.mark.parametrize("grid", [0, 1, 3, 100, -8])
    def test_grid_must_be_dyadic(self, grid):
        with pytest.raises(BadGrid):
            simulate_wiener(grid, 0)


class TestProcessTransforms:
    def test_endpoints_pinned_to_zero(self):
        w = simulate_wiener(64, 2, 0)
        for transform in (gamma_path, bridge_path, damped_bridge_path):
            path = transform(w)
            assert path[0] == 0.0 and path[-1] == 0.0

    def test_center_of_damped_path_is_zero(self):
        w = simulate_wiener(64, 2, 1)
        assert damped_bridge_path(w)[32] == 0.0

    def test_marginal_variances(self, marginals):
        assert float(np.var(marginals[("gamma", 0.25)])) == pytest.approx(
            0.1875, abs=0.01)
        assert float(np.var(marginals[("bridge", 0.5)])) == pytest.approx(
            0.25, abs=0.01)
        assert float(np.var(marginals[("damped", 0.25)])) == pytest.approx(
            0.046875, abs=0.005)
        assert float(np.var(marginals[("damped", 0.5)])) == 0.0

    def test_cross_time_covariances(self, marginals):
        """The two candidate limits share variances but not covariances."""
        gamma_cov = float(np.cov(marginals[("gamma", 0.25)],
                                 marginals[("gamma", 0.75)])[0, 1])
        bridge_cov = float(np.cov(marginals[("bridge", 0.25)],
                                  marginals[("bridge", 0.75)])[0, 1])
        damped_cov = float(np.cov(marginals[("damped", 0.25)],
                                  marginals[("damped", 0.75)])[0, 1])
        assert gamma_cov == pytest.approx(0.125, abs=0.01)
        assert bridge_cov == pytest.approx(0.0625, abs=0.01)
        assert damped_cov == pytest.approx(-0.015625, abs=0.005)

    def test_single_time_marginals_agree(self, marginals):
        """At one fixed time the two limits have the same normal law."""
        other = collect_marginals(seed=18, reps=10_000)
        distance = ks_two_sample(marginals[("gamma", 0.3)],
                                 other[("bridge", 0.3)])
        assert distance < 0.03

    def test_transforms_are_pointwise_formulas(self):
        w = simulate_wiener(32, 40, 7)
        t = np.arange(33) / 32.0
        np.testing.assert_allclose(gamma_path(w),
                                   (1 - t) * w + t * (w[-1] - w), rtol=1e-12)
        np.testing.assert_allclose(bridge_path(w), w - t * w[-1], rtol=1e-12)
        np.testing.assert_allclose(damped_bridge_path(w),
                                   (1 - 2 * t) * (w - t * w[-1]), rtol=1e-12)


class TestWeightedSup:
    def test_zero_path(self):
        assert weighted_sup(np.zeros(65), ONE) == 0.0

    def test_single_spike(self):
        path = np.zeros(9)
        path[4] = 2.0
        assert weighted_sup(path, ONE) == 2.0

    def test_endpoints_excluded(self):
        path = np.zeros(17)
        path[0] = 5.0
        path[-1] = -5.0
        assert weighted_sup(path, ONE) == 0.0

    def test_deterministic_arc_with_power_weight(self):
        t = np.arange(65) / 64.0
        path = t * (1.0 - t)
        value = weighted_sup(path, parse_weight("pow:0.25"))
        assert value == pytest.approx(0.25 ** 0.75, rel=1e-12)

    def test_batched_rows_match_single_paths(self):
        rows = np.stack([bridge_path(simulate_wiener(64, 3, r))
                         for r in range(5)])
        batch = weighted_sup(rows, ONE)
        single = np.array([weighted_sup(rows[i], ONE) for i in range(5)])
        np.testing.assert_array_equal(batch, single)

    def test_needs_an_interior_point(self):
        with pytest.raises(BadGrid):
            weighted_sup(np.zeros(2), ONE)


@pytest.fixture(scope="module")
def law():
    return build_limit_law("bridge", ONE, 512, 2000, 9)


@pytest.fixture(scope="module")
def small_law():
    return build_limit_law("bridge", ONE, 256, 2000, 9)


class TestLimitLawBuild:
    def test_fields_and_sample_shape(self, law):
        assert (law.process, law.weight_spec) == ("bridge", "one")
        assert (law.grid_size, law.reps, law.master_seed) == (512, 2000, 9)
        assert law.sorted_sups.shape == (2000,)
        assert np.all(np.diff(law.sorted_sups) >= 0.0)
        assert np.all(law.sorted_sups >= 0.0)
        assert np.all(np.isfinite(law.sorted_sups))

    def test_quantile_table_is_type_seven(self, law):
        for level, value in law.quantile_table.items():
            assert value == float(np.quantile(law.sorted_sups, level))
            assert law.quantile(level) == value

    def test_quantile_level_validation(self, law):
        for level in (0.0, 1.0, -0.2, 1.7):
            with pytest.raises(BadParams):
                law.quantile(level)

    def test_low_reps_flag(self):
        assert build_limit_law("bridge", ONE, 64, 500, 1).low_reps
        assert not build_limit_law("bridge", ONE, 64, 1000, 1).low_reps

    def test_matches_public_path_pipeline(self, law):
        """Chunked simulation equals the one-path-at-a-time composition."""
        direct = np.sort([
            weighted_sup(bridge_path(simulate_wiener(512, 9, r)), ONE)
            for r in range(2000)
        ])
        np.testing.assert_array_equal(law.sorted_sups, direct)

    def test_parameter_validation(self):
        with pytest.raises(BadParams):
            build_limit_law("brownian", ONE, 64, 100, 0)
        with pytest.raises(BadGrid):
            build_limit_law("bridge", ONE, 100, 100, 0)
        with pytest.raises(BadParams):
            build_limit_law("bridge", ONE, 64, 0, 0)

    def test_identical_across_worker_counts(self):
        serial = build_limit_law("gamma", ONE, 256, 5000, 12, workers=1)
        pooled = build_limit_law("gamma", ONE, 256, 5000, 12, workers=2)
        np.testing.assert_array_equal(serial.sorted_sups, pooled.sorted_sups)
        assert serial.quantile_table == pooled.quantile_table

    def test_rebuild_is_bit_identical(self, law):
        again = build_limit_law("bridge", ONE, 512, 2000, 9)
        np.testing.assert_array_equal(law.sorted_sups, again.sorted_sups)


class TestPValues:
    def test_add_one_conventions(self, small_law):
        assert p_value(small_law, 0.0) == 1.0
        top = float(small_law.sorted_sups[-1])
        assert p_value(small_law, top + 1.0) == 1.0 / 2001.0
        assert p_value(small_law, small_law.quantile(0.95)) == pytest.approx(
            0.05, abs=2e-3)

    def test_monotone_in_observation(self, small_law):
        obs = np.linspace(0.0, 3.0, 40)
        ps = [p_value(small_law, o) for o in obs]
        assert all(a >= b for a, b in zip(ps, ps[1:]))

    def test_rejects_non_finite_observations(self, small_law):
        for bad in (float("nan"), float("inf")):
            with pytest.raises(BadParams):
                p_value(small_law, bad)


class TestGridRefinement:
    def test_halving_never_raises_any_sup(self):
        """A coarser dyadic grid maximizes over a subset of the fine grid."""
        fine = np.empty(2000)
        coarse = np.empty(2000)
        for r in range(2000):
            path = bridge_path(simulate_wiener(2048, 90, r))
            fine[r] = weighted_sup(path, ONE)
            coarse[r] = weighted_sup(path[::2], ONE)
        assert np.all(coarse <= fine)
        for level in (0.5, 0.9, 0.95, 0.99):
            lift = float(np.quantile(fine, level) - np.quantile(coarse, level))
            assert 0.0 <= lift <= 0.03

    def test_integrable_weight_sup_stabilizes(self):
        lo = build_limit_law("bridge", ONE, 1024, 2000, 11)
        hi = build_limit_law("bridge", ONE, 4096, 2000, 11)
        ratio = float(np.median(hi.sorted_sups) / np.median(lo.sorted_sups))
        assert 1.0 <= ratio <= 1.02

    def test_divergent_weight_sup_keeps_growing(self):
        """At the integrability boundary the weighted sup drifts upward."""
        rough = parse_weight("pow:0.5")
        lo = build_limit_law("bridge", rough, 1024, 2000, 11)
        hi = build_limit_law("bridge", rough, 4096, 2000, 11)
        ratio = float(np.median(hi.sorted_sups) / np.median(lo.sorted_sups))
        assert ratio >= 1.02


class TestLawSeparation:
    def test_gamma_and_bridge_sups_differ_in_law(self):
        gamma = build_limit_law("gamma", ONE, 512, 20_000, 31)
        bridge = build_limit_law("bridge", ONE, 512, 20_000, 31)
        assert ks_two_sample(gamma.sorted_sups, bridge.sorted_sups) > 0.05

    def test_disjoint_seeds_agree_on_quantiles(self):
        a = build_limit_law("gamma", ONE, 512, 50_000, 31)
        b = build_limit_law("gamma", ONE, 512, 50_000, 77)
        assert abs(a.quantile(0.95) - b.quantile(0.95)) <= 0.02


class TestReferenceQuantile:
    def test_series_constant(self):
        x = kolmogorov_sup_quantile(0.95)
        assert x == pytest.approx(1.3580986393225503, abs=1e-12)
        assert kolmogorov_sup_cdf(x) == pytest.approx(0.95, abs=1e-12)

    def test_cdf_shape(self):
        assert kolmogorov_sup_cdf(0.1) < 1e-6
        assert kolmogorov_sup_cdf(3.0) > 0.999
        grid = np.linspace(0.3, 2.5, 23)
        values = [kolmogorov_sup_cdf(float(x)) for x in grid]
        assert all(a < b for a, b in zip(values, values[1:]))
