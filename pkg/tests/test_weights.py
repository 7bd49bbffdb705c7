"""Weight functions and the boundary-integrability classifier."""

import math

import numpy as np
import pytest

from ucpd import (
    BadParams,
    Summary,
    Verdict,
    builtin_weight,
    classify,
    constant_one,
    endpoint_decay_check,
    finite_threshold,
    loglog_weight,
    parse_weight,
    power_weight,
)


class TestWeightValues:
    def test_constant_one(self):
        q = constant_one()
        t = np.array([0.001, 0.3, 0.999])
        assert np.all(q(t) == 1.0)
        assert q.spec == "one"

    def test_power_formula(self):
        q = power_weight(0.25)
        for t in (0.1, 0.2, 0.5, 0.93):
            assert float(q(t)) == pytest.approx((t * (1 - t)) ** 0.25, rel=1e-14)
        assert q.spec == "pow:0.25"

    def test_loglog_value_and_spec(self):
        q = loglog_weight(1.0)
        assert float(q(0.5)) == pytest.approx(0.5941595945292419, rel=1e-13)
        s = 0.1 * 0.9
        want = math.sqrt(2.0 * s * math.log(math.e - math.log(s)))
        assert float(loglog_weight(2.0)(0.1)) == pytest.approx(want, rel=1e-13)
        assert q.spec == "loglog:1.0"

    @pytest.mark.parametrize("spec", ["one", "pow:0.25", "pow:0.4", "loglog:1.0",
                                      "loglog:2.5"])
    def test_specs_round_trip(self, spec):
        q = parse_weight(spec)
        assert q.spec == spec
        again = parse_weight(q.spec)
        t = np.linspace(0.01, 0.99, 23)
        np.testing.assert_array_equal(again(t), q(t))

    @pytest.mark.parametrize("spec", ["one", "pow:0.25", "pow:0.5", "loglog:1.0"])
    def test_positive_and_symmetric_inside(self, spec):
        """q(t) == q(1-t) exactly on a dyadic grid where 1-t is exact."""
        q = parse_weight(spec)
        t = np.arange(1, 64) / 64.0
        vals = q(t)
        assert np.all(vals > 0.0)
        np.testing.assert_array_equal(vals, q(1.0 - t))

    def test_builtin_weight_dispatch(self):
        assert builtin_weight("constant_one").spec == "one"
        assert builtin_weight("power", 0.3).spec == "pow:0.3"
        assert builtin_weight("loglog", 1.5).spec == "loglog:1.5"
        with pytest.raises(BadParams):
            builtin_weight("tent")

    @pytest.mark.parametrize("spec", ["pow", "pow:", "pow:abc", "pow:0",
                                      "pow:-0.2", "loglog:0", "tent:1", ""])
    def test_bad_specs_rejected(self, spec):
        with pytest.raises(BadParams):
            parse_weight(spec)


class TestClassifier:
    @pytest.mark.parametrize("nu,want", [
        (0.1, Summary.FINITE_FOR_ALL_TESTED),
        (0.25, Summary.FINITE_FOR_ALL_TESTED),
        (0.4, Summary.FINITE_FOR_ALL_TESTED),
        (0.5, Summary.DIVERGENT_FOR_ALL_TESTED),
        (0.6, Summary.DIVERGENT_FOR_ALL_TESTED),
    ])
    def test_power_family_sweep(self, nu, want):
        """Powers below one half integrate; one half and above do not."""
        assert classify(power_weight(nu)).summary is want

    def test_constant_one_is_finite_everywhere(self):
        result = classify(constant_one())
        assert result.summary is Summary.FINITE_FOR_ALL_TESTED
        assert all(v is Verdict.FINITE for v in result.verdicts)

    def test_loglog_splits_by_scale(self):
        result = classify(loglog_weight(1.0), c_values=(0.5, 2.0))
        assert result.verdicts == (Verdict.DIVERGENT, Verdict.FINITE)
        assert result.summary is Summary.FINITE_FOR_SOME_NOT_ALL

    def test_verdicts_monotone_in_scale(self):
        """Once finite at some c, finite at every larger tested c."""
        for q in (loglog_weight(1.0), loglog_weight(2.0), power_weight(0.3)):
            result = classify(q, c_values=(0.05, 0.2, 0.8, 1.6, 6.4))
            seen_finite = False
            for v in result.verdicts:
                if v is Verdict.FINITE:
                    seen_finite = True
                else:
                    assert not seen_finite

    def test_finite_estimates_are_positive(self):
        result = classify(power_weight(0.25))
        for verdict, est in zip(result.verdicts, result.integral_estimates):
            if verdict is Verdict.FINITE:
                assert np.isfinite(est) and est > 0.0

    def test_records_inputs(self):
        result = classify(loglog_weight(1.0), c_values=(0.5, 2.0))
        assert result.weight_spec == "loglog:1.0"
        assert result.c_values == (0.5, 2.0)
        assert len(result.raw_verdicts) == 2
        assert len(result.window_increments) == 2

    def test_c_grid_validation(self):
        q = constant_one()
        with pytest.raises(BadParams):
            classify(q, c_values=())
        with pytest.raises(BadParams):
            classify(q, c_values=(-1.0, 2.0))
        with pytest.raises(BadParams):
            classify(q, c_values=(2.0, 1.0))
        with pytest.raises(BadParams):
            classify(q, max_level=5)


class TestFiniteThreshold:
    def test_loglog_threshold_location(self):
        """The smallest certifying scale for the split family sits near 1."""
        c_star = finite_threshold(loglog_weight(1.0))
        assert 0.7 <= c_star <= 1.5

    def test_threshold_scales_inversely_with_lambda(self):
        assert finite_threshold(loglog_weight(2.0)) < finite_threshold(
            loglog_weight(1.0))

    def test_needs_a_sign_change(self):
        with pytest.raises(BadParams):
            finite_threshold(power_weight(0.25))  # already finite at c_lo
        with pytest.raises(BadParams):
            finite_threshold(power_weight(0.5))  # still divergent at c_hi


class TestEndpointDecay:
    @pytest.mark.parametrize("spec,want", [
        ("one", True),
        ("pow:0.25", True),
        ("pow:0.4", True),
        ("loglog:1.0", True),
        ("pow:0.5", False),
        ("pow:0.6", False),
    ])
    def test_ratio_vanishes_iff_weight_dominates_root(self, spec, want):
        report = endpoint_decay_check(parse_weight(spec))
        assert report.vanishes is want
        assert report.vanishes == (report.vanishes_lower and
                                   report.vanishes_upper)

    def test_level_validation(self):
        with pytest.raises(BadParams):
            endpoint_decay_check(constant_one(), min_level=1)
        with pytest.raises(BadParams):
            endpoint_decay_check(constant_one(), min_level=10, max_level=9)

    def test_report_arrays_align(self):
        report = endpoint_decay_check(power_weight(0.25), min_level=4,
                                      max_level=20)
        assert report.levels.shape == report.lower_ratios.shape
        assert report.levels[0] == 4 and report.levels[-1] == 20

    def test_finite_classification_implies_decay(self):
        """Weights certified integrable always dominate sqrt(t) at the ends."""
        weights = [constant_one(), power_weight(0.25), power_weight(0.4),
                   loglog_weight(1.0)]
        rng = np.random.default_rng(2718)
        weights += [power_weight(float(nu))
                    for nu in rng.uniform(0.05, 0.45, size=10)]
        weights += [loglog_weight(float(lam))
                    for lam in rng.uniform(0.5, 4.0, size=10)]
        for q in weights:
            result = classify(q)
            if any(v is Verdict.FINITE for v in result.verdicts):
                assert endpoint_decay_check(q).vanishes, q.spec
