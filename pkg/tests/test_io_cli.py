"""File formats and the command-line interface."""

import json

import numpy as np
import pytest

from ucpd import (
    BadParams,
    ParseError,
    TooFewObservations,
    build_limit_law,
    builtin_kernel,
    classify,
    endpoint_decay_check,
    p_value,
    parse_weight,
    run_test,
    studentized_path,
)
from ucpd.cli import main
from ucpd.io import (
    classification_record,
    decision_record,
    dump_path_csv,
    read_law_cache,
    read_sample,
    read_scenario,
    write_law_cache,
    write_sample,
)

ONE = parse_weight("one")
TRICKY = [0.1, -1.0 / 3.0, 1e-17, 9.87e154, -42.0, 0.0]


@pytest.fixture(scope="module")
def law128():
    return build_limit_law("bridge", ONE, 128, 1500, 2)


@pytest.fixture(scope="module")
def ramp_decision(law128):
    return run_test(np.arange(1.0, 31.0), builtin_kernel("sign_diff"), ONE,
                    0.05, law128)


class TestSampleFiles:
    def test_csv_round_trip_is_exact(self, tmp_path):
        path = str(tmp_path / "sample.csv")
        write_sample(path, TRICKY)
        np.testing.assert_array_equal(read_sample(path), np.asarray(TRICKY))

    def test_jsonl_round_trip_with_custom_field(self, tmp_path):
        path = str(tmp_path / "sample.jsonl")
        write_sample(path, TRICKY, fmt="jsonl", field="value")
        got = read_sample(path, fmt="jsonl", field="value")
        np.testing.assert_array_equal(got, np.asarray(TRICKY))

    def test_written_text_has_no_numpy_reprs(self, tmp_path):
        path = str(tmp_path / "sample.csv")
        write_sample(path, np.asarray(TRICKY))
        text = open(path, encoding="utf-8").read()
        assert "np.float64" not in text and "float64" not in text

    def test_blank_lines_skipped_order_kept(self, tmp_path):
        path = tmp_path / "gaps.csv"
        path.write_text("1.0\n\n2.0\n\n\n3.0\n4.0\n")
        np.testing.assert_array_equal(read_sample(str(path)),
                                      [1.0, 2.0, 3.0, 4.0])

    def test_bad_line_reports_its_position(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0\n2.0\noops\n4.0\n5.0\n")
        with pytest.raises(ParseError) as err:
            read_sample(str(path))
        assert err.value.line_no == 3
        assert err.value.content == "oops"

    def test_jsonl_field_errors(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"x": 1.0}\n{"y": 2.0}\n')
        with pytest.raises(ParseError) as err:
            read_sample(str(path), fmt="jsonl")
        assert err.value.line_no == 2
        path.write_text('{"x": true}\n')
        with pytest.raises(ParseError):
            read_sample(str(path), fmt="jsonl")
        path.write_text("{not json\n")
        with pytest.raises(ParseError):
            read_sample(str(path), fmt="jsonl")

    def test_too_few_observations(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("1.0\n2.0\n3.0\n")
        with pytest.raises(TooFewObservations):
            read_sample(str(path))

    def test_unknown_format(self, tmp_path):
        with pytest.raises(BadParams):
            read_sample(str(tmp_path / "x.bin"), fmt="parquet")
        with pytest.raises(BadParams):
            write_sample(str(tmp_path / "x.bin"), TRICKY, fmt="parquet")


class TestLawCache:
    def test_round_trip_is_bit_exact(self, tmp_path, law128):
        path = str(tmp_path / "law.txt")
        write_law_cache(path, law128)
        back = read_law_cache(path)
        assert (back.process, back.weight_spec) == ("bridge", "one")
        assert (back.grid_size, back.reps, back.master_seed) == (128, 1500, 2)
        assert back.low_reps == law128.low_reps
        np.testing.assert_array_equal(back.sorted_sups, law128.sorted_sups)
        assert back.quantile_table == law128.quantile_table

    def test_rewrite_is_byte_identical(self, tmp_path, law128):
        first = tmp_path / "a.txt"
        second = tmp_path / "b.txt"
        write_law_cache(str(first), law128)
        write_law_cache(str(second), read_law_cache(str(first)))
        assert first.read_bytes() == second.read_bytes()

    def test_quantiles_only_cache(self, tmp_path, law128):
        path = str(tmp_path / "law-q.txt")
        write_law_cache(path, law128, include_sups=False)
        back = read_law_cache(path)
        assert back.sorted_sups is None
        assert back.quantile(0.95) == law128.quantile(0.95)
        with pytest.raises(BadParams):
            back.quantile(0.93)  # not a tabulated level
        assert p_value(back, 0.0) == 1.0
        mid = 0.5 * (back.quantile(0.90) + back.quantile(0.95))
        assert p_value(back, mid) == pytest.approx(0.1)
        assert p_value(back, back.quantile(0.99) + 1.0) == pytest.approx(0.01)

    def test_low_reps_round_trips(self, tmp_path):
        law = build_limit_law("gamma", ONE, 64, 500, 3)
        assert law.low_reps
        path = str(tmp_path / "law-small.txt")
        write_law_cache(path, law)
        assert read_law_cache(path).low_reps

    @pytest.mark.parametrize("mangle", [
        lambda lines: ["not-a-cache"] + lines[1:],
        lambda lines: lines[:-2] + [lines[-1]],  # drop the last sup
        lambda lines: lines[:-1],  # drop the end marker
        lambda lines: [lines[0], "format_version 2"] + lines[2:],
        lambda lines: [line.replace("reps 1500", "reps 1400") for line in lines],
        lambda lines: [line.replace("low_reps false", "low_reps true")
                       for line in lines],
    ])
    def test_corrupted_caches_rejected(self, tmp_path, law128, mangle):
        path = tmp_path / "law.txt"
        write_law_cache(str(path), law128)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(mangle(lines)) + "\n")
        with pytest.raises(ParseError):
            read_law_cache(str(path))

    def test_unsorted_sups_rejected(self, tmp_path, law128):
        path = tmp_path / "law.txt"
        write_law_cache(str(path), law128)
        lines = path.read_text().splitlines()
        i = len(lines) - 3  # two adjacent sup lines near the end
        lines[i], lines[i - 1] = lines[i - 1], lines[i]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError):
            read_law_cache(str(path))


class TestRecords:
    def test_decision_record_shape(self, ramp_decision):
        decision = ramp_decision
        record = decision_record(decision)
        lines = record.splitlines()
        assert lines[0] == "ucpd-result"
        assert lines[1] == "format_version 1"
        fields = dict(line.split(" ", 1) for line in lines[2:])
        assert fields["kernel"] == "sign_diff"
        assert fields["weight"] == "one"
        assert fields["reject"] in ("true", "false")
        assert float(fields["statistic"]) == decision.statistic
        assert float(fields["p_value"]) == decision.p_value
        assert int(fields["k_hat"]) == decision.k_hat
        assert fields["law_process"] == "bridge"
        assert "np.float64" not in record

    def test_experiment_record_size_mode(self, law128):
        from ucpd import Scenario, parse_distribution, size_power_experiment
        from ucpd.io import experiment_record
        scenario = Scenario(n=20, before=parse_distribution("normal:0.0,1.0"),
                            reps=200, master_seed=8)
        report = size_power_experiment(scenario, 0.05, law128)
        text = experiment_record(report)
        lines = text.splitlines()
        assert lines[0] == "ucpd-experiment"
        fields = dict(line.split(" ", 1) for line in lines[2:])
        assert fields["mode"] == "size"
        assert fields["after"] == "-"
        assert fields["change_fraction"] == "-"
        assert fields["mean_abs_location_error"] == "-"
        assert float(fields["ks_distance"]) == report.ks_distance
        assert fields["moment_condition_certified"] == "true"
        assert "np.float64" not in text

    def test_classification_record(self):
        weight = parse_weight("loglog:1.0")
        result = classify(weight, c_values=(0.5, 2.0))
        text = classification_record(result, endpoint_decay_check(weight))
        lines = text.splitlines()
        assert lines[0] == "ucpd-weight-check"
        fields = dict(line.split(" ", 1) for line in lines[2:])
        assert fields["weight"] == "loglog:1.0"
        assert fields["summary"] == "finite_for_some_not_all"
        assert fields["c[0.5]"] == "divergent"
        assert fields["c[2.0]"] == "finite"
        assert fields["endpoint_decay_vanishes"] == "true"

    def test_path_dump_columns(self, tmp_path):
        sample = np.arange(1.0, 13.0)
        path_obj = studentized_path(sample, builtin_kernel("sign_diff"))
        out = tmp_path / "path.csv"
        dump_path_csv(path_obj, ONE, str(out))
        lines = out.read_text().splitlines()
        assert lines[0] == "t,u,q"
        assert len(lines) == 1 + 11
        t, u, q = (float(tok) for tok in lines[1].split(","))
        assert t == path_obj.grid[0]
        assert u == path_obj.values[0]
        assert q == 1.0


class TestScenarioFiles:
    def test_full_config(self, tmp_path):
        cfg = {"n": 40, "before": "normal:0.0,1.0", "after": "normal:2.0,1.0",
               "change_fraction": 0.25, "kernel": "diff", "weight": "pow:0.25",
               "reps": 300, "seed": 12}
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(cfg))
        scenario = read_scenario(str(path))
        assert scenario.n == 40
        assert scenario.before.spec == "normal:0.0,1.0"
        assert scenario.after.spec == "normal:2.0,1.0"
        assert scenario.change_fraction == 0.25
        assert scenario.kernel_name == "diff"
        assert scenario.weight_spec == "pow:0.25"
        assert (scenario.reps, scenario.master_seed) == (300, 12)

    def test_minimal_config_defaults(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({"n": 16, "before": "uniform:0.0,1.0"}))
        scenario = read_scenario(str(path))
        assert scenario.is_null
        assert scenario.kernel_name == "sign_diff"
        assert scenario.weight_spec == "one"
        assert (scenario.reps, scenario.master_seed) == (1000, 0)

    @pytest.mark.parametrize("cfg,fragment", [
        ({"n": 16}, "before"),
        ({"before": "normal:0.0,1.0"}, "n"),
        ({"n": 16, "before": "normal:0.0,1.0", "color": "red"}, "color"),
        ({"n": 16, "before": "gauss:0,1"}, "gauss"),
        ({"n": 16, "before": "normal:0.0,1.0", "after": "normal:1.0,1.0"},
         "change_fraction"),
    ])
    def test_invalid_configs(self, tmp_path, cfg, fragment):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(cfg))
        with pytest.raises(BadParams) as err:
            read_scenario(str(path))
        assert fragment in str(err.value)

    def test_non_object_and_bad_json(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text("[1, 2]")
        with pytest.raises(BadParams):
            read_scenario(str(path))
        path.write_text("{nope")
        with pytest.raises(BadParams):
            read_scenario(str(path))


@pytest.fixture()
def step_file(tmp_path):
    path = str(tmp_path / "step.csv")
    write_sample(path, [0.0] * 12 + [6.0] * 12)
    return path


@pytest.fixture()
def cache_file(tmp_path, law128):
    path = str(tmp_path / "law.txt")
    write_law_cache(path, law128)
    return path


class TestCli:
    def test_no_arguments_is_usage_error(self, capsys):
        assert main([]) == 2
        capsys.readouterr()

    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 2
        capsys.readouterr()

    def test_detect_with_cache(self, capsys, tmp_path, step_file, cache_file):
        out_file = str(tmp_path / "result.txt")
        code = main(["detect", "--data", step_file, "--kernel", "sign_diff",
                     "--cache", cache_file, "--out", out_file])
        captured = capsys.readouterr()
        assert code == 0
        assert captured.out.startswith("ucpd-result\n")
        assert "reject true" in captured.out
        assert open(out_file, encoding="utf-8").read() == captured.out

    def test_detect_inline_seed_matches_cached_law(self, capsys, step_file,
                                                   cache_file):
        assert main(["detect", "--data", step_file, "--cache",
                     cache_file]) == 0
        via_cache = capsys.readouterr().out
        assert main(["detect", "--data", step_file, "--seed", "2", "--grid",
                     "128", "--reps", "1500"]) == 0
        inline = capsys.readouterr().out
        assert inline == via_cache

    def test_detect_dump_path(self, capsys, tmp_path, step_file, cache_file):
        dump = tmp_path / "path.csv"
        assert main(["detect", "--data", step_file, "--cache", cache_file,
                     "--dump-path", str(dump)]) == 0
        capsys.readouterr()
        lines = dump.read_text().splitlines()
        assert lines[0] == "t,u,q"
        assert len(lines) == 1 + 23

    def test_detect_law_source_is_exclusive(self, capsys, step_file,
                                            cache_file):
        assert main(["detect", "--data", step_file, "--cache", cache_file,
                     "--seed", "2"]) == 2
        assert "error:" in capsys.readouterr().err
        assert main(["detect", "--data", step_file]) == 2
        assert "error:" in capsys.readouterr().err

    def test_detect_missing_file(self, capsys, cache_file):
        assert main(["detect", "--data", "/nonexistent/data.csv",
                     "--cache", cache_file]) == 2
        assert "error:" in capsys.readouterr().err

    def test_detect_law_mismatch_exit_code(self, capsys, tmp_path, step_file):
        gamma_cache = str(tmp_path / "gamma.txt")
        assert main(["simulate", "--process", "gamma", "--seed", "3",
                     "--grid", "64", "--reps", "1200",
                     "--out", gamma_cache]) == 0
        capsys.readouterr()
        code = main(["detect", "--data", step_file, "--kernel", "sign_diff",
                     "--cache", gamma_cache])
        captured = capsys.readouterr()
        assert code == 3
        assert "error:" in captured.err

    def test_simulate_is_deterministic(self, capsys, tmp_path):
        first = tmp_path / "a.txt"
        second = tmp_path / "b.txt"
        for out in (first, second):
            assert main(["simulate", "--process", "bridge", "--seed", "21",
                         "--grid", "128", "--reps", "1500",
                         "--out", str(out)]) == 0
        captured = capsys.readouterr()
        assert first.read_bytes() == second.read_bytes()
        assert "wrote bridge/one law" in captured.out
        assert "(low reps)" not in captured.out

    def test_simulate_flags_low_reps(self, capsys, tmp_path):
        assert main(["simulate", "--process", "bridge", "--seed", "21",
                     "--grid", "64", "--reps", "400",
                     "--out", str(tmp_path / "law.txt")]) == 0
        assert "(low reps)" in capsys.readouterr().out

    def test_simulate_quantiles_only_detect(self, capsys, tmp_path, step_file):
        cache = str(tmp_path / "law-q.txt")
        assert main(["simulate", "--process", "bridge", "--seed", "2",
                     "--grid", "128", "--reps", "1500", "--quantiles-only",
                     "--out", cache]) == 0
        capsys.readouterr()
        assert main(["detect", "--data", step_file, "--cache", cache]) == 0
        out = capsys.readouterr().out
        assert "p_value 0.01" in out  # coarse table step, not add-one

    def test_simulate_rejects_bad_grid(self, capsys, tmp_path):
        assert main(["simulate", "--process", "bridge", "--seed", "1",
                     "--grid", "100", "--reps", "1500",
                     "--out", str(tmp_path / "law.txt")]) == 2
        assert "error:" in capsys.readouterr().err

    def test_check_weight_finite_family(self, capsys):
        assert main(["check-weight", "pow:0.25"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("ucpd-weight-check\n")
        assert "summary finite_for_all_tested" in out
        assert "endpoint_decay_vanishes true" in out

    def test_check_weight_divergent_family(self, capsys):
        assert main(["check-weight", "pow:0.5"]) == 0
        out = capsys.readouterr().out
        assert "summary divergent_for_all_tested" in out
        assert "endpoint_decay_vanishes false" in out

    def test_check_weight_custom_levels(self, capsys):
        assert main(["check-weight", "loglog:1.0", "--c", "0.5,2.0"]) == 0
        out = capsys.readouterr().out
        assert "summary finite_for_some_not_all" in out
        assert "c[0.5] divergent" in out
        assert "c[2.0] finite" in out

    def test_check_weight_bad_inputs(self, capsys):
        assert main(["check-weight", "pow:0"]) == 2
        assert main(["check-weight", "one", "--c", "fast"]) == 2
        capsys.readouterr()

    def test_calibrate_from_scenario_file(self, capsys, tmp_path, cache_file):
        cfg = tmp_path / "scenario.json"
        cfg.write_text(json.dumps({"n": 24, "before": "normal:0.0,1.0",
                                   "reps": 200, "seed": 5}))
        out_file = str(tmp_path / "report.txt")
        code = main(["calibrate", "--scenario", str(cfg), "--cache",
                     cache_file, "--out", out_file])
        captured = capsys.readouterr()
        assert code == 0
        assert captured.out.startswith("ucpd-experiment\n")
        assert "mode size" in captured.out
        assert open(out_file, encoding="utf-8").read() == captured.out

    def test_calibrate_rejects_bad_alpha(self, capsys, tmp_path, cache_file):
        cfg = tmp_path / "scenario.json"
        cfg.write_text(json.dumps({"n": 24, "before": "normal:0.0,1.0",
                                   "reps": 200, "seed": 5}))
        assert main(["calibrate", "--scenario", str(cfg), "--cache",
                     cache_file, "--alpha", "0.9"]) == 2
        capsys.readouterr()

    def test_verify_rejects_unknown_suite(self, capsys):
        assert main(["verify", "nightly"]) == 2
        capsys.readouterr()

    def test_verify_quick_reports_known_failure(self, capsys):
        """The symmetric-kernel size item fails by construction; see README."""
        code = main(["verify", "quick"])
        out = capsys.readouterr().out
        pass_lines = [l for l in out.splitlines() if l.startswith("PASS ")]
        fail_lines = [l for l in out.splitlines() if l.startswith("FAIL ")]
        assert code == 1
        assert len(pass_lines) == 10
        assert len(fail_lines) == 1
        assert fail_lines[0].startswith("FAIL size-symmetric-kernel:")
