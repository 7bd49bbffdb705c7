"""Command-line interface.

Subcommands:

* ``detect``       — run the changepoint test on a data file
* ``simulate``     — build a reference law and write it to a cache file
* ``check-weight`` — classify a weight function's integrability
* ``calibrate``    — run a size/power experiment from a scenario file
* ``verify``       — run the self-verification suite

Exit codes: 0 success (including a non-rejecting test), 2 input error,
3 law/configuration mismatch.  ``U_CPD_THREADS`` caps worker processes;
it changes speed only, never output.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from . import io
from .detector import run_test, size_power_experiment
from .errors import BadParams, LawMismatch, UcpdError
from .kernels import Kernel, builtin_kernel, limit_process_name
from .limitsim import PROCESS_NAMES, LimitLaw, build_limit_law
from .uprocess import studentized_path
from .verify import run_suite, suite_passed
from .weights import WeightFunction, classify, endpoint_decay_check, parse_weight

_DEFAULT_GRID = 2048
_DEFAULT_REPS = 10_000


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ucpd",
        description="Changepoint tests built on weighted two-sample split sums.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", help="test a data file for a changepoint")
    detect.add_argument("--data", required=True, help="input data file")
    detect.add_argument("--format", default=io.FORMAT_CSV,
                        choices=io.SAMPLE_FORMATS, help="input file format")
    detect.add_argument("--field", default="x",
                        help="JSON field holding the value (jsonl only)")
    detect.add_argument("--kernel", default="sign_diff", help="builtin kernel name")
    detect.add_argument("--weight", default="one", help="weight spec, e.g. pow:0.25")
    detect.add_argument("--alpha", type=float, default=0.05, help="test level")
    _add_law_source(detect)
    detect.add_argument("--dump-path", default=None, metavar="CSV",
                        help="also write the statistic path as CSV (t,u,q)")
    detect.add_argument("--out", default=None, help="also write the result record here")
    detect.set_defaults(func=_cmd_detect)

    simulate = sub.add_parser("simulate", help="simulate a reference law cache")
    simulate.add_argument("--process", required=True, choices=PROCESS_NAMES)
    simulate.add_argument("--weight", default="one", help="weight spec")
    simulate.add_argument("--grid", type=int, default=_DEFAULT_GRID,
                          help="dyadic grid size (power of two)")
    simulate.add_argument("--reps", type=int, default=_DEFAULT_REPS,
                          help="Monte Carlo replications")
    simulate.add_argument("--seed", type=int, required=True, help="master seed")
    simulate.add_argument("--out", required=True, help="cache file to write")
    simulate.add_argument("--quantiles-only", action="store_true",
                          help="omit the sup sample from the cache")
    simulate.set_defaults(func=_cmd_simulate)

    check = sub.add_parser("check-weight",
                           help="classify a weight's boundary integrability")
    check.add_argument("spec", help="weight spec, e.g. one, pow:0.25, loglog:1.0")
    check.add_argument("--c", default=None,
                       help="comma-separated scale constants to test")
    check.set_defaults(func=_cmd_check_weight)

    calibrate = sub.add_parser("calibrate",
                               help="size/power experiment from a scenario file")
    calibrate.add_argument("--scenario", required=True, help="JSON scenario file")
    calibrate.add_argument("--alpha", type=float, default=0.05, help="test level")
    _add_law_source(calibrate)
    calibrate.add_argument("--out", default=None,
                           help="also write the experiment record here")
    calibrate.set_defaults(func=_cmd_calibrate)

    verify = sub.add_parser("verify", help="run the self-verification suite")
    verify.add_argument("suite", choices=("quick", "full"),
                        help="quick (seconds) or full (desk-scale)")
    verify.set_defaults(func=_cmd_verify)

    return parser


def _add_law_source(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--cache", default=None,
                     help="read the reference law from this cache file")
    cmd.add_argument("--grid", type=int, default=None,
                     help="simulate inline: grid size (default 2048)")
    cmd.add_argument("--reps", type=int, default=None,
                     help="simulate inline: replications (default 10000)")
    cmd.add_argument("--seed", type=int, default=None,
                     help="simulate inline: master seed")


def _resolve_law(args, kernel: Kernel, weight: WeightFunction) -> LimitLaw:
    """Exactly one law source: a cache file, or inline simulation with a seed."""
    inline = [v for v in (args.grid, args.reps, args.seed) if v is not None]
    if args.cache is not None:
        if inline:
            raise BadParams("give either --cache or --grid/--reps/--seed, not both")
        return io.read_law_cache(args.cache)
    if args.seed is None:
        raise BadParams("no law source: give --cache, or --seed "
                        "(optionally with --grid/--reps) to simulate inline")
    return build_limit_law(
        limit_process_name(kernel.symmetry),
        weight,
        args.grid if args.grid is not None else _DEFAULT_GRID,
        args.reps if args.reps is not None else _DEFAULT_REPS,
        args.seed,
    )


def _cmd_detect(args) -> int:
    sample = io.read_sample(args.data, args.format, args.field)
    kernel = builtin_kernel(args.kernel)
    weight = parse_weight(args.weight)
    law = _resolve_law(args, kernel, weight)
    decision = run_test(sample, kernel, weight, args.alpha, law)
    record = io.decision_record(decision)
    sys.stdout.write(record)
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(record)
    if args.dump_path is not None:
        io.dump_path_csv(studentized_path(sample, kernel), weight, args.dump_path)
    return 0


def _cmd_simulate(args) -> int:
    weight = parse_weight(args.weight)
    law = build_limit_law(args.process, weight, args.grid, args.reps, args.seed)
    io.write_law_cache(args.out, law, include_sups=not args.quantiles_only)
    note = " (low reps)" if law.low_reps else ""
    sys.stdout.write(
        f"wrote {args.process}/{weight.spec} law: grid={law.grid_size} "
        f"reps={law.reps} seed={law.master_seed}{note} -> {args.out}\n"
    )
    return 0


def _cmd_check_weight(args) -> int:
    weight = parse_weight(args.spec)
    if args.c is not None:
        try:
            c_values = tuple(float(tok) for tok in args.c.split(",") if tok.strip())
        except ValueError:
            raise BadParams(f"--c must be comma-separated numbers, got {args.c!r}"
                            ) from None
        result = classify(weight, c_values=c_values)
    else:
        result = classify(weight)
    decay = endpoint_decay_check(weight)
    sys.stdout.write(io.classification_record(result, decay))
    return 0


def _cmd_calibrate(args) -> int:
    scenario = io.read_scenario(args.scenario)
    kernel = builtin_kernel(scenario.kernel_name)
    weight = parse_weight(scenario.weight_spec)
    law = _resolve_law(args, kernel, weight)
    report = size_power_experiment(scenario, args.alpha, law)
    record = io.experiment_record(report)
    sys.stdout.write(record)
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(record)
    return 0


def _cmd_verify(args) -> int:
    results = run_suite(args.suite, emit=print)
    return 0 if suite_passed(results) else 1


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return int(code) if isinstance(code, int) else (0 if code is None else 2)
    try:
        return args.func(args)
    except LawMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (UcpdError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
