"""Self-verification suite: every documented guarantee, runnable on demand.

Each item re-derives one guarantee from scratch — brute-force oracles,
closed-form constants, or Monte Carlo at pinned seeds — and checks the
library against it.  Items run at two scales:

* ``full``  — the binding desk-scale run (minutes),
* ``quick`` — a reduced-rep smoke version of the same computations
  (seconds), with correspondingly widened statistical bands.

``run_suite`` executes all items in order and reports one line per item;
the CLI ``verify`` subcommand and the test suite both drive it.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from ._rng import (
    DOMAIN_PROBE,
    THREADS_ENV_VAR,
    ints_to_normals,
    normal_ints,
    rep_stream,
)
from .detector import Scenario, size_power_experiment
from .distributions import parse_distribution
from .errors import DegenerateVariance
from .kernels import (
    PROCESS_BRIDGE,
    PROCESS_DAMPED,
    PROCESS_GAMMA,
    Kernel,
    available_kernels,
    builtin_kernel,
    remainder_kernel,
    with_projection,
)
from .limitsim import LimitLaw, bridge_path, build_limit_law, gamma_path
from .uprocess import estimate, z_path
from .weights import (
    Summary,
    Verdict,
    classify,
    endpoint_decay_check,
    finite_threshold,
    parse_weight,
)


@dataclass(frozen=True)
class ItemResult:
    """Outcome of one verification item."""

    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.detail} [{self.seconds:.1f}s]"


class LawPool:
    """Shared cache of simulated reference laws, keyed by (process, weight).

    The expensive laws are reused across items exactly as a caller would
    reuse a cache file, so the suite's cost stays near the cost of the
    statistics themselves.
    """

    _SEEDS = {
        (PROCESS_BRIDGE, "one"): 42,
        (PROCESS_GAMMA, "one"): 43,
        (PROCESS_BRIDGE, "pow:0.25"): 44,
        (PROCESS_BRIDGE, "loglog:1.0"): 45,
        (PROCESS_DAMPED, "one"): 46,
    }

    def __init__(self, mode: str):
        if mode not in ("quick", "full"):
            raise ValueError(f"mode must be 'quick' or 'full', got {mode!r}")
        self.mode = mode
        self.grid_size = 2048 if mode == "full" else 512
        self.reps = 100_000 if mode == "full" else 10_000
        self._cache: dict[tuple[str, str], LimitLaw] = {}

    def get(self, process: str, weight_spec: str) -> LimitLaw:
        key = (process, weight_spec)
        if key not in self._cache:
            self._cache[key] = build_limit_law(
                process,
                parse_weight(weight_spec),
                self.grid_size,
                self.reps,
                self._SEEDS[key],
            )
        return self._cache[key]


# ---------------------------------------------------------------------------
# closed-form oracle: sup of |Brownian bridge|
# ---------------------------------------------------------------------------

def kolmogorov_sup_cdf(x: float, terms: int = 100) -> float:
    """P(sup_t |bridge(t)| <= x) by the classical alternating series."""
    if x <= 0.0:
        return 0.0
    k = np.arange(1, terms + 1)
    series = np.sum((-1.0) ** (k - 1) * np.exp(-2.0 * k**2 * x**2))
    return float(1.0 - 2.0 * series)


def kolmogorov_sup_quantile(p: float) -> float:
    """Quantile of sup|bridge| by root-finding on the series CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0,1), got {p!r}")
    return float(brentq(lambda x: kolmogorov_sup_cdf(x) - p, 0.05, 6.0,
                        xtol=1e-12))


# ---------------------------------------------------------------------------
# brute-force oracles for the split-sum path and its studentizer
# ---------------------------------------------------------------------------

def brute_pair_table(sample: np.ndarray, kernel: Kernel) -> list[list[float]]:
    """All pair evaluations h(x_i, x_j) by plain double loop."""
    values = [float(v) for v in sample]
    return [[float(kernel.func(xi, xj)) for xj in values] for xi in values]


def brute_split_sums(table: list[list[float]]) -> list[float]:
    """Z_k = sum over i <= k < j of h(x_i, x_j), literally by its definition."""
    n = len(table)
    out = []
    for k in range(1, n):
        total = 0.0
        for i in range(k):
            row = table[i]
            for j in range(k, n):
                total += row[j]
        out.append(total)
    return out


def brute_estimates(table: list[list[float]]) -> tuple[float, float, list[float]]:
    """(pair mean, jackknife variance, row means) from the pair table."""
    n = len(table)
    pair_mean = sum(table[i][j] for i in range(n) for j in range(n) if i != j)
    pair_mean /= n * (n - 1)
    row_means = [
        (sum(table[i][j] for i in range(n)) - table[j][j]) / (n - 1)
        for j in range(n)
    ]
    variance = sum((r - pair_mean) ** 2 for r in row_means) / n
    return pair_mean, variance, row_means


def _random_instances(count: int, max_n: int):
    """Deterministic stream of (sample, kernel) test instances."""
    rng = rep_stream(9001, DOMAIN_PROBE, 0)
    names = available_kernels()
    for i in range(count):
        n = 4 + int(rng.integers(0, max_n - 3))
        sample = 3.0 * ints_to_normals(normal_ints(rng, n)) + 1.0
        if i % 3 == 0:
            sample = np.round(sample)  # integer ties exercise the sign kernels
        yield sample, builtin_kernel(names[i % len(names)])


def _item_oracle_equivalence(mode: str, laws: LawPool) -> tuple[bool, str]:
    count, max_n = (200, 50) if mode == "full" else (60, 24)
    budget = 10.0
    start = time.perf_counter()
    worst_z = 0.0
    worst_est = 0.0
    skipped = 0
    for sample, kernel in _random_instances(count, max_n):
        table = brute_pair_table(sample, kernel)
        scale = max(1.0, max(abs(v) for row in table for v in row))
        z_ref = np.asarray(brute_split_sums(table))
        z = z_path(sample, kernel)
        denom = np.maximum(np.abs(z_ref), scale)
        worst_z = max(worst_z, float(np.max(np.abs(z - z_ref) / denom)))
        try:
            est = estimate(sample, kernel)
        except DegenerateVariance:
            skipped += 1
            continue
        mean_ref, var_ref, rows_ref = brute_estimates(table)
        errs = [
            abs(est.pair_mean - mean_ref) / scale,
            abs(est.jackknife_variance - var_ref) / max(var_ref, scale * 1e-6),
            float(np.max(np.abs(est.row_means - np.asarray(rows_ref)))) / scale,
        ]
        worst_est = max(worst_est, max(errs))
    elapsed = time.perf_counter() - start
    ok = worst_z <= 1e-9 and worst_est <= 1e-9 and elapsed < budget
    detail = (f"{count} instances: worst split-sum rel err {worst_z:.2e}, "
              f"worst estimate rel err {worst_est:.2e} (tol 1e-09), "
              f"{skipped} degenerate skipped, {elapsed:.1f}s < {budget:.0f}s")
    return ok, detail


def _item_bridge_quantile(mode: str, laws: LawPool) -> tuple[bool, str]:
    budget = 120.0
    tol = 0.03 if mode == "full" else 0.05
    start = time.perf_counter()
    law = laws.get(PROCESS_BRIDGE, "one")
    elapsed = time.perf_counter() - start
    observed = law.quantile(0.95)
    oracle = kolmogorov_sup_quantile(0.95)
    ok = abs(observed - oracle) <= tol and elapsed < budget
    detail = (f"0.95-quantile {observed:.4f} vs series oracle {oracle:.4f} "
              f"(tol {tol}), law build {elapsed:.1f}s < {budget:.0f}s")
    return ok, detail


def _item_process_covariance(mode: str, laws: LawPool) -> tuple[bool, str]:
    reps = 100_000 if mode == "full" else 20_000
    tol = 0.005 if mode == "full" else 0.015
    rng = rep_stream(77, DOMAIN_PROBE, 2)
    g = 4  # grid {0, 1/4, 1/2, 3/4, 1}
    z = ints_to_normals(normal_ints(rng, (reps, g))) * math.sqrt(1.0 / g)
    wiener = np.concatenate([np.zeros((reps, 1)), np.cumsum(z, axis=1)], axis=1)
    checks: list[tuple[str, float, float]] = []
    for name, paths in (("symmetric", gamma_path(wiener)),
                        ("bridge", bridge_path(wiener))):
        a, mid, b = paths[:, 1], paths[:, 2], paths[:, 3]
        cov = float(np.mean(a * b) - np.mean(a) * np.mean(b))
        target = 0.125 if name == "symmetric" else 0.0625
        checks.append((f"{name} cov(.25,.75)", cov, target))
        for t, col in ((0.25, a), (0.5, mid), (0.75, b)):
            checks.append((f"{name} var({t})", float(np.var(col)), t * (1 - t)))
    worst = max(abs(got - want) for _, got, want in checks)
    ok = worst <= tol
    summary = ", ".join(f"{label} {got:.4f} (want {want:.4f})"
                        for label, got, want in (checks[0], checks[4]))
    detail = f"{summary}; worst abs dev {worst:.4f} <= {tol} at {reps} reps"
    return ok, detail


def _size_scenario(mode: str, laws: LawPool, *, n: int, dist: str, kernel: str,
                   weight: str, reps: int, seed: int, band: tuple[float, float],
                   process: str, ks_tol: float | None = None,
                   budget: float | None = None,
                   compare_process: str | None = None) -> tuple[bool, str]:
    scenario = Scenario(
        n=n,
        before=parse_distribution(dist),
        kernel_name=kernel,
        weight_spec=weight,
        reps=reps,
        master_seed=seed,
    )
    law = laws.get(process, weight)
    start = time.perf_counter()
    report = size_power_experiment(scenario, 0.05, law)
    elapsed = time.perf_counter() - start
    lo, hi = band
    ok = lo <= report.reject_rate <= hi
    detail = (f"{kernel}/{weight} n={n}: rejection rate {report.reject_rate:.4f} "
              f"in [{lo}, {hi}] at {reps} reps vs {process} law")
    if ks_tol is not None:
        ok = ok and report.ks_distance is not None and report.ks_distance <= ks_tol
        detail += f", KS distance {report.ks_distance:.4f} <= {ks_tol}"
    if budget is not None:
        ok = ok and elapsed < budget
        detail += f", {elapsed:.1f}s < {budget:.0f}s"
    if not report.moment_condition_certified:
        detail += " [moment condition not certified]"
    if compare_process is not None:
        # Same statistics, alternative reference law: shows where the
        # statistic actually calibrates without re-running the scenario.
        other = laws.get(compare_process, weight)
        rate = float(np.mean(report.statistics > other.quantile(0.95)))
        detail += f"; same statistics vs {compare_process} law reject at {rate:.4f}"
    return ok, detail


def _item_size_rank(mode: str, laws: LawPool) -> tuple[bool, str]:
    if mode == "full":
        return _size_scenario(mode, laws, n=500, dist="normal:0.0,1.0",
                              kernel="sign_diff", weight="one", reps=2000,
                              seed=101, band=(0.035, 0.065),
                              process=PROCESS_BRIDGE, ks_tol=0.06, budget=300.0)
    return _size_scenario(mode, laws, n=200, dist="normal:0.0,1.0",
                          kernel="sign_diff", weight="one", reps=400,
                          seed=101, band=(0.015, 0.11),
                          process=PROCESS_BRIDGE, ks_tol=0.12)


def _item_size_symmetric(mode: str, laws: LawPool) -> tuple[bool, str]:
    # Known to FAIL, by mathematics rather than by implementation error:
    # centering the path with the pair mean *estimated from the same sample*
    # damps the null fluctuations of a symmetric kernel to (1-2t) times the
    # bridge, so the statistic never reaches the gamma law's critical value.
    # The companion rate against the damped_bridge law (reported in the
    # detail) shows the same statistics are well calibrated; see README,
    # "Calibration of symmetric kernels".
    if mode == "full":
        ok, detail = _size_scenario(mode, laws, n=500, dist="normal:0.0,1.0",
                                    kernel="half_sq_diff", weight="one",
                                    reps=2000, seed=102, band=(0.03, 0.07),
                                    process=PROCESS_GAMMA,
                                    compare_process=PROCESS_DAMPED)
    else:
        ok, detail = _size_scenario(mode, laws, n=200, dist="normal:0.0,1.0",
                                    kernel="half_sq_diff", weight="one",
                                    reps=400, seed=102, band=(0.015, 0.115),
                                    process=PROCESS_GAMMA,
                                    compare_process=PROCESS_DAMPED)
    if not ok:
        detail += " [expected: gamma pairing is conservative by construction]"
    return ok, detail


def _item_size_heavy_tail(mode: str, laws: LawPool) -> tuple[bool, str]:
    if mode == "full":
        # 5000 reps rather than the headline 1000: the true rate at n=2000
        # sits near the band's lower edge (self-normalized convergence under
        # infinite variance is slow and approaches the level from below), so
        # 1000-rep binomial noise alone would fail ~14% of seeds.  The extra
        # reps sharpen the same band check and stay far inside the runtime
        # budget; the first-1000 sub-rate is reported for transparency.
        scenario = Scenario(
            n=2000,
            before=parse_distribution("student_t:2.0"),
            kernel_name="diff",
            weight_spec="one",
            reps=5000,
            master_seed=103,
        )
        law = laws.get(PROCESS_BRIDGE, "one")
        start = time.perf_counter()
        report = size_power_experiment(scenario, 0.05, law)
        elapsed = time.perf_counter() - start
        crit = law.quantile(0.95)
        first_k = float(np.mean(report.statistics[:1000] > crit))
        lo, hi = 0.03, 0.08
        ok = lo <= report.reject_rate <= hi and elapsed < 900.0
        detail = (f"diff/one n=2000: rejection rate {report.reject_rate:.4f} "
                  f"in [{lo}, {hi}] at 5000 reps vs bridge law "
                  f"(first 1000: {first_k:.4f}), {elapsed:.1f}s < 900s")
        return ok, detail
    return _size_scenario(mode, laws, n=500, dist="student_t:2.0",
                          kernel="diff", weight="one", reps=200,
                          seed=103, band=(0.01, 0.13), process=PROCESS_BRIDGE)


def _item_size_weighted(mode: str, laws: LawPool) -> tuple[bool, str]:
    if mode == "full":
        n, reps, band = 500, 2000, (0.03, 0.08)
    else:
        n, reps, band = 200, 300, (0.01, 0.13)
    ok_pow, detail_pow = _size_scenario(
        mode, laws, n=n, dist="normal:0.0,1.0", kernel="sign_diff",
        weight="pow:0.25", reps=reps, seed=104, band=band,
        process=PROCESS_BRIDGE)
    ok_log, detail_log = _size_scenario(
        mode, laws, n=n, dist="normal:0.0,1.0", kernel="sign_diff",
        weight="loglog:1.0", reps=reps, seed=105, band=band,
        process=PROCESS_BRIDGE)
    return ok_pow and ok_log, f"{detail_pow}; {detail_log}"


def _item_weight_classifier(mode: str, laws: LawPool) -> tuple[bool, str]:
    iterations = 30 if mode == "full" else 12
    failures: list[str] = []

    expectations = [
        ("one", Summary.FINITE_FOR_ALL_TESTED),
        ("pow:0.1", Summary.FINITE_FOR_ALL_TESTED),
        ("pow:0.25", Summary.FINITE_FOR_ALL_TESTED),
        ("pow:0.4", Summary.FINITE_FOR_ALL_TESTED),
        ("pow:0.5", Summary.DIVERGENT_FOR_ALL_TESTED),
        ("pow:0.6", Summary.DIVERGENT_FOR_ALL_TESTED),
    ]
    finite_specs: list[str] = []
    for spec, expected in expectations:
        result = classify(parse_weight(spec))
        if result.summary is not expected:
            failures.append(f"{spec} -> {result.summary.value}, "
                            f"expected {expected.value}")
        if result.summary is not Summary.DIVERGENT_FOR_ALL_TESTED:
            finite_specs.append(spec)

    split = classify(parse_weight("loglog:1.0"), c_values=(0.5, 2.0))
    if split.summary is not Summary.FINITE_FOR_SOME_NOT_ALL:
        failures.append(f"loglog:1.0 -> {split.summary.value}, "
                        f"expected {Summary.FINITE_FOR_SOME_NOT_ALL.value}")
    if split.verdicts != (Verdict.DIVERGENT, Verdict.FINITE):
        failures.append("loglog:1.0 per-c verdicts "
                        f"{[v.value for v in split.verdicts]}, "
                        "expected [divergent, finite]")
    else:
        finite_specs.append("loglog:1.0")

    threshold = finite_threshold(parse_weight("loglog:1.0"),
                                 iterations=iterations)
    if not 0.7 <= threshold <= 1.5:
        failures.append(f"loglog threshold {threshold:.3f} outside [0.7, 1.5]")

    # Finiteness and endpoint decay must tell one story.
    for spec in finite_specs:
        if not endpoint_decay_check(parse_weight(spec)).vanishes:
            failures.append(f"{spec} classified finite but endpoint decay "
                            "check does not vanish")
    for spec in ("pow:0.5", "pow:0.6"):
        if endpoint_decay_check(parse_weight(spec)).vanishes:
            failures.append(f"{spec} endpoint decay check vanishes despite "
                            "divergent classification")

    if failures:
        return False, "; ".join(failures)
    return True, (f"6 power/constant verdicts, split family verdicts, "
                  f"threshold {threshold:.3f} in [0.7, 1.5], decay "
                  f"consistency for {len(finite_specs)} finite weights")


def _item_remainder_decay(mode: str, laws: LawPool) -> tuple[bool, str]:
    from .detector import remainder_decay_curve

    reps = 200 if mode == "full" else 60
    pieces: list[str] = []
    ok = True
    for kernel_name, dist_spec in (("product", "normal:1.0,1.0"),
                                   ("half_sq_diff", "normal:0.0,1.0")):
        kernel = builtin_kernel(kernel_name)
        dist = parse_distribution(dist_spec)
        curve = remainder_decay_curve(kernel, dist, (200, 800), reps=reps,
                                      master_seed=106)
        decreasing = curve[200] > curve[800]
        ok = ok and decreasing
        pieces.append(f"{kernel_name}: median residual {curve[200]:.4f} -> "
                      f"{curve[800]:.4f} ({'down' if decreasing else 'NOT down'})")

    # The location kernel's projection is exact: residual path identically 0.
    dist = parse_distribution("normal:0.0,1.0")
    residual = remainder_kernel(with_projection(builtin_kernel("diff"), dist))
    n_checks = 20 if mode == "full" else 8
    worst = 0.0
    for r in range(n_checks):
        rng = rep_stream(106, DOMAIN_PROBE, 3, r)
        sample = dist.sample(rng, 300)
        worst = max(worst, float(np.max(np.abs(z_path(sample, residual)))))
    exact = worst == 0.0
    ok = ok and exact
    pieces.append(f"diff residual sup {worst!r} (exactly 0.0: {exact})")
    return ok, "; ".join(pieces)


def _item_power_location(mode: str, laws: LawPool) -> tuple[bool, str]:
    reps = 500 if mode == "full" else 200
    min_power = 0.9 if mode == "full" else 0.85
    loc_tol = 0.05 if mode == "full" else 0.08
    scenario = Scenario(
        n=200,
        before=parse_distribution("normal:0.0,1.0"),
        after=parse_distribution("normal:1.0,1.0"),
        change_fraction=0.5,
        kernel_name="diff",
        weight_spec="one",
        reps=reps,
        master_seed=107,
    )
    law = laws.get(PROCESS_BRIDGE, "one")
    report = size_power_experiment(scenario, 0.05, law)
    ok = (report.reject_rate >= min_power
          and report.median_abs_t_err is not None
          and report.median_abs_t_err <= loc_tol)
    detail = (f"power {report.reject_rate:.3f} >= {min_power}, median "
              f"|t_hat - 0.5| = {report.median_abs_t_err:.4f} <= {loc_tol} "
              f"at {reps} reps")
    return ok, detail


def _item_determinism(mode: str, laws: LawPool) -> tuple[bool, str]:
    import tempfile

    from .cli import main as cli_main
    from .io import experiment_record

    worker_counts = (1, 4, 8) if mode == "full" else (1, 2)
    sim_reps = 10_000 if mode == "full" else 6_000
    exp_reps = 300 if mode == "full" else 260

    failures: list[str] = []
    with tempfile.TemporaryDirectory() as tmp:
        # The simulate command, driven through the real CLI entry point.
        blobs: list[bytes] = []
        saved = os.environ.get(THREADS_ENV_VAR)
        try:
            for tag, w in [(f"w{w}", w) for w in worker_counts] + [("again", worker_counts[-1])]:
                out = os.path.join(tmp, f"law-{tag}.txt")
                os.environ[THREADS_ENV_VAR] = str(w)
                code = cli_main([
                    "simulate", "--process", "bridge", "--weight", "one",
                    "--grid", "512", "--reps", str(sim_reps), "--seed", "7",
                    "--out", out,
                ])
                if code != 0:
                    failures.append(f"simulate exit code {code} at {w} workers")
                    continue
                with open(out, "rb") as handle:
                    blobs.append(handle.read())
        finally:
            if saved is None:
                os.environ.pop(THREADS_ENV_VAR, None)
            else:
                os.environ[THREADS_ENV_VAR] = saved
        if len(set(blobs)) > 1:
            failures.append("simulate cache bytes differ across worker counts")

    scenario = Scenario(
        n=100,
        before=parse_distribution("normal:0.0,1.0"),
        kernel_name="sign_diff",
        weight_spec="one",
        reps=exp_reps,
        master_seed=108,
    )
    law = build_limit_law(PROCESS_BRIDGE, parse_weight("one"), 256, 2000, 9)
    records = {
        experiment_record(size_power_experiment(scenario, 0.05, law, workers=w))
        for w in worker_counts
    }
    if len(records) > 1:
        failures.append("experiment records differ across worker counts")

    if failures:
        return False, "; ".join(failures)
    return True, (f"simulate bytes identical across workers {worker_counts} "
                  f"(+repeat run), experiment records identical across "
                  f"workers {worker_counts}")


ITEMS: dict[str, Callable[[str, LawPool], tuple[bool, str]]] = {
    "path-oracle-equivalence": _item_oracle_equivalence,
    "bridge-sup-quantile": _item_bridge_quantile,
    "process-covariance": _item_process_covariance,
    "size-rank-kernel": _item_size_rank,
    "size-symmetric-kernel": _item_size_symmetric,
    "size-heavy-tail": _item_size_heavy_tail,
    "size-weighted": _item_size_weighted,
    "weight-classifier": _item_weight_classifier,
    "remainder-decay": _item_remainder_decay,
    "power-location": _item_power_location,
    "determinism-workers": _item_determinism,
}


def run_item(name: str, mode: str, laws: LawPool) -> ItemResult:
    """Run one named item and wrap its outcome with wall time."""
    fn = ITEMS[name]
    start = time.perf_counter()
    passed, detail = fn(mode, laws)
    return ItemResult(name, passed, detail, time.perf_counter() - start)


def run_suite(mode: str, emit: Callable[[str], None] | None = None) -> list[ItemResult]:
    """Run every item at the given scale, emitting one line per item."""
    laws = LawPool(mode)
    results = []
    for name in ITEMS:
        result = run_item(name, mode, laws)
        if emit is not None:
            emit(result.line())
        results.append(result)
    return results


def suite_passed(results: list[ItemResult]) -> bool:
    return all(r.passed for r in results)
