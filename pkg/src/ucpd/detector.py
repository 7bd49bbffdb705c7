"""Changepoint tests, calibration experiments, and diagnostics.

The test statistic for a sample is the maximum over interior cuts of the
absolute studentized path divided by the weight:

    statistic = max_k |u_k| / q(t_k),    t_k = k/(n+1)

and its reference distribution is a simulated :class:`~ucpd.limitsim.LimitLaw`
whose process must match the kernel's symmetry class (symmetric kernels pair
with the ``gamma`` or ``damped_bridge`` process, antisymmetric ones with the
``bridge``) and whose weight spec must match ``q``; mismatches raise
:class:`LawMismatch` rather than silently miscalibrating.

Note on symmetric kernels: the default ``gamma`` pairing is conservative in
practice because estimating the pair mean from the same sample damps the
statistic's null fluctuations (see README, "Calibration of symmetric
kernels"); a ``damped_bridge`` law gives calibrated symmetric tests.

``size_power_experiment`` replays the test over many synthetic samples to
measure empirical size (plus the KS distance of the statistic sample to the
law) under no-change scenarios, or power and changepoint-location accuracy
under single-change scenarios.  ``remainder_decay_curve`` measures how fast
the degenerate remainder of the projection decomposition dies relative to
the n^(3/2) scaling.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._rng import DOMAIN_DIAGNOSTIC, DOMAIN_SCENARIO, rep_stream, worker_count
from .distributions import Distribution
from .errors import BadParams, LawMismatch
from .kernels import (
    KERNEL_MOMENT_ORDER,
    PROCESS_DAMPED,
    Kernel,
    Symmetry,
    builtin_kernel,
    limit_process_name,
    remainder_kernel,
    with_projection,
)
from .limitsim import LimitLaw, p_value
from .uprocess import ProcessPath, studentized_path, z_path
from .weights import WeightFunction, parse_weight

_EXP_CHUNK = 128  # fixed experiment chunk size, independent of worker count


@dataclass(frozen=True)
class TestDecision:
    """Outcome of one changepoint test, with law provenance."""

    statistic: float
    p_value: float
    critical_value: float
    reject: bool
    k_hat: int
    t_hat: float
    n: int
    kernel_name: str
    weight_spec: str
    alpha: float
    law_process: str
    law_grid_size: int
    law_reps: int
    law_master_seed: int


def weighted_path_max(path: ProcessPath, weight: WeightFunction) -> tuple[float, int]:
    """Max of |values|/q over the jump grid and its (1-based) argmax cut.

    Ties resolve to the smallest cut index.
    """
    vals = np.abs(path.values) / weight(path.grid)
    k_hat = int(np.argmax(vals)) + 1
    return float(vals[k_hat - 1]), k_hat


def _check_law(law: LimitLaw, kernel: Kernel, weight: WeightFunction) -> None:
    expected = limit_process_name(kernel.symmetry)
    allowed = {expected}
    if kernel.symmetry is Symmetry.SYMMETRIC:
        allowed.add(PROCESS_DAMPED)
    if law.process not in allowed:
        raise LawMismatch(
            f"law simulates the {law.process!r} process but kernel "
            f"{kernel.name!r} ({kernel.symmetry.value}) needs {expected!r}"
        )
    if law.weight_spec != weight.spec:
        raise LawMismatch(
            f"law was built for weight {law.weight_spec!r}, test uses {weight.spec!r}"
        )


def run_test(sample, kernel: Kernel, weight: WeightFunction, alpha: float,
             law: LimitLaw) -> TestDecision:
    """Run the weighted changepoint test on one sample.

    ``alpha`` must lie in (0, 0.5]; the rejection rule compares the statistic
    with the law's (1 - alpha) quantile, and the add-one p-value agrees with
    it up to the 1/(reps + 1) granularity of the Monte Carlo law.
    """
    alpha = float(alpha)
    if not 0.0 < alpha <= 0.5:
        raise BadParams(f"alpha must be in (0, 0.5], got {alpha!r}")
    _check_law(law, kernel, weight)
    path = studentized_path(sample, kernel)
    statistic, k_hat = weighted_path_max(path, weight)
    critical = law.quantile(1.0 - alpha)
    return TestDecision(
        statistic=statistic,
        p_value=p_value(law, statistic),
        critical_value=critical,
        reject=bool(statistic > critical),
        k_hat=k_hat,
        t_hat=k_hat / (path.n + 1.0),
        n=path.n,
        kernel_name=kernel.name,
        weight_spec=weight.spec,
        alpha=alpha,
        law_process=law.process,
        law_grid_size=law.grid_size,
        law_reps=law.reps,
        law_master_seed=law.master_seed,
    )


def estimate_changepoint(decision: TestDecision) -> tuple[int, float]:
    """Changepoint location estimate: the maximizing cut and its fraction."""
    return decision.k_hat, decision.t_hat


def ks_two_sample(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.shape[0]
    fb = np.searchsorted(b, pooled, side="right") / b.shape[0]
    return float(np.max(np.abs(fa - fb)))


@dataclass(frozen=True)
class Scenario:
    """A synthetic data-generating scenario for calibration experiments.

    Under the null (``after is None``) each rep draws ``n`` observations
    from ``before``.  Under an alternative the first ``round(tau * n)``
    observations come from ``before`` and the rest from ``after``, where
    ``tau = change_fraction``.  Rep r's segments draw from streams keyed
    ``(master_seed, rep, segment)``, so experiments are reproducible and
    chunking-independent.
    """

    n: int
    before: Distribution
    after: Distribution | None = None
    change_fraction: float | None = None
    kernel_name: str = "sign_diff"
    weight_spec: str = "one"
    reps: int = 1000
    master_seed: int = 0

    def __post_init__(self):
        if self.n < 4:
            raise BadParams(f"scenario n must be >= 4, got {self.n!r}")
        if (self.after is None) != (self.change_fraction is None):
            raise BadParams(
                "after-distribution and change_fraction must be given together"
            )
        if self.change_fraction is not None:
            tau = self.change_fraction
            if not 0.0 < tau < 1.0:
                raise BadParams(
                    f"change_fraction must be in (0, 1), got {tau!r}"
                )
            # n - tau*n, not (1-tau)*n: the latter rounds 1-tau first and
            # can reject exact boundary cases like tau=0.8, n=10.
            if tau * self.n < 2.0 or self.n - tau * self.n < 2.0:
                raise BadParams(
                    "change_fraction must leave at least 2 observations on "
                    f"each side, got tau={tau!r} with n={self.n!r}"
                )
        if self.reps < 1:
            raise BadParams(f"scenario reps must be >= 1, got {self.reps!r}")
        builtin_kernel(self.kernel_name)  # raises UnknownKernel early
        parse_weight(self.weight_spec)

    @property
    def is_null(self) -> bool:
        return self.after is None

    @property
    def change_index(self) -> int | None:
        if self.after is None:
            return None
        m = int(round(self.change_fraction * self.n))
        return min(max(m, 1), self.n - 1)

    def sample_for_rep(self, rep_index: int) -> np.ndarray:
        if self.after is None:
            rng = rep_stream(self.master_seed, DOMAIN_SCENARIO, rep_index, 0)
            return self.before.sample(rng, self.n)
        m = self.change_index
        rng0 = rep_stream(self.master_seed, DOMAIN_SCENARIO, rep_index, 0)
        rng1 = rep_stream(self.master_seed, DOMAIN_SCENARIO, rep_index, 1)
        head = self.before.sample(rng0, m)
        tail = self.after.sample(rng1, self.n - m)
        return np.concatenate([head, tail])


def moment_condition_certified(kernel_name: str, *dists: Distribution) -> bool:
    """Whether the limit theorem's |h| moment condition is known to hold."""
    order = KERNEL_MOMENT_ORDER.get(kernel_name)
    if order is None:
        return False
    if order <= 0.0:
        return True
    return all(d.has_abs_moment(order) for d in dists)


def _scenario_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    scenario, lo, hi = args
    kernel = builtin_kernel(scenario.kernel_name)
    weight = parse_weight(scenario.weight_spec)
    stats = np.empty(hi - lo)
    k_hats = np.empty(hi - lo, dtype=np.int64)
    for r in range(lo, hi):
        path = studentized_path(scenario.sample_for_rep(r), kernel)
        stats[r - lo], k_hats[r - lo] = weighted_path_max(path, weight)
    return stats, k_hats


@dataclass(frozen=True)
class ExperimentReport:
    """Aggregated outcome of a size or power experiment."""

    scenario: Scenario
    alpha: float
    reject_rate: float
    ks_distance: float | None
    mean_abs_t_err: float | None
    median_abs_t_err: float | None
    moment_condition_certified: bool
    statistics: np.ndarray
    t_hats: np.ndarray
    law_process: str
    law_grid_size: int
    law_reps: int
    law_master_seed: int


def size_power_experiment(scenario: Scenario, alpha: float, law: LimitLaw,
                          workers: int | None = None) -> ExperimentReport:
    """Measure empirical size or power of the test over a scenario.

    No-change scenarios report the rejection rate and the KS distance of
    the statistic sample to the law's sup sample; single-change scenarios
    report the rejection rate (power) and the mean and median absolute
    error of the estimated change fraction.  Reps run in fixed chunks; the
    report is identical for every worker count.
    """
    alpha = float(alpha)
    if not 0.0 < alpha <= 0.5:
        raise BadParams(f"alpha must be in (0, 0.5], got {alpha!r}")
    if scenario.reps < 200:
        raise BadParams(
            f"experiments need at least 200 reps for a usable rate, "
            f"got {scenario.reps!r}"
        )
    kernel = builtin_kernel(scenario.kernel_name)
    weight = parse_weight(scenario.weight_spec)
    _check_law(law, kernel, weight)

    chunks = [(lo, min(lo + _EXP_CHUNK, scenario.reps))
              for lo in range(0, scenario.reps, _EXP_CHUNK)]
    args = [(scenario, lo, hi) for lo, hi in chunks]
    n_workers = worker_count(workers)
    if n_workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(_scenario_chunk, args))
    else:
        parts = [_scenario_chunk(a) for a in args]

    stats = np.concatenate([p[0] for p in parts])
    k_hats = np.concatenate([p[1] for p in parts])
    t_hats = k_hats / (scenario.n + 1.0)

    critical = law.quantile(1.0 - alpha)
    reject_rate = float(np.mean(stats > critical))

    ks = None
    mean_err = None
    median_err = None
    if scenario.is_null:
        if law.sorted_sups is not None:
            ks = ks_two_sample(stats, law.sorted_sups)
    else:
        err = np.abs(t_hats - scenario.change_fraction)
        mean_err = float(np.mean(err))
        median_err = float(np.median(err))

    dists = [scenario.before] + ([] if scenario.after is None else [scenario.after])
    return ExperimentReport(
        scenario=scenario,
        alpha=alpha,
        reject_rate=reject_rate,
        ks_distance=ks,
        mean_abs_t_err=mean_err,
        median_abs_t_err=median_err,
        moment_condition_certified=moment_condition_certified(
            scenario.kernel_name, *dists
        ),
        statistics=stats,
        t_hats=t_hats,
        law_process=law.process,
        law_grid_size=law.grid_size,
        law_reps=law.reps,
        law_master_seed=law.master_seed,
    )


def remainder_decay_curve(kernel: Kernel, dist: Distribution, n_values,
                          reps: int = 200, master_seed: int = 0) -> dict[int, float]:
    """Median scaled sup of the degenerate remainder path per sample size.

    For each n, draws ``reps`` samples from ``dist``, runs the split-sum
    recursion on the remainder of the kernel's projection decomposition,
    and records ``n^(-3/2) max_k |sum of remainders|``; the median should
    shrink as n grows (and is exactly zero when the kernel is linear, e.g.
    ``diff`` under a zero-mean scenario).
    """
    if reps < 1:
        raise BadParams(f"reps must be >= 1, got {reps!r}")
    kernel = with_projection(kernel, dist)
    remainder = remainder_kernel(kernel)
    out: dict[int, float] = {}
    for n in n_values:
        n = int(n)
        if n < 4:
            raise BadParams(f"n values must be >= 4, got {n!r}")
        vals = np.empty(reps)
        for r in range(reps):
            rng = rep_stream(master_seed, DOMAIN_DIAGNOSTIC, n, r)
            sample = dist.sample(rng, n)
            z = z_path(sample, remainder)
            vals[r] = n ** -1.5 * float(np.max(np.abs(z)))
        out[n] = float(np.median(vals))
    return out
