"""Pair kernels, their symmetry classes, and analytic projections.

A kernel is a vectorized function ``h(x, y)`` over sample pairs together
with a declared symmetry class: ``SYMMETRIC`` (``h(x, y) == h(y, x)``) or
``ANTISYMMETRIC`` (``h(x, y) == -h(y, x)``).  The symmetry class decides the
limit process of the cumulative pair-sum path, so it is part of a kernel's
identity and never inferred from data (``check_symmetry`` exists as an
explicit audit tool).

An :class:`AnalyticProjection` carries closed-form first-order quantities of
a kernel under a named scenario distribution: the pair mean
``E h(X1, X2)``, the centered conditional mean function
``g(t) = E h(X, t) - pair_mean``, and its variance ``E g(X)^2``.  Projections
power the standardized and projection paths, remainder diagnostics, and the
oracle scenarios of the verification suite.

Sign kernels use ``np.sign``, so exact ties contribute 0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from ._rng import DOMAIN_PROBE, rep_stream, uniform_open
from .distributions import Distribution
from .errors import MissingAnalyticProjection, UnknownKernel


class Symmetry(enum.Enum):
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"


# Limit-process tags: symmetric kernels contract to the two-sided mixture
# process ("gamma"), antisymmetric kernels to the Brownian bridge ("bridge").
# "damped_bridge" is (1-2t) times the bridge: the law the *studentized*
# statistic of a symmetric kernel actually follows, because centering with
# the estimated pair mean cancels half the signal and all of it at t = 1/2
# (see README, "Calibration of symmetric kernels").
PROCESS_GAMMA = "gamma"
PROCESS_BRIDGE = "bridge"
PROCESS_DAMPED = "damped_bridge"
PROCESS_NAMES = (PROCESS_GAMMA, PROCESS_BRIDGE, PROCESS_DAMPED)


def limit_process_name(symmetry: Symmetry) -> str:
    return PROCESS_GAMMA if symmetry is Symmetry.SYMMETRIC else PROCESS_BRIDGE


@dataclass(frozen=True)
class AnalyticProjection:
    """Closed-form projection data for a kernel under one scenario."""

    scenario: Distribution
    pair_mean: float
    centered_mean: Callable[[np.ndarray], np.ndarray]
    variance: float


@dataclass(frozen=True)
class Kernel:
    """A pair kernel with declared symmetry and optional projection."""

    name: str
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    symmetry: Symmetry
    projection: AnalyticProjection | None = None

    def __call__(self, x, y) -> np.ndarray:
        return self.func(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    @property
    def sign(self) -> float:
        """+1 for symmetric kernels, -1 for antisymmetric ones."""
        return 1.0 if self.symmetry is Symmetry.SYMMETRIC else -1.0


def _product(x, y):
    return x * y


def _half_sq_diff(x, y):
    d = x - y
    return 0.5 * d * d


def _abs_diff(x, y):
    return np.abs(x - y)


def _sign_sum(x, y):
    return np.sign(x + y)


def _diff(x, y):
    return x - y


def _sign_diff(x, y):
    return np.sign(x - y)


_BUILTINS: dict[str, tuple[Callable, Symmetry]] = {
    "product": (_product, Symmetry.SYMMETRIC),
    "half_sq_diff": (_half_sq_diff, Symmetry.SYMMETRIC),
    "abs_diff": (_abs_diff, Symmetry.SYMMETRIC),
    "sign_sum": (_sign_sum, Symmetry.SYMMETRIC),
    "diff": (_diff, Symmetry.ANTISYMMETRIC),
    "sign_diff": (_sign_diff, Symmetry.ANTISYMMETRIC),
}

# Kernels whose builtin form ships with a projection under a fixed scenario.
_DEFAULT_SCENARIOS = {
    "product": Distribution("normal", (1.0, 1.0)),
    "half_sq_diff": Distribution("normal", (0.0, 1.0)),
}

# Absolute moment order of X required for the relevant limit theorem to be
# certified: |h|^(4/3) integrable for symmetric kernels, |h|^(5/3) for the
# antisymmetric heavy-tail theorem; bounded kernels need nothing.
KERNEL_MOMENT_ORDER: dict[str, float] = {
    "product": 4.0 / 3.0,
    "half_sq_diff": 8.0 / 3.0,
    "abs_diff": 4.0 / 3.0,
    "sign_sum": 0.0,
    "diff": 5.0 / 3.0,
    "sign_diff": 0.0,
}


def available_kernels() -> tuple[str, ...]:
    return tuple(_BUILTINS)


def builtin_kernel(name: str) -> Kernel:
    """Return a builtin kernel by name.

    ``product`` and ``half_sq_diff`` come with their standard-scenario
    projections attached; use :func:`with_projection` to attach projections
    for other kernels or scenarios.
    """
    try:
        func, symmetry = _BUILTINS[name]
    except KeyError:
        known = ", ".join(sorted(_BUILTINS))
        raise UnknownKernel(f"unknown kernel {name!r} (builtins: {known})") from None
    kernel = Kernel(name, func, symmetry)
    scenario = _DEFAULT_SCENARIOS.get(name)
    if scenario is not None:
        kernel = with_projection(kernel, scenario)
    return kernel


def with_projection(kernel: Kernel, dist: Distribution) -> Kernel:
    """Attach the analytic projection of a builtin kernel under ``dist``.

    Raises :class:`MissingAnalyticProjection` when no closed form is known
    for the kernel/distribution pair or the needed moments do not exist.
    """
    name = kernel.name
    if name == "product":
        mu, var = dist.mean, dist.var
        if not (np.isfinite(mu) and np.isfinite(var)) or mu == 0.0:
            raise MissingAnalyticProjection(
                "product projection needs a finite nonzero mean and finite variance"
            )
        proj = AnalyticProjection(
            scenario=dist,
            pair_mean=mu * mu,
            centered_mean=lambda t, mu=mu: mu * t - mu * mu,
            variance=mu * mu * var,
        )
    elif name == "half_sq_diff":
        mu, var, c4 = dist.mean, dist.var, dist.central4
        if not (np.isfinite(mu) and np.isfinite(var) and np.isfinite(c4)):
            raise MissingAnalyticProjection(
                "half_sq_diff projection needs finite fourth moments"
            )
        proj = AnalyticProjection(
            scenario=dist,
            pair_mean=var,
            centered_mean=lambda t, mu=mu, var=var: 0.5 * ((t - mu) ** 2 - var),
            variance=0.25 * (c4 - var * var),
        )
    elif name == "diff":
        mu, var = dist.mean, dist.var
        if not (np.isfinite(mu) and np.isfinite(var)):
            raise MissingAnalyticProjection(
                "diff projection needs a finite mean and variance"
            )
        proj = AnalyticProjection(
            scenario=dist,
            pair_mean=0.0,
            centered_mean=lambda t, mu=mu: mu - t,
            variance=var,
        )
    elif name == "sign_diff":
        if not dist.continuous:
            raise MissingAnalyticProjection(
                "sign_diff projection needs a continuous distribution"
            )
        proj = AnalyticProjection(
            scenario=dist,
            pair_mean=0.0,
            centered_mean=lambda t, dist=dist: 1.0 - 2.0 * dist.cdf(t),
            variance=1.0 / 3.0,
        )
    else:
        raise MissingAnalyticProjection(f"no analytic projection for kernel {name!r}")
    return replace(kernel, projection=proj)


def remainder_kernel(kernel: Kernel) -> Kernel:
    """Return the degenerate remainder of the kernel's projection.

    For a symmetric kernel this is ``(h(x, y) - pair_mean) - (g(x) + g(y))``;
    for an antisymmetric kernel ``h(x, y) - (g(y) - g(x))``.  Both conditional
    means of the remainder vanish under the projection's scenario.

    The antisymmetric grouping subtracts two identically rounded float
    expressions when ``h`` is itself linear in ``x - y`` under a zero-mean
    scenario, so the remainder is then exactly zero pairwise.
    """
    proj = kernel.projection
    if proj is None:
        raise MissingAnalyticProjection(
            f"kernel {kernel.name!r} carries no analytic projection"
        )
    h = kernel.func
    g = proj.centered_mean
    if kernel.symmetry is Symmetry.SYMMETRIC:
        mean = proj.pair_mean

        def func(x, y, h=h, g=g, mean=mean):
            return (h(x, y) - mean) - (g(x) + g(y))

    else:

        def func(x, y, h=h, g=g):
            return h(x, y) - (g(y) - g(x))

    return Kernel(
        name=f"{kernel.name}_remainder",
        func=func,
        symmetry=kernel.symmetry,
        projection=None,
    )


@dataclass(frozen=True)
class SymmetryCheck:
    consistent: bool
    worst_violation: float


def check_symmetry(kernel: Kernel, probes: int = 200, rng_seed: int = 0) -> SymmetryCheck:
    """Probe ``h(x, y) -/+ h(y, x)`` on random pairs against the declared class.

    Pairs are drawn uniformly from [-3, 3]^2; the verdict compares the worst
    violation against ``1e-12 * max(1, max |h|)`` over the probe set.
    """
    rng = rep_stream(rng_seed, DOMAIN_PROBE, 0)
    x = -3.0 + 6.0 * uniform_open(rng, probes)
    y = -3.0 + 6.0 * uniform_open(rng, probes)
    hxy = kernel(x, y)
    hyx = kernel(y, x)
    violation = np.abs(hxy - kernel.sign * hyx)
    worst = float(np.max(violation)) if probes else 0.0
    scale = max(1.0, float(np.max(np.abs(hxy))) if probes else 0.0)
    return SymmetryCheck(consistent=worst <= 1e-12 * scale, worst_violation=worst)
