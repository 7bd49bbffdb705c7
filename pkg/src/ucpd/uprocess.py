"""Cumulative pair-sum paths and their studentized versions.

For a sample ``x_1..x_n`` and kernel ``h``, the split statistic at cut ``k``
is ``Z_k = sum_{i<=k} sum_{j>k} h(x_i, x_j)``, computed for every cut
``k = 1..n-1`` by the incremental recursion

    Z_{k+1} = Z_k + sum_{j>k+1} h(x_{k+1}, x_j) - sum_{i<=k} h(x_i, x_{k+1})

with pairwise-accumulated row sums, for a total of O(n^2) kernel
evaluations and a deterministic, fixed summation order.

Paths live on the jump grid ``t_k = k/(n+1)``.  The studentized path centers
``Z_k`` at ``n^2 t(1-t)`` times the estimated pair mean and scales by
``n^(3/2)`` times the jackknife standard deviation; the standardized and
projection paths use supplied or analytic first-order quantities instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadParams,
    DegenerateVariance,
    MissingAnalyticProjection,
    NonpositiveSigma,
    SampleTooSmall,
)
from .kernels import Kernel, Symmetry, limit_process_name

# Above this sample size the full n-by-n kernel matrix is not materialized;
# rows are evaluated on the fly (identical values, lower memory).
MATRIX_LIMIT = 4096

VARIANCE_FLOOR = 1e-300


def as_sample(x) -> np.ndarray:
    """Validate and return a sample as a float64 1-d array.

    Accepts any 1-d array-like (or an (n, 1) column, which is flattened).
    Requires at least 4 finite observations.
    """
    s = np.asarray(x, dtype=float)
    if s.ndim == 2 and s.shape[1] == 1:
        s = s[:, 0]
    if s.ndim != 1:
        raise BadParams(f"sample must be one-dimensional, got shape {s.shape}")
    if s.shape[0] < 4:
        raise SampleTooSmall(f"need at least 4 observations, got {s.shape[0]}")
    if not np.all(np.isfinite(s)):
        raise BadParams("sample entries must be finite")
    return s


def jump_grid(n: int) -> np.ndarray:
    """Interior evaluation grid t_k = k/(n+1), k = 1..n-1."""
    return np.arange(1, n) / (n + 1.0)


def pair_matrix(sample: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Full kernel matrix H[i, j] = h(x_i, x_j)."""
    x = np.asarray(sample, dtype=float)
    return kernel.func(x[:, None], x[None, :])


def z_path(sample, kernel: Kernel) -> np.ndarray:
    """Split statistics Z_1..Z_{n-1} via the incremental recursion."""
    x = as_sample(sample)
    n = x.shape[0]
    z = np.empty(n - 1)
    if n <= MATRIX_LIMIT:
        h = pair_matrix(x, kernel)
        acc = float(np.sum(h[0, 1:]))
        z[0] = acc
        for k in range(1, n - 1):
            acc += float(np.sum(h[k, k + 1 :])) - float(np.sum(h[:k, k]))
            z[k] = acc
    else:
        acc = float(np.sum(kernel.func(x[0], x[1:])))
        z[0] = acc
        for k in range(1, n - 1):
            acc += float(np.sum(kernel.func(x[k], x[k + 1 :])))
            acc -= float(np.sum(kernel.func(x[:k], x[k])))
            z[k] = acc
    return z


@dataclass(frozen=True)
class Estimates:
    """Full-sample estimates of the kernel's first-order quantities.

    ``pair_mean`` is the mean of ``h`` over all ordered pairs ``i != j``
    (exactly 0.0 for antisymmetric kernels); ``row_means[j]`` averages
    ``h(x_i, x_j)`` over ``i != j``; ``jackknife_variance`` is the average
    squared deviation of the row means around the pair mean.
    """

    pair_mean: float
    jackknife_variance: float
    row_means: np.ndarray


def estimate(sample, kernel: Kernel) -> Estimates:
    """Estimate pair mean and jackknife variance from one sample.

    Raises :class:`DegenerateVariance` when the jackknife variance falls at
    or below the representable floor (for example on a constant sample).
    """
    x = as_sample(sample)
    n = x.shape[0]
    if n <= MATRIX_LIMIT:
        h = pair_matrix(x, kernel)
        col_sums = h.sum(axis=0) - np.diagonal(h)
    else:
        col_sums = np.empty(n)
        for j in range(n):
            col = kernel.func(x, x[j])
            col_sums[j] = np.sum(col) - col[j]
    row_means = col_sums / (n - 1.0)
    if kernel.symmetry is Symmetry.ANTISYMMETRIC:
        pair_mean = 0.0
    else:
        pair_mean = float(np.sum(col_sums) / (n * (n - 1.0)))
    dev = row_means - pair_mean
    jackknife_variance = float(np.mean(dev * dev))
    if jackknife_variance <= VARIANCE_FLOOR:
        raise DegenerateVariance(
            f"jackknife variance {jackknife_variance!r} is numerically zero"
        )
    return Estimates(pair_mean, jackknife_variance, row_means)


@dataclass(frozen=True)
class ProcessPath:
    """A centered and scaled path on the jump grid.

    ``mode`` records how the path was normalized (``studentized``,
    ``standardized`` or ``projection``); ``limit`` names the limit process
    implied by the kernel symmetry (``gamma`` or ``bridge``).
    """

    grid: np.ndarray
    values: np.ndarray
    n: int
    kernel_name: str
    mode: str
    limit: str


def _centered_scaled(z, n, pair_mean, sigma, grid):
    drift = (n * n) * grid * (1.0 - grid) * pair_mean
    return (z - drift) * (n ** -1.5 / sigma)


def studentized_path(sample, kernel: Kernel) -> ProcessPath:
    """Path centered and scaled with the sample's own estimates."""
    x = as_sample(sample)
    n = x.shape[0]
    est = estimate(x, kernel)
    z = z_path(x, kernel)
    grid = jump_grid(n)
    sigma = float(np.sqrt(est.jackknife_variance))
    values = _centered_scaled(z, n, est.pair_mean, sigma, grid)
    return ProcessPath(
        grid=grid,
        values=values,
        n=n,
        kernel_name=kernel.name,
        mode="studentized",
        limit=limit_process_name(kernel.symmetry),
    )


def standardized_path(sample, kernel: Kernel, pair_mean: float, sigma: float) -> ProcessPath:
    """Path centered and scaled with externally supplied truth values."""
    x = as_sample(sample)
    n = x.shape[0]
    if not np.isfinite(sigma) or sigma <= 0.0:
        raise NonpositiveSigma(f"sigma must be a positive real, got {sigma!r}")
    if not np.isfinite(pair_mean):
        raise BadParams(f"pair_mean must be finite, got {pair_mean!r}")
    z = z_path(x, kernel)
    grid = jump_grid(n)
    values = _centered_scaled(z, n, pair_mean, sigma, grid)
    return ProcessPath(
        grid=grid,
        values=values,
        n=n,
        kernel_name=kernel.name,
        mode="standardized",
        limit=limit_process_name(kernel.symmetry),
    )


def projection_path(sample, kernel: Kernel) -> ProcessPath:
    """First-order projection of the centered path.

    Uses the kernel's analytic projection ``g``: with ``G_k`` the prefix sums
    of ``g(x)``, the projection at cut ``k`` is
    ``(n-k) G_k + k (G_n - G_k)`` for symmetric kernels and
    ``-(n-k) G_k + k (G_n - G_k)`` for antisymmetric ones, scaled like the
    standardized path.  The sign convention is the one under which the split
    statistic decomposes exactly as projection plus degenerate remainder.
    """
    x = as_sample(sample)
    n = x.shape[0]
    proj = kernel.projection
    if proj is None:
        raise MissingAnalyticProjection(
            f"kernel {kernel.name!r} carries no analytic projection"
        )
    if not np.isfinite(proj.variance) or proj.variance <= 0.0:
        raise NonpositiveSigma(
            f"projection variance must be positive, got {proj.variance!r}"
        )
    g = np.asarray(proj.centered_mean(x), dtype=float)
    total = float(np.sum(g))
    prefix = np.cumsum(g)[:-1]
    k = np.arange(1, n, dtype=float)
    lead = (n - k) * prefix
    if kernel.symmetry is Symmetry.ANTISYMMETRIC:
        lead = -lead
    w = lead + k * (total - prefix)
    sigma = float(np.sqrt(proj.variance))
    values = w * (n ** -1.5 / sigma)
    return ProcessPath(
        grid=jump_grid(n),
        values=values,
        n=n,
        kernel_name=kernel.name,
        mode="projection",
        limit=limit_process_name(kernel.symmetry),
    )
