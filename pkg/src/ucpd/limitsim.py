"""Monte Carlo reference laws for weighted sup statistics.

Limit processes are built from Wiener paths on dyadic grids ``t_j = j/G``:

* ``gamma``:  (1-t) W(t) + t (W(1) - W(t)),  the known-mean symmetric limit;
* ``bridge``: W(t) - t W(1),                 the antisymmetric-kernel limit;
* ``damped_bridge``: (1-2t) (W(t) - t W(1)), the estimated-mean symmetric
  limit (what the studentized statistic of a symmetric kernel converges to).

The first two have variance t(1-t); the damped bridge has variance
t(1-t)(1-2t)^2, pinned to zero at t = 1/2.  A :class:`LimitLaw` stores
the sorted weighted sups of many simulated paths plus a small quantile
table; p-values use the add-one convention ``(1 + #{sup >= observed}) /
(reps + 1)``.

Every rep draws from its own counter-based stream keyed by
``(master_seed, rep_index)``, so results are identical no matter how reps
are batched or spread over worker processes.  Workers only affect speed.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._rng import DOMAIN_LIMIT_LAW, ints_to_normals, normal_ints, rep_stream, worker_count
from .errors import BadGrid, BadParams
from .kernels import PROCESS_BRIDGE, PROCESS_DAMPED, PROCESS_GAMMA, PROCESS_NAMES
from .weights import WeightFunction, parse_weight

QUANTILE_LEVELS = (0.80, 0.90, 0.95, 0.975, 0.99)

_CHUNK = 4096  # fixed chunk size, independent of worker count
_SUB_BATCH = 256  # reps vectorized together inside a chunk


def _validate_grid(grid_size: int) -> int:
    g = int(grid_size)
    if g < 2 or (g & (g - 1)) != 0:
        raise BadGrid(f"grid_size must be a power of two >= 2, got {grid_size!r}")
    return g


def _validate_process(process: str) -> str:
    if process not in PROCESS_NAMES:
        raise BadParams(f"process must be one of {PROCESS_NAMES}, got {process!r}")
    return process


def simulate_wiener(grid_size: int, master_seed: int, rep_index: int = 0) -> np.ndarray:
    """One Wiener path on {j/G : j = 0..G} from the rep's own stream."""
    g = _validate_grid(grid_size)
    rng = rep_stream(master_seed, DOMAIN_LIMIT_LAW, rep_index)
    z = ints_to_normals(normal_ints(rng, g)) * math.sqrt(1.0 / g)
    path = np.empty(g + 1)
    path[0] = 0.0
    np.cumsum(z, out=path[1:])
    return path


def _gamma_values(w: np.ndarray, t: np.ndarray) -> np.ndarray:
    last = w[..., -1:]
    return (1.0 - t) * w + t * (last - w)


def _bridge_values(w: np.ndarray, t: np.ndarray) -> np.ndarray:
    last = w[..., -1:]
    return w - t * last


def _damped_values(w: np.ndarray, t: np.ndarray) -> np.ndarray:
    return (1.0 - 2.0 * t) * _bridge_values(w, t)


def gamma_path(wiener: np.ndarray) -> np.ndarray:
    """Transform Wiener paths (last axis = grid) to the known-mean limit."""
    g = wiener.shape[-1] - 1
    t = np.arange(g + 1) / g
    return _gamma_values(wiener, t)


def bridge_path(wiener: np.ndarray) -> np.ndarray:
    """Transform Wiener paths (last axis = grid) to the Brownian bridge."""
    g = wiener.shape[-1] - 1
    t = np.arange(g + 1) / g
    return _bridge_values(wiener, t)


def damped_bridge_path(wiener: np.ndarray) -> np.ndarray:
    """Transform Wiener paths (last axis = grid) to the damped bridge.

    ``(1-2t)(W(t) - t W(1))``: the null limit of the studentized statistic
    for a symmetric kernel, where estimating the pair mean from the same
    sample shrinks the bridge by ``1-2t``.
    """
    g = wiener.shape[-1] - 1
    t = np.arange(g + 1) / g
    return _damped_values(wiener, t)


def weighted_sup(path: np.ndarray, weight: WeightFunction) -> float | np.ndarray:
    """sup over interior grid points of |path| / q(t).

    ``path`` holds values on the full grid {j/G : j = 0..G} along the last
    axis; the endpoints (where limit paths are pinned to zero and q may
    vanish) are excluded.
    """
    g = path.shape[-1] - 1
    if g < 2:
        raise BadGrid("path must cover a grid with at least one interior point")
    t = np.arange(1, g) / g
    vals = np.abs(path[..., 1:g]) / weight(t)
    out = np.max(vals, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def _chunk_sups(process: str, weight: WeightFunction, grid_size: int,
                master_seed: int, lo: int, hi: int) -> np.ndarray:
    """Weighted sups for reps lo..hi-1 (vectorized in sub-batches)."""
    g = grid_size
    scale = math.sqrt(1.0 / g)
    t_interior = np.arange(1, g) / g
    q = weight(t_interior)
    sups = np.empty(hi - lo)
    for start in range(lo, hi, _SUB_BATCH):
        stop = min(start + _SUB_BATCH, hi)
        m = stop - start
        ints = np.empty((m, g), dtype=np.int64)
        for r in range(m):
            rng = rep_stream(master_seed, DOMAIN_LIMIT_LAW, start + r)
            ints[r] = normal_ints(rng, g)
        w = np.cumsum(ints_to_normals(ints) * scale, axis=1)
        interior = w[:, : g - 1]
        last = w[:, g - 1 : g]
        if process == PROCESS_GAMMA:
            vals = (1.0 - t_interior) * interior + t_interior * (last - interior)
        else:
            vals = interior - t_interior * last
            if process == PROCESS_DAMPED:
                vals = (1.0 - 2.0 * t_interior) * vals
        sups[start - lo : stop - lo] = np.max(np.abs(vals) / q, axis=1)
    return sups


def _chunk_sups_by_spec(args) -> np.ndarray:
    process, weight_spec, grid_size, master_seed, lo, hi = args
    return _chunk_sups(process, parse_weight(weight_spec), grid_size,
                       master_seed, lo, hi)


@dataclass(frozen=True)
class LimitLaw:
    """Simulated reference law of a weighted sup statistic."""

    process: str
    weight_spec: str
    grid_size: int
    reps: int
    master_seed: int
    sorted_sups: np.ndarray | None
    quantile_table: dict[float, float]

    @property
    def low_reps(self) -> bool:
        """Flagged when the law rests on fewer than 1000 reps."""
        return self.reps < 1000

    def quantile(self, level: float) -> float:
        """Type-7 (linear interpolation) quantile of the sup sample."""
        if not 0.0 < level < 1.0:
            raise BadParams(f"quantile level must be in (0, 1), got {level!r}")
        if self.sorted_sups is not None:
            return float(np.quantile(self.sorted_sups, level))
        for k, v in self.quantile_table.items():
            if abs(k - level) <= 1e-12:
                return v
        supported = sorted(self.quantile_table)
        raise BadParams(
            f"law has no sup samples; supported quantile levels are {supported}"
        )


def build_limit_law(process: str, weight: WeightFunction, grid_size: int,
                    reps: int, master_seed: int,
                    workers: int | None = None) -> LimitLaw:
    """Simulate the law of the weighted sup under the given limit process.

    Reps are processed in fixed chunks whose per-rep streams depend only on
    ``(master_seed, rep_index)``; output is byte-identical for any worker
    count.  Weights that round-trip through their spec string may be farmed
    out to worker processes; custom weights run serially.
    """
    process = _validate_process(process)
    g = _validate_grid(grid_size)
    reps = int(reps)
    if reps < 1:
        raise BadParams(f"reps must be >= 1, got {reps!r}")

    chunks = [(lo, min(lo + _CHUNK, reps)) for lo in range(0, reps, _CHUNK)]
    n_workers = worker_count(workers)
    parseable = True
    try:
        parse_weight(weight.spec)
    except BadParams:
        parseable = False

    if n_workers > 1 and parseable and len(chunks) > 1:
        args = [(process, weight.spec, g, master_seed, lo, hi) for lo, hi in chunks]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(_chunk_sups_by_spec, args))
    else:
        parts = [_chunk_sups(process, weight, g, master_seed, lo, hi)
                 for lo, hi in chunks]

    sups = np.sort(np.concatenate(parts))
    table = {lvl: float(np.quantile(sups, lvl)) for lvl in QUANTILE_LEVELS}
    return LimitLaw(
        process=process,
        weight_spec=weight.spec,
        grid_size=g,
        reps=reps,
        master_seed=int(master_seed),
        sorted_sups=sups,
        quantile_table=table,
    )


def p_value(law: LimitLaw, observed: float) -> float:
    """Add-one Monte Carlo p-value of an observed statistic under the law.

    With sup samples available this is ``(1 + #{sup >= observed}) /
    (reps + 1)``.  A quantile-table-only law yields the coarse step bound
    ``1 - max{level : quantile(level) < observed}`` instead.
    """
    obs = float(observed)
    if not np.isfinite(obs):
        raise BadParams(f"observed statistic must be finite, got {observed!r}")
    if law.sorted_sups is not None:
        count_ge = law.reps - int(np.searchsorted(law.sorted_sups, obs, side="left"))
        return (1.0 + count_ge) / (law.reps + 1.0)
    level = 0.0
    for k in sorted(law.quantile_table):
        if law.quantile_table[k] < obs:
            level = k
    return 1.0 - level
