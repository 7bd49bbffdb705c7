"""Deterministic, splittable random streams.

Every Monte Carlo rep draws from its own counter-based Philox stream keyed by
``(master_seed, domain, rep_index, ...)`` through ``SeedSequence`` spawn keys.
Results are therefore independent of batching, chunking, and worker count.

Uniforms are generated as ``integers(1, 2**53) / 2**53`` (strictly inside
``(0, 1)``) and pushed through inverse CDFs, so no rejection-loop state is
involved and streams stay reproducible across platforms.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.special import ndtri

from .errors import BadParams

# Spawn-key domains, one per independent consumer of randomness.
DOMAIN_LIMIT_LAW = 1
DOMAIN_SCENARIO = 2
DOMAIN_DIAGNOSTIC = 3
DOMAIN_PROBE = 4

_TWO53 = 2**53
_INV_TWO53 = 2.0**-53

THREADS_ENV_VAR = "U_CPD_THREADS"


def rep_stream(master_seed: int, *key: int) -> np.random.Generator:
    """Return the Philox generator for one (domain, rep, ...) key."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(seed=ss))


def uniform_open(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform draws strictly inside (0, 1)."""
    return rng.integers(1, _TWO53, size=size) * _INV_TWO53


def standard_normals(rng: np.random.Generator, size) -> np.ndarray:
    """Standard normal draws via the inverse CDF."""
    return ndtri(uniform_open(rng, size))


def normal_ints(rng: np.random.Generator, size) -> np.ndarray:
    """Raw integer draws that :func:`ints_to_normals` maps to normals.

    Splitting the integer draw from the (vectorizable) inverse CDF lets
    batch code collect many reps' integers and run one big ``ndtri`` call
    while producing bit-identical values to the per-rep path.
    """
    return rng.integers(1, _TWO53, size=size)


def ints_to_normals(ints: np.ndarray) -> np.ndarray:
    return ndtri(ints * _INV_TWO53)


def worker_count(requested: int | None = None) -> int:
    """Resolve the worker count, honoring the U_CPD_THREADS cap.

    Workers only affect speed, never output; callers chunk work in fixed
    sizes and reassemble in rep order.
    """
    cap_raw = os.environ.get(THREADS_ENV_VAR)
    cap = None
    if cap_raw is not None:
        try:
            cap = max(1, int(cap_raw))
        except ValueError:
            raise BadParams(
                f"{THREADS_ENV_VAR} must be an integer, got {cap_raw!r}"
            ) from None
    if requested is None:
        requested = cap if cap is not None else 1
    requested = max(1, int(requested))
    if cap is not None:
        requested = min(requested, cap)
    return requested
