"""Scenario distributions with inverse-CDF sampling and moment metadata.

The experiment machinery only needs four families: ``normal(mu, sigma)``,
``uniform(a, b)``, ``student_t(df)`` and ``pareto_symmetric(index)`` (a
symmetric two-sided Pareto with density ``(index/2) |x|^(-index-1)`` on
``|x| >= 1``).  All sampling goes through the inverse CDF applied to open
uniforms so that draws are a pure function of the random stream.

Instances are frozen dataclasses holding only ``name`` and ``params``; they
pickle cheaply into worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri, stdtr, stdtrit

from ._rng import uniform_open
from .errors import BadParams

_FAMILIES = ("normal", "uniform", "student_t", "pareto_symmetric")


@dataclass(frozen=True)
class Distribution:
    """One scenario distribution, identified by family name and parameters."""

    name: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.name not in _FAMILIES:
            raise BadParams(f"unknown distribution {self.name!r}")
        p = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        if self.name == "normal":
            if len(p) != 2 or p[1] <= 0:
                raise BadParams("normal needs (mu, sigma) with sigma > 0")
        elif self.name == "uniform":
            if len(p) != 2 or p[0] >= p[1]:
                raise BadParams("uniform needs (a, b) with a < b")
        elif self.name == "student_t":
            if len(p) != 1 or p[0] <= 0:
                raise BadParams("student_t needs df > 0")
        elif self.name == "pareto_symmetric":
            if len(p) != 1 or p[0] <= 0:
                raise BadParams("pareto_symmetric needs index > 0")

    # -- identity ---------------------------------------------------------

    @property
    def spec(self) -> str:
        """Canonical parse-round-trippable string, e.g. ``normal:0,1``."""
        return f"{self.name}:{','.join(repr(v) for v in self.params)}"

    # -- moments ----------------------------------------------------------

    @property
    def mean(self) -> float:
        if self.name == "normal":
            return self.params[0]
        if self.name == "uniform":
            return 0.5 * (self.params[0] + self.params[1])
        if self.name == "student_t":
            return 0.0 if self.params[0] > 1 else math.nan
        return 0.0 if self.params[0] > 1 else math.nan

    @property
    def var(self) -> float:
        if self.name == "normal":
            return self.params[1] ** 2
        if self.name == "uniform":
            return (self.params[1] - self.params[0]) ** 2 / 12.0
        if self.name == "student_t":
            df = self.params[0]
            return df / (df - 2.0) if df > 2 else math.inf
        a = self.params[0]
        return a / (a - 2.0) if a > 2 else math.inf

    @property
    def central4(self) -> float:
        """Fourth central moment (inf when it does not exist)."""
        if self.name == "normal":
            return 3.0 * self.params[1] ** 4
        if self.name == "uniform":
            return (self.params[1] - self.params[0]) ** 4 / 80.0
        if self.name == "student_t":
            df = self.params[0]
            if df > 4:
                return 3.0 * df * df / ((df - 2.0) * (df - 4.0))
            return math.inf
        a = self.params[0]
        return a / (a - 4.0) if a > 4 else math.inf

    @property
    def continuous(self) -> bool:
        return True  # all four families have continuous CDFs

    def has_abs_moment(self, order: float) -> bool:
        """Whether E|X|^order is finite."""
        if order <= 0:
            return True
        if self.name in ("normal", "uniform"):
            return True
        return order < self.params[0]

    # -- functions ---------------------------------------------------------

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.name == "normal":
            mu, sigma = self.params
            return ndtr((x - mu) / sigma)
        if self.name == "uniform":
            a, b = self.params
            return np.clip((x - a) / (b - a), 0.0, 1.0)
        if self.name == "student_t":
            return stdtr(self.params[0], x)
        a = self.params[0]
        out = np.full_like(x, 0.5)
        hi = x >= 1.0
        lo = x <= -1.0
        out = np.where(hi, 1.0 - 0.5 * np.power(np.abs(np.where(hi, x, 1.0)), -a), out)
        out = np.where(lo, 0.5 * np.power(np.abs(np.where(lo, x, 1.0)), -a), out)
        return out

    def ppf(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.name == "normal":
            mu, sigma = self.params
            return mu + sigma * ndtri(u)
        if self.name == "uniform":
            a, b = self.params
            return a + (b - a) * u
        if self.name == "student_t":
            return stdtrit(self.params[0], u)
        a = self.params[0]
        lower = u < 0.5
        mag_lo = np.power(2.0 * np.where(lower, u, 0.25), -1.0 / a)
        mag_hi = np.power(2.0 * (1.0 - np.where(lower, 0.75, u)), -1.0 / a)
        return np.where(lower, -mag_lo, mag_hi)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Inverse-CDF draws from the given stream."""
        return self.ppf(uniform_open(rng, size))


def make_distribution(name: str, *params: float) -> Distribution:
    return Distribution(name, tuple(params))


def parse_distribution(spec: str) -> Distribution:
    """Parse ``family:p1,p2`` strings, e.g. ``normal:0,1`` or ``student_t:2``."""
    name, _, rest = spec.partition(":")
    name = name.strip()
    if not rest.strip():
        raise BadParams(f"distribution spec {spec!r} is missing parameters")
    try:
        params = tuple(float(tok) for tok in rest.split(","))
    except ValueError:
        raise BadParams(f"distribution spec {spec!r} has non-numeric parameters") from None
    return Distribution(name, params)
