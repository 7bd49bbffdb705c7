"""Weight functions on (0, 1) and their integrability classification.

A weight ``q`` rescales a path before taking the sup, emphasizing or damping
the endpoints.  Which weights calibrate correctly is governed by the family
of integrals

    I(q, c) = integral over (0, 1) of exp(-c q(t)^2 / (t(1-t))) / (t(1-t)) dt

indexed by ``c > 0``: finiteness of ``I(q, c)`` for all, some, or no tested
``c`` separates usable weights from divergent ones.  :func:`classify`
estimates these integrals numerically over nested dyadic windows and returns
a per-``c`` verdict plus a summary.

Builtins (CLI spec strings in parentheses):

* ``constant_one`` (``one``): q(t) = 1
* ``power`` (``pow:NU``): q(t) = (t(1-t))^NU, NU > 0
* ``loglog`` (``loglog:LAM``): q(t) = sqrt(LAM * t(1-t) * loglog(e^e / t(1-t)))

The loglog family has the classical threshold behavior: I(q, c) is finite
exactly when c * LAM exceeds 1, which :func:`finite_threshold` estimates by
bisection on the classifier verdict.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import BadParams

_E_E = math.exp(1.0)  # exponent base constant: log(e^e / s) = e - log(s)

DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0)
MAX_LEVEL = 40  # windows reach down to 2^-MAX_LEVEL from both endpoints
_OVERFLOW_CAP = 1e12
_GEOMETRIC_RATIO = 0.95
_POLY_FINITE = 1.2
_POLY_DIVERGENT = 0.8


@dataclass(frozen=True)
class WeightFunction:
    """A positive weight on the open unit interval.

    ``monotone_zone`` is the declared delta such that q is nondecreasing on
    (0, delta] and nonincreasing on [1-delta, 1).
    """

    name: str
    params: tuple[float, ...]
    func: Callable[[np.ndarray], np.ndarray]
    monotone_zone: float = 0.1

    def __call__(self, t) -> np.ndarray:
        return self.func(np.asarray(t, dtype=float))

    @property
    def spec(self) -> str:
        if self.name == "constant_one":
            return "one"
        if self.name == "power":
            return f"pow:{self.params[0]!r}"
        if self.name == "loglog":
            return f"loglog:{self.params[0]!r}"
        return f"custom:{self.name}"


def _const_func(t):
    return np.ones_like(t)


def constant_one() -> WeightFunction:
    return WeightFunction("constant_one", (), _const_func, monotone_zone=0.5)


def power_weight(nu: float) -> WeightFunction:
    nu = float(nu)
    if not np.isfinite(nu) or nu <= 0.0:
        raise BadParams(f"power weight needs nu > 0, got {nu!r}")

    def func(t, nu=nu):
        return (t * (1.0 - t)) ** nu

    return WeightFunction("power", (nu,), func, monotone_zone=0.5)


def loglog_weight(lam: float) -> WeightFunction:
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0.0:
        raise BadParams(f"loglog weight needs lambda > 0, got {lam!r}")

    def func(t, lam=lam):
        s = t * (1.0 - t)
        # log(e^e / s) = e - log(s), evaluated in log space so tiny s
        # cannot overflow the quotient.
        return np.sqrt(lam * s * np.log(_E_E - np.log(s)))

    return WeightFunction("loglog", (lam,), func, monotone_zone=0.5)


def parse_weight(spec: str) -> WeightFunction:
    """Parse a CLI weight spec: ``one``, ``pow:NU`` or ``loglog:LAM``."""
    head, sep, rest = spec.strip().partition(":")
    if head == "one":
        if sep:
            raise BadParams("weight 'one' takes no parameter")
        return constant_one()
    if head in ("pow", "loglog"):
        if not rest:
            raise BadParams(f"weight {head!r} needs a numeric parameter")
        try:
            value = float(rest)
        except ValueError:
            raise BadParams(f"weight parameter {rest!r} is not numeric") from None
        return power_weight(value) if head == "pow" else loglog_weight(value)
    raise BadParams(f"unknown weight spec {spec!r}")


def builtin_weight(name: str, *params: float) -> WeightFunction:
    if name == "constant_one":
        return constant_one()
    if name == "power":
        return power_weight(*params)
    if name == "loglog":
        return loglog_weight(*params)
    raise BadParams(f"unknown builtin weight {name!r}")


# ---------------------------------------------------------------------------
# Integrability classification
# ---------------------------------------------------------------------------


class Verdict(enum.Enum):
    FINITE = "finite"
    DIVERGENT = "divergent"
    INCONCLUSIVE = "inconclusive"


class Summary(enum.Enum):
    FINITE_FOR_ALL_TESTED = "finite_for_all_tested"
    FINITE_FOR_SOME_NOT_ALL = "finite_for_some_not_all"
    DIVERGENT_FOR_ALL_TESTED = "divergent_for_all_tested"


@dataclass(frozen=True)
class WeightClassification:
    """Outcome of :func:`classify` for one weight over a grid of c values."""

    weight_spec: str
    c_values: tuple[float, ...]
    verdicts: tuple[Verdict, ...]
    raw_verdicts: tuple[Verdict, ...]
    summary: Summary
    integral_estimates: tuple[float, ...]
    window_increments: tuple[np.ndarray, ...]


def _exp_arg(weight, c, t):
    s = t * (1.0 - t)
    q = weight(t)
    return c * q * q / s


def _integrand_base(t, weight, c):
    s = t * (1.0 - t)
    with np.errstate(under="ignore"):
        return float(np.exp(-_exp_arg(weight, c, t)) / s)


def _integrand_log_lower(u, weight, c):
    t = math.exp(u)
    with np.errstate(under="ignore"):
        return float(np.exp(-_exp_arg(weight, c, t)) / (1.0 - t))


def _integrand_log_upper(v, weight, c):
    t = 1.0 - math.exp(v)
    with np.errstate(under="ignore"):
        return float(np.exp(-_exp_arg(weight, c, t)) / t)


def _quad(func, a, b, args):
    value = quad(func, a, b, args=args, epsabs=1e-12, epsrel=1e-10,
                 limit=200, full_output=1)[0]
    return value


def window_increments(weight: WeightFunction, c: float,
                      max_level: int = MAX_LEVEL) -> tuple[float, np.ndarray]:
    """Base integral over [1/4, 3/4] and per-level endpoint increments.

    Level m adds the two slivers [2^-m, 2^-(m-1)] and the mirror image at the
    upper endpoint, integrated after a log substitution so the integrand
    stays O(1).  Levels run m = 3..max_level.
    """
    base = _quad(_integrand_base, 0.25, 0.75, (weight, c))
    increments = np.empty(max_level - 2)
    ln2 = math.log(2.0)
    for i, m in enumerate(range(3, max_level + 1)):
        lo, hi = -m * ln2, -(m - 1) * ln2
        lower = _quad(_integrand_log_lower, lo, hi, (weight, c))
        upper = _quad(_integrand_log_upper, lo, hi, (weight, c))
        increments[i] = lower + upper
    return base, increments


def _verdict_for(base: float, inc: np.ndarray) -> tuple[Verdict, float]:
    """Classify one c from its window increments.

    Returns the verdict and an integral estimate (partial sum plus an
    extrapolated tail when finite, inf when divergent, nan otherwise).
    """
    partial = base + float(np.sum(inc))
    partials = base + np.cumsum(inc)
    if not np.all(np.isfinite(partials)) or np.any(partials > _OVERFLOW_CAP):
        return Verdict.DIVERGENT, math.inf

    last = inc[-5:]
    floor = 1e-15 * max(1.0, partial)
    if np.all(last <= floor):
        return Verdict.FINITE, partial

    prev = inc[-6:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(prev > 0, last / prev, np.where(last > 0, np.inf, 0.0))
    if np.all(ratios < _GEOMETRIC_RATIO):
        r = float(np.max(np.clip(ratios, 0.0, 0.9999)))
        tail = float(last[-1]) * r / (1.0 - r)
        return Verdict.FINITE, partial + tail
    if np.all(last >= prev * (1.0 - 1e-12)):
        return Verdict.DIVERGENT, math.inf

    # Polynomial tail test: window increments of the form m^(-p) are summable
    # exactly when p > 1.  Fit p on the last 10 strictly positive levels.
    k = min(10, inc.shape[0])
    tail_inc = inc[-k:]
    levels = np.arange(inc.shape[0] - k + 3, inc.shape[0] + 3, dtype=float)
    if np.any(tail_inc <= 0.0):
        return Verdict.INCONCLUSIVE, math.nan
    slope = np.polyfit(np.log(levels), np.log(tail_inc), 1)[0]
    p_hat = -float(slope)
    if p_hat >= _POLY_FINITE:
        m_last = levels[-1]
        tail = float(tail_inc[-1]) * m_last / (p_hat - 1.0)
        return Verdict.FINITE, partial + tail
    if p_hat <= _POLY_DIVERGENT:
        return Verdict.DIVERGENT, math.inf
    return Verdict.INCONCLUSIVE, math.nan


def classify(weight: WeightFunction,
             c_values: tuple[float, ...] = DEFAULT_C_GRID,
             max_level: int = MAX_LEVEL) -> WeightClassification:
    """Classify I(q, c) finiteness over an ascending grid of c values.

    Because the integrand is pointwise decreasing in c, finiteness at some c
    implies finiteness at every larger c; verdicts are monotonized that way
    after the per-c analysis (the raw verdicts stay available).  Inconclusive
    verdicts count as not-finite in the summary.
    """
    cs = tuple(float(c) for c in c_values)
    if not cs or any(not np.isfinite(c) or c <= 0 for c in cs):
        raise BadParams("c_values must be positive reals")
    if any(b <= a for a, b in zip(cs, cs[1:])):
        raise BadParams("c_values must be strictly increasing")
    if max_level < 10:
        raise BadParams("max_level must be at least 10")

    raw = []
    estimates = []
    increments = []
    for c in cs:
        base, inc = window_increments(weight, c, max_level)
        verdict, est = _verdict_for(base, inc)
        raw.append(verdict)
        estimates.append(est)
        increments.append(inc)

    verdicts = list(raw)
    seen_finite = False
    for i, v in enumerate(verdicts):
        if v is Verdict.FINITE:
            seen_finite = True
        elif seen_finite:
            verdicts[i] = Verdict.FINITE

    n_finite = sum(v is Verdict.FINITE for v in verdicts)
    if n_finite == len(verdicts):
        summary = Summary.FINITE_FOR_ALL_TESTED
    elif n_finite > 0:
        summary = Summary.FINITE_FOR_SOME_NOT_ALL
    else:
        summary = Summary.DIVERGENT_FOR_ALL_TESTED

    return WeightClassification(
        weight_spec=weight.spec,
        c_values=cs,
        verdicts=tuple(verdicts),
        raw_verdicts=tuple(raw),
        summary=summary,
        integral_estimates=tuple(estimates),
        window_increments=tuple(increments),
    )


def finite_threshold(weight: WeightFunction, c_lo: float = 0.05,
                     c_hi: float = 20.0, iterations: int = 30) -> float:
    """Bisect for the smallest c at which :func:`classify` certifies I(q, c).

    Requires not-finite at ``c_lo`` and finite at ``c_hi``.
    """

    def is_finite(c):
        report = classify(weight, (c,))
        return report.verdicts[0] is Verdict.FINITE

    lo, hi = float(c_lo), float(c_hi)
    if lo <= 0 or hi <= lo:
        raise BadParams("need 0 < c_lo < c_hi")
    if is_finite(lo):
        raise BadParams(f"I(q, c) already classifies finite at c_lo={lo!r}")
    if not is_finite(hi):
        raise BadParams(f"I(q, c) does not classify finite at c_hi={hi!r}")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if is_finite(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Endpoint decay check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EndpointDecayCheck:
    """Whether sqrt(t)/q(t) vanishes at 0 (and mirrored at 1)."""

    vanishes: bool
    vanishes_lower: bool
    vanishes_upper: bool
    levels: np.ndarray
    lower_ratios: np.ndarray
    upper_ratios: np.ndarray


def _side_vanishes(r: np.ndarray) -> bool:
    # Eventually nonincreasing over the last 10 steps ...
    tail = r[-11:]
    if np.any(tail[1:] > tail[:-1] * (1.0 + 1e-9)):
        return False
    if not (r[-1] < r[0]):
        return False
    # ... and either already negligible, or still decaying at a rate that
    # extrapolates to zero (guards weights whose decay is slower than any
    # power of t, like the loglog family).
    if r[-1] <= 0.01 * r[0]:
        return True
    if tail[0] <= 0.0:
        return False
    per_level = 1.0 - (tail[-1] / tail[0]) ** (1.0 / (tail.shape[0] - 1.0))
    return bool(per_level >= 1e-3)


def endpoint_decay_check(weight: WeightFunction, min_level: int = 4,
                         max_level: int = 50) -> EndpointDecayCheck:
    """Check that q dominates sqrt(t) near 0 and sqrt(1-t) near 1.

    Evaluates the ratio at dyadic points t = 2^-m (and mirrored) for
    m = min_level..max_level and decides whether it tends to zero.
    """
    if not (2 <= min_level < max_level <= 52):
        raise BadParams("levels must satisfy 2 <= min_level < max_level <= 52")
    levels = np.arange(min_level, max_level + 1)
    t = 0.5 ** levels.astype(float)
    root = np.sqrt(t)
    with np.errstate(divide="ignore"):
        lower = root / weight(t)
        upper = root / weight(1.0 - t)
    low_ok = bool(np.all(np.isfinite(lower))) and _side_vanishes(lower)
    up_ok = bool(np.all(np.isfinite(upper))) and _side_vanishes(upper)
    return EndpointDecayCheck(
        vanishes=low_ok and up_ok,
        vanishes_lower=low_ok,
        vanishes_upper=up_ok,
        levels=levels,
        lower_ratios=lower,
        upper_ratios=upper,
    )
