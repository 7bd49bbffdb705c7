"""Exception types raised by the ucpd library.

Every error the library raises deliberately derives from :class:`UcpdError`,
so callers (and the CLI) can distinguish semantic failures from bugs.
"""

from __future__ import annotations


class UcpdError(Exception):
    """Base class for all ucpd errors."""


class UnknownKernel(UcpdError):
    """Requested kernel name is not a known builtin."""


class SampleTooSmall(UcpdError):
    """Sample has fewer than 4 observations."""


class DegenerateVariance(UcpdError):
    """Jackknife variance estimate is numerically zero."""


class NonpositiveSigma(UcpdError):
    """A supplied or derived scale parameter is not strictly positive."""


class MissingAnalyticProjection(UcpdError):
    """Kernel has no analytic projection for the requested scenario."""


class BadParams(UcpdError):
    """Invalid parameter or input value (weights, scenarios, samples, ...)."""


class BadGrid(UcpdError):
    """Simulation grid size is not a power of two >= 2."""


class LawMismatch(UcpdError):
    """Reference law does not match the kernel symmetry or weight."""


class ParseError(UcpdError):
    """A data or cache file failed to parse.

    Carries the 1-based line number and the offending content.
    """

    def __init__(self, line_no: int, content: str, reason: str = ""):
        self.line_no = line_no
        self.content = content
        self.reason = reason
        detail = f"line {line_no}: {content!r}"
        if reason:
            detail += f" ({reason})"
        super().__init__(detail)


class TooFewObservations(UcpdError):
    """Ingested file yielded fewer than 4 usable observations."""
