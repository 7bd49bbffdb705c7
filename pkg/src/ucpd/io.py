"""File formats: sample ingestion, law caches, and result records.

Everything here is deliberately line-oriented text.  Floats are written
with ``repr`` so every round trip is bit-exact, and nothing
time-dependent is ever written, so re-running a seeded command produces
byte-identical files.
"""

from __future__ import annotations

import json
import math
from typing import IO, Iterable, Sequence

import numpy as np

from .detector import ExperimentReport, Scenario, TestDecision
from .errors import BadParams, ParseError, TooFewObservations
from .limitsim import LimitLaw
from .uprocess import ProcessPath
from .weights import EndpointDecayCheck, WeightClassification, WeightFunction

FORMAT_CSV = "csv"
FORMAT_JSONL = "jsonl"
SAMPLE_FORMATS = (FORMAT_CSV, FORMAT_JSONL)

MIN_OBSERVATIONS = 4

_CACHE_MAGIC = "ucpd-law-cache"
_TRUE, _FALSE = "true", "false"
_MISSING = "-"


# ---------------------------------------------------------------------------
# sample ingestion
# ---------------------------------------------------------------------------

def _parse_csv_line(line_no: int, line: str) -> float:
    try:
        return float(line)
    except ValueError:
        raise ParseError(line_no, line, "not a number") from None


def _parse_jsonl_line(line_no: int, line: str, field: str) -> float:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(line_no, line, f"invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict) or field not in obj:
        raise ParseError(line_no, line, f"missing field {field!r}")
    value = obj[field]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(line_no, line, f"field {field!r} is not numeric")
    return float(value)


def read_sample(path: str, fmt: str = FORMAT_CSV, field: str = "x") -> np.ndarray:
    """Read one observation per line, in file order.

    Blank lines are skipped; any other malformed line raises
    :class:`ParseError` carrying its 1-based line number.  Order is
    preserved exactly — the downstream statistic compares prefix against
    suffix, so the file's row order is the time order.
    """
    if fmt not in SAMPLE_FORMATS:
        raise BadParams(f"unknown sample format {fmt!r}; expected one of {SAMPLE_FORMATS}")
    values: list[float] = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            if fmt == FORMAT_CSV:
                values.append(_parse_csv_line(line_no, line))
            else:
                values.append(_parse_jsonl_line(line_no, line, field))
    if len(values) < MIN_OBSERVATIONS:
        raise TooFewObservations(
            f"{path}: found {len(values)} usable observations; need at least {MIN_OBSERVATIONS}"
        )
    return np.asarray(values, dtype=np.float64)


def write_sample(path: str, sample: Sequence[float], fmt: str = FORMAT_CSV,
                 field: str = "x") -> None:
    """Write one observation per line; ``read_sample`` inverts it exactly."""
    if fmt not in SAMPLE_FORMATS:
        raise BadParams(f"unknown sample format {fmt!r}; expected one of {SAMPLE_FORMATS}")
    with open(path, "w", encoding="utf-8") as handle:
        for value in np.asarray(sample, dtype=np.float64):
            if fmt == FORMAT_CSV:
                handle.write(f"{float(value)!r}\n")
            else:
                handle.write(json.dumps({field: float(value)}) + "\n")


# ---------------------------------------------------------------------------
# law cache
# ---------------------------------------------------------------------------

def write_law_cache(path: str, law: LimitLaw, include_sups: bool = True) -> None:
    """Write a reference law to a self-describing text cache.

    The file is key-value header lines followed by the quantile table and
    (optionally) the full sorted sup sample.  Identical laws always produce
    byte-identical files.
    """
    lines = [
        _CACHE_MAGIC,
        "format_version 1",
        f"process {law.process}",
        f"weight {law.weight_spec}",
        f"grid_size {law.grid_size}",
        f"reps {law.reps}",
        f"master_seed {law.master_seed}",
        f"low_reps {_TRUE if law.low_reps else _FALSE}",
        f"quantiles {len(law.quantile_table)}",
    ]
    for level in sorted(law.quantile_table):
        lines.append(f"{float(level)!r} {float(law.quantile_table[level])!r}")
    sups = law.sorted_sups if include_sups else None
    if sups is None:
        lines.append("sups 0")
    else:
        lines.append(f"sups {len(sups)}")
        lines.extend(f"{float(value)!r}" for value in sups)
    lines.append("end")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


class _LineReader:
    """Sequential line access that reports 1-based positions in errors."""

    def __init__(self, handle: IO[str]):
        self._lines = handle.read().split("\n")
        if self._lines and self._lines[-1] == "":
            self._lines.pop()
        self.pos = 0

    def next(self, expect: str | None = None) -> str:
        if self.pos >= len(self._lines):
            raise ParseError(self.pos + 1, "", "unexpected end of file")
        line = self._lines[self.pos]
        self.pos += 1
        if expect is not None and line != expect:
            raise ParseError(self.pos, line, f"expected {expect!r}")
        return line

    def next_field(self, key: str) -> str:
        line = self.next()
        parts = line.split(" ", 1)
        if len(parts) != 2 or parts[0] != key:
            raise ParseError(self.pos, line, f"expected field {key!r}")
        return parts[1]

    def fail(self, reason: str) -> ParseError:
        line = self._lines[self.pos - 1] if 0 < self.pos <= len(self._lines) else ""
        return ParseError(self.pos, line, reason)


def read_law_cache(path: str) -> LimitLaw:
    """Read a cache written by :func:`write_law_cache`, validating as it goes."""
    with open(path, "r", encoding="utf-8") as handle:
        reader = _LineReader(handle)
    reader.next(expect=_CACHE_MAGIC)
    version = reader.next_field("format_version")
    if version != "1":
        raise reader.fail(f"unsupported format_version {version!r}")
    process = reader.next_field("process")
    weight_spec = reader.next_field("weight")
    try:
        grid_size = int(reader.next_field("grid_size"))
        reps = int(reader.next_field("reps"))
        master_seed = int(reader.next_field("master_seed"))
    except ValueError:
        raise reader.fail("expected an integer value") from None
    low_reps_flag = reader.next_field("low_reps")
    if low_reps_flag not in (_TRUE, _FALSE):
        raise reader.fail(f"low_reps must be {_TRUE!r} or {_FALSE!r}")
    if reps < 1 or grid_size < 2:
        raise reader.fail("reps must be >= 1 and grid_size >= 2")
    if (low_reps_flag == _TRUE) != (reps < 1000):
        raise reader.fail("low_reps flag inconsistent with reps")

    try:
        n_quantiles = int(reader.next_field("quantiles"))
    except ValueError:
        raise reader.fail("expected an integer value") from None
    quantile_table: dict[float, float] = {}
    for _ in range(n_quantiles):
        line = reader.next()
        parts = line.split(" ")
        try:
            level, value = float(parts[0]), float(parts[1])
        except (ValueError, IndexError):
            raise reader.fail("expected 'level value'") from None
        if not (0.0 < level < 1.0) or not math.isfinite(value):
            raise reader.fail("quantile level must be in (0,1) with a finite value")
        quantile_table[level] = value

    try:
        n_sups = int(reader.next_field("sups"))
    except ValueError:
        raise reader.fail("expected an integer value") from None
    sorted_sups: np.ndarray | None = None
    if n_sups > 0:
        if n_sups != reps:
            raise reader.fail(f"sups count {n_sups} does not match reps {reps}")
        values = np.empty(n_sups, dtype=np.float64)
        for i in range(n_sups):
            line = reader.next()
            try:
                values[i] = float(line)
            except ValueError:
                raise reader.fail("expected a number") from None
        if np.any(np.diff(values) < 0) or not np.all(np.isfinite(values)):
            raise reader.fail("sup sample must be finite and sorted ascending")
        sorted_sups = values
    reader.next(expect="end")
    return LimitLaw(
        process=process,
        weight_spec=weight_spec,
        grid_size=grid_size,
        reps=reps,
        master_seed=master_seed,
        sorted_sups=sorted_sups,
        quantile_table=quantile_table,
    )


# ---------------------------------------------------------------------------
# result records
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return _MISSING
    if isinstance(value, (bool, np.bool_)):
        return _TRUE if value else _FALSE
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _record(kind: str, fields: Iterable[tuple[str, object]]) -> str:
    lines = [f"ucpd-{kind}", "format_version 1"]
    lines.extend(f"{key} {_fmt(value)}" for key, value in fields)
    return "\n".join(lines) + "\n"


def decision_record(decision: TestDecision) -> str:
    """Render a test decision as a line-oriented key-value record."""
    return _record("result", [
        ("statistic", decision.statistic),
        ("p_value", decision.p_value),
        ("critical_value", decision.critical_value),
        ("reject", decision.reject),
        ("k_hat", decision.k_hat),
        ("t_hat", decision.t_hat),
        ("n", decision.n),
        ("kernel", decision.kernel_name),
        ("weight", decision.weight_spec),
        ("alpha", decision.alpha),
        ("law_process", decision.law_process),
        ("law_grid_size", decision.law_grid_size),
        ("law_reps", decision.law_reps),
        ("law_master_seed", decision.law_master_seed),
    ])


def experiment_record(report: ExperimentReport) -> str:
    """Render a size/power experiment summary as a key-value record."""
    scenario = report.scenario
    return _record("experiment", [
        ("mode", "size" if scenario.is_null else "power"),
        ("n", scenario.n),
        ("before", scenario.before.spec),
        ("after", None if scenario.after is None else scenario.after.spec),
        ("change_fraction", scenario.change_fraction),
        ("kernel", scenario.kernel_name),
        ("weight", scenario.weight_spec),
        ("reps", scenario.reps),
        ("master_seed", scenario.master_seed),
        ("alpha", report.alpha),
        ("reject_rate", report.reject_rate),
        ("ks_distance", report.ks_distance),
        ("mean_abs_location_error", report.mean_abs_t_err),
        ("median_abs_location_error", report.median_abs_t_err),
        ("moment_condition_certified", report.moment_condition_certified),
        ("law_process", report.law_process),
        ("law_grid_size", report.law_grid_size),
        ("law_reps", report.law_reps),
        ("law_master_seed", report.law_master_seed),
    ])


def classification_record(result: WeightClassification,
                          decay: EndpointDecayCheck | None = None) -> str:
    """Render a weight-classification report (optionally with decay check)."""
    fields: list[tuple[str, object]] = [
        ("weight", result.weight_spec),
        ("summary", result.summary.value),
    ]
    for c, verdict in zip(result.c_values, result.verdicts):
        fields.append((f"c[{c!r}]", verdict.value))
    if decay is not None:
        fields.append(("endpoint_decay_vanishes", decay.vanishes))
    return _record("weight-check", fields)


def dump_path_csv(path_obj: ProcessPath, weight: WeightFunction, out_path: str) -> None:
    """Write plot-ready columns t, u, q: grid point, path value, weight value."""
    q = weight(path_obj.grid)
    with open(out_path, "w", encoding="utf-8") as handle:
        handle.write("t,u,q\n")
        for t, u, qv in zip(path_obj.grid, path_obj.values, q):
            handle.write(f"{float(t)!r},{float(u)!r},{float(qv)!r}\n")


# ---------------------------------------------------------------------------
# scenario configs
# ---------------------------------------------------------------------------

def read_scenario(path: str) -> Scenario:
    """Load a simulation scenario from a JSON config file.

    Required keys: ``n`` and ``before`` (a distribution spec such as
    ``"normal:0.0,1.0"``).  Optional: ``after`` + ``change_fraction`` (both
    or neither), ``kernel``, ``weight``, ``reps``, ``seed``.
    """
    from .distributions import parse_distribution

    with open(path, "r", encoding="utf-8") as handle:
        try:
            raw = json.load(handle)
        except json.JSONDecodeError as exc:
            raise BadParams(f"{path}: not valid JSON ({exc.msg})") from None
    if not isinstance(raw, dict):
        raise BadParams(f"{path}: scenario file must hold a JSON object")
    allowed = {"n", "before", "after", "change_fraction", "kernel", "weight",
               "reps", "seed"}
    unknown = set(raw) - allowed
    if unknown:
        raise BadParams(f"{path}: unknown scenario keys {sorted(unknown)}")
    for key in ("n", "before"):
        if key not in raw:
            raise BadParams(f"{path}: scenario is missing required key {key!r}")
    try:
        return Scenario(
            n=int(raw["n"]),
            before=parse_distribution(str(raw["before"])),
            after=(None if raw.get("after") is None
                   else parse_distribution(str(raw["after"]))),
            change_fraction=(None if raw.get("change_fraction") is None
                             else float(raw["change_fraction"])),
            kernel_name=str(raw.get("kernel", "sign_diff")),
            weight_spec=str(raw.get("weight", "one")),
            reps=int(raw.get("reps", 1000)),
            master_seed=int(raw.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise BadParams(f"{path}: bad scenario value ({exc})") from None
