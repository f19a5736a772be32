"""Plain-text trace files and JSON documents, always written atomically.

Trace format: comma-separated, one header line, then one row per delay.

    delay_fs,counts_per_s          measured count rates
    delay_fs,rho11[,coherence_v]   simulated populations (and coherence)

Numbers are written with 9 significant digits.
"""

import csv
import json
import logging
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from src.errors import (
    EmptyTraceFileError,
    MalformedHeaderError,
    MalformedRowError,
    NonIncreasingDelayError,
    NonNumericFieldError,
)
from src.experiment.traces import COHERENCE_V, COUNTS, MEASURED, RHO11, SIMULATED, DelayTrace

log = logging.getLogger("coherence-lab")

MEASURED_HEADER = ["delay_fs", COUNTS]
SIMULATED_HEADER = ["delay_fs", RHO11]
SIMULATED_COHERENCE_HEADER = ["delay_fs", RHO11, COHERENCE_V]

_FMT = ".9g"


def atomic_write_text(path, text: str):
    """Write text to a temp file next to path, then rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _finite_json(value):
    """Non-finite floats become the strings "inf", "-inf" and "nan"; float() reads them back."""
    if isinstance(value, dict):
        return {k: _finite_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_json(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def write_json(path, data):
    atomic_write_text(path, json.dumps(_finite_json(data), indent=2, allow_nan=False) + "\n")


def read_json(path):
    with open(path) as f:
        return json.load(f)


def format_number(x: float) -> str:
    return format(float(x), _FMT)


def write_table(path, header: list[str], columns: list):
    """Equal-length numeric columns under a header line."""
    columns = [np.asarray(c, dtype=float).reshape(-1) for c in columns]
    if len(header) != len(columns):
        raise ValueError(f"{len(header)} header fields for {len(columns)} columns")
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(format_number(x) for x in row))
    atomic_write_text(path, "\n".join(lines) + "\n")
    log.info(f"wrote {len(lines) - 1} rows to {path}")


def write_trace_file(trace: DelayTrace, path, coherence: DelayTrace | None = None):
    if trace.kind == MEASURED:
        if coherence is not None:
            raise ValueError("measured traces carry no coherence column")
        write_table(path, MEASURED_HEADER, [trace.delays, trace.values])
        return
    if coherence is None:
        write_table(path, SIMULATED_HEADER, [trace.delays, trace.values])
        return
    if not np.array_equal(coherence.delays, trace.delays):
        raise ValueError("coherence trace must share the population trace's delays")
    write_table(path, SIMULATED_COHERENCE_HEADER, [trace.delays, trace.values, coherence.values])


def _parse_float(field: str, line: int, column: str) -> float:
    try:
        value = float(field)
    except ValueError:
        raise NonNumericFieldError(f"{column} value {field!r} is not a number", line) from None
    if not np.isfinite(value):
        raise NonNumericFieldError(f"{column} value {field!r} is not finite", line)
    return value


def parse_trace_file(path, phase: float = 0.0) -> DelayTrace:
    """Read a trace file. Measured files give a measured trace, simulated files a rho11 trace.

    Every format problem raises a TraceFormatError subclass naming the
    1-based line (the header is line 1).
    """
    with open(path, newline="") as f:
        rows = [(n, row) for n, row in enumerate(csv.reader(f), start=1)
                if row and any(cell.strip() for cell in row)]

    if not rows:
        raise EmptyTraceFileError("file is empty", 1)

    header_line, header = rows[0]
    header = [h.strip() for h in header]
    if header == MEASURED_HEADER:
        kind, quantity = MEASURED, COUNTS
    elif header in (SIMULATED_HEADER, SIMULATED_COHERENCE_HEADER):
        kind, quantity = SIMULATED, RHO11
    else:
        raise MalformedHeaderError(
            f"header {','.join(header)!r} is neither {','.join(MEASURED_HEADER)!r} "
            f"nor {','.join(SIMULATED_HEADER)}[,{COHERENCE_V}]", header_line)

    if len(rows) == 1:
        raise EmptyTraceFileError("file has a header but no data rows", header_line + 1)

    delays, values = [], []
    for line, row in rows[1:]:
        if len(row) != len(header):
            raise MalformedRowError(f"expected {len(header)} fields, got {len(row)}", line)
        delay = _parse_float(row[0].strip(), line, header[0])
        value = _parse_float(row[1].strip(), line, header[1])
        for extra, column in zip(row[2:], header[2:]):
            _parse_float(extra.strip(), line, column)
        if delays and delay <= delays[-1]:
            raise NonIncreasingDelayError(
                f"delay {delay:g} fs does not exceed the previous {delays[-1]:g} fs", line)
        if kind == MEASURED and value < 0:
            raise MalformedRowError(f"count rate {value:g} is negative", line)
        delays.append(delay)
        values.append(value)

    log.debug(f"parsed {len(delays)} {kind} points from {path}")
    return DelayTrace(np.array(delays), np.array(values), kind, phase, quantity)
