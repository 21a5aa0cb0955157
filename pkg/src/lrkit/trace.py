"""Per-iteration convergence records and their CSV form."""
from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, field, fields
from typing import Optional, TextIO


@dataclass
class TraceRecord:
    k: int
    method: str
    L_surrogate: float
    q_exact: Optional[float] = None
    q_rec: Optional[float] = None
    level: Optional[float] = None
    stepsize: Optional[float] = None
    g_norm: float = 0.0
    subsystems_solved: int = 0
    feasible_cost: Optional[float] = None
    wall_ms: float = 0.0
    event: str = ""


FIELDS = tuple(f.name for f in fields(TraceRecord))
_INT_FIELDS = {"k", "subsystems_solved"}
_STR_FIELDS = {"method", "event"}


@dataclass
class ConvergenceTrace:
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def append(self, rec: TraceRecord):
        if self.records and rec.k <= self.records[-1].k:
            raise ValueError("trace iteration index must increase")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.records]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(trace: ConvergenceTrace, fh: TextIO):
    """RFC 4180 CSV: header row, CRLF line ends, minimal quoting."""
    writer = csv.writer(fh, lineterminator="\r\n")
    writer.writerow(FIELDS)
    for rec in trace.records:
        writer.writerow([_fmt(v) for v in astuple(rec)])


def trace_to_csv(trace: ConvergenceTrace) -> str:
    buf = io.StringIO(newline="")
    write_csv(trace, buf)
    return buf.getvalue()


def read_csv(fh: TextIO) -> ConvergenceTrace:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or tuple(header) != FIELDS:
        raise ValueError(f"unexpected trace header {header}")
    trace = ConvergenceTrace()
    for row in reader:
        kwargs = {}
        for name, raw in zip(FIELDS, row):
            if name in _STR_FIELDS:
                kwargs[name] = raw
            elif name in _INT_FIELDS:
                kwargs[name] = int(raw)
            else:
                kwargs[name] = None if raw == "" else float(raw)
        trace.append(TraceRecord(**kwargs))
    return trace


def trace_from_csv(text: str) -> ConvergenceTrace:
    return read_csv(io.StringIO(text, newline=""))
