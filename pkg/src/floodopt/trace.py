"""Append-only optimizer traces and their line-delimited on-disk form.

A trace is a header record, one record per optimizer iteration, and a final
result record.  Records are plain dicts with insertion-ordered keys so that
serializing the same run twice produces byte-identical files.  Wall-clock
fields are kept in memory for reporting but stripped from the trace file
(they go into a separate timing file), because trace files are compared
byte-for-byte across runs.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .errors import ConfigError

__all__ = ["Trace", "TIMING_FIELDS", "jsonable"]

# Fields excluded from the deterministic trace file.
TIMING_FIELDS = ("wall_time_s",)


def jsonable(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays so json can serialize them."""
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return value


class Trace:
    """Ordered record of a single optimizer run."""

    def __init__(self, **header: Any):
        self.header: dict[str, Any] = {"record": "header", **jsonable(header)}
        self.rows: list[dict[str, Any]] = []
        self.result: dict[str, Any] | None = None

    def append(self, **fields: Any) -> dict[str, Any]:
        row = {"record": "iteration", **jsonable(fields)}
        self.rows.append(row)
        return row

    def finish(self, **fields: Any) -> dict[str, Any]:
        self.result = {"record": "result", **jsonable(fields)}
        return self.result

    def records(self) -> list[dict[str, Any]]:
        out = [self.header, *self.rows]
        if self.result is not None:
            out.append(self.result)
        return out

    # -- serialization ----------------------------------------------------

    @staticmethod
    def _strip_timing(record: dict[str, Any]) -> dict[str, Any]:
        return {k: v for k, v in record.items() if k not in TIMING_FIELDS}

    def to_jsonl(self, path: str | Path) -> None:
        """Write the deterministic portion of the trace, one record per line."""
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            for record in self.records():
                fh.write(json.dumps(self._strip_timing(record)) + "\n")

    def timings(self) -> dict[str, Any]:
        """Wall-clock data dropped from the trace file."""
        per_row = [
            {k: row.get(k) for k in TIMING_FIELDS if k in row} for row in self.rows
        ]
        return {"iterations": per_row}

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "Trace":
        path = Path(path)
        records = []
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        if not records or records[0].get("record") != "header":
            raise ConfigError(f"{path} is not a trace file (missing header record)")
        header = {k: v for k, v in records[0].items() if k != "record"}
        trace = cls(**header)
        for record in records[1:]:
            kind = record.get("record")
            body = {k: v for k, v in record.items() if k != "record"}
            if kind == "iteration":
                trace.append(**body)
            elif kind == "result":
                trace.finish(**body)
            else:
                raise ConfigError(f"unknown trace record kind {kind!r} in {path}")
        return trace
