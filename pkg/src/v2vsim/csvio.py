"""CSV export and import for simulation logs and sweep tables.

Floats are written with ``repr`` so a read-back is bit exact. Absent values
(a leader's gap to a predecessor, for example) are empty fields.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

from .experiments import SweepRow
from .sim import LOG_COLUMNS, LogRow, SimLog

EVENT_COLUMNS = ("time", "follower_id", "leader_id", "d_a", "d_sf", "d_p")
TRACE_COLUMNS = ("deliver_at", "src", "dst", "speed", "accel")
SWEEP_COLUMNS = ("delay", "n", "mean", "median", "std", "variance", "min", "max", "max_abs")
_INT_COLUMNS = {"vehicle_id", "warning_flag", "follower_id", "leader_id", "src", "dst", "n"}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def events_path(path: str | Path) -> Path:
    return Path(f"{path}.events.csv")


def trace_path(path: str | Path) -> Path:
    return Path(f"{path}.trace.csv")


def export_csv(log: SimLog, path: str | Path, trace: bool = False) -> None:
    """Write the per-tick log, a sibling ``.events.csv`` and optionally a delivery trace."""
    path = Path(path)
    _write(path, LOG_COLUMNS, (r.as_tuple() for r in log.rows))
    _write(events_path(path), EVENT_COLUMNS,
           ((e.time, e.follower_id, e.leader_id, e.d_a, e.d_sf, e.d_p) for e in log.events))
    if trace:
        _write(trace_path(path), TRACE_COLUMNS,
               ((d.deliver_at, d.src, d.dst, d.message.speed, d.message.accel)
                for d in log.deliveries))


def write_sweep(rows: Sequence[SweepRow], path: str | Path) -> None:
    _write(Path(path), SWEEP_COLUMNS,
           ((r.delay, r.stats.n, r.stats.mean, r.stats.median, r.stats.std, r.stats.variance,
             r.stats.min, r.stats.max, r.max_abs) for r in rows))


def _parse(column: str, text: str):
    if text == "":
        return None
    if column in _INT_COLUMNS:
        return int(text)
    return float(text)


def read_table(path: str | Path) -> list[dict]:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            return [{k: _parse(k, v) for k, v in row.items()} for row in reader]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc


def read_log_rows(path: str | Path) -> list[LogRow]:
    return [LogRow(**row) for row in read_table(path)]


def read_column(path: str | Path, column: str, vehicle_id: int | None = None) -> list[float]:
    """Non-empty values of ``column``, optionally restricted to one vehicle."""
    rows = read_table(path)
    if rows and column not in rows[0]:
        raise KeyError(f"column {column!r} not in {path}; have {', '.join(rows[0])}")
    if vehicle_id is not None:
        rows = [r for r in rows if r.get("vehicle_id") == vehicle_id]
    return [r[column] for r in rows if r[column] is not None]
