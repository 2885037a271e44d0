"""Interval meter data: CSV parsing, gap detection and aggregation to netting periods."""

from __future__ import annotations

import csv
import io
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

COLUMNS = ("timestamp", "member_id", "load_kwh", "generation_kwh")


@dataclass(frozen=True, slots=True)
class IntervalRecord:
    timestamp: datetime
    member_id: str
    load: float
    generation: float


class TimeseriesError(ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class MalformedRowError(TimeseriesError):
    pass


class DuplicateKeyError(TimeseriesError):
    pass


class NonMonotoneTimestampError(TimeseriesError):
    pass


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def load_timeseries(source) -> list[IntervalRecord]:
    """Parse ``timestamp,member_id,load_kwh,generation_kwh`` CSV.

    ``source`` is a path or an open text stream.  Rows must be grouped by
    non-decreasing timestamp.  Returns records sorted by (timestamp, member).
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return _parse(fh)
    return _parse(source)


def _parse(fh) -> list[IntervalRecord]:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None:
        log.warning("time series is empty")
        return []
    header = [h.strip() for h in header]
    if tuple(header) != COLUMNS:
        raise MalformedRowError(1, f"expected header {','.join(COLUMNS)}, got {','.join(header)}")
    records = []
    seen = set()
    prev = None
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise MalformedRowError(line, f"expected 4 fields, got {len(row)}")
        try:
            ts = parse_timestamp(row[0])
        except ValueError:
            raise MalformedRowError(line, f"bad timestamp {row[0]!r}") from None
        member = row[1].strip()
        if not member:
            raise MalformedRowError(line, "empty member_id")
        try:
            load, gen = float(row[2]), float(row[3])
        except ValueError:
            raise MalformedRowError(line, f"non-numeric energy value in {row[2:]!r}") from None
        if not (load >= 0 and gen >= 0) or not np.isfinite([load, gen]).all():
            raise MalformedRowError(line, f"energy values must be finite and >= 0, got {load}, {gen}")
        if prev is not None and ts < prev:
            raise NonMonotoneTimestampError(line, f"timestamp {row[0]} precedes {format_timestamp(prev)}")
        key = (ts, member)
        if key in seen:
            raise DuplicateKeyError(line, f"duplicate record for member {member!r} at {row[0]}")
        seen.add(key)
        prev = ts
        records.append(IntervalRecord(ts, member, load, gen))
    if not records:
        log.warning("time series has a header but no records")
    records.sort(key=lambda r: (r.timestamp, r.member_id))
    gaps = find_gaps(records)
    if gaps:
        log.warning("time series has %d missing (timestamp, member) entries", len(gaps))
    return records


def write_timeseries(records, target) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in records:
            w.writerow((format_timestamp(r.timestamp), r.member_id, repr(r.load), repr(r.generation)))

    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            emit(fh)
    else:
        emit(target)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    write_timeseries(records, buf)
    return buf.getvalue()


def native_resolution(timestamps) -> timedelta | None:
    uniq = sorted(set(timestamps))
    if len(uniq) < 2:
        return None
    return min(b - a for a, b in zip(uniq, uniq[1:]))


def find_gaps(records) -> list[tuple[datetime, str]]:
    """Missing (timestamp, member) pairs on the regular grid spanned by the data."""
    if not records:
        return []
    members = sorted({r.member_id for r in records})
    stamps = sorted({r.timestamp for r in records})
    step = native_resolution(stamps)
    grid = [stamps[0]]
    if step is not None:
        n = int((stamps[-1] - stamps[0]) / step)
        grid = [stamps[0] + k * step for k in range(n + 1)]
    present = {(r.timestamp, r.member_id) for r in records}
    return [(ts, m) for ts in grid for m in members if (ts, m) not in present]


@dataclass(frozen=True)
class NettingPeriod:
    minutes: int

    def __post_init__(self):
        if self.minutes <= 0:
            raise ValueError(f"netting period must be positive, got {self.minutes} min")

    @classmethod
    def parse(cls, text) -> "NettingPeriod":
        if isinstance(text, NettingPeriod):
            return text
        if isinstance(text, (int, float)):
            return cls(int(text))
        m = re.fullmatch(r"\s*(\d+)\s*(m|min|h)?\s*", str(text))
        if not m:
            raise ValueError(f"cannot parse netting period {text!r}; use e.g. 15m or 1h")
        n = int(m.group(1))
        return cls(n * 60 if m.group(2) == "h" else n)

    @property
    def hours(self) -> float:
        return self.minutes / 60.0

    @property
    def label(self) -> str:
        return f"{self.minutes // 60}h" if self.minutes % 60 == 0 else f"{self.minutes}m"


@dataclass
class Panel:
    """Records aggregated to netting intervals: arrays of shape ``(T, H)``."""

    starts: list[datetime]
    member_ids: list[str]
    load: np.ndarray
    generation: np.ndarray
    netting: NettingPeriod
    skipped: list[datetime] = field(default_factory=list)

    @property
    def n_intervals(self) -> int:
        return len(self.starts)

    @property
    def adopters(self) -> np.ndarray:
        return self.generation.sum(axis=0) > 0


def aggregate(records, netting: NettingPeriod, resolution: timedelta | None = None) -> Panel:
    """Sum records into netting intervals; incomplete intervals are skipped and logged."""
    netting = NettingPeriod.parse(netting)
    if not records:
        return Panel([], [], np.zeros((0, 0)), np.zeros((0, 0)), netting)
    step = resolution or native_resolution(r.timestamp for r in records) or timedelta(minutes=netting.minutes)
    step_min = step.total_seconds() / 60
    if netting.minutes % step_min != 0:
        raise ValueError(
            f"netting period {netting.minutes} min is not a multiple of the data resolution {step_min:g} min"
        )
    per = int(netting.minutes // step_min)
    members = sorted({r.member_id for r in records})
    col = {m: i for i, m in enumerate(members)}
    epoch = datetime(1970, 1, 1, tzinfo=timezone.utc)
    minutes = np.array([(r.timestamp - epoch) // timedelta(minutes=1) for r in records], dtype=np.int64)
    bucket_min = (minutes // netting.minutes) * netting.minutes
    uniq, row = np.unique(bucket_min, return_inverse=True)
    cols = np.array([col[r.member_id] for r in records])
    T, H = len(uniq), len(members)
    load = np.zeros((T, H))
    gen = np.zeros((T, H))
    count = np.zeros((T, H), dtype=np.int64)
    np.add.at(load, (row, cols), [r.load for r in records])
    np.add.at(gen, (row, cols), [r.generation for r in records])
    np.add.at(count, (row, cols), 1)
    complete = (count == per).all(axis=1)
    starts = [epoch + timedelta(minutes=int(m)) for m in uniq]
    skipped = [s for s, ok in zip(starts, complete) if not ok]
    if skipped:
        log.warning("skipping %d interval(s) with missing member data, first at %s",
                    len(skipped), format_timestamp(skipped[0]))
    keep = np.nonzero(complete)[0]
    return Panel([starts[k] for k in keep], members, load[keep], gen[keep], netting, skipped)
