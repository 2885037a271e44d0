"""Time-of-use retail schedule with a scalar or time-varying export rate."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from zoneinfo import ZoneInfo

import numpy as np

from ..core import NemTariff
from .data import format_timestamp, parse_timestamp

DEFAULT_PEAK_HOURS = frozenset(range(16, 21))


@dataclass(frozen=True)
class ExportSeries:
    """Step function of export prices: each value holds until the next timestamp."""

    timestamps: tuple[datetime, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        if not self.timestamps or len(self.timestamps) != len(self.rates):
            raise ValueError("export series needs matching, non-empty timestamps and rates")
        if any(b <= a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise ValueError("export series timestamps must be strictly increasing")

    def at(self, starts) -> np.ndarray:
        keys = np.array([t.timestamp() for t in self.timestamps])
        q = np.array([t.timestamp() for t in starts])
        idx = np.clip(np.searchsorted(keys, q, side="right") - 1, 0, len(keys) - 1)
        return np.asarray(self.rates)[idx]

    @classmethod
    def from_csv(cls, path) -> "ExportSeries":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"timestamp", "export_rate"} <= set(reader.fieldnames):
                raise ValueError(f"{path}: expected columns timestamp,export_rate")
            rows = [(parse_timestamp(r["timestamp"]), float(r["export_rate"])) for r in reader]
        rows.sort()
        return cls(tuple(r[0] for r in rows), tuple(r[1] for r in rows))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("timestamp", "export_rate"))
            for t, r in zip(self.timestamps, self.rates):
                w.writerow((format_timestamp(t), repr(r)))


@dataclass(frozen=True)
class TouSchedule:
    peak_rate: float
    offpeak_rate: float
    peak_hours: frozenset = DEFAULT_PEAK_HOURS
    export_rate: float | ExportSeries = 0.0
    fixed: float = 0.0  # $ per netting interval
    tz: str = "UTC"

    def __post_init__(self):
        object.__setattr__(self, "peak_hours", frozenset(int(h) for h in self.peak_hours))
        if not (0 <= self.offpeak_rate <= self.peak_rate):
            raise ValueError(f"need 0 <= offpeak <= peak, got {self.offpeak_rate}, {self.peak_rate}")
        if any(not 0 <= h < 24 for h in self.peak_hours):
            raise ValueError(f"peak hours must be in 0..23, got {sorted(self.peak_hours)}")
        if isinstance(self.export_rate, ExportSeries):
            rates = np.asarray(self.export_rate.rates)
            if (rates < 0).any() or (rates > self.offpeak_rate).any():
                bad = int(np.nonzero((rates < 0) | (rates > self.offpeak_rate))[0][0])
                raise ValueError(
                    f"export rate {rates[bad]} at {format_timestamp(self.export_rate.timestamps[bad])} "
                    f"outside [0, offpeak={self.offpeak_rate}]"
                )
        elif not (0 <= self.export_rate <= self.offpeak_rate):
            raise ValueError(f"need 0 <= export <= offpeak, got {self.export_rate}")
        if self.fixed < 0:
            raise ValueError("fixed charge must be >= 0")

    @property
    def zone(self) -> ZoneInfo:
        return ZoneInfo(self.tz)

    def local_hours(self, starts) -> np.ndarray:
        z = self.zone
        return np.array([t.astimezone(z).hour for t in starts], dtype=np.int64)

    def local_minutes(self, starts) -> np.ndarray:
        """Minute of the local day."""
        z = self.zone
        return np.array([(lambda u: u.hour * 60 + u.minute)(t.astimezone(z)) for t in starts], dtype=np.int64)

    def local_months(self, starts) -> np.ndarray:
        z = self.zone
        return np.array([t.astimezone(z).month for t in starts], dtype=np.int64)

    def retail_for_hour(self, hour) -> np.ndarray:
        hour = np.asarray(hour)
        peak = np.isin(hour, sorted(self.peak_hours))
        return np.where(peak, self.peak_rate, self.offpeak_rate)

    def rates(self, starts) -> tuple[np.ndarray, np.ndarray]:
        """Retail and export rate for each interval start."""
        retail = self.retail_for_hour(self.local_hours(starts)).astype(float)
        if isinstance(self.export_rate, ExportSeries):
            export = self.export_rate.at(starts)
        else:
            export = np.full(len(starts), float(self.export_rate))
        return retail, export

    def tariff_at(self, start: datetime) -> NemTariff:
        retail, export = self.rates([start])
        return NemTariff(float(retail[0]), float(export[0]), self.fixed)

    @classmethod
    def from_config(cls, cfg: dict, base_dir: Path | None = None) -> "TouSchedule":
        tou = cfg.get("tou", {})
        export = cfg.get("export_rate", 0.0)
        if isinstance(export, str):
            p = Path(export)
            if base_dir is not None and not p.is_absolute():
                p = base_dir / p
            export = ExportSeries.from_csv(p)
        return cls(
            peak_rate=float(tou.get("peak_rate", 0.40)),
            offpeak_rate=float(tou.get("offpeak_rate", 0.20)),
            peak_hours=frozenset(tou.get("peak_hours", sorted(DEFAULT_PEAK_HOURS))),
            export_rate=export,
            fixed=float(cfg.get("fixed", 0.0)),
            tz=cfg.get("tz", "UTC"),
        )

    def describe(self) -> dict:
        return {
            "peak_rate": self.peak_rate,
            "offpeak_rate": self.offpeak_rate,
            "peak_hours": sorted(self.peak_hours),
            "export_rate": "series" if isinstance(self.export_rate, ExportSeries) else self.export_rate,
            "fixed": self.fixed,
            "tz": self.tz,
        }
