"""Synthetic household load, rooftop solar and wholesale export prices.

Stands in for metered residential data: a daily load profile with a summer
air-conditioning hump, bell-shaped solar output for adopters, and
cloudiness drawn per day.  Everything is a deterministic function of the seed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .data import IntervalRecord
from .tariff import ExportSeries


@dataclass(frozen=True)
class SyntheticConfig:
    households: int = 24
    adopters: int = 19
    start: str = "2018-01-01"
    months: int = 12
    resolution_minutes: int = 15
    max_export_rate: float = 0.2

    def __post_init__(self):
        if self.households < 1 or not 0 <= self.adopters <= self.households:
            raise ValueError("need households >= 1 and 0 <= adopters <= households")
        if self.months < 1 or 60 % self.resolution_minutes and self.resolution_minutes % 60:
            raise ValueError("bad months or resolution")

    @classmethod
    def from_dict(cls, d: dict | None) -> "SyntheticConfig":
        d = dict(d or {})
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})

    def to_dict(self) -> dict:
        return asdict(self)

    def span(self) -> tuple[datetime, datetime]:
        start = datetime.fromisoformat(self.start).replace(tzinfo=timezone.utc)
        y, m = divmod(start.month - 1 + self.months, 12)
        return start, start.replace(year=start.year + y, month=m + 1)


def _bump(h, centre, width):
    return np.exp(-0.5 * ((h - centre) / width) ** 2)


def _grid(cfg: SyntheticConfig):
    start, end = cfg.span()
    step = timedelta(minutes=cfg.resolution_minutes)
    n = int((end - start) / step)
    starts = [start + k * step for k in range(n)]
    offset = np.arange(n) * (cfg.resolution_minutes / 60.0)
    hour = (offset + cfg.resolution_minutes / 120.0 + start.hour) % 24  # interval midpoint
    day = ((offset + start.hour) // 24).astype(int)
    doy = np.array([(start + timedelta(days=int(d))).timetuple().tm_yday for d in range(day.max() + 1)])
    return starts, hour, day, doy


def generate_arrays(cfg: SyntheticConfig, seed: int):
    """Return ``(starts, member_ids, load_kwh (T, H), generation_kwh (T, H))``."""
    rng = np.random.default_rng(seed)
    starts, hour, day, doy = _grid(cfg)
    H, n_days = cfg.households, len(doy)
    dt = cfg.resolution_minutes / 60.0

    base = rng.uniform(0.4, 0.9, H)
    ac = rng.uniform(1.5, 3.0, H)
    phase = rng.uniform(-0.75, 0.75, H)
    adopter = np.zeros(H, dtype=bool)
    adopter[rng.permutation(H)[: cfg.adopters]] = True
    capacity = np.where(adopter, rng.uniform(3.0, 6.0, H), 0.0)

    season = np.cos(2 * np.pi * (doy - 172) / 365.0)  # +1 at the June solstice
    cooling = np.clip(np.cos(2 * np.pi * (doy - 205) / 365.0), 0.0, None) ** 1.5
    heat_day = rng.uniform(0.92, 1.08, (n_days, H))
    clear_day = rng.uniform(0.55, 1.0, n_days)
    rise, sett = 6.6 - 1.1 * season, 18.4 + 1.1 * season

    h = hour[:, None] + phase[None, :]
    profile = 0.55 + 0.3 * _bump(h, 7.5, 1.5) + 0.7 * _bump(h, 19.5, 2.2)
    cool = (cooling[day][:, None] * heat_day[day]) * _bump(h, 16.5, 3.5)
    noise = rng.uniform(0.94, 1.06, (len(starts), H))
    load_kw = (base[None, :] * profile + ac[None, :] * cool) * noise

    d = day
    frac = np.clip((hour - rise[d]) / (sett[d] - rise[d]), 0.0, 1.0)
    bell = np.sin(np.pi * frac) ** 1.3
    irradiance = bell * clear_day[d] * (0.8 + 0.2 * season[d])
    gen_kw = capacity[None, :] * 0.8 * irradiance[:, None]

    width = len(str(H))
    ids = [f"h{i + 1:0{width}d}" for i in range(H)]
    return starts, ids, load_kw * dt, gen_kw * dt


def generate_synthetic_scenario(cfg: SyntheticConfig | dict | None = None, seed: int = 0) -> list[IntervalRecord]:
    cfg = cfg if isinstance(cfg, SyntheticConfig) else SyntheticConfig.from_dict(cfg)
    starts, ids, load, gen = generate_arrays(cfg, seed)
    load = np.round(load, 6)
    gen = np.round(gen, 6)
    return [
        IntervalRecord(ts, mid, float(load[t, i]), float(gen[t, i]))
        for t, ts in enumerate(starts)
        for i, mid in enumerate(ids)
    ]


def generate_export_prices(cfg: SyntheticConfig | dict | None = None, seed: int = 0) -> ExportSeries:
    """Hourly wholesale-like export prices, capped at ``cfg.max_export_rate``."""
    cfg = cfg if isinstance(cfg, SyntheticConfig) else SyntheticConfig.from_dict(cfg)
    rng = np.random.default_rng([seed, 1])
    start, end = cfg.span()
    n = int((end - start) / timedelta(hours=1))
    stamps = [start + timedelta(hours=k) for k in range(n)]
    hour = np.arange(n) % 24
    doy = np.array([t.timetuple().tm_yday for t in stamps])
    summer = np.clip(np.cos(2 * np.pi * (doy - 205) / 365.0), 0.0, None)
    price = (0.022 + 0.012 * _bump(hour, 18.0, 2.5) * (1 + 2 * summer)) * rng.uniform(0.8, 1.2, n)
    price = np.clip(np.round(price, 5), 0.001, cfg.max_export_rate)
    return ExportSeries(tuple(stamps), tuple(float(p) for p in price))
