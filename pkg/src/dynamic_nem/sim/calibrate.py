"""Quadratic utility calibration from observed loads.

Each member gets one flexible device per calibration bucket.  A bucket is a
slot of the day (an hour, or one interval of the data's resolution),
optionally split by month or by calendar day.  The device is fitted so that
a price taker facing the bucket's retail rate consumes exactly the mean
observed load::

    a - b * mean_load = retail

The curvature ``b`` comes from a policy: either a fixed value, or a target
point price elasticity ``e`` at the observed mean, ``b = retail / (e * mean_load)``.
Upper bounds are ``kappa`` times the largest observed load in the bucket.

With ``day-slot`` buckets (the default) a year of data has one observation
per bucket, so every interval's observed load is the member's optimum at
that interval's retail rate.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..core import CommunityArrays, Member
from .data import NettingPeriod, Panel, aggregate
from .tariff import TouSchedule

log = logging.getLogger(__name__)

BUCKETS = ("hour", "month-hour", "slot", "month-slot", "day-slot")
PERIODS = {"": 1, "month": 12, "day": 366}


@dataclass(frozen=True)
class CalibrationConfig:
    b_policy: str = "elasticity"  # "elasticity" or "fixed"
    b_value: float = 0.5
    kappa: float = 2.0
    bucket: str = "day-slot"

    def __post_init__(self):
        if self.b_policy not in ("elasticity", "fixed"):
            raise ValueError(f"unknown b_policy {self.b_policy!r}")
        if not self.b_value > 0:
            raise ValueError("b_value must be > 0")
        if not self.kappa >= 1:
            raise ValueError("kappa must be >= 1 so the observed mean stays feasible")
        if self.bucket not in BUCKETS:
            raise ValueError(f"unknown calibration bucket {self.bucket!r}; expected one of {BUCKETS}")

    @property
    def period(self) -> str:
        return self.bucket.split("-")[0] if "-" in self.bucket else ""

    @classmethod
    def from_dict(cls, d: dict | None) -> "CalibrationConfig":
        d = dict(d or {})
        return cls(**{k: d[k] for k in ("b_policy", "b_value", "kappa", "bucket") if k in d})

    def to_dict(self) -> dict:
        return asdict(self)


def period_index(period: str, schedule: TouSchedule, starts) -> np.ndarray:
    """Bucket period of each local timestamp: 0, month - 1, or day of year - 1."""
    if period == "month":
        return schedule.local_months(starts) - 1
    if period == "day":
        z = schedule.zone
        return np.array([t.astimezone(z).timetuple().tm_yday - 1 for t in starts], dtype=np.int64)
    return np.zeros(len(starts), dtype=np.int64)


@dataclass(frozen=True)
class Calibration:
    """Fitted parameters indexed ``[member, period, day_slot]``.

    The period axis has length 1, 12 (months) or 366 (days of the year); the
    day is cut into slots of ``slot_minutes``.
    """

    member_ids: tuple[str, ...]
    a: np.ndarray
    b: np.ndarray
    upper: np.ndarray
    config: CalibrationConfig
    slot_minutes: int = 60

    @classmethod
    def constant(cls, members, config: CalibrationConfig | None = None) -> "Calibration":
        """Use fixed single-device members for every bucket (generation is ignored)."""
        for m in members:
            if len(m.devices) != 1 or m.devices[0].bounds.lower != 0:
                raise ValueError(f"member {m.id!r}: constant calibration needs one device with lower bound 0")
        shape = (len(members), 1, 24)
        a = np.broadcast_to(np.array([m.devices[0].utility.a for m in members])[:, None, None], shape).copy()
        b = np.broadcast_to(np.array([m.devices[0].utility.b for m in members])[:, None, None], shape).copy()
        hi = np.broadcast_to(np.array([m.devices[0].bounds.upper for m in members])[:, None, None], shape).copy()
        return cls(tuple(m.id for m in members), a, b, hi, config or CalibrationConfig(bucket="hour"))

    @property
    def period(self) -> str:
        return {1: "", 12: "month", 366: "day"}[self.a.shape[1]]

    def index(self, schedule: TouSchedule, starts) -> tuple[np.ndarray, np.ndarray]:
        """``(period, day_slot)`` bucket of each interval start."""
        return period_index(self.period, schedule, starts), schedule.local_minutes(starts) // self.slot_minutes

    def arrays(self, periods, slots, generation, span: int = 1) -> CommunityArrays:
        """Batched community arrays ``(T, H, span)`` for intervals in the given buckets.

        An interval covering ``span`` consecutive calibration slots gets one
        device per slot, so coarser netting keeps the same preferences.
        """
        p = np.asarray(periods)[:, None]
        per_day = self.a.shape[2]
        idx = np.asarray(slots)[:, None] + np.arange(span)[None, :]
        p = (p + idx // per_day) % self.a.shape[1]  # slots past midnight belong to the next period
        idx = idx % per_day
        a = np.moveaxis(self.a[:, p, idx], 0, 1)
        b = np.moveaxis(self.b[:, p, idx], 0, 1)
        hi = np.moveaxis(self.upper[:, p, idx], 0, 1)
        return CommunityArrays(a, b, np.zeros_like(hi), hi, np.asarray(generation, dtype=float))

    def span(self, netting_minutes: int) -> int:
        """Calibration slots per netting interval (1 when the interval is not longer than a slot)."""
        if netting_minutes <= self.slot_minutes:
            return 1
        if netting_minutes % self.slot_minutes:
            raise ValueError(f"netting of {netting_minutes} min is not a multiple of the {self.slot_minutes} min calibration slot")
        return netting_minutes // self.slot_minutes

    def member(self, member_id: str, period: int, slot: int, generation: float = 0.0) -> Member:
        i = self.member_ids.index(member_id)
        p = int(period) % self.a.shape[1]
        return Member.single(member_id, float(self.a[i, p, slot]), float(self.b[i, p, slot]),
                             0.0, float(self.upper[i, p, slot]), generation)


def calibrate_utilities(history, schedule: TouSchedule, config: CalibrationConfig | None = None,
                        netting: NettingPeriod | str | None = None) -> Calibration:
    """Fit per-member, per-bucket quadratic utilities.

    ``history`` is a :class:`Panel` or a list of records (aggregated to
    ``netting`` first, default: the data's native resolution).
    """
    config = config or CalibrationConfig()
    panel = history if isinstance(history, Panel) else _as_panel(history, netting)
    H = len(panel.member_ids)
    n_periods = PERIODS[config.period]
    width = panel.netting.minutes if config.bucket.endswith("slot") else 60
    if width > 60 or 60 % width:
        width = 60
    per_day = 1440 // width
    day_slot = schedule.local_minutes(panel.starts) // width
    p = period_index(config.period, schedule, panel.starts)

    total = np.zeros((H, n_periods, per_day))
    count = np.zeros((n_periods, per_day))
    peak = np.zeros((H, n_periods, per_day))
    np.add.at(count, (p, day_slot), 1)
    for i in range(H):
        np.add.at(total[i], (p, day_slot), panel.load[:, i])
        np.maximum.at(peak[i], (p, day_slot), panel.load[:, i])

    mean, dmax = _fill_empty(total, peak, count)
    retail = schedule.retail_for_hour(np.arange(per_day) * width // 60).astype(float)[None, None, :]
    flexible = mean > 0
    safe_mean = np.where(flexible, mean, 1.0)
    if config.b_policy == "fixed":
        b = np.full_like(mean, config.b_value)
    else:
        b = retail / (config.b_value * safe_mean)
    b = np.where(flexible, b, 1.0)
    a = retail + b * np.where(flexible, mean, 0.0)
    upper = np.where(flexible, config.kappa * dmax, 0.0)
    n_inflex = int((~flexible.any(axis=(1, 2))).sum())
    if n_inflex:
        log.info("%d member(s) have zero load everywhere and are modelled as inflexible", n_inflex)
    return Calibration(tuple(panel.member_ids), a, b, upper, config, width)


def _as_panel(records, netting) -> Panel:
    if netting is None:
        from .data import native_resolution

        step = native_resolution(r.timestamp for r in records)
        netting = NettingPeriod(int(step.total_seconds() // 60) if step else 60)
    return aggregate(records, NettingPeriod.parse(netting))


def _fill_empty(total, peak, count):
    """Bucket means and maxima.

    An empty slot pools its nearest observed neighbouring slots in the same
    period; a period with no data at all copies the nearest observed period.
    """
    H, n_periods, per_day = total.shape
    if not count.any():
        raise ValueError("no observations to calibrate from")
    mean = np.zeros_like(total)
    dmax = np.zeros_like(total)
    observed = np.nonzero(count.sum(axis=1) > 0)[0]
    for s in observed:
        for h in range(per_day):
            for radius in range(per_day // 2 + 1):
                hrs = sorted({(h + d) % per_day for d in range(-radius, radius + 1)})
                n = count[s, hrs].sum()
                if n > 0:
                    mean[:, s, h] = total[:, s, hrs].sum(axis=1) / n
                    dmax[:, s, h] = peak[:, s, hrs].max(axis=1)
                    break
    missing = np.setdiff1d(np.arange(n_periods), observed)
    if missing.size:
        dist = np.abs(missing[:, None] - observed[None, :])
        dist = np.minimum(dist, n_periods - dist)  # the calendar wraps around
        src = observed[np.argmin(dist, axis=1)]
        mean[:, missing] = mean[:, src]
        dmax[:, missing] = dmax[:, src]
    return mean, dmax
