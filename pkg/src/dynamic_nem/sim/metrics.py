"""Monthly surplus/payment gains and reverse power flow series."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..pricing import Zone
from .data import Panel, format_timestamp
from .scenario import ScenarioResult

CLASSES = ("all", "adopters", "non_adopters")
RPF_MODES = ("passive", "benchmark", "community")


@dataclass(frozen=True)
class ClassGains:
    members: int
    community_surplus: float
    benchmark_surplus: float
    community_payment: float
    benchmark_payment: float

    @property
    def surplus_gain(self) -> float:
        return self.community_surplus - self.benchmark_surplus

    @property
    def payment_gain(self) -> float:
        return self.benchmark_payment - self.community_payment

    @property
    def surplus_gain_pct(self) -> float | None:
        return None if self.benchmark_surplus == 0 else 100.0 * self.surplus_gain / abs(self.benchmark_surplus)

    @property
    def payment_gain_pct(self) -> float | None:
        return None if self.benchmark_payment == 0 else 100.0 * self.payment_gain / abs(self.benchmark_payment)


@dataclass(frozen=True)
class MonthlyReport:
    month: str
    intervals: int
    classes: dict[str, ClassGains]
    rpf_kwh: dict[str, float] = field(default_factory=dict)

    def rows(self) -> list[dict]:
        out = []
        for name in CLASSES:
            g = self.classes[name]
            out.append({
                "month": self.month,
                "class": name,
                "members": g.members,
                "intervals": self.intervals,
                "community_surplus": g.community_surplus,
                "benchmark_surplus": g.benchmark_surplus,
                "surplus_gain": g.surplus_gain,
                "surplus_gain_pct": g.surplus_gain_pct,
                "community_payment": g.community_payment,
                "benchmark_payment": g.benchmark_payment,
                "payment_gain": g.payment_gain,
                "payment_gain_pct": g.payment_gain_pct,
                "zero_denominator": g.surplus_gain_pct is None or g.payment_gain_pct is None,
            })
        return out


def month_labels(result: ScenarioResult) -> list[str]:
    z = result.schedule.zone
    return [t.astimezone(z).strftime("%Y-%m") for t in result.starts]


def compute_gains(result: ScenarioResult) -> list[MonthlyReport]:
    """Monthly surplus and payment gains of joining, per member class.

    Gains in percent are relative to the magnitude of the benchmark total;
    they are ``None`` when that total is zero.
    """
    labels = np.array(month_labels(result))
    adopters = result.panel.adopters
    masks = {"all": np.ones_like(adopters), "adopters": adopters, "non_adopters": ~adopters}
    c, b = result.community, result.benchmark
    c_surplus, b_surplus = c.surplus, b.surplus
    rpf = rpf_series(result)
    reports = []
    for month in sorted(set(labels.tolist())):
        rows = labels == month
        classes = {}
        for name, cols in masks.items():
            classes[name] = ClassGains(
                int(cols.sum()),
                float(c_surplus[rows][:, cols].sum()),
                float(b_surplus[rows][:, cols].sum()),
                float(c.payment[rows][:, cols].sum()),
                float(b.payment[rows][:, cols].sum()),
            )
        energy = {m: float(rpf[m][rows].sum() * result.interval_hours) for m in RPF_MODES}
        reports.append(MonthlyReport(month, int(rows.sum()), classes, energy))
    return reports


def compute_rpf(source, mode: str) -> np.ndarray:
    """Reverse power flow (kW, >= 0) per interval.

    ``passive`` uses observed load minus generation member by member,
    ``benchmark`` the standalone optimal net consumptions, and ``community``
    the aggregate net consumption at the point of common coupling.
    ``source`` is a :class:`ScenarioResult`, or a :class:`Panel` for ``passive``.
    """
    if mode not in RPF_MODES:
        raise ValueError(f"unknown RPF mode {mode!r}; expected one of {RPF_MODES}")
    if isinstance(source, Panel):
        if mode != "passive":
            raise ValueError("raw data only supports the passive RPF mode")
        panel = source
    else:
        panel = source.panel
    hours = panel.netting.hours
    if mode == "passive":
        export = np.maximum(panel.generation - panel.load, 0.0).sum(axis=1)
    elif mode == "benchmark":
        export = np.maximum(-source.benchmark.net, 0.0).sum(axis=1)
    else:
        export = np.maximum(-source.community.aggregate_net, 0.0)
    return export / hours


def rpf_series(result: ScenarioResult) -> dict[str, np.ndarray]:
    return {m: compute_rpf(result, m) for m in RPF_MODES}


def write_monthly_csv(reports, path) -> None:
    rows = [r for rep in reports for r in rep.rows()]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fields = list(rows[0]) if rows else ["month", "class"]
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})


def write_rpf_csv(result: ScenarioResult, path) -> None:
    series = rpf_series(result)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("timestamp", "passive_kw", "benchmark_kw", "community_kw"))
        for t, ts in enumerate(result.starts):
            w.writerow((format_timestamp(ts),) + tuple(repr(float(series[m][t])) for m in RPF_MODES))


def write_outcomes_csv(result: ScenarioResult, path) -> None:
    """Flat per-member table: interval, member_id, d, z, payment, surplus, zone, rate."""
    c = result.community
    surplus = c.surplus
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("interval", "member_id", "d", "z", "payment", "surplus", "zone", "rate"))
        for t, ts in enumerate(result.starts):
            zone = Zone.from_code(c.zone[t]).value
            stamp = format_timestamp(ts)
            rate = repr(float(c.rate[t]))
            for i, mid in enumerate(result.member_ids):
                w.writerow((stamp, mid, repr(float(c.consumption[t, i].sum())), repr(float(c.net[t, i])),
                            repr(float(c.payment[t, i])), repr(float(surplus[t, i])), zone, rate))


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v
