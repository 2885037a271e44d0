"""Run the community and the standalone benchmark over a time series."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from ..axioms import Verdict, audit
from ..core import CommunityArrays
from ..pricing import CommunityPrice, Zone
from ..welfare import (
    MemberOutcome,
    Outcome,
    OutcomeArrays,
    benchmark_arrays,
    decentralized_arrays,
)
from .calibrate import Calibration, CalibrationConfig, calibrate_utilities
from .data import NettingPeriod, Panel, aggregate
from .tariff import TouSchedule

log = logging.getLogger(__name__)


@dataclass
class ScenarioResult:
    panel: Panel
    schedule: TouSchedule
    calibration: Calibration
    retail: np.ndarray
    export: np.ndarray
    community: OutcomeArrays
    benchmark: OutcomeArrays
    months: np.ndarray = field(default=None)

    @property
    def starts(self) -> list[datetime]:
        return self.panel.starts

    @property
    def member_ids(self) -> list[str]:
        return self.panel.member_ids

    @property
    def n_intervals(self) -> int:
        return self.panel.n_intervals

    @property
    def interval_hours(self) -> float:
        return self.panel.netting.hours

    @property
    def fixed(self) -> float:
        return self.schedule.fixed

    def zone_counts(self) -> dict[str, int]:
        codes = self.community.zone
        return {z.value: int((codes == z.code).sum()) for z in Zone}

    def operator_profit(self) -> np.ndarray:
        """Per-interval sum of member payments minus the community bill."""
        return self.community.payment.sum(axis=1) - self.community.community_payment

    def outcome(self, t: int) -> Outcome:
        c = self.community
        H = len(self.member_ids)
        price = CommunityPrice(Zone.from_code(c.zone[t]), float(c.rate[t]), self.fixed / H)
        return Outcome.assemble(price, _rows(self.member_ids, c, t), float(c.community_payment[t]))

    def benchmarks(self, t: int) -> list[MemberOutcome]:
        return list(_rows(self.member_ids, self.benchmark, t))

    def audit(self, tol: float | None = None) -> list[tuple[datetime, Verdict]]:
        """Audit every interval; returns only the failing ones."""
        tols = np.full(self.n_intervals, tol) if tol is not None else self.tolerances()
        failures = []
        for t in range(self.n_intervals):
            verdict = audit(self.outcome(t), self.benchmarks(t), float(tols[t]))
            if not verdict.passed:
                failures.append((self.starts[t], verdict))
        return failures

    def tolerances(self) -> np.ndarray:
        """Audit tolerance per interval, relative to the community's total capacity."""
        cal = self.calibration
        periods, slots = cal.index(self.schedule, self.starts)
        cap = cal.arrays(periods, slots, self.panel.generation, cal.span(self.panel.netting.minutes)).upper
        return 1e-9 * np.maximum(1.0, cap.sum(axis=(1, 2)))

    def tolerance(self, t: int) -> float:
        return float(self.tolerances()[t])


def _rows(ids, arrs: OutcomeArrays, t):
    cons = arrs.consumption[t].tolist()
    net, pay, util = arrs.net[t].tolist(), arrs.payment[t].tolist(), arrs.utility[t].tolist()
    for i, mid in enumerate(ids):
        yield MemberOutcome(mid, tuple(cons[i]), net[i], pay[i], util[i] - pay[i])


def _concat(parts: list[OutcomeArrays]) -> OutcomeArrays:
    def cat(name):
        vals = [getattr(p, name) for p in parts]
        return None if vals[0] is None else np.concatenate(vals)

    return OutcomeArrays(*(cat(n) for n in ("zone", "rate", "consumption", "net", "payment", "utility",
                                             "community_payment")))


def run_scenario(records, schedule: TouSchedule, netting: NettingPeriod | str = "15m",
                 calibration: Calibration | CalibrationConfig | None = None,
                 tol: float | None = None, workers: int = 1, chunk: int = 4096) -> ScenarioResult:
    """Price every netting interval and evaluate the community and its benchmark.

    ``records`` may be raw records or an already aggregated :class:`Panel`.
    Utilities are calibrated on the same data unless a :class:`Calibration`
    is passed.  Chunks of intervals may be evaluated on a thread pool; results
    are merged in timestamp order.
    """
    netting = NettingPeriod.parse(netting)
    panel = records if isinstance(records, Panel) else aggregate(records, netting)
    netting = panel.netting
    if not isinstance(calibration, Calibration):
        calibration = calibrate_utilities(panel, schedule, calibration)
    if list(calibration.member_ids) != list(panel.member_ids):
        raise ValueError("calibration members do not match the data")
    periods, slots = calibration.index(schedule, panel.starts)
    months = schedule.local_months(panel.starts)
    retail, export = schedule.rates(panel.starts)
    arr = calibration.arrays(periods, slots, panel.generation, calibration.span(netting.minutes))
    T = panel.n_intervals
    bounds = [(s, min(s + chunk, T)) for s in range(0, T, chunk)] or [(0, 0)]

    def work(span):
        s, e = span
        sub = CommunityArrays(arr.a[s:e], arr.b[s:e], arr.lower[s:e], arr.upper[s:e], arr.generation[s:e])
        fixed = np.full(e - s, schedule.fixed)
        return (decentralized_arrays(sub, retail[s:e], export[s:e], fixed, tol),
                benchmark_arrays(sub, retail[s:e], export[s:e], fixed, tol))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, bounds))  # map preserves submission order
    else:
        results = [work(b) for b in bounds]
    community = _concat([r[0] for r in results])
    bench = _concat([r[1] for r in results])
    log.info("simulated %d interval(s) of %s netting for %d member(s)", T, netting.label, len(panel.member_ids))
    return ScenarioResult(panel, schedule, calibration, retail, export, community, bench, months)
