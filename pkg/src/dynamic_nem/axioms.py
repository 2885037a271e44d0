"""Audit of the six cost-causation axioms on a single-interval outcome."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .welfare import MemberOutcome, Outcome

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9


class Axiom(str, enum.Enum):
    INDIVIDUAL_RATIONALITY = "IndividualRationality"
    PROFIT_NEUTRALITY = "ProfitNeutrality"
    EQUITY = "Equity"
    MONOTONICITY = "Monotonicity"
    COST_CAUSATION_PENALTY = "CostCausationPenalty"
    COST_MITIGATION_REWARD = "CostMitigationReward"


@dataclass(frozen=True)
class AxiomReport:
    """Outcome of one axiom check.

    ``boundary`` lists cases that violate a strict inequality only because the
    announced rate is exactly zero; they are reported but do not fail the axiom.
    """

    axiom: Axiom
    witnesses: tuple = ()
    tolerance: float = DEFAULT_TOL
    boundary: tuple = ()

    @property
    def passed(self) -> bool:
        return not self.witnesses

    def to_dict(self) -> dict:
        return {
            "axiom": self.axiom.value,
            "passed": self.passed,
            "witnesses": [list(w) for w in self.witnesses],
            "boundary": [list(w) for w in self.boundary],
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class Verdict:
    reports: tuple[AxiomReport, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def failed(self) -> list[Axiom]:
        return [r.axiom for r in self.reports if not r.passed]

    def __getitem__(self, axiom: Axiom) -> AxiomReport:
        for r in self.reports:
            if r.axiom == axiom:
                return r
        raise KeyError(axiom)

    def to_list(self) -> list[dict]:
        return [r.to_dict() for r in self.reports]


def _columns(outcome: Outcome):
    ids = [m.member_id for m in outcome.members]
    z = np.array([m.net for m in outcome.members], dtype=float)
    pay = np.array([m.payment for m in outcome.members], dtype=float)
    return ids, z, pay


def check_individual_rationality(outcome: Outcome, benchmarks: Sequence[MemberOutcome], tol=DEFAULT_TOL) -> AxiomReport:
    bench = {b.member_id: b for b in benchmarks}
    ids = [m.member_id for m in outcome.members]
    if set(bench) != set(ids) or len(bench) != len(benchmarks):
        raise ValueError(
            f"benchmark members {sorted(bench)} do not match outcome members {sorted(ids)}"
        )
    witnesses = tuple(
        (m.member_id, m.surplus, bench[m.member_id].surplus)
        for m in outcome.members
        if m.surplus < bench[m.member_id].surplus - tol
    )
    return AxiomReport(Axiom.INDIVIDUAL_RATIONALITY, witnesses, tol)


def check_profit_neutrality(outcome: Outcome, tol=DEFAULT_TOL) -> AxiomReport:
    profit = sum(m.payment for m in outcome.members) - outcome.community_payment
    witnesses = () if abs(profit) <= tol else (("operator", profit),)
    return AxiomReport(Axiom.PROFIT_NEUTRALITY, witnesses, tol)


def _pairs(mask: np.ndarray, ids, *values):
    i, j = np.nonzero(mask)
    keep = i < j
    return tuple(
        (ids[a], ids[b]) + tuple(float(v[k]) for v in values for k in (a, b))
        for a, b in zip(i[keep], j[keep])
    )


def check_equity(outcome: Outcome, tol=DEFAULT_TOL) -> AxiomReport:
    ids, z, pay = _columns(outcome)
    rate = abs(outcome.price.rate)
    same_z = np.abs(z[:, None] - z[None, :]) <= tol
    unequal = np.abs(pay[:, None] - pay[None, :]) > tol * rate + tol
    return AxiomReport(Axiom.EQUITY, _pairs(same_z & unequal, ids, z, pay), tol)


def check_monotonicity(outcome: Outcome, tol=DEFAULT_TOL) -> AxiomReport:
    """Same-sign members: larger |z| must not pay (or earn) less in magnitude.

    Payments are compared net of the fixed share so that a fixed charge does
    not mask the volumetric ordering.
    """
    ids, z, pay = _columns(outcome)
    vol = np.abs(pay - outcome.price.fixed_share)
    same_sign = (z[:, None] * z[None, :]) >= 0
    larger = np.abs(z)[:, None] >= np.abs(z)[None, :]
    regressive = vol[:, None] < vol[None, :] - tol
    mask = same_sign & larger & regressive
    np.fill_diagonal(mask, False)
    i, j = np.nonzero(mask)
    witnesses = tuple((ids[a], ids[b], float(z[a]), float(z[b]), float(pay[a]), float(pay[b])) for a, b in zip(i, j))
    return AxiomReport(Axiom.MONOTONICITY, witnesses, tol)


def check_cost_causation(outcome: Outcome, tol=DEFAULT_TOL) -> tuple[AxiomReport, AxiomReport]:
    """Penalty for net consumers and reward for net producers (strict signs).

    ``|z| <= tol`` counts as zero.  Violations at a zero announced rate are
    boundary cases and are listed separately.
    """
    ids, z, pay = _columns(outcome)
    adjusted = pay - outcome.price.fixed_share
    zero_rate = outcome.price.rate == 0
    reports = []
    for axiom, causes, ok in (
        (Axiom.COST_CAUSATION_PENALTY, z > tol, adjusted > 0),
        (Axiom.COST_MITIGATION_REWARD, z < -tol, adjusted < 0),
    ):
        bad = [(ids[k], float(z[k]), float(adjusted[k])) for k in np.nonzero(causes & ~ok)[0]]
        if zero_rate and bad:
            log.warning("%s: %d member(s) at a zero announced rate reported as boundary cases", axiom.value, len(bad))
            reports.append(AxiomReport(axiom, (), tol, tuple(bad)))
        else:
            reports.append(AxiomReport(axiom, tuple(bad), tol))
    return reports[0], reports[1]


def audit(outcome: Outcome, benchmarks: Sequence[MemberOutcome], tol=DEFAULT_TOL) -> Verdict:
    """Run all six axiom checks; the outcome meets cost causation iff all pass."""
    if not outcome.members:
        log.warning("auditing an outcome with no members; all axioms hold vacuously")
    penalty, reward = check_cost_causation(outcome, tol)
    return Verdict((
        check_individual_rationality(outcome, benchmarks, tol),
        check_profit_neutrality(outcome, tol),
        check_equity(outcome, tol),
        check_monotonicity(outcome, tol),
        penalty,
        reward,
    ))
