"""Centralized and decentralized community optima, standalone benchmark, surplus accounting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Community, CommunityArrays, Member, NemTariff, clamped_demand
from .core import clamped_demand_array
from .pricing import (
    CommunityPrice,
    Zone,
    benchmark_payment,
    community_payment,
    community_price,
    compute_thresholds,
    default_tolerance,
    member_payment,
    nem_charge,
    solve_net_zero_price,
    zone_prices_arrays,
)


@dataclass(frozen=True)
class MemberOutcome:
    member_id: str
    consumption: tuple[float, ...]
    net: float
    payment: float
    surplus: float

    @property
    def utility(self) -> float:
        return self.surplus + self.payment

    def to_dict(self) -> dict:
        return {
            "member_id": self.member_id,
            "consumption": list(self.consumption),
            "net": self.net,
            "payment": self.payment,
            "surplus": self.surplus,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MemberOutcome":
        return cls(str(d["member_id"]), tuple(float(x) for x in d["consumption"]),
                   float(d["net"]), float(d["payment"]), float(d["surplus"]))


@dataclass(frozen=True)
class Outcome:
    price: CommunityPrice
    members: tuple[MemberOutcome, ...]
    aggregate_net: float
    community_payment: float
    welfare: float
    operator_profit: float

    @classmethod
    def assemble(cls, price: CommunityPrice, members, community_bill: float) -> "Outcome":
        members = tuple(members)
        z_H = float(sum(m.net for m in members))
        return cls(
            price=price,
            members=members,
            aggregate_net=z_H,
            community_payment=community_bill,
            welfare=float(sum(m.surplus for m in members)),
            operator_profit=float(sum(m.payment for m in members)) - community_bill,
        )

    def member(self, member_id: str) -> MemberOutcome:
        for m in self.members:
            if m.member_id == member_id:
                return m
        raise KeyError(member_id)

    def to_dict(self) -> dict:
        return {
            "price": self.price.to_dict(),
            "members": [m.to_dict() for m in self.members],
            "aggregate_net": self.aggregate_net,
            "community_payment": self.community_payment,
            "welfare": self.welfare,
            "operator_profit": self.operator_profit,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Outcome":
        p = d["price"]
        price = CommunityPrice(Zone(p["zone"]), float(p["rate"]), float(p["fixed_share"]))
        members = tuple(MemberOutcome.from_dict(m) for m in d["members"])
        return cls(price, members, float(d["aggregate_net"]), float(d["community_payment"]),
                   float(d["welfare"]), float(d["operator_profit"]))


@dataclass(frozen=True)
class SurplusGain:
    absolute: float
    percent: float | None  # None when the benchmark surplus is zero


# ---------------------------------------------------------------- scalar API


def optimal_aggregate_consumption(c: Community, g_H: float, t: NemTariff) -> float:
    th = compute_thresholds(c, t)
    return max(th.d_plus, min(g_H, th.d_minus))


def _consume_at(m: Member, rate: float) -> tuple[float, ...]:
    return tuple(clamped_demand(dev.utility, dev.bounds, rate) for dev in m.devices)


def centralized_optimum(c: Community, g_H: float | None, t: NemTariff, tol: float | None = None) -> Outcome:
    """Welfare-maximizing schedule chosen by the operator for the whole community.

    The centralized program only fixes the bill at the point of common
    coupling; member rows carry an equal share of it so that the welfare
    reported here is ``sum(U_i) - P_H``.  ``price.rate`` is the shadow price
    of the aggregate balance.
    """
    if g_H is None:
        g_H = c.generation
    th = compute_thresholds(c, t)
    zone = th.zone(g_H)
    if zone is Zone.NET_CONSUMING:
        shadow = t.retail
    elif zone is Zone.NET_PRODUCING:
        shadow = t.export
    else:
        shadow = solve_net_zero_price(c, g_H, t, tol)
    consumption = [_consume_at(m, shadow) for m in c.members]
    z_H = sum(sum(d) for d in consumption) - g_H
    bill = community_payment(t, z_H)
    share = bill / c.size
    rows = []
    for m, d in zip(c.members, consumption):
        rows.append(MemberOutcome(m.id, d, sum(d) - m.generation, share, m.utility(d) - share))
    out = Outcome.assemble(CommunityPrice(zone, shadow, t.fixed / c.size), rows, bill)
    return out


def max_welfare(c: Community, g_H: float, t: NemTariff, tol: float | None = None) -> float:
    """Closed-form optimal community welfare as a function of aggregate generation."""
    th = compute_thresholds(c, t)
    zone = th.zone(g_H)
    if zone is Zone.NET_CONSUMING:
        u = sum(m.utility(_consume_at(m, t.retail)) for m in c.members)
        return u - t.retail * (th.d_plus - g_H) - t.fixed
    if zone is Zone.NET_PRODUCING:
        u = sum(m.utility(_consume_at(m, t.export)) for m in c.members)
        return u - t.export * (th.d_minus - g_H) - t.fixed
    mu = solve_net_zero_price(c, g_H, t, tol)
    return sum(m.utility(_consume_at(m, mu)) for m in c.members) - t.fixed


def member_best_response(m: Member, p: CommunityPrice) -> MemberOutcome:
    """Surplus-maximizing schedule of one member facing the announced price."""
    d = _consume_at(m, p.rate)
    z = sum(d) - m.generation
    pay = member_payment(p, z)
    return MemberOutcome(m.id, d, z, pay, m.utility(d) - pay)


def decentralized_outcome(c: Community, g_H: float | None, t: NemTariff, tol: float | None = None) -> Outcome:
    """Announce the Dynamic NEM price and let every member best-respond."""
    total = c.generation
    if g_H is None:
        g_H = total
    elif abs(g_H - total) > 1e-9 * max(1.0, abs(total)):
        raise ValueError(f"g_H={g_H} does not match the members' total generation {total}")
    price = community_price(c, g_H, t, tol)
    rows = [member_best_response(m, price) for m in c.members]
    z_H = sum(r.net for r in rows)
    return Outcome.assemble(price, rows, community_payment(t, z_H))


def benchmark_standalone_optimum(m: Member, t: NemTariff, H: int, tol: float | None = None) -> MemberOutcome:
    """Optimal schedule of the member as a standalone NEM X customer."""
    solo = Community((m,))
    th = compute_thresholds(solo, t)
    zone = th.zone(m.generation)
    if zone is Zone.NET_CONSUMING:
        rate = t.retail
    elif zone is Zone.NET_PRODUCING:
        rate = t.export
    else:
        rate = solve_net_zero_price(solo, m.generation, t, tol)
    d = _consume_at(m, rate)
    z = sum(d) - m.generation
    pay = benchmark_payment(t, z, H)
    return MemberOutcome(m.id, d, z, pay, m.utility(d) - pay)


def benchmark_outcomes(c: Community, t: NemTariff, tol: float | None = None) -> list[MemberOutcome]:
    return [benchmark_standalone_optimum(m, t, c.size, tol) for m in c.members]


def surplus_gain(community: MemberOutcome, benchmark: MemberOutcome) -> SurplusGain:
    if community.member_id != benchmark.member_id:
        raise ValueError(f"comparing different members: {community.member_id!r} vs {benchmark.member_id!r}")
    gain = community.surplus - benchmark.surplus
    pct = None if benchmark.surplus == 0 else 100.0 * gain / abs(benchmark.surplus)
    return SurplusGain(gain, pct)


# ---------------------------------------------------------------- batched kernels


@dataclass(frozen=True)
class OutcomeArrays:
    """Per-interval outcomes for a batch; member quantities have shape ``(..., H)``."""

    zone: np.ndarray
    rate: np.ndarray
    consumption: np.ndarray  # (..., H, K)
    net: np.ndarray
    payment: np.ndarray
    utility: np.ndarray
    community_payment: np.ndarray | None = None

    @property
    def surplus(self) -> np.ndarray:
        return self.utility - self.payment

    @property
    def aggregate_net(self) -> np.ndarray:
        return self.net.sum(axis=-1)


def decentralized_arrays(arr: CommunityArrays, retail, export, fixed=0.0, tol=None) -> OutcomeArrays:
    retail, export, fixed = (np.asarray(v, dtype=float) for v in (retail, export, fixed))
    H = arr.n_members
    g_H = arr.generation.sum(axis=-1)
    code, rate, _, _ = zone_prices_arrays(arr, g_H, retail, export, tol)
    d = clamped_demand_array(arr.a, arr.b, arr.lower, arr.upper, rate[..., None, None])
    z = d.sum(axis=-1) - arr.generation
    payment = rate[..., None] * z + (fixed / H)[..., None]
    bill = nem_charge(z.sum(axis=-1), retail, export) + fixed
    return OutcomeArrays(code, rate, d, z, payment, arr.utility(d), bill)


def benchmark_arrays(arr: CommunityArrays, retail, export, fixed=0.0, tol=None) -> OutcomeArrays:
    retail, export, fixed = (np.asarray(v, dtype=float) for v in (retail, export, fixed))
    H = arr.n_members
    code, rate, _, _ = zone_prices_arrays(arr, arr.generation, retail, export, tol, per_member=True)
    d = clamped_demand_array(arr.a, arr.b, arr.lower, arr.upper, rate[..., None])
    z = d.sum(axis=-1) - arr.generation
    payment = nem_charge(z, retail[..., None], export[..., None]) + (fixed / H)[..., None]
    return OutcomeArrays(code, rate, d, z, payment, arr.utility(d))


def solver_tolerance(c: Community) -> float:
    return float(default_tolerance(c.total_upper))
