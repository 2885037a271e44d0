"""Domain types and the quadratic utility calculus.

Every quantity is a float: energy in kWh, money in $, prices in $/kWh.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class QuadraticUtility:
    """Concave device utility ``U(d) = a*d - (b/2)*d**2``."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.b > 0):
            raise ValueError(f"utility curvature b must be > 0, got {self.b}")
        if not (self.a > 0):
            raise ValueError(f"utility intercept a must be > 0, got {self.a}")

    def value(self, d: float) -> float:
        return utility_value(self, d)

    def marginal(self, d: float) -> float:
        return marginal_utility(self, d)

    def inverse_marginal(self, mu: float) -> float:
        return inverse_marginal_utility(self, mu)


@dataclass(frozen=True)
class DeviceBounds:
    lower: float
    upper: float

    def __post_init__(self):
        if not (0 <= self.lower <= self.upper):
            raise ValueError(
                f"device bounds need 0 <= lower <= upper, got [{self.lower}, {self.upper}]"
            )


@dataclass(frozen=True)
class Device:
    utility: QuadraticUtility
    bounds: DeviceBounds


@dataclass(frozen=True)
class Member:
    """A community member: K >= 1 flexible devices and rooftop generation."""

    id: str
    devices: tuple[Device, ...]
    generation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        if len(self.devices) == 0:
            raise ValueError(f"member {self.id!r} needs at least one device")
        if not (self.generation >= 0):
            raise ValueError(f"member {self.id!r} generation must be >= 0, got {self.generation}")

    @classmethod
    def single(cls, id, a, b, lower, upper, generation=0.0) -> "Member":
        return cls(str(id), (Device(QuadraticUtility(a, b), DeviceBounds(lower, upper)),), generation)

    @property
    def is_adopter(self) -> bool:
        return self.generation > 0

    def utility(self, consumption: Sequence[float]) -> float:
        if len(consumption) != len(self.devices):
            raise ValueError(f"member {self.id!r}: {len(consumption)} consumption value(s) for {len(self.devices)} device(s)")
        return sum(utility_value(dev.utility, d) for dev, d in zip(self.devices, consumption))

    def with_generation(self, generation: float) -> "Member":
        return Member(self.id, self.devices, generation)


@dataclass(frozen=True)
class Community:
    members: tuple[Member, ...]
    _arrays: "CommunityArrays" = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if len(self.members) == 0:
            raise ValueError("a community needs at least one member")
        ids = [m.id for m in self.members]
        if len(set(ids)) != len(ids):
            raise ValueError("member ids must be unique")

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def generation(self) -> float:
        return float(sum(m.generation for m in self.members))

    @property
    def total_upper(self) -> float:
        return float(sum(dev.bounds.upper for m in self.members for dev in m.devices))

    def arrays(self) -> "CommunityArrays":
        if self._arrays is None:
            object.__setattr__(self, "_arrays", CommunityArrays.from_members(self.members))
        return self._arrays


@dataclass(frozen=True)
class NemTariff:
    """Utility-side NEM X tariff: retail (import), export rate and fixed charge."""

    retail: float
    export: float
    fixed: float = 0.0

    def __post_init__(self):
        if not (0 <= self.export <= self.retail):
            raise ValueError(
                f"tariff needs 0 <= export <= retail, got export={self.export}, retail={self.retail}"
            )
        if not (self.fixed >= 0):
            raise ValueError(f"fixed charge must be >= 0, got {self.fixed}")


@dataclass(frozen=True)
class CommunityArrays:
    """Padded array view of a community, optionally batched over intervals.

    Device parameters have shape ``(..., H, K)`` and generation ``(..., H)``.
    Padding devices have bounds ``[0, 0]`` so they add neither demand nor utility.
    """

    a: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    generation: np.ndarray

    @classmethod
    def from_members(cls, members: Sequence[Member]) -> "CommunityArrays":
        H = len(members)
        K = max(len(m.devices) for m in members)
        a = np.ones((H, K))
        b = np.ones((H, K))
        lo = np.zeros((H, K))
        hi = np.zeros((H, K))
        for i, m in enumerate(members):
            for k, dev in enumerate(m.devices):
                a[i, k] = dev.utility.a
                b[i, k] = dev.utility.b
                lo[i, k] = dev.bounds.lower
                hi[i, k] = dev.bounds.upper
        g = np.array([m.generation for m in members], dtype=float)
        return cls(a, b, lo, hi, g)

    @property
    def n_members(self) -> int:
        return self.a.shape[-2]

    def utility(self, d: np.ndarray) -> np.ndarray:
        """Per-member utility of consumption ``d`` (shape ``(..., H, K)``)."""
        return (self.a * d - 0.5 * self.b * d * d).sum(axis=-1)


def utility_value(u: QuadraticUtility, d: float) -> float:
    if d < 0:
        raise ValueError(f"consumption must be >= 0, got {d}")
    return u.a * d - 0.5 * u.b * d * d


def marginal_utility(u: QuadraticUtility, d: float) -> float:
    if d < 0:
        raise ValueError(f"consumption must be >= 0, got {d}")
    return u.a - u.b * d


def inverse_marginal_utility(u: QuadraticUtility, mu: float) -> float:
    # may be negative or above any bound; clamping happens in clamped_demand
    return (u.a - mu) / u.b


def clamped_demand(u: QuadraticUtility, bounds: DeviceBounds, mu: float) -> float:
    """Price-taking optimal consumption of one device at marginal price ``mu``."""
    return max(bounds.lower, min(inverse_marginal_utility(u, mu), bounds.upper))


def clamped_demand_array(a, b, lower, upper, mu):
    """Vectorised :func:`clamped_demand`; ``mu`` must broadcast against ``a``."""
    return np.minimum(np.maximum((a - mu) / b, lower), upper)
