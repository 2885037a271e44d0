"""Dynamic NEM price announcement and payment rules.

The community announces one volumetric rate per interval, chosen from the
aggregate generation ``g_H`` and two demand thresholds:

* ``g_H < d_plus``  -> the retail rate (community is net consuming)
* ``g_H > d_minus`` -> the export rate (community is net producing)
* otherwise          -> the price ``mu*`` at which aggregate demand equals ``g_H``

Array kernels (``*_arrays``) take :class:`~dynamic_nem.core.CommunityArrays`
with arbitrary leading batch dimensions; the scalar API wraps them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import Community, CommunityArrays, NemTariff, clamped_demand_array

MAX_BISECTION_ITERATIONS = 60
RELATIVE_DEMAND_TOL = 1e-10


class Zone(str, enum.Enum):
    NET_CONSUMING = "NetConsuming"
    NET_ZERO = "NetZero"
    NET_PRODUCING = "NetProducing"

    @property
    def code(self) -> int:
        """Sign of the community's optimal net consumption in this zone."""
        return _ZONE_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "Zone":
        return _CODE_ZONES[int(code)]


_ZONE_CODES = {Zone.NET_CONSUMING: 1, Zone.NET_ZERO: 0, Zone.NET_PRODUCING: -1}
_CODE_ZONES = {v: k for k, v in _ZONE_CODES.items()}


@dataclass(frozen=True)
class Thresholds:
    d_plus: float
    d_minus: float

    def zone(self, g_H: float) -> Zone:
        if g_H < self.d_plus:
            return Zone.NET_CONSUMING
        if g_H > self.d_minus:
            return Zone.NET_PRODUCING
        return Zone.NET_ZERO


@dataclass(frozen=True)
class CommunityPrice:
    zone: Zone
    rate: float
    fixed_share: float

    def to_dict(self) -> dict:
        return {"zone": self.zone.value, "rate": self.rate, "fixed_share": self.fixed_share}


class NetZeroPriceError(ValueError):
    """Generation lies outside the net-zero zone, so no net-zero price exists."""


def default_tolerance(total_upper) -> np.ndarray | float:
    """Demand tolerance (kWh) used by the price solver, relative to total capacity."""
    return RELATIVE_DEMAND_TOL * np.asarray(total_upper, dtype=float)


# ---------------------------------------------------------------- bisection


def bisect_decreasing(fn, target, lo, hi, tol, max_iter=MAX_BISECTION_ITERATIONS, xtol_rel=1e-15):
    """Solve ``fn(x) = target`` on ``[lo, hi]`` for a non-increasing ``fn``.

    Two one-sided bisections run in lockstep: one for the left edge
    ``inf{x : fn(x) <= target + tol}`` and one for the right edge
    ``sup{x : fn(x) >= target - tol}``.  The midpoint of the two edges is
    returned, so a flat stretch of ``fn`` at the target resolves to the middle
    of that stretch, and ``|fn(x) - target| <= tol`` holds by monotonicity.

    All arguments broadcast; ``fn`` receives an array with an extra leading
    axis of length 2 and must map it elementwise.

    Returns ``(x, iterations)``.
    """
    target, lo, hi, tol = (np.asarray(v, dtype=float) for v in np.broadcast_arrays(target, lo, hi, tol))
    ends = fn(np.stack([lo, hi]))
    f_lo, f_hi = ends[0], ends[1]

    # left-edge search keeps fn(h1) <= target + tol
    left_at_lo = f_lo <= target + tol
    l1 = lo.copy()
    h1 = np.where(left_at_lo, lo, hi)
    # right-edge search keeps fn(l2) >= target - tol
    right_at_hi = f_hi >= target - tol
    l2 = np.where(right_at_hi, hi, lo)
    h2 = hi.copy()

    xtol = xtol_rel * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
    iterations = 0
    while iterations < max_iter:
        if not ((h1 - l1 > xtol).any() or (h2 - l2 > xtol).any()):
            break
        iterations += 1
        m1 = 0.5 * (l1 + h1)
        m2 = 0.5 * (l2 + h2)
        v = fn(np.stack([m1, m2]))
        ok1 = v[0] <= target + tol
        h1 = np.where(ok1, m1, h1)
        l1 = np.where(ok1, l1, m1)
        ok2 = v[1] >= target - tol
        l2 = np.where(ok2, m2, l2)
        h2 = np.where(ok2, h2, m2)
    return 0.5 * (h1 + l2), iterations


def _demand_fn(arr: CommunityArrays, n_axes: int):
    """Demand summed over the trailing ``n_axes`` of the device arrays."""
    axes = tuple(range(-n_axes, 0))
    pad = (Ellipsis,) + (None,) * n_axes

    def fn(mu):
        return clamped_demand_array(arr.a, arr.b, arr.lower, arr.upper, np.asarray(mu)[pad]).sum(axis=axes)

    return fn


def net_zero_price_arrays(arr: CommunityArrays, target, p_low, p_high, tol=None, per_member=False):
    """Batched net-zero price.

    With ``per_member=False`` the demand is aggregated over the whole
    community (result shape = batch shape); with ``per_member=True`` each
    member is solved on its own (result shape = batch + ``(H,)``).
    ``target`` must lie inside the demand range on ``[p_low, p_high]``.

    Returns ``(mu, iterations)``.
    """
    n_axes = 1 if per_member else 2
    if tol is None:
        tol = default_tolerance(arr.upper.sum(axis=tuple(range(-n_axes, 0))))
    return bisect_decreasing(_demand_fn(arr, n_axes), target, p_low, p_high, tol)


def thresholds_arrays(arr: CommunityArrays, retail, export, per_member=False):
    """Demand at the retail and export rates; with ``per_member`` prices broadcast over ``(..., H)``."""
    n_axes = 1 if per_member else 2
    fn = _demand_fn(arr, n_axes)
    return fn(np.asarray(retail, dtype=float)), fn(np.asarray(export, dtype=float))


def zone_prices_arrays(arr: CommunityArrays, g, retail, export, tol=None, per_member=False):
    """Zone code, announced rate and thresholds for a batch.

    Zone codes are ``+1`` (net consuming), ``0`` (net zero), ``-1`` (net producing).
    At ``g`` exactly on a threshold the adjacent tariff rate is returned, which
    keeps the rate continuous from the outer zone even when demand is flat there.
    """
    retail = np.asarray(retail, dtype=float)
    export = np.asarray(export, dtype=float)
    if per_member:
        retail, export = retail[..., None], export[..., None]
    d_plus, d_minus = thresholds_arrays(arr, retail, export, per_member)
    g = np.asarray(g, dtype=float)
    code = np.where(g < d_plus, 1, np.where(g > d_minus, -1, 0)).astype(np.int8)
    retail_b, export_b = np.broadcast_to(retail, d_plus.shape), np.broadcast_to(export, d_plus.shape)
    target = np.clip(g, d_plus, d_minus)
    mu, _ = net_zero_price_arrays(arr, target, export_b, retail_b, tol, per_member)
    open_zone = d_plus < d_minus
    mu = np.where(open_zone & (target <= d_plus), retail_b, mu)
    mu = np.where(open_zone & (target >= d_minus), export_b, mu)
    rate = np.where(code == 1, retail_b, np.where(code == -1, export_b, mu))
    return code, rate, d_plus, d_minus


# ---------------------------------------------------------------- scalar API


def aggregate_demand_at_price(c: Community, mu: float) -> float:
    arr = c.arrays()
    return float(clamped_demand_array(arr.a, arr.b, arr.lower, arr.upper, mu).sum())


def compute_thresholds(c: Community, t: NemTariff) -> Thresholds:
    return Thresholds(aggregate_demand_at_price(c, t.retail), aggregate_demand_at_price(c, t.export))


def solve_net_zero_price(c: Community, g_H: float, t: NemTariff, tol: float | None = None, full_output=False):
    """Price in ``[export, retail]`` at which aggregate demand equals ``g_H``.

    Raises :class:`NetZeroPriceError` if ``g_H`` is outside the net-zero zone
    by more than ``tol``.  With ``full_output`` returns ``(mu, iterations)``.
    """
    if tol is None:
        tol = float(default_tolerance(c.total_upper))
    th = compute_thresholds(c, t)
    if g_H < th.d_plus - tol or g_H > th.d_minus + tol:
        raise NetZeroPriceError(
            f"g_H={g_H} is outside the net-zero zone [{th.d_plus}, {th.d_minus}]"
        )
    if th.d_plus < th.d_minus and g_H <= th.d_plus:
        mu, it = t.retail, 0
    elif th.d_plus < th.d_minus and g_H >= th.d_minus:
        mu, it = t.export, 0
    else:
        x, it = net_zero_price_arrays(c.arrays(), g_H, t.export, t.retail, tol)
        mu = float(x)
    return (mu, it) if full_output else mu


def community_price(c: Community, g_H: float, t: NemTariff, tol: float | None = None) -> CommunityPrice:
    if g_H < 0:
        raise ValueError(f"aggregate generation must be >= 0, got {g_H}")
    code, rate, _, _ = zone_prices_arrays(c.arrays(), g_H, t.retail, t.export, tol)
    return CommunityPrice(Zone.from_code(code), float(rate), t.fixed / c.size)


def nem_charge(z, retail, export):
    """Volumetric NEM X charge: imports at ``retail``, exports at ``export``."""
    return retail * np.maximum(z, 0.0) + export * np.minimum(z, 0.0)


def member_payment(p: CommunityPrice, z_i: float) -> float:
    return p.rate * z_i + p.fixed_share


def community_payment(t: NemTariff, z_H: float) -> float:
    return float(nem_charge(z_H, t.retail, t.export)) + t.fixed


def benchmark_payment(t: NemTariff, z_i: float, H: int) -> float:
    if H < 1:
        raise ValueError(f"community size must be >= 1, got {H}")
    return float(nem_charge(z_i, t.retail, t.export)) + t.fixed / H
