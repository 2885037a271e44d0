"""Shared instance generators and brute-force oracles.

The oracles deliberately avoid the package's pricing code: they work from
the utility parameters and the NEM X bill alone.
"""

import numpy as np
import pytest
from hypothesis import settings

from dynamic_nem import Community, Device, DeviceBounds, Member, NemTariff, QuadraticUtility

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"


# ------------------------------------------------------------------ instances


def random_member(rng, mid, k_max=4, gen_scale=2.0, adopter_p=0.7, k=None):
    k = k if k is not None else int(rng.integers(1, k_max + 1))
    devices = []
    for _ in range(k):
        a = float(rng.uniform(0.2, 2.0))
        b = float(rng.uniform(0.1, 3.0))
        lo = float(rng.uniform(0, 0.3)) if rng.random() < 0.3 else 0.0
        hi = lo + float(rng.uniform(0.1, 2.0))
        devices.append(Device(QuadraticUtility(a, b), DeviceBounds(lo, hi)))
    g = float(rng.uniform(0, gen_scale * k)) if rng.random() < adopter_p else 0.0
    return Member(mid, tuple(devices), g)


def random_tariff(rng, fixed_p=0.3):
    retail = float(rng.uniform(0.05, 0.8))
    export = float(rng.uniform(0, retail)) if rng.random() < 0.9 else retail
    fixed = float(rng.uniform(0, 2.0)) if rng.random() < fixed_p else 0.0
    return NemTariff(retail, export, fixed)


def random_instance(rng, h_max=10, k_max=4):
    H = int(rng.integers(1, h_max + 1))
    c = Community(tuple(random_member(rng, f"m{i}", k_max) for i in range(H)))
    return c, random_tariff(rng)


def worked_instance():
    m1 = Member.single("m1", 1.0, 1.0, 0.0, 2.0, 1.5)
    m2 = Member.single("m2", 1.0, 1.0, 0.0, 2.0, 0.0)
    return Community((m1, m2)), NemTariff(0.4, 0.1, 0.0)


@pytest.fixture
def worked():
    return worked_instance()


# ------------------------------------------------------------------ oracles


def nem_bill(z, t: NemTariff):
    """NEM X bill for net consumption z (no fixed part)."""
    z = np.asarray(z, dtype=float)
    return np.where(z >= 0, t.retail * z, t.export * z)


def device_utility(dev: Device, d):
    u = dev.utility
    return u.a * d - 0.5 * u.b * d * d


def member_value_grid(m: Member, step):
    """Best utility of a member on a grid of total consumptions (max-plus over devices).

    Returns ``(lowest_total, values)`` with values[j] the best utility at
    total ``lowest_total + j*step``.
    """
    lo_tot = 0.0
    vals = np.array([0.0])
    for dev in m.devices:
        lo, hi = dev.bounds.lower, dev.bounds.upper
        n = int(round((hi - lo) / step))
        grid = lo + step * np.arange(n + 1)
        vals = maxplus(vals, device_utility(dev, grid))
        lo_tot += lo
    return lo_tot, vals


def maxplus(f, g):
    """(f ⊕ g)[k] = max_{i+j=k} f[i] + g[j]."""
    out = np.full(len(f) + len(g) - 1, -np.inf)
    for j, gv in enumerate(g):
        np.maximum(out[j:j + len(f)], f + gv, out=out[j:j + len(f)])
    return out


def grid_welfare(c: Community, t: NemTariff, g_H=None, step=1e-3):
    """Exhaustive grid optimum of sum(U) - bill over consumption grids with the given step."""
    g_H = c.generation if g_H is None else g_H
    lo_tot, vals = 0.0, np.array([0.0])
    for m in c.members:
        lo, v = member_value_grid(m, step)
        vals = maxplus(vals, v)
        lo_tot += lo
    D = lo_tot + step * np.arange(len(vals))
    return float(np.max(vals - nem_bill(D - g_H, t))) - t.fixed


def grid_best_response(m: Member, rate, step=1e-3):
    """Member's best surplus at a linear rate, by grid search over total consumption."""
    lo, v = member_value_grid(m, step)
    D = lo + step * np.arange(len(v))
    return float(np.max(v - rate * (D - m.generation)))


def grid_standalone(m: Member, t: NemTariff, step=1e-3):
    lo, v = member_value_grid(m, step)
    D = lo + step * np.arange(len(v))
    return float(np.max(v - nem_bill(D - m.generation, t)))


def demand_at(c: Community, mu):
    """Aggregate demand at price mu, straight from the device first-order conditions."""
    total = 0.0
    for m in c.members:
        for dev in m.devices:
            d = (dev.utility.a - mu) / dev.utility.b
            total += min(max(d, dev.bounds.lower), dev.bounds.upper)
    return total


def plain_bisection(c: Community, target, lo, hi, iters=200):
    """Textbook bisection for demand(mu) = target on a decreasing demand curve."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if demand_at(c, mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
