import logging
from dataclasses import replace

import numpy as np
import pytest
from conftest import random_instance, worked_instance
from hypothesis import given
from hypothesis import strategies as st

from dynamic_nem.axioms import (
    Axiom,
    audit,
    check_cost_causation,
    check_equity,
    check_individual_rationality,
    check_monotonicity,
    check_profit_neutrality,
)
from dynamic_nem.pricing import CommunityPrice, Zone
from dynamic_nem.welfare import MemberOutcome, Outcome, benchmark_outcomes, decentralized_outcome

seeds = st.integers(0, 2**32 - 1)


def _outcome(rate, rows, fixed_share=0.0, bill=None):
    members = [MemberOutcome(mid, (max(z, 0.0),), z, p, 0.0) for mid, z, p in rows]
    if bill is None:
        bill = sum(p for _, _, p in rows)
    return Outcome.assemble(CommunityPrice(Zone.NET_ZERO, rate, fixed_share), members, bill)


def test_worked_outcome_passes_all_six():
    c, t = worked_instance()
    v = audit(decentralized_outcome(c, None, t), benchmark_outcomes(c, t))
    assert v.passed
    assert len(v.reports) == 6
    assert [r.axiom for r in v.reports] == list(Axiom)


def test_tampered_payment_breaks_profit_neutrality():
    c, t = worked_instance()
    o = decentralized_outcome(c, None, t)
    rows = list(o.members)
    rows[0] = replace(rows[0], payment=rows[0].payment + 0.01, surplus=rows[0].surplus - 0.01)
    bad = Outcome(o.price, tuple(rows), o.aggregate_net, o.community_payment, o.welfare, 0.01)
    v = audit(bad, benchmark_outcomes(c, t))
    assert Axiom.PROFIT_NEUTRALITY in v.failed
    assert v[Axiom.PROFIT_NEUTRALITY].witnesses[0][1] == pytest.approx(0.01)


def test_individual_rationality_witness_and_alignment():
    o = _outcome(0.2, [("a", 1.0, 0.2), ("b", -1.0, -0.2)])
    bench = [MemberOutcome("a", (1.0,), 1.0, 0.2, 0.5), MemberOutcome("b", (0.0,), -1.0, -0.1, -0.5)]
    r = check_individual_rationality(o, bench)
    assert [w[0] for w in r.witnesses] == ["a"]
    with pytest.raises(ValueError):
        check_individual_rationality(o, bench[:1])
    with pytest.raises(ValueError):
        check_individual_rationality(o, [bench[0], replace(bench[1], member_id="c")])


def test_equity_violation():
    o = _outcome(0.2, [("a", 0.5, 0.1), ("b", 0.5, 0.12)])
    r = check_equity(o)
    assert not r.passed and r.witnesses[0][:2] == ("a", "b")
    # different nets are not comparable
    assert check_equity(_outcome(0.2, [("a", 0.75, 0.15), ("b", -0.75, -0.15)])).passed


def test_monotonicity_violation():
    o = _outcome(0.2, [("a", 1.0, 0.1), ("b", 0.5, 0.15)])
    r = check_monotonicity(o)
    assert not r.passed
    assert r.witnesses[0][:2] == ("a", "b")


def test_monotonicity_uses_fixed_adjusted_payments():
    # a fixed share of 1.0 on top of a tiny volumetric ordering must not hide it
    o = _outcome(0.2, [("a", 0.1, 1.02), ("b", 0.05, 1.01)], fixed_share=1.0)
    assert check_monotonicity(o).passed
    o = _outcome(0.2, [("a", 0.1, 1.005), ("b", 0.05, 1.01)], fixed_share=1.0)
    assert not check_monotonicity(o).passed


def test_cost_causation_signs():
    o = _outcome(0.2, [("a", 0.5, -0.01), ("b", -0.5, 0.01)])
    pen, rew = check_cost_causation(o)
    assert [w[0] for w in pen.witnesses] == ["a"]
    assert [w[0] for w in rew.witnesses] == ["b"]
    # |z| within tolerance is treated as zero
    pen, rew = check_cost_causation(_outcome(0.2, [("a", 1e-12, 0.0)]))
    assert pen.passed and rew.passed


def test_zero_rate_is_a_boundary_case(caplog):
    o = _outcome(0.0, [("a", -0.5, 0.0)])
    with caplog.at_level(logging.WARNING):
        pen, rew = check_cost_causation(o)
    assert rew.passed
    assert rew.boundary == (("a", -0.5, 0.0),)
    assert "boundary" in caplog.text


def test_empty_outcome_passes_with_warning(caplog):
    o = Outcome.assemble(CommunityPrice(Zone.NET_CONSUMING, 0.4, 0.0), [], 0.0)
    with caplog.at_level(logging.WARNING):
        v = audit(o, [])
    assert v.passed
    assert "vacuous" in caplog.text


def test_profit_neutrality_tolerance():
    o = _outcome(0.2, [("a", 1.0, 0.2)], bill=0.2 + 5e-10)
    assert check_profit_neutrality(o).passed
    assert not check_profit_neutrality(o, tol=1e-10).passed


# ------------------------------------------------------------ properties


def _naive_equity(o, tol):
    bad = 0
    ms = o.members
    for i in range(len(ms)):
        for j in range(i + 1, len(ms)):
            if abs(ms[i].net - ms[j].net) <= tol and abs(ms[i].payment - ms[j].payment) > tol * abs(o.price.rate) + tol:
                bad += 1
    return bad


def _naive_monotone(o, tol):
    bad = 0
    f = o.price.fixed_share
    for x in o.members:
        for y in o.members:
            if x is y or x.net * y.net < 0:
                continue
            if abs(x.net) >= abs(y.net) and abs(x.payment - f) < abs(y.payment - f) - tol:
                bad += 1
    return bad


@given(seed=seeds)
def test_dynamic_nem_outcomes_pass_everything(seed):
    rng = np.random.default_rng(seed)
    c, t = random_instance(rng)
    tol = 1e-9 * max(1.0, c.total_upper)
    v = audit(decentralized_outcome(c, None, t), benchmark_outcomes(c, t), tol)
    assert v.passed, v.to_list()


@given(seed=seeds, noise=st.floats(0, 0.05))
def test_checks_match_naive_loops(seed, noise):
    # perturbed payments produce violations; vectorized checks must agree with plain loops
    rng = np.random.default_rng(seed)
    c, t = random_instance(rng)
    o = decentralized_outcome(c, None, t)
    rows = [replace(m, payment=m.payment + float(rng.normal(0, noise))) for m in o.members]
    if rng.random() < 0.5 and len(rows) > 1:
        rows[1] = replace(rows[1], net=rows[0].net)
    bad = Outcome(o.price, tuple(rows), o.aggregate_net, o.community_payment, o.welfare, o.operator_profit)
    tol = 1e-9
    assert len(check_equity(bad, tol).witnesses) == _naive_equity(bad, tol)
    assert len(check_monotonicity(bad, tol).witnesses) == _naive_monotone(bad, tol)


@given(seed=seeds)
def test_verdicts_invariant_under_permutation(seed):
    rng = np.random.default_rng(seed)
    c, t = random_instance(rng)
    o = decentralized_outcome(c, None, t)
    rows = [replace(m, payment=m.payment + float(rng.normal(0, 0.02))) for m in o.members]
    bench = benchmark_outcomes(c, t)
    perm = rng.permutation(len(rows))
    a = Outcome(o.price, tuple(rows), o.aggregate_net, o.community_payment, o.welfare, o.operator_profit)
    b = Outcome(o.price, tuple(rows[k] for k in perm), o.aggregate_net, o.community_payment, o.welfare, o.operator_profit)
    va, vb = audit(a, bench), audit(b, [bench[k] for k in perm])
    assert [r.passed for r in va.reports] == [r.passed for r in vb.reports]


@given(seed=seeds)
def test_equity_and_monotonicity_follow_from_one_rate(seed):
    # with P = rate*z + f, payments depend on z alone and grow with |z| within a sign
    rng = np.random.default_rng(seed)
    c, t = random_instance(rng)
    o = decentralized_outcome(c, None, t)
    f = o.price.fixed_share
    for m in o.members:
        assert m.payment - f == pytest.approx(o.price.rate * m.net, abs=1e-12)
    assert check_equity(o).passed and check_monotonicity(o).passed
