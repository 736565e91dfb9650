import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import instance, unit_user
from secuee.errors import DomainError
from secuee.model import (Allocation, check_feasible, power_for_rate, rate, rates,
                          secrecy_rate, slater_point, uee, weighted_sum_uee)
from secuee.scenario import ScenarioSpec, generate
from secuee.utility import Type1, Type2, Type3


def test_rate_examples():
    u = unit_user()
    assert rate(3, 1, u) == pytest.approx(2.0)
    assert rate(0, 5, u) == 0.0
    assert rate(6, 2, u) == pytest.approx(4.0)


def test_rate_rejects_bad_inputs():
    u = unit_user()
    for p, b in [(1, 0), (-1, 1), (float("inf"), 1), (1, float("nan"))]:
        with pytest.raises(DomainError):
            rate(p, b, u)


def test_secrecy_rate_examples():
    assert secrecy_rate(3, 1, unit_user(r_e=0.5)) == pytest.approx(1.5)
    # rate 4 on (6, 2) minus r_e = 1
    assert secrecy_rate(6, 2, unit_user(r_e=1.0, r_min=1.0)) == pytest.approx(3.0)
    assert secrecy_rate(3, 1, unit_user(r_e=1.0, r_min=2.0)) == pytest.approx(1.0)


def test_uee_examples():
    # secrecy rate e - 1 from a Type 1 with kappa=a=b=1; p + p_cir = 1
    # gain picked so p=0.5 on b=1 gives secrecy rate e - 1, with p + p_cir = 1
    g = (2 ** (math.e - 1) - 1) / 0.5
    u1 = unit_user(Type1(1.0, 1.0, 1.0), g=g, p_cir=0.5, r_min=1e-9)
    assert uee(0.5, 1.0, u1) == pytest.approx(1.0)
    # g=15, p=b=1 gives rate 4
    u3 = unit_user(Type3(1.0, 0.5, 0.0), g=15.0, r_min=1.0)
    assert uee(1.0, 1.0, u3) == pytest.approx(1.0)
    # Type 2 saturates at kappa / (p + p_cir)
    u2 = unit_user(Type2(1.0, 1.0, 0.0), g=1e12, r_min=1.0)
    assert uee(1.0, 1.0, u2) == pytest.approx(0.5, rel=1e-9)


def test_uee_rejects_negative_secrecy():
    with pytest.raises(DomainError):
        uee(0.1, 1.0, unit_user(r_e=1.0, r_min=1.0))


def test_weighted_sum_examples():
    u = unit_user()
    a1 = Allocation([3.0], [1.0])
    single = weighted_sum_uee(a1, instance(u))
    assert single == pytest.approx(uee(3.0, 1.0, u))
    a2 = Allocation([3.0, 3.0], [1.0, 1.0])
    assert weighted_sum_uee(a2, instance(u, u, b_total=2.0)) == pytest.approx(2 * single)
    heavy = unit_user(c=10.0)
    assert weighted_sum_uee(a2, instance(heavy, u, b_total=2.0)) == pytest.approx(11 * single)
    with pytest.raises(DomainError):
        weighted_sum_uee(a1, instance(u, u, b_total=2.0))


def test_weighted_sum_permutation_invariant():
    inst = generate(ScenarioSpec(n_users=6, seed=3))
    a = slater_point(inst)
    perm = np.random.default_rng(0).permutation(6)
    permuted = inst.with_users([inst.users[i] for i in perm])
    assert weighted_sum_uee(Allocation(a.p[perm], a.b[perm]), permuted) == pytest.approx(
        weighted_sum_uee(a, inst), rel=1e-14)


def test_feasibility_examples():
    inst = generate(ScenarioSpec(n_users=4, seed=1))
    assert check_feasible(slater_point(inst), inst).is_feasible
    b = np.full(4, 1.1 * inst.b_total / 4)
    over = check_feasible(Allocation(power_for_rate(inst.r_min * 2, b, inst), b), inst)
    assert not over.is_feasible
    assert over.bandwidth_slack == pytest.approx(-0.1 * inst.b_total)
    b = np.full(4, inst.b_total / 4)
    edge = check_feasible(Allocation(power_for_rate(inst.r_min, b, inst), b), inst)
    assert edge.is_feasible
    assert np.all(edge.rate_violations <= 1e-6 * inst.r_min)


def test_allocation_positive_and_readonly():
    with pytest.raises(DomainError):
        Allocation([1.0, 0.0], [1.0, 1.0])
    a = Allocation([1.0], [2.0])
    with pytest.raises(ValueError):
        a.p[0] = 5.0


def test_user_params_condition():
    with pytest.raises(DomainError):
        unit_user(r_min=1.0, r_e=2.0)
    with pytest.raises(DomainError):
        unit_user(g=0.0)


pos = st.floats(1e-3, 1e3)


@given(pos, pos, st.floats(1.01, 5.0))
def test_rate_increasing(p, b, k):
    u = unit_user()
    assert rate(k * p, b, u) > rate(p, b, u)
    assert rate(p, k * b, u) > rate(p, b, u)


@given(pos, pos, pos, pos, st.floats(0.01, 0.99))
def test_rate_jointly_concave(p1, b1, p2, b2, t):
    u = unit_user()
    mid = rate(t * p1 + (1 - t) * p2, t * b1 + (1 - t) * b2, u)
    chord = t * rate(p1, b1, u) + (1 - t) * rate(p2, b2, u)
    assert mid >= chord * (1 - 1e-9)


@given(pos, pos, pos, st.floats(0.01, 0.99))
def test_uee_numerator_concave_in_p(b, p1, p2, t):
    u = unit_user(Type3(1.0, 0.5, 0.0), r_min=1e-6)

    def num(p):
        return u.utility.f(secrecy_rate(p, b, u))

    assert num(t * p1 + (1 - t) * p2) >= (t * num(p1) + (1 - t) * num(p2)) * (1 - 1e-9)


def test_power_for_rate_roundtrip():
    inst = generate(ScenarioSpec(n_users=5, seed=2))
    b = np.linspace(1e5, 5e6, 5)
    p = power_for_rate(inst.r_min, b, inst)
    assert np.allclose(rates(p, b, inst), inst.r_min, rtol=1e-12)
