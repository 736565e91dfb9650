import math

import numpy as np
import pytest

from conftest import instance, unit_user
from randomized import golden_oracle, random_user_and_bandwidth
from secuee.baselines import (BaselineConfig, alternating, bandwidth_for_rate,
                              default_fixed_powers, optimize_bandwidth_only,
                              optimize_power_given_bandwidth, optimize_power_only, p_min_for)
from secuee.errors import DomainError
from secuee.model import LN2, check_feasible, rate, uee
from secuee.outer import solve
from secuee.scenario import ScenarioSpec, generate
from secuee.utility import CustomUtility


def test_p_min_examples():
    assert p_min_for(1.0, unit_user(r_min=1.0)) == pytest.approx(1.0)
    assert p_min_for(2.0, unit_user(r_min=4.0)) == pytest.approx(6.0)
    inst = generate(ScenarioSpec(n_users=5, seed=0))
    for u in inst.users:
        p = p_min_for(3e6, u)
        assert rate(p, 3e6, u) == pytest.approx(u.r_min, rel=1e-12)
        assert rate(p, 3e6, u) >= u.r_min


@pytest.mark.parametrize("kind", ["type1", "type2", "type3"])
def test_power_closed_forms_match_oracle(kind):
    rng = np.random.default_rng(11)
    for _ in range(30):
        u, b = random_user_and_bandwidth(kind, rng)
        p = optimize_power_given_bandwidth(u, b)
        assert p == pytest.approx(golden_oracle(u, b), rel=1e-6)


def test_power_clamps_to_p_min():
    # a high minimum rate on a narrow band puts p_min past the UEE peak
    base = generate(ScenarioSpec(n_users=1, seed=0)).users[0]
    u = base.__class__(**{**base.__dict__, "r_min": 2e6, "r_e": 0.0})
    b = 1e5
    p = optimize_power_given_bandwidth(u, b)
    assert p == p_min_for(b, u)
    assert uee(p * 1.01, b, u) < uee(p, b, u)


@pytest.mark.parametrize("kind", ["type1", "type2", "type3"])
def test_power_dominates_grid(kind):
    rng = np.random.default_rng(3)
    u, b = random_user_and_bandwidth(kind, rng)
    p = optimize_power_given_bandwidth(u, b)
    best = uee(p, b, u)
    for q in np.linspace(p_min_for(b, u), 100 * p, 1000):
        assert uee(q, b, u) <= best * (1 + 1e-12)


def test_power_generic_utility():
    base = generate(ScenarioSpec(n_users=1, seed=1)).users[0]
    custom = CustomUtility(lambda x: math.sqrt(x / 1e6), lambda x: 0.5 / math.sqrt(x * 1e6),
                           name="sqrt")
    u = base.__class__(**{**base.__dict__, "utility": custom})
    p = optimize_power_given_bandwidth(u, 5e6)
    assert p == pytest.approx(golden_oracle(u, 5e6), rel=1e-6)


def test_power_only_properties():
    inst = generate(ScenarioSpec(n_users=6, seed=4))
    rep = optimize_power_only(inst)
    assert check_feasible(rep.allocation, inst).is_feasible
    perm = [5, 3, 1, 0, 2, 4]
    rep2 = optimize_power_only(inst.with_users([inst.users[i] for i in perm]))
    assert np.array_equal(rep2.allocation.p, rep.allocation.p[perm])
    assert rep.objective <= solve(inst).objective * (1 + 1e-6)
    one = generate(ScenarioSpec(n_users=1, seed=4))
    assert optimize_power_only(one).allocation.p[0] == optimize_power_given_bandwidth(
        one.users[0], one.b_total)


def test_bandwidth_for_rate_roundtrip():
    inst = generate(ScenarioSpec(n_users=4, seed=2))
    p = default_fixed_powers(inst)
    b = bandwidth_for_rate(p, inst)
    for n, u in enumerate(inst.users):
        assert rate(p[n], b[n], u) == pytest.approx(u.r_min, rel=1e-12)
    with pytest.raises(DomainError):
        bandwidth_for_rate(np.full(4, 1e-30), inst)


def test_bandwidth_only_symmetric():
    u = generate(ScenarioSpec(n_users=1, seed=0)).users[0]
    inst = instance(u, u, u, u, b_total=2e7)
    rep = optimize_bandwidth_only(inst, np.full(4, 1e-3))
    assert np.allclose(rep.allocation.b, 5e6, rtol=1e-9)


def test_bandwidth_only_clamps_weak_users():
    # a user with negligible weight only keeps its minimum-rate bandwidth
    inst = generate(ScenarioSpec(n_users=4, seed=3, weights=(1.0, 1e-9)))
    p = default_fixed_powers(inst)
    rep = optimize_bandwidth_only(inst, p)
    b_min = bandwidth_for_rate(p, inst)
    assert np.allclose(rep.allocation.b[2:], b_min[2:], rtol=1e-6)
    assert check_feasible(rep.allocation, inst).is_feasible


@pytest.mark.parametrize("seed", range(3))
def test_bandwidth_only_matches_grid(seed):
    inst = generate(ScenarioSpec(n_users=2, seed=seed))
    p = default_fixed_powers(inst)
    rep = optimize_bandwidth_only(inst, p)
    b_min = bandwidth_for_rate(p, inst)
    b1 = np.linspace(b_min[0], inst.b_total - b_min[1], 10_000)
    best = -np.inf
    for frac in b1:
        b = np.array([frac, inst.b_total - frac])
        r = b * np.log1p(inst.g * p / (inst.sigma2 * b)) / LN2
        f = inst.utilities.f(np.maximum(r - inst.r_e, 0.0))
        best = max(best, float(np.sum(inst.c * f / (p + inst.p_cir))))
    assert rep.objective >= best * (1 - 1e-3)
    assert rep.objective == pytest.approx(best, rel=1e-3)


def test_bandwidth_only_rejects_bad_powers():
    inst = generate(ScenarioSpec(n_users=3))
    with pytest.raises(DomainError):
        optimize_bandwidth_only(inst, np.array([1e-3, -1.0, 1e-3]))
    with pytest.raises(DomainError):
        optimize_bandwidth_only(inst, np.full(3, 1e-16))


@pytest.mark.parametrize("seed", range(2))
def test_alternating_properties(seed):
    inst = generate(ScenarioSpec(n_users=8, seed=seed))
    rep = alternating(inst)
    trace = rep.objective_trace
    assert all(b >= a * (1 - 1e-12) for a, b in zip(trace, trace[1:]))
    assert check_feasible(rep.allocation, inst).is_feasible
    assert rep.objective <= solve(inst).objective * (1 + 1e-6)


def test_alternating_single_user():
    inst = generate(ScenarioSpec(n_users=1, seed=6))
    rep = alternating(inst)
    assert rep.outer_iterations <= 2
    assert rep.objective == pytest.approx(solve(inst).objective, rel=1e-6)


def test_config_validation():
    with pytest.raises(DomainError):
        BaselineConfig(fixed_power=0.0)


def test_p_min_unreachable_bandwidth():
    u = unit_user(r_min=1e4)
    with pytest.raises(DomainError):
        p_min_for(1.0, u)
