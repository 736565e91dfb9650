import numpy as np
import pytest

from secuee.errors import DomainError
from secuee.scenario import (PRESET_NAMES, ScenarioSpec, channel_gain, db_to_linear,
                             dbm_to_watts, generate, group_indices, path_loss_db,
                             preset_utility, spec_from_dict)
from secuee.utility import Type1, Type2, Type3, validate_spec


def test_unit_conversions():
    assert dbm_to_watts(0) == pytest.approx(1e-3)
    assert dbm_to_watts(2) == pytest.approx(1.585e-3, rel=1e-3)
    assert dbm_to_watts(-174) == pytest.approx(3.98e-21, rel=1e-3)
    assert db_to_linear(10) == pytest.approx(10.0)


def test_channel_gain_examples():
    assert channel_gain(1.0) == pytest.approx(10 ** -12.81)
    assert path_loss_db(0.1) == pytest.approx(90.5)
    assert channel_gain(0.3, 8.0) / channel_gain(0.3) == pytest.approx(10 ** -0.8)
    with pytest.raises(DomainError):
        channel_gain(0.0)


def test_default_scenario():
    inst = generate(ScenarioSpec())
    assert inst.n == 30 and inst.b_total == 2e7
    assert np.allclose(inst.p_cir, 1.585e-3, rtol=1e-3)
    assert np.all(inst.r_min == 2e4) and np.all(inst.r_e == 2e4)
    u = inst.users[0].utility
    assert isinstance(u, Type3) and u.kappa == 1.0 and u.a == 0.5


def test_determinism_and_nesting():
    a = generate(ScenarioSpec(n_users=10, seed=7))
    b = generate(ScenarioSpec(n_users=10, seed=7))
    assert np.array_equal(a.g, b.g)
    bigger = generate(ScenarioSpec(n_users=20, seed=7))
    assert np.array_equal(bigger.g[:10], a.g)
    assert not np.array_equal(generate(ScenarioSpec(n_users=10, seed=8)).g, a.g)


def test_group_overrides():
    inst = generate(ScenarioSpec(n_users=10, r_e_bps=(0.0, 1e4)))
    assert np.all(inst.r_e[:5] == 0.0) and np.all(inst.r_e[5:] == 1e4)
    inst = generate(ScenarioSpec(n_users=9, weights=(100.0, 10.0, 1.0)))
    assert list(inst.c) == [100.0] * 3 + [10.0] * 3 + [1.0] * 3
    with pytest.raises(DomainError):
        generate(ScenarioSpec(n_users=2, weights=(1.0, 2.0, 3.0)))
    assert [len(g) for g in group_indices(10, 3)] == [4, 3, 3]


def test_conditions_always_hold():
    for seed in range(5):
        inst = generate(ScenarioSpec(n_users=8, seed=seed, r_e_bps=(0.0, 1e4)))
        assert np.all(inst.r_min >= inst.r_e) and np.all(inst.r_min > 0)


def test_preset_examples():
    seated = preset_utility("ssv360_user1_seated").spec
    assert isinstance(seated, Type1) and seated.f(0.0) == 0.0
    standing = preset_utility("ssv360_user1_standing").spec
    assert standing.f(15.94e6) == pytest.approx(3.2956)
    assert (standing.kappa, standing.a) == (3.2956, 0.2733)
    user2 = preset_utility("ssv360_user2_seated").spec
    assert isinstance(user2, Type2) and (user2.kappa, user2.a, user2.c) == (2.9351, 2.1224, 0.0)
    ef = preset_utility("netflix_elfuente1", y=1.0).spec
    assert ef.b == pytest.approx(1.0 + 10.0826)
    assert ef.f(0.0) == pytest.approx(33.4215 * np.log(11.0826))
    with pytest.raises(KeyError):
        preset_utility("nope")


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_presets_validate(name):
    assert validate_spec(preset_utility(name).spec).passed


def test_spec_from_dict():
    s = spec_from_dict({"n_users": 4, "r_e_factors": [0.0, 0.5], "distance_range": [0.2, 0.3]})
    assert s.r_e_bps == (0.0, 1e4) and s.distance_range == (0.2, 0.3)
    with pytest.raises(DomainError):
        spec_from_dict({"bogus": 1})
    s = spec_from_dict({"utility": {"kind": "type2", "kappa": 1.0, "a": 2.0}})
    assert isinstance(generate(s.replace(n_users=1)).users[0].utility, Type2)


def test_spec_validation():
    with pytest.raises(DomainError):
        ScenarioSpec(distance_range=(0.5, 0.1))
    with pytest.raises(DomainError):
        ScenarioSpec(n_users=0)
