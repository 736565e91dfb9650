"""Random cell-layout instances and fitted utility presets.

Users get a distance drawn uniformly from ``distance_range`` and a log-normal
shadowing term; the gain is the inverse of the 128.1 + 37.6 log10(d) dB path
loss plus shadowing. Every user draws from its own PCG64 stream spawned from
``SeedSequence(seed)``, so user k is the same user for every ``n_users`` and a
larger instance always extends a smaller one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DomainError
from .model import ProblemInstance, UserParams
from .utility import Type1, Type2, Type3, UtilitySpec, utility_from_dict


def dbm_to_watts(v: float) -> float:
    if not math.isfinite(v):
        raise DomainError("dBm value must be finite")
    return 10.0 ** ((v - 30.0) / 10.0)


def db_to_linear(v: float) -> float:
    if not math.isfinite(v):
        raise DomainError("dB value must be finite")
    return 10.0 ** (v / 10.0)


def path_loss_db(distance_km: float) -> float:
    return 128.1 + 37.6 * math.log10(distance_km)


def channel_gain(distance_km: float, shadow_db: float = 0.0) -> float:
    if not (math.isfinite(distance_km) and distance_km > 0):
        raise DomainError("distance must be positive")
    return db_to_linear(-(path_loss_db(distance_km) + shadow_db))


@dataclass(frozen=True)
class UtilityPreset:
    name: str
    spec: UtilitySpec
    divisor: float


SSV360_SCALE = 15.94e6
NETFLIX_SCALE = 15e6

_PRESETS: dict[str, Callable[[float], UtilitySpec]] = {
    "type1": lambda y: Type1(1.0, 0.5, 1.0),
    "type2": lambda y: Type2(1.0, 0.5, 0.0),
    "type3": lambda y: Type3(1.0, 0.5, 0.0),
    "ssv360_user1_seated": lambda y: Type1(0.5424, 37.2965, 1.0, SSV360_SCALE),
    "ssv360_user2_seated": lambda y: Type2(2.9351, 2.1224, 0.0, SSV360_SCALE),
    "ssv360_user1_standing": lambda y: Type3(3.2956, 0.2733, 0.0, SSV360_SCALE),
    "netflix_elfuente1": lambda y: Type1(33.4215, 0.784, 1.0 + 10.0826 * y, NETFLIX_SCALE),
    "netflix_bigbuckbunny": lambda y: Type2(103.3464, 0.23166, -2.9792 * y, NETFLIX_SCALE),
    "netflix_birdsincage": lambda y: Type3(61.8622, 0.5301, y / 1.1664, NETFLIX_SCALE),
}

PRESET_NAMES = tuple(_PRESETS)


def preset_utility(name: str, y: float = 1.0) -> UtilityPreset:
    """Fitted utility by name; ``y`` is the fixed normalized resolution (Netflix)."""
    try:
        make = _PRESETS[name.lower()]
    except KeyError:
        raise KeyError(f"unknown utility preset {name!r}; known: {', '.join(PRESET_NAMES)}") from None
    spec = make(float(y))
    return UtilityPreset(name.lower(), spec, spec.scale)


UtilityLike = Union[str, UtilitySpec, dict]


def _resolve_utility(u: UtilityLike, y: float) -> UtilitySpec:
    if isinstance(u, UtilitySpec):
        return u
    if isinstance(u, dict):
        return utility_from_dict(u)
    return preset_utility(str(u), y).spec


def _per_user(value, n: int, what: str) -> list:
    """Scalar -> repeated; sequence of k entries -> k equal contiguous groups."""
    if isinstance(value, (str, UtilitySpec, dict)) or np.ndim(value) == 0:
        return [value] * n
    values = list(value)
    k = len(values)
    if k < 1 or k > n:
        raise DomainError(f"{what}: {k} groups for {n} users")
    out = []
    for v, idx in zip(values, np.array_split(np.arange(n), k)):
        out.extend([v] * len(idx))
    return out


def group_indices(n_users: int, n_groups: int) -> list[np.ndarray]:
    """The contiguous user blocks used for per-group settings."""
    return np.array_split(np.arange(n_users), n_groups)


@dataclass(frozen=True)
class ScenarioSpec:
    n_users: int = 30
    b_total: float = 2e7
    distance_range: tuple = (0.1, 0.5)
    shadow_std_db: float = 8.0
    noise_psd_dbm_hz: float = -174.0
    p_cir_dbm: float = 2.0
    r_min_bps: float = 2e4
    # Scalar, or one entry per contiguous user group.
    r_e_bps: Union[float, Sequence[float]] = 2e4
    weights: Union[float, Sequence[float]] = 1.0
    utility: Union[UtilityLike, Sequence[UtilityLike]] = "type3"
    netflix_y: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if int(self.n_users) < 1:
            raise DomainError("n_users must be at least 1")
        lo, hi = self.distance_range
        if not (0 < lo <= hi):
            raise DomainError("distance_range must satisfy 0 < lo <= hi")
        if not self.b_total > 0 or not self.r_min_bps > 0:
            raise DomainError("b_total and r_min_bps must be positive")
        if not self.shadow_std_db >= 0:
            raise DomainError("shadow_std_db must be non-negative")
        if int(self.seed) < 0:
            raise DomainError("seed must be non-negative")
        object.__setattr__(self, "distance_range", (float(lo), float(hi)))

    def replace(self, **changes) -> "ScenarioSpec":
        return replace(self, **changes)


def draw_users(spec: ScenarioSpec) -> tuple[np.ndarray, np.ndarray]:
    """Distances (km) and shadowing (dB); user k's draw ignores n_users."""
    lo, hi = spec.distance_range
    children = np.random.SeedSequence(int(spec.seed)).spawn(int(spec.n_users))
    d = np.empty(spec.n_users)
    sh = np.empty(spec.n_users)
    for k, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        d[k] = rng.uniform(lo, hi)
        sh[k] = rng.normal(0.0, spec.shadow_std_db) if spec.shadow_std_db > 0 else 0.0
    return d, sh


def generate(spec: ScenarioSpec) -> ProblemInstance:
    n = int(spec.n_users)
    d, sh = draw_users(spec)
    sigma2 = dbm_to_watts(spec.noise_psd_dbm_hz)
    p_cir = dbm_to_watts(spec.p_cir_dbm)
    r_e = _per_user(spec.r_e_bps, n, "r_e_bps")
    c = _per_user(spec.weights, n, "weights")
    utils = [_resolve_utility(u, spec.netflix_y) for u in _per_user(spec.utility, n, "utility")]
    users = [UserParams(channel_gain(d[k], sh[k]), sigma2, p_cir, float(spec.r_min_bps),
                        float(r_e[k]), float(c[k]), utils[k]) for k in range(n)]
    return ProblemInstance(tuple(users), float(spec.b_total))


def spec_from_dict(d: dict) -> ScenarioSpec:
    """Build a ScenarioSpec from config keys (same names as the fields).

    ``r_e_factors`` may replace ``r_e_bps`` with multiples of ``r_min_bps``.
    Lists are accepted wherever a tuple is expected.
    """
    d = dict(d)
    known = set(ScenarioSpec.__dataclass_fields__)
    if "r_e_factors" in d:
        factors = d.pop("r_e_factors")
        r_min = float(d.get("r_min_bps", ScenarioSpec.r_min_bps))
        d["r_e_bps"] = tuple(float(f) * r_min for f in np.atleast_1d(factors))
    unknown = set(d) - known
    if unknown:
        raise DomainError(f"unknown scenario keys: {sorted(unknown)}")
    for key in ("distance_range", "r_e_bps", "weights"):
        if isinstance(d.get(key), list):
            d[key] = tuple(d[key])
    if isinstance(d.get("utility"), list):
        d["utility"] = tuple(d["utility"])
    return ScenarioSpec(**d)
