"""Physical-layer formulas and the weighted sum-UEE allocation problem."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DomainError
from .utility import UtilityBank, UtilitySpec

LN2 = math.log(2.0)


@dataclass(frozen=True)
class UserParams:
    """One user's channel, security and priority parameters (SI units)."""

    g: float
    sigma2: float
    p_cir: float
    r_min: float
    r_e: float
    c: float
    utility: UtilitySpec

    def __post_init__(self):
        for name in ("g", "sigma2", "p_cir", "c", "r_min"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        if not (math.isfinite(self.r_e) and self.r_e >= 0):
            raise DomainError(f"r_e must be non-negative, got {self.r_e!r}")
        if self.r_min < self.r_e:
            raise DomainError("r_min must be at least r_e")


@dataclass(frozen=True)
class ProblemInstance:
    users: tuple
    b_total: float

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if len(self.users) < 1:
            raise DomainError("an instance needs at least one user")
        if not (math.isfinite(self.b_total) and self.b_total > 0):
            raise DomainError("b_total must be positive and finite")

    @property
    def n(self) -> int:
        return len(self.users)

    def _column(self, name):
        return np.array([getattr(u, name) for u in self.users], dtype=float)

    @cached_property
    def g(self):
        return self._column("g")

    @cached_property
    def sigma2(self):
        return self._column("sigma2")

    @cached_property
    def p_cir(self):
        return self._column("p_cir")

    @cached_property
    def r_min(self):
        return self._column("r_min")

    @cached_property
    def r_e(self):
        return self._column("r_e")

    @cached_property
    def c(self):
        return self._column("c")

    @cached_property
    def utilities(self) -> UtilityBank:
        return UtilityBank([u.utility for u in self.users])

    def with_users(self, users) -> "ProblemInstance":
        return ProblemInstance(tuple(users), self.b_total)


@dataclass(frozen=True)
class Allocation:
    p: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float).ravel()
        b = np.array(self.b, dtype=float).ravel()
        if p.shape != b.shape:
            raise DomainError("p and b must have the same length")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(b))):
            raise DomainError("allocation entries must be finite")
        if np.any(p <= 0) or np.any(b <= 0):
            raise DomainError("allocation entries must be strictly positive")
        p.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "b", b)

    def __len__(self):
        return len(self.p)


@dataclass(frozen=True)
class FeasibilityReport:
    bandwidth_slack: float
    rate_violations: np.ndarray
    is_feasible: bool


def _check_pb(p, b):
    if not (math.isfinite(p) and math.isfinite(b)):
        raise DomainError("power and bandwidth must be finite")
    if p < 0:
        raise DomainError("power must be non-negative")
    if b <= 0:
        raise DomainError("bandwidth must be positive")


def rate(p: float, b: float, u: UserParams) -> float:
    """Shannon rate b*log2(1 + g*p/(sigma2*b)) in bit/s."""
    _check_pb(p, b)
    return b * math.log1p(u.g * p / (u.sigma2 * b)) / LN2


def secrecy_rate(p: float, b: float, u: UserParams) -> float:
    return rate(p, b, u) - u.r_e


# Secrecy rates this far below zero (relative to r_min) count as rounding.
SECRECY_ROUNDING = 1e-9


def uee(p: float, b: float, u: UserParams) -> float:
    """Utility of the secrecy rate per watt consumed."""
    rs = secrecy_rate(p, b, u)
    if rs < -SECRECY_ROUNDING * u.r_min:
        raise DomainError(f"negative secrecy rate {rs!r}")
    return u.utility.f(max(rs, 0.0)) / (p + u.p_cir)


def rates(p, b, inst: ProblemInstance) -> np.ndarray:
    """Vectorized per-user rates; no argument checking."""
    p = np.asarray(p, dtype=float)
    b = np.asarray(b, dtype=float)
    return b * np.log1p(inst.g * p / (inst.sigma2 * b)) / LN2


def uee_vector(a: Allocation, inst: ProblemInstance) -> np.ndarray:
    _check_dims(a, inst)
    rs = rates(a.p, a.b, inst) - inst.r_e
    if np.any(rs < -SECRECY_ROUNDING * inst.r_min):
        raise DomainError("negative secrecy rate in allocation")
    return inst.utilities.f(np.maximum(rs, 0.0)) / (a.p + inst.p_cir)


def weighted_sum_uee(a: Allocation, inst: ProblemInstance) -> float:
    return float(np.sum(inst.c * uee_vector(a, inst)))


def _check_dims(a: Allocation, inst: ProblemInstance):
    if len(a) != inst.n:
        raise DomainError(f"allocation has {len(a)} entries for {inst.n} users")


def check_feasible(a: Allocation, inst: ProblemInstance,
                   tol_rate: float | Sequence[float] | None = None,
                   tol_bandwidth: float | None = None) -> FeasibilityReport:
    """Bandwidth slack and per-user minimum-rate shortfalls.

    Defaults: rate tolerance 1e-6 * r_min per user, bandwidth tolerance
    1e-9 * b_total.
    """
    _check_dims(a, inst)
    if tol_rate is None:
        tol_rate = 1e-6 * inst.r_min
    if tol_bandwidth is None:
        tol_bandwidth = 1e-9 * inst.b_total
    slack = float(inst.b_total - np.sum(a.b))
    viol = np.maximum(inst.r_min - rates(a.p, a.b, inst), 0.0)
    ok = slack >= -tol_bandwidth and bool(np.all(viol <= tol_rate))
    return FeasibilityReport(slack, viol, ok)


def power_for_rate(r, b, inst: ProblemInstance) -> np.ndarray:
    """Powers reaching rate ``r`` on bandwidth ``b`` (per user, vectorized)."""
    b = np.asarray(b, dtype=float)
    return np.expm1(np.asarray(r, dtype=float) * LN2 / b) * inst.sigma2 * b / inst.g


def slater_point(inst: ProblemInstance) -> Allocation:
    """Equal bandwidth split with each user at twice its minimum rate."""
    b = np.full(inst.n, inst.b_total / inst.n)
    return Allocation(power_for_rate(2.0 * inst.r_min, b, inst), b)
