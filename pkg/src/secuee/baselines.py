"""Comparison algorithms: power-only, bandwidth-only and alternating optimization."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, DomainError, SolverError
from .model import (LN2, Allocation, ProblemInstance, UserParams, power_for_rate,
                    slater_point, uee, uee_vector)
from .outer import SolveReport
from .special import RootConfig, find_root_decreasing, golden_section_max, lambert_w0
from .utility import Type1, Type2, Type3, UtilityBank

_MAX_DOUBLING = 2000
_INV_E = math.exp(-1.0)


@dataclass(frozen=True)
class BaselineConfig:
    fixed_power: float = 1e-3
    ao_rel_tol: float = 1e-4
    ao_max_rounds: int = 200
    root_cfg: RootConfig = RootConfig(abs_tol=1e-300, rel_tol=1e-10, max_iter=400)

    def __post_init__(self):
        if not (self.fixed_power > 0 and self.ao_rel_tol > 0 and self.ao_max_rounds >= 1):
            raise DomainError("baseline settings must be positive")


def p_min_for(b: float, u: UserParams) -> float:
    """Power at which the rate on bandwidth ``b`` equals r_min."""
    if not (math.isfinite(b) and b > 0):
        raise DomainError("bandwidth must be positive")
    try:
        p = math.expm1(u.r_min * LN2 / b) * u.sigma2 * b / u.g
    except OverflowError:
        raise DomainError(f"r_min cannot be met on {b:.3e} Hz at finite power") from None
    if not math.isfinite(p):
        raise DomainError(f"r_min cannot be met on {b:.3e} Hz at finite power")
    # step up past rounding so the rate really reaches r_min
    for _ in range(64):
        if b * math.log1p(u.g * p / (u.sigma2 * b)) / LN2 >= u.r_min:
            break
        p = math.nextafter(p, math.inf)
    return p


def _secrecy(p, b, u):
    return b * math.log1p(u.g * p / (u.sigma2 * b)) / LN2 - u.r_e


def _rate_slope_times_draw(p, b, u):
    """d(rate)/dp * (p + p_cir)."""
    return u.g * b / ((u.sigma2 * b + u.g * p) * LN2) * (p + u.p_cir)


def _first_sign_change(h, p_lo):
    """Smallest doubling point above p_lo where the increasing ``h`` is positive."""
    hi = max(2.0 * p_lo, 1e-15)
    for _ in range(_MAX_DOUBLING):
        if h(hi) > 0:
            return hi
        hi *= 2.0
    raise SolverError("could not bracket the stationary power", {"p_lo": p_lo})


def _stationary_root(h, p_lo):
    if h(p_lo) >= 0:
        return p_lo
    hi = _first_sign_change(h, p_lo)
    half = hi / 2.0
    lo = half if half > p_lo and h(half) < 0 else p_lo
    return brentq(h, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def _type1_power(u: UserParams, b: float, p_lo: float) -> float:
    s = u.utility
    alpha = s.a / s.scale

    # ln(b + alpha r_s) - W(alpha r'(p)(p + p_cir)) changes sign where d uee/dp does.
    def h(p):
        return (math.log(s.offset + alpha * _secrecy(p, b, u))
                - lambert_w0(alpha * _rate_slope_times_draw(p, b, u)))
    return _stationary_root(h, p_lo)


def _type2_power(u: UserParams, b: float, p_lo: float) -> float:
    s = u.utility
    alpha = s.a / s.scale

    # Log form of the chi equation: alpha r_s - c - ln(1 + alpha r'(p)(p + p_cir)).
    def h(p):
        return (alpha * _secrecy(p, b, u) - s.offset
                - math.log1p(alpha * _rate_slope_times_draw(p, b, u)))
    return _stationary_root(h, p_lo)


def _type3_power(u: UserParams, b: float, p_lo: float) -> float | None:
    s = u.utility
    a = s.a
    k = a + (u.r_e - s.offset * s.scale) * LN2 / b
    m = a * u.g * u.p_cir / (u.sigma2 * b) - a
    arg = m * math.exp(-k)
    if arg < -_INV_E:
        return None
    p = math.expm1(k + lambert_w0(arg)) * u.sigma2 * b / u.g
    return max(p_lo, p)


def _generic_power(u: UserParams, b: float, p_lo: float) -> float:
    def obj(p):
        return uee(p, b, u)
    x = max(p_lo, 1e-15)
    for _ in range(_MAX_DOUBLING):
        if obj(2.0 * x) <= obj(x):
            break
        x *= 2.0
    else:
        raise SolverError("could not bracket the UEE maximum", {"p_lo": p_lo})
    lo = max(p_lo, x / 2.0)
    if x * 2.0 <= lo:
        return lo
    return golden_section_max(obj, lo, 2.0 * x)


def optimize_power_given_bandwidth(u: UserParams, b: float) -> float:
    """Power maximizing the user's UEE on bandwidth ``b`` subject to r >= r_min."""
    p_lo = p_min_for(b, u)
    spec = u.utility
    if isinstance(spec, Type3):
        p = _type3_power(u, b, p_lo)
        if p is not None:
            return p
    elif isinstance(spec, Type1) and spec.offset >= _INV_E:
        return _type1_power(u, b, p_lo)
    elif isinstance(spec, Type2):
        return _type2_power(u, b, p_lo)
    return _generic_power(u, b, p_lo)


def _report(inst, a, algorithm, t0, iterations=1, status="converged", message=""):
    per_user = uee_vector(a, inst)
    return SolveReport(
        allocation=a,
        objective=float(np.sum(inst.c * per_user)),
        per_user_uee=per_user,
        outer_iterations=iterations,
        phi_norm_trace=[],
        kkt_residual=math.nan,
        wall_time=time.perf_counter() - t0,
        status=status,
        algorithm=algorithm,
        message=message,
    )


def _powers_given_bandwidth(inst, b):
    return np.array([optimize_power_given_bandwidth(u, float(bn))
                     for u, bn in zip(inst.users, b)])


def optimize_power_only(inst: ProblemInstance) -> SolveReport:
    """Equal bandwidth split, each user's power set to its UEE maximizer."""
    t0 = time.perf_counter()
    b = np.full(inst.n, inst.b_total / inst.n)
    return _report(inst, Allocation(_powers_given_bandwidth(inst, b), b), "p-only", t0)


# --- bandwidth only -----------------------------------------------------------

def bandwidth_for_rate(p, inst: ProblemInstance, r=None) -> np.ndarray:
    """Per user, the bandwidth at which power ``p`` yields rate ``r`` (default r_min)."""
    p = np.asarray(p, dtype=float)
    r = inst.r_min if r is None else np.asarray(r, dtype=float)
    cap = inst.g * p / (inst.sigma2 * LN2)
    if np.any(r >= cap):
        bad = np.nonzero(r >= cap)[0].tolist()
        raise DomainError(f"fixed power cannot reach the minimum rate for users {bad}")
    out = np.empty(inst.n)
    for n in range(inst.n):
        u = inst.users[n]

        def gap(logb, n=n, u=u):
            bb = math.exp(logb)
            return bb * math.log1p(u.g * p[n] / (u.sigma2 * bb)) / LN2 - r[n]
        hi = math.log(max(r[n], 1.0))
        while gap(hi) < 0:
            hi += 1.0
        lo = hi - 1.0
        while gap(lo) > 0:
            lo -= 1.0
        out[n] = math.exp(brentq(gap, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    # Nudge up by rounding so the minimum rate holds on the returned side.
    return out * (1.0 + 4 * np.finfo(float).eps)


def _bandwidth_marginal(b, p, inst):
    """c * d(UEE)/dB at fixed power, per user."""
    q = inst.g * p / (inst.sigma2 * b)
    rs = b * np.log1p(q) / LN2 - inst.r_e
    slope = (np.log1p(q) - q / (1.0 + q)) / LN2
    with np.errstate(divide="ignore", invalid="ignore"):
        fp = inst.utilities.deriv(np.maximum(rs, 0.0))
    return inst.c * fp * slope / (p + inst.p_cir)


def _bandwidth_demand(zeta, p, b_min, inst, iters=200):
    """max(B_hat(zeta), B_min), where B_hat solves c d(UEE)/dB = zeta."""
    out = b_min.copy()
    active = _bandwidth_marginal(b_min, p, inst) > zeta
    if not active.any():
        return out
    idx = np.nonzero(active)[0]
    sub = _SubInstance(inst, idx)
    pa = p[idx]
    lo = np.log(b_min[idx])
    hi = lo + math.log(2.0)
    for _ in range(_MAX_DOUBLING):
        up = _bandwidth_marginal(np.exp(hi), pa, sub) > zeta
        if not up.any():
            break
        lo = np.where(up, hi, lo)
        hi = np.where(up, hi + math.log(2.0), hi)
    else:
        raise SolverError("bandwidth demand did not bracket", {"zeta": zeta})
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        above = _bandwidth_marginal(np.exp(mid), pa, sub) > zeta
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo <= 1e-15):
            break
    out[idx] = np.exp(hi)
    return out


class _SubInstance:
    """Column view of an instance restricted to a subset of users."""

    def __init__(self, inst, idx):
        self.g = inst.g[idx]
        self.sigma2 = inst.sigma2[idx]
        self.p_cir = inst.p_cir[idx]
        self.r_e = inst.r_e[idx]
        self.c = inst.c[idx]
        self.utilities = UtilityBank([inst.users[i].utility for i in idx])


def optimize_bandwidth_only(inst: ProblemInstance, p_fixed,
                            cfg: BaselineConfig = BaselineConfig()) -> SolveReport:
    """Optimal bandwidth split for fixed powers."""
    t0 = time.perf_counter()
    b = _bandwidth_split(inst, np.asarray(p_fixed, dtype=float), cfg)
    return _report(inst, Allocation(p_fixed, b), "B-only", t0)


def _bandwidth_split(inst, p, cfg):
    if p.shape != (inst.n,) or np.any(~(p > 0)):
        raise DomainError("p_fixed must hold one positive power per user")
    b_min = bandwidth_for_rate(p, inst)
    if np.sum(b_min) > inst.b_total:
        raise DomainError("minimum-rate bandwidths exceed the budget at these powers")
    if np.sum(b_min) == inst.b_total:
        return b_min
    ref = _bandwidth_marginal(np.full(inst.n, inst.b_total / inst.n), p, inst)
    ref = ref[np.isfinite(ref) & (ref > 0)]
    guess = float(np.exp(np.mean(np.log(ref)))) if ref.size else 1.0
    root_cfg = RootConfig(cfg.root_cfg.abs_tol, cfg.root_cfg.rel_tol,
                          cfg.root_cfg.max_iter, guess)

    def total(zeta):
        return float(np.sum(_bandwidth_demand(zeta, p, b_min, inst)))
    try:
        zeta = find_root_decreasing(total, inst.b_total, root_cfg)
    except BracketError as exc:
        raise SolverError(f"bandwidth price search failed: {exc}") from exc
    b = _bandwidth_demand(zeta, p, b_min, inst)
    return b * (inst.b_total / np.sum(b))


def default_fixed_powers(inst: ProblemInstance, cfg: BaselineConfig = BaselineConfig()) -> np.ndarray:
    """``cfg.fixed_power`` per user, raised where it cannot meet r_min on an equal split."""
    b = np.full(inst.n, inst.b_total / inst.n)
    need = power_for_rate(inst.r_min, b, inst) * (1.0 + 1e-9)
    return np.maximum(cfg.fixed_power, need)


# --- alternating optimization --------------------------------------------------

def alternating(inst: ProblemInstance, cfg: BaselineConfig = BaselineConfig()) -> SolveReport:
    """Power-only then bandwidth-only rounds from the equal-split starting point."""
    t0 = time.perf_counter()
    a = slater_point(inst)
    b = a.b.copy()
    prev = float(np.sum(inst.c * uee_vector(a, inst)))
    history = [prev]
    status = "max_iter"
    rounds = 0
    for rounds in range(1, cfg.ao_max_rounds + 1):
        p = _powers_given_bandwidth(inst, b)
        b = _bandwidth_split(inst, p, cfg)
        obj = float(np.sum(inst.c * uee_vector(Allocation(p, b), inst)))
        history.append(obj)
        if abs(obj - prev) <= cfg.ao_rel_tol * abs(prev):
            status = "converged"
            break
        prev = obj
    rep = _report(inst, Allocation(p, b), "AO", t0, rounds, status)
    rep.objective_trace = history
    return rep
