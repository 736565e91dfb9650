"""Numerical primitives: principal-branch Lambert W and monotone root search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BracketError, DomainError

E = math.e
INV_E = math.exp(-1.0)
# E = _E_HI + _E_LO to about 32 digits; used to form e*z + 1 near the branch point.
_E_HI = 2.718281828459045
_E_LO = 1.4456468917292502e-16

_MAX_HALLEY = 50
# W(z) = -1 + p - p^2/3 + ... with p = sqrt(2(ez + 1)).
_BRANCH_SERIES = (-1.0, 1.0, -1.0 / 3.0, 11.0 / 72.0, -43.0 / 540.0,
                  769.0 / 17280.0, -221.0 / 8505.0)


@dataclass(frozen=True)
class RootConfig:
    """Tolerances for :func:`find_root_decreasing`."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_iter: int = 200
    initial_guess: float = 1.0

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("root tolerances must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")
        if not (self.initial_guess > 0 and math.isfinite(self.initial_guess)):
            raise DomainError("initial_guess must be positive and finite")


def _polyval_ascending(coeffs, x):
    out = np.zeros_like(x)
    for c in reversed(coeffs):
        out = out * x + c
    return out


def _halley_w0(z, w):
    """Refine W0 estimates in place; ``z`` and ``w`` are 1-D float arrays."""
    big = z > E
    logz = np.log(np.where(big, z, 1.0))
    active = np.ones(z.shape, dtype=bool)
    for _ in range(_MAX_HALLEY):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        wi, zi = w[idx], z[idx]
        dw = np.empty_like(wi)
        b = big[idx]
        if b.any():
            # w + ln w = ln z is well scaled for large arguments
            wb = wi[b]
            g = wb + np.log(wb) - logz[idx][b]
            g1 = 1.0 + 1.0 / wb
            g2 = -1.0 / (wb * wb)
            dw[b] = g / (g1 - 0.5 * g * g2 / g1)
        s = ~b
        if s.any():
            ws = wi[s]
            ew = np.exp(ws)
            f = ws * ew - zi[s]
            wp1 = ws + 1.0
            dw[s] = f / (ew * wp1 - (ws + 2.0) * f / (2.0 * wp1))
        w[idx] = wi - dw
        done = np.abs(dw) <= 4.0 * np.finfo(float).eps * (1.0 + np.abs(w[idx]))
        active[idx[done]] = False
    return w


def _w0_array(z):
    w = np.zeros_like(z)
    q = 2.0 * ((_E_HI * z + 1.0) + _E_LO * z)
    q = np.maximum(q, 0.0)
    near = z < -0.25
    p = np.sqrt(q[near])
    w[near] = _polyval_ascending(_BRANCH_SERIES, p)
    far = ~near
    L = np.log1p(z[far])
    w[far] = L * (1.0 - np.log1p(L) / (2.0 + L))
    # Halley is ill-conditioned at the branch point; the series is exact there.
    refine = ~(near & (q < 1e-8)) & (z != 0.0)
    if refine.any():
        w[refine] = _halley_w0(z[refine], w[refine].copy())
    w[near] = np.maximum(w[near], -1.0)
    return w


def lambert_w0(z):
    """Principal branch W0 of the Lambert W function.

    Accepts a scalar or array; returns the same shape. Values below -1/e raise
    :class:`DomainError`.
    """
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("lambert_w0 requires finite input")
    if np.any(arr < -INV_E):
        raise DomainError("lambert_w0 is undefined below -1/e")
    w = _w0_array(arr.ravel().copy()).reshape(arr.shape)
    if np.ndim(z) == 0:
        return float(w)
    return w


# (k - 1)/k! for k = 16 down to 2, the series of e^s (s - 1) + 1 divided by s^2
_GAP_SERIES = tuple((k - 1) / math.factorial(k) for k in range(16, 1, -1))


def _branch_gap(s):
    """e^s (s - 1) + 1 without cancellation for small s."""
    # the direct form loses at most about 2 eps / s digits, fine from s = 0.1 on
    small = s < 0.1
    out = s * np.exp(s) - np.expm1(s)
    if small.any():
        ss = s[small]
        out[small] = ss * ss * np.polyval(_GAP_SERIES, ss)
    return out


def w0_plus_one(q):
    """Return 1 + W0((q - 1)/e) for q >= 0, accurate as q -> 0.

    Equivalently the root s >= 0 of e^s (s - 1) + 1 = q. Used where the
    Lambert argument is formed as (x - 1)/e with a tiny x, which would lose
    all precision if passed through :func:`lambert_w0`.
    """
    arr = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("w0_plus_one requires finite q >= 0")
    flat = arr.ravel()
    s = np.zeros_like(flat)
    small = flat < 0.5
    if small.any():
        qs = flat[small]
        p = np.sqrt(2.0 * qs)
        s0 = _polyval_ascending((0.0,) + _BRANCH_SERIES[1:], p)
        polish = p > 1e-4
        if polish.any():
            si, qi = s0[polish], qs[polish]
            for _ in range(_MAX_HALLEY):
                h = _branch_gap(si) - qi
                es = np.exp(si)
                h1 = si * es
                h2 = (si + 1.0) * es
                ds = h / (h1 - 0.5 * h * h2 / h1)
                si = si - ds
                if np.all(np.abs(ds) <= 4.0 * np.finfo(float).eps * si):
                    break
            s0[polish] = si
        s[small] = s0
    big = ~small
    if big.any():
        s[big] = 1.0 + _w0_array((flat[big] - 1.0) / E)
    s = s.reshape(arr.shape)
    if np.ndim(q) == 0:
        return float(s)
    return s


def find_root_decreasing(f: Callable[[float], float], target: float,
                         cfg: RootConfig = RootConfig()) -> float:
    """Locate lambda with f(lambda) just at or below ``target``.

    ``f`` must be non-increasing on (0, inf), above the target near zero and
    below it far out. The search keeps 0 as the initial lower bound, doubles
    from ``cfg.initial_guess`` until the target is bracketed, then bisects.
    The returned point satisfies f <= target and
    target - f <= abs_tol + rel_tol * |target|.
    """
    tol = cfg.abs_tol + cfg.rel_tol * abs(target)

    def evaluate(x):
        v = f(x)
        if not math.isfinite(v):
            raise DomainError(f"non-finite function value {v!r} at {x!r}")
        return v

    lo = 0.0
    hi = cfg.initial_guess
    for _ in range(cfg.max_iter):
        v = evaluate(hi)
        if v <= target:
            break
        lo = hi
        hi *= 2.0
    else:
        raise BracketError(
            f"no upper bracket after {cfg.max_iter} doublings (last point {hi:g})")
    if target - v <= tol:
        return hi
    for _ in range(cfg.max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        v = evaluate(mid)
        if v > target:
            lo = mid
        else:
            hi = mid
            if target - v <= tol:
                return hi
    # Interval exhausted at float resolution; hi is on the admissible side.
    return hi


def golden_section_max(f: Callable[[float], float], lo: float, hi: float,
                       rel_tol: float = 1e-12, max_iter: int = 500) -> float:
    """Maximizer of a quasiconcave ``f`` on [lo, hi] by golden-section search."""
    if not hi > lo:
        raise DomainError("golden_section_max needs hi > lo")
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= rel_tol * max(abs(a), abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    best = max(((f(a), a), (fc, c), (fd, d), (f(b), b)))
    return best[1]
