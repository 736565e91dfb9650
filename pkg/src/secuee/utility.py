"""Concave utility families applied to the secrecy rate.

Three closed-form families are provided, each with an optional input
normalization ``scale`` (the rate in bit/s is divided by ``scale`` before the
formula is applied):

* ``Type1``: ``kappa * ln(b + a*x/scale)``
* ``Type2``: ``kappa * (1 - exp(-a*x/scale + c))``
* ``Type3``: ``kappa * (x/scale + d)**a`` with ``0 < a < 1``

``CustomUtility`` wraps user-supplied callables; its derivative inverse falls
back to monotone bisection when not supplied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError


def _check_x(x, strict=False):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("utility argument must be finite")
    if strict and np.any(arr <= 0):
        raise DomainError("utility derivative requires x > 0")
    if np.any(arr < 0):
        raise DomainError("utility argument must be non-negative")
    return arr


def _ret(value, like):
    if np.ndim(like) == 0:
        return float(value)
    return value


# --- vectorized kernels, shared by the scalar specs and UtilityBank ------------

def _t1_f(kappa, a, b, s, x):
    # log(b) + log1p keeps digits when a*x/s is tiny next to b
    return kappa * (np.log(b) + np.log1p(a * x / (s * b)))


def _t1_df(kappa, a, b, s, x):
    return kappa * a / (s * b + a * x)


def _t1_inv(kappa, a, b, s, y):
    return kappa / y - s * b / a


def _t2_f(kappa, a, c, s, x):
    return -kappa * np.expm1(c - a * x / s)


def _t2_df(kappa, a, c, s, x):
    return kappa * a / s * np.exp(c - a * x / s)


def _t2_inv(kappa, a, c, s, y):
    return s * (c - np.log(y * s / (kappa * a))) / a


def _t3_f(kappa, a, d, s, x):
    return kappa * (x / s + d) ** a


def _t3_df(kappa, a, d, s, x):
    return kappa * a / s * (x / s + d) ** (a - 1.0)


def _t3_inv(kappa, a, d, s, y):
    return s * ((y * s / (kappa * a)) ** (1.0 / (a - 1.0)) - d)


class UtilitySpec:
    """Common interface: ``f``, ``deriv`` and ``deriv_inverse``."""

    kind = "abstract"

    def f(self, x):
        raise NotImplementedError

    def deriv(self, x):
        raise NotImplementedError

    def deriv_inverse(self, y):
        """Unique x >= 0 with f'(x) = y, or None when no such x exists."""
        raise NotImplementedError

    def param_errors(self) -> list[str]:
        return []

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class _Closed(UtilitySpec):
    kappa: float
    a: float
    offset: float
    scale: float = 1.0

    _kernels = (None, None, None)

    def _params(self):
        return self.kappa, self.a, self.offset, self.scale

    def f(self, x):
        arr = _check_x(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = type(self)._kernels[0](*self._params(), arr)
        if not np.all(np.isfinite(v)):
            raise DomainError(f"{self.kind} utility undefined at x={x!r}")
        return _ret(v, x)

    def deriv(self, x):
        arr = _check_x(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = type(self)._kernels[1](*self._params(), arr)
        if not np.all(np.isfinite(v)):
            raise DomainError(f"{self.kind} derivative undefined at x={x!r}")
        return _ret(v, x)

    def deriv_inverse(self, y):
        if not (math.isfinite(y) and y > 0):
            raise DomainError("deriv_inverse requires y > 0")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            x = float(type(self)._kernels[2](*self._params(), float(y)))
        if not math.isfinite(x) or x < 0:
            return None
        return x

    def to_dict(self):
        return {"kind": self.kind, "kappa": self.kappa, "a": self.a,
                self._offset_name: self.offset, "scale": self.scale}

    def param_errors(self):
        errs = []
        if not self.kappa > 0:
            errs.append("kappa must be > 0")
        if not self.a > 0:
            errs.append("a must be > 0")
        if not self.scale > 0:
            errs.append("scale must be > 0")
        return errs


@dataclass(frozen=True)
class Type1(_Closed):
    """``kappa * ln(b + a*x/scale)``; requires b >= 0."""

    kappa: float = 1.0
    a: float = 0.5
    offset: float = 1.0
    scale: float = 1.0

    kind = "type1"
    _offset_name = "b"
    _kernels = (_t1_f, _t1_df, _t1_inv)

    @property
    def b(self):
        return self.offset

    def param_errors(self):
        errs = super().param_errors()
        if not self.offset >= 0:
            errs.append("b must be >= 0")
        return errs


@dataclass(frozen=True)
class Type2(_Closed):
    """``kappa * (1 - exp(-a*x/scale + c))``."""

    kappa: float = 1.0
    a: float = 0.5
    offset: float = 0.0
    scale: float = 1.0

    kind = "type2"
    _offset_name = "c"
    _kernels = (_t2_f, _t2_df, _t2_inv)

    @property
    def c(self):
        return self.offset

    def param_errors(self):
        errs = super().param_errors()
        if not math.isfinite(self.offset):
            errs.append("c must be finite")
        return errs


@dataclass(frozen=True)
class Type3(_Closed):
    """``kappa * (x/scale + d)**a`` with 0 < a < 1 and d >= 0."""

    kappa: float = 1.0
    a: float = 0.5
    offset: float = 0.0
    scale: float = 1.0

    kind = "type3"
    _offset_name = "d"
    _kernels = (_t3_f, _t3_df, _t3_inv)

    @property
    def d(self):
        return self.offset

    def deriv(self, x):
        arr = _check_x(x)
        if np.any(arr / self.scale + self.offset <= 0):
            raise DomainError("type3 derivative is unbounded at x + d = 0")
        return super().deriv(x)

    def param_errors(self):
        errs = super().param_errors()
        if not self.a < 1:
            errs.append("a must be < 1")
        if not self.offset >= 0:
            errs.append("d must be >= 0")
        return errs


@dataclass(frozen=True, eq=False)
class CustomUtility(UtilitySpec):
    """User-supplied utility. ``df`` must be positive and decreasing."""

    func: Callable[[float], float]
    df: Callable[[float], float]
    df_inverse: Optional[Callable[[float], Optional[float]]] = None
    name: str = "custom"

    kind = "custom"

    def f(self, x):
        _check_x(x)
        if np.ndim(x):
            return np.array([self.func(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))
        return float(self.func(float(x)))

    def deriv(self, x):
        _check_x(x)
        if np.ndim(x):
            return np.array([self.df(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))
        return float(self.df(float(x)))

    def deriv_inverse(self, y):
        if not (math.isfinite(y) and y > 0):
            raise DomainError("deriv_inverse requires y > 0")
        if self.df_inverse is not None:
            return self.df_inverse(y)
        return _bisect_deriv_inverse(self.df, y)

    def to_dict(self):
        return {"kind": "custom", "name": self.name}


def _bisect_deriv_inverse(df, y, rel_tol=1e-14):
    d0 = df(0.0) if _finite_at_zero(df) else math.inf
    if y > d0:
        return None
    if y == d0:
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(2000):
        if df(hi) <= y:
            break
        lo, hi = hi, hi * 2.0
    else:
        return None
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= rel_tol * hi:
            break
        if df(mid) > y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _finite_at_zero(df):
    try:
        v = df(0.0)
    except (ZeroDivisionError, ValueError, OverflowError):
        return False
    return math.isfinite(v)


def utility_from_dict(d: dict) -> UtilitySpec:
    """Build a closed-form spec from ``{"kind": "type1", "kappa": ..., ...}``."""
    kind = str(d.get("kind", "")).lower().replace(" ", "")
    params = {k: float(v) for k, v in d.items() if k != "kind"}
    if kind in ("type1", "1"):
        return Type1(params.get("kappa", 1.0), params.get("a", 0.5),
                     params.get("b", 1.0), params.get("scale", 1.0))
    if kind in ("type2", "2"):
        return Type2(params.get("kappa", 1.0), params.get("a", 0.5),
                     params.get("c", 0.0), params.get("scale", 1.0))
    if kind in ("type3", "3"):
        return Type3(params.get("kappa", 1.0), params.get("a", 0.5),
                     params.get("d", 0.0), params.get("scale", 1.0))
    raise DomainError(f"unknown utility kind {d.get('kind')!r}")


# --- module-level operations ---------------------------------------------------

def evaluate(s: UtilitySpec, x):
    return s.f(x)


def deriv(s: UtilitySpec, x):
    return s.deriv(x)


def deriv_inverse(s: UtilitySpec, y):
    return s.deriv_inverse(y)


@dataclass
class ValidationReport:
    passed: bool
    failures: list = field(default_factory=list)
    skipped: int = 0

    def __bool__(self):
        return self.passed


def validate_spec(s: UtilitySpec, n_grid: int = 241) -> ValidationReport:
    """Check parameter ranges and, numerically, that f is increasing and concave.

    Also compares ``deriv`` with centered differences (relative error <= 1e-6)
    and checks f'(deriv_inverse(y)) == y (relative error <= 1e-10). Points where
    the derivative has underflowed, or f is flat to machine precision, are
    counted in ``skipped`` rather than judged.
    """
    failures = [("parameters", None, msg) for msg in s.param_errors()]
    if failures:
        return ValidationReport(False, failures)

    xs = np.logspace(-3, 9, n_grid)
    skipped = 0
    try:
        fx = np.array([s.f(float(x)) for x in xs])
        dx = np.array([s.deriv(float(x)) for x in xs])
    except DomainError as exc:
        return ValidationReport(False, [("domain", None, str(exc))])

    live = dx > 1e-280
    skipped += int((~live).sum())
    for x, v in zip(xs[live], dx[live]):
        if not v > 0:
            failures.append(("increasing", float(x), f"f'={v}"))
    if np.any(dx < 0):
        i = int(np.argmax(dx < 0))
        failures.append(("increasing", float(xs[i]), f"f'={dx[i]}"))
    dl = dx[live]
    rise = np.nonzero(dl[1:] > dl[:-1] * (1 + 1e-12))[0]
    for i in rise[:3]:
        failures.append(("concave", float(xs[live][i + 1]), "f' increased"))

    for x, fv, dv in zip(xs, fx, dx):
        if not (dv * x >= 1e-4 * max(abs(fv), 1e-300)) or dv < 1e-280:
            skipped += 1
            continue
        h = 1e-5 * x
        fd = (s.f(x + h) - s.f(x - h)) / (2 * h)
        if abs(fd - dv) > 1e-6 * abs(dv):
            failures.append(("deriv_fd", float(x), f"deriv={dv} fd={fd}"))

    for y in dl[:: max(1, len(dl) // 40)]:
        x = s.deriv_inverse(float(y))
        if x is None:
            failures.append(("inverse", float(y), "no solution on the derivative's range"))
            continue
        back = s.deriv(x) if x > 0 else s.deriv(max(x, 1e-300))
        if abs(back - y) > 1e-10 * y:
            failures.append(("inverse", float(y), f"f'(inv(y))={back}"))
    return ValidationReport(not failures, failures, skipped)


class UtilityBank:
    """Vectorized evaluation of one utility per user."""

    _KERNELS = {"type1": (_t1_f, _t1_df, _t1_inv),
                "type2": (_t2_f, _t2_df, _t2_inv),
                "type3": (_t3_f, _t3_df, _t3_inv)}

    def __init__(self, specs):
        self.specs = tuple(specs)
        self.n = len(self.specs)
        self._groups = []
        self._custom = []
        for kind, kernels in self._KERNELS.items():
            idx = [i for i, sp in enumerate(self.specs) if sp.kind == kind]
            if idx:
                P = np.array([specs[i]._params() for i in idx], dtype=float).T
                self._groups.append((np.array(idx), kernels, tuple(P)))
        self._custom = [i for i, sp in enumerate(self.specs) if sp.kind not in self._KERNELS]

    def _apply(self, which, x):
        x = np.asarray(x, dtype=float)
        out = np.empty(self.n)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            for idx, kernels, params in self._groups:
                out[idx] = kernels[which](*params, x[idx])
        for i in self._custom:
            sp = self.specs[i]
            if which == 0:
                out[i] = sp.f(float(x[i]))
            elif which == 1:
                out[i] = sp.deriv(float(x[i]))
            else:
                r = sp.deriv_inverse(float(x[i]))
                out[i] = math.nan if r is None else r
        return out

    def f(self, x):
        return self._apply(0, x)

    def deriv(self, x):
        return self._apply(1, x)

    def deriv_inverse(self, y):
        """Per-user inverse; NaN marks "no non-negative solution"."""
        x = self._apply(2, y)
        x[~(x >= 0)] = np.nan
        return x
