"""Closed-form solver for the parametric concave subproblem.

For fixed positive multipliers ``beta`` and ``nu`` the subproblem maximizes
``sum_n nu_n * (c_n f_n(r_n - r_e,n) - beta_n (p_n + p_cir,n))`` over powers
and bandwidths subject to the bandwidth budget and minimum rates. Given the
bandwidth price ``lam`` every user's optimal SNR, rate and bandwidth follow in
closed form; ``lam`` is then set by a one-sided bisection so the bandwidths
fill the budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketError, DomainError, SolverError
from .model import LN2, Allocation, ProblemInstance, UserParams, rates
from .special import RootConfig, find_root_decreasing, w0_plus_one

INNER_ROOT_CFG = RootConfig(abs_tol=1e-300, rel_tol=1e-12, max_iter=400)


@dataclass(frozen=True)
class DualParams:
    beta: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float).ravel()
        nu = np.array(self.nu, dtype=float).ravel()
        if beta.shape != nu.shape:
            raise DomainError("beta and nu must have the same length")
        if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(nu))):
            raise DomainError("dual parameters must be finite")
        if np.any(beta <= 0):
            bad = np.nonzero(beta <= 0)[0].tolist()
            raise DomainError(f"beta must be positive; offending users {bad}")
        if np.any(nu <= 0):
            bad = np.nonzero(nu <= 0)[0].tolist()
            raise DomainError(f"nu must be positive; offending users {bad}")
        beta.setflags(write=False)
        nu.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "nu", nu)

    def __len__(self):
        return len(self.beta)


@dataclass(frozen=True)
class InnerSolution:
    allocation: Allocation
    lambda_sharp: float
    gamma: np.ndarray
    psi: np.ndarray
    binding_min_rate: np.ndarray
    log1p_psi: np.ndarray


def _log1p_psi(lam, g, sigma2, beta, nu):
    """ln(1 + psi): the root s of e^s (s - 1) + 1 = g*lam/(nu*beta*sigma2)."""
    return w0_plus_one(g * lam / (nu * beta * sigma2))


def _gamma_from_s(s, g, sigma2, beta, c, r_e, deriv_inverse):
    v = beta * sigma2 * np.exp(s) * LN2 / (c * g)
    xi = deriv_inverse(v)
    return np.where(np.isnan(xi), r_e, r_e + np.nan_to_num(xi))


# --- per-user scalar forms -----------------------------------------------------

def _check_scalar_dual(lam, beta_n, nu_n):
    if not all(math.isfinite(v) for v in (lam, beta_n, nu_n)):
        raise DomainError("non-finite input")
    if lam < 0:
        raise DomainError("lambda must be non-negative")
    if beta_n <= 0 or nu_n <= 0:
        raise DomainError("beta and nu must be positive")


def psi(lam: float, u: UserParams, beta_n: float, nu_n: float) -> float:
    """Optimal SNR g*p/(sigma2*B) of one user at bandwidth price ``lam``."""
    _check_scalar_dual(lam, beta_n, nu_n)
    return math.expm1(_log1p_psi(lam, u.g, u.sigma2, beta_n, nu_n))


def _scalar_inverse(u):
    def inv(v):
        x = u.utility.deriv_inverse(float(v))
        return math.nan if x is None else x
    return inv


def gamma(lam: float, u: UserParams, beta_n: float, nu_n: float) -> float:
    """Unconstrained optimal rate; falls back to r_e when no such rate exists."""
    _check_scalar_dual(lam, beta_n, nu_n)
    s = _log1p_psi(lam, u.g, u.sigma2, beta_n, nu_n)
    return float(_gamma_from_s(s, u.g, u.sigma2, beta_n, u.c, u.r_e, _scalar_inverse(u)))


def bandwidth_at(lam: float, u: UserParams, beta_n: float, nu_n: float) -> float:
    """Bandwidth the user would take at price ``lam`` (diverges as lam -> 0)."""
    _check_scalar_dual(lam, beta_n, nu_n)
    if lam <= 0:
        raise DomainError("bandwidth_at requires lambda > 0")
    s = _log1p_psi(lam, u.g, u.sigma2, beta_n, nu_n)
    gam = float(_gamma_from_s(s, u.g, u.sigma2, beta_n, u.c, u.r_e, _scalar_inverse(u)))
    return max(gam, u.r_min) * LN2 / s


# --- vectorized solve ----------------------------------------------------------

class _UserTerms:
    """Per-user closed forms for one (instance, dual) pair."""

    def __init__(self, inst: ProblemInstance, dual: DualParams):
        self.inst = inst
        self.beta = dual.beta
        self.nu = dual.nu

    def at(self, lam):
        inst = self.inst
        s = _log1p_psi(lam, inst.g, inst.sigma2, self.beta, self.nu)
        gam = _gamma_from_s(s, inst.g, inst.sigma2, self.beta, inst.c, inst.r_e,
                            inst.utilities.deriv_inverse)
        rate_target = np.maximum(gam, inst.r_min)
        with np.errstate(divide="ignore"):
            b = rate_target * LN2 / s
        return s, gam, b

    def total_bandwidth(self, lam):
        total = float(np.sum(self.at(lam)[2]))
        # s underflows to 0 only for prices far below any root; report "too much".
        return total if math.isfinite(total) else np.finfo(float).max


def bandwidth_sum(lam: float, inst: ProblemInstance, dual: DualParams) -> float:
    """Total bandwidth demanded at price ``lam``."""
    if not lam > 0:
        raise DomainError("bandwidth_sum requires lambda > 0")
    return _UserTerms(inst, dual).total_bandwidth(lam)


def reference_lambda(inst: ProblemInstance, dual: DualParams) -> float:
    """Geometric mean of nu*beta*sigma2/g: the price where the SNR ratio is 1."""
    return float(np.exp(np.mean(np.log(dual.nu) + np.log(dual.beta)
                                + np.log(inst.sigma2) - np.log(inst.g))))


def solve_p3(inst: ProblemInstance, dual: DualParams,
             cfg: RootConfig | None = None) -> InnerSolution:
    """Global optimum of the parametric subproblem at multipliers ``dual``."""
    if len(dual) != inst.n:
        raise DomainError(f"dual has {len(dual)} entries for {inst.n} users")
    terms = _UserTerms(inst, dual)
    lam_ref = reference_lambda(inst, dual)
    if cfg is None:
        cfg = INNER_ROOT_CFG
    cfg = RootConfig(cfg.abs_tol, cfg.rel_tol, cfg.max_iter, lam_ref)
    try:
        lam = find_root_decreasing(terms.total_bandwidth, inst.b_total, cfg)
    except (BracketError, DomainError) as exc:
        raise SolverError(f"bandwidth price search failed: {exc}",
                          {"lambda_ref": lam_ref, "beta": dual.beta.tolist(),
                           "nu": dual.nu.tolist()}) from exc
    s, gam, b = terms.at(lam)
    # Hand the one-sided residual back proportionally so the budget is met exactly.
    b = b * (inst.b_total / np.sum(b))
    psi_v = np.expm1(s)
    p = inst.sigma2 * b * psi_v / inst.g
    return InnerSolution(Allocation(p, b), lam, gam, psi_v, gam < inst.r_min, s)


def inner_objective(a: Allocation, inst: ProblemInstance, dual: DualParams) -> float:
    rs = rates(a.p, a.b, inst) - inst.r_e
    F = inst.c * inst.utilities.f(rs)
    return float(np.sum(dual.nu * (F - dual.beta * (a.p + inst.p_cir))))


def inner_kkt_residuals(inst: ProblemInstance, dual: DualParams,
                     sol: InnerSolution) -> dict:
    """Normalized KKT residuals of the subproblem at ``sol``.

    The rate multiplier is reconstructed from stationarity in p; stationarity
    in B and both complementary slackness conditions are then checked.
    """
    a = sol.allocation
    s = np.log1p(a.p * inst.g / (inst.sigma2 * a.b))
    psi_v = np.expm1(s)
    rs = rates(a.p, a.b, inst) - inst.r_e
    fp = inst.utilities.deriv(rs)
    price = dual.nu * dual.beta * inst.sigma2 * (1.0 + psi_v) * LN2 / inst.g
    tau = price - dual.nu * inst.c * fp
    tau_scale = np.maximum(price, np.abs(dual.nu * inst.c * fp))
    lam = sol.lambda_sharp
    grad_b = (dual.nu * inst.c * fp + tau) * (s - psi_v / (1.0 + psi_v)) / LN2
    stat_b = np.abs(grad_b - lam) / max(lam, 1e-300)
    slack_rate = (rates(a.p, a.b, inst) - inst.r_min) / inst.r_min
    cs_tau = np.abs(np.maximum(tau, 0.0) / tau_scale * slack_rate)
    cs_lam = abs(np.sum(a.b) - inst.b_total) / inst.b_total
    return {
        "stationarity_b": float(np.max(stat_b)),
        "complementary_rate": float(np.max(cs_tau)),
        "complementary_bandwidth": float(cs_lam),
        "dual_tau": float(np.max(np.maximum(-tau / tau_scale, 0.0))),
        "primal_rate": float(np.max(np.maximum(-slack_rate, 0.0))),
    }
