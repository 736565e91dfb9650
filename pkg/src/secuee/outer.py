"""Damped Newton driver for the sum-of-ratios fixed point.

The multipliers ``beta`` (per-user achieved ratio) and ``nu`` (inverse power
draw) are updated until the inner solution reproduces them:
``phi1 = -F(p, B) + beta * (p + p_cir)`` and ``phi2 = -1 + nu * (p + p_cir)``
both vanish. Each evaluation of ``phi`` is one closed-form inner solve.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SolverError
from .inner import DualParams, InnerSolution, solve_p3
from .model import (LN2, Allocation, ProblemInstance, check_feasible, rates,
                    slater_point, uee_vector)
from .special import RootConfig

log = logging.getLogger(__name__)


class LineSearchError(SolverError):
    """No admissible step length within ``max_linesearch`` halvings."""


@dataclass(frozen=True)
class NewtonConfig:
    xi: float = 0.5
    epsilon: float = 0.01
    phi_tol: float = 1e-6
    max_outer: int = 100
    max_linesearch: int = 60
    inner_cfg: RootConfig = RootConfig(abs_tol=1e-300, rel_tol=1e-12, max_iter=400)
    # Test hook: -1 flips the search direction (negative control for validation).
    direction_sign: float = 1.0

    def __post_init__(self):
        if not 0 < self.xi < 1:
            raise DomainError("xi must lie in (0, 1)")
        if not 0 < self.epsilon < 1:
            raise DomainError("epsilon must lie in (0, 1)")
        if not self.phi_tol > 0:
            raise DomainError("phi_tol must be positive")
        if self.max_outer < 1 or self.max_linesearch < 0:
            raise DomainError("iteration caps must be non-negative (max_outer >= 1)")


@dataclass(frozen=True)
class NewtonState:
    dual: DualParams
    phi1: np.ndarray
    phi2: np.ndarray
    phi_norm: float
    inner: InnerSolution
    power_draw: np.ndarray
    iteration: int = 0
    J_history: tuple = ()

    @property
    def beta(self):
        return self.dual.beta

    @property
    def nu(self):
        return self.dual.nu


@dataclass
class SolveReport:
    allocation: Allocation
    objective: float
    per_user_uee: np.ndarray
    outer_iterations: int
    phi_norm_trace: list
    kkt_residual: float
    wall_time: float
    status: str
    algorithm: str = "proposed"
    kkt: dict = field(default_factory=dict)
    dual: DualParams | None = None
    lambda_sharp: float | None = None
    J_history: tuple = ()
    message: str = ""
    objective_trace: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def stop_threshold(n: int, cfg: NewtonConfig) -> float:
    return cfg.phi_tol * math.sqrt(2 * n)


def numerators(a: Allocation, inst: ProblemInstance) -> np.ndarray:
    """Weighted utilities c_n f_n(r_n - r_e,n)."""
    rs = rates(a.p, a.b, inst) - inst.r_e
    return inst.c * inst.utilities.f(np.maximum(rs, 0.0))


def init_dual(inst: ProblemInstance, a0: Allocation) -> DualParams:
    if not check_feasible(a0, inst).is_feasible:
        raise DomainError("initial allocation is infeasible")
    denom = a0.p + inst.p_cir
    return DualParams(numerators(a0, inst) / denom, 1.0 / denom)


def eval_phi(inst: ProblemInstance, dual: DualParams, cfg: NewtonConfig = NewtonConfig()):
    inner = solve_p3(inst, dual, cfg.inner_cfg)
    a = inner.allocation
    denom = a.p + inst.p_cir
    phi1 = -numerators(a, inst) + dual.beta * denom
    phi2 = -1.0 + dual.nu * denom
    return phi1, phi2, inner


def _make_state(inst, dual, cfg, iteration=0, J_history=()):
    phi1, phi2, inner = eval_phi(inst, dual, cfg)
    norm = float(np.sqrt(np.sum(phi1 ** 2) + np.sum(phi2 ** 2)))
    draw = inner.allocation.p + inst.p_cir
    return NewtonState(dual, phi1, phi2, norm, inner, draw, iteration, tuple(J_history))


def newton_direction(state: NewtonState, cfg: NewtonConfig = NewtonConfig()):
    """Diagonal Newton step taking both own-partials of phi as p + p_cir."""
    sign = cfg.direction_sign
    return -sign * state.phi1 / state.power_draw, -sign * state.phi2 / state.power_draw


def line_search(inst: ProblemInstance, state: NewtonState, direction,
                cfg: NewtonConfig = NewtonConfig()) -> tuple[int, NewtonState]:
    """Smallest J whose step xi**J gives ||phi|| <= (1 - xi**J eps) ||phi||.

    Steps that would make any multiplier non-positive count as failed trials.
    The decrease is compared in difference form so that a step too short to
    change phi is never accepted once 1 - xi**J eps rounds to one.
    """
    s1, s2 = direction
    target = state.phi_norm
    for J in range(cfg.max_linesearch + 1):
        step = cfg.xi ** J
        beta = state.beta + step * s1
        nu = state.nu + step * s2
        if np.any(beta <= 0) or np.any(nu <= 0):
            continue
        trial = _make_state(inst, DualParams(beta, nu), cfg, state.iteration + 1,
                            state.J_history + (J,))
        if target - trial.phi_norm >= step * cfg.epsilon * target:
            return J, trial
    worst = int(np.argmax(np.maximum(np.abs(state.phi1), np.abs(state.phi2))))
    raise LineSearchError(
        f"no sufficient decrease within {cfg.max_linesearch} step halvings "
        f"(|phi|={target:.3e}, largest residual at user {worst})",
        {"phi_norm": target, "iteration": state.iteration, "user": worst})


def epigraph_kkt_residuals(inst: ProblemInstance, a: Allocation, dual: DualParams,
                     lam: float) -> dict:
    """Normalized KKT residuals of the epigraph problem at (p, B, beta; nu, tau, lam).

    ``tau`` is recovered from stationarity in p and clipped at zero; each
    residual is scaled by the natural magnitude of its terms.
    """
    p, b = a.p, a.b
    s = np.log1p(inst.g * p / (inst.sigma2 * b))
    psi = np.expm1(s)
    r = b * s / LN2
    rs = r - inst.r_e
    F = inst.c * inst.utilities.f(np.maximum(rs, 0.0))
    fp = inst.utilities.deriv(np.maximum(rs, 1e-300))
    dr_dp = inst.g / (inst.sigma2 * (1.0 + psi) * LN2)
    dr_db = (s - psi / (1.0 + psi)) / LN2
    beta, nu = dual.beta, dual.nu
    price_p = nu * beta
    tau_raw = (price_p - nu * inst.c * fp * dr_dp) / dr_dp
    tau = np.maximum(tau_raw, 0.0)
    stat_p = np.abs(-nu * inst.c * fp * dr_dp + price_p - tau * dr_dp) / price_p
    grad_b = nu * inst.c * fp * dr_db + tau * dr_db
    stat_b = np.abs(lam - grad_b) / np.maximum(lam, grad_b)
    stat_beta = np.abs(nu * (p + inst.p_cir) - 1.0)
    gap_ratio = (F - beta * (p + inst.p_cir)) / np.maximum(np.abs(F), 1e-300)
    rate_slack = (r - inst.r_min) / inst.r_min
    cs_tau = tau * dr_dp / price_p * np.abs(rate_slack)
    band_slack = (inst.b_total - np.sum(b)) / inst.b_total
    res = {
        "stationarity_p": float(np.max(stat_p)),
        "stationarity_b": float(np.max(stat_b)),
        "stationarity_beta": float(np.max(stat_beta)),
        "complementary_nu": float(np.max(np.abs(gap_ratio))),
        "complementary_tau": float(np.max(cs_tau)),
        "complementary_lambda": float(abs(band_slack)) if lam > 0 else 0.0,
        "primal_ratio": float(np.max(np.maximum(-gap_ratio, 0.0))),
        "primal_rate": float(np.max(np.maximum(-rate_slack, 0.0))),
        "primal_bandwidth": float(max(-band_slack, 0.0)),
        "dual_feasibility": float(max(np.max(np.maximum(-nu, 0.0)), max(-lam, 0.0))),
    }
    return res


def solve(inst: ProblemInstance, cfg: NewtonConfig = NewtonConfig(),
          a0: Allocation | None = None) -> SolveReport:
    """Globally optimal weighted sum-UEE allocation."""
    t0 = time.perf_counter()
    if a0 is None:
        a0 = slater_point(inst)
    dual = init_dual(inst, a0)
    state = _make_state(inst, dual, cfg)
    trace = [state.phi_norm]
    tol = stop_threshold(inst.n, cfg)
    status, message = "max_iter", ""
    while True:
        if state.phi_norm <= tol:
            status = "converged"
            break
        if state.iteration >= cfg.max_outer:
            break
        try:
            J, state = line_search(inst, state, newton_direction(state, cfg), cfg)
        except LineSearchError as exc:
            status, message = "error", str(exc)
            break
        trace.append(state.phi_norm)
        log.debug("iteration %d: J=%d |phi|=%.3e", state.iteration, J, state.phi_norm)
    a = state.inner.allocation
    per_user = uee_vector(a, inst)
    kkt = epigraph_kkt_residuals(inst, a, state.dual, state.inner.lambda_sharp)
    return SolveReport(
        allocation=a,
        objective=float(np.sum(inst.c * per_user)),
        per_user_uee=per_user,
        outer_iterations=state.iteration,
        phi_norm_trace=trace,
        kkt_residual=max(kkt.values()),
        wall_time=time.perf_counter() - t0,
        status=status,
        kkt=kkt,
        dual=state.dual,
        lambda_sharp=state.inner.lambda_sharp,
        J_history=state.J_history,
        message=message,
    )
