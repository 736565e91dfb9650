"""Property checks run by ``secuee validate``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverError
from .inner import DualParams, bandwidth_sum, reference_lambda
from .model import power_for_rate, rates
from .outer import NewtonConfig, eval_phi, solve, stop_threshold
from .scenario import PRESET_NAMES, ScenarioSpec, generate, preset_utility
from .utility import validate_spec


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _check_presets():
    out = []
    for name in PRESET_NAMES:
        rep = validate_spec(preset_utility(name).spec)
        detail = "" if rep.passed else str(rep.failures[:2])
        out.append(CheckResult(f"utility:{name}", rep.passed, detail))
    return out


def _contraction(rep, cfg):
    if rep.status != "converged":
        return False, f"status={rep.status} {rep.message}"
    tr = rep.phi_norm_trace
    for i, J in enumerate(rep.J_history):
        need = cfg.xi ** J * cfg.epsilon * tr[i]
        if tr[i] - tr[i + 1] < need:
            return False, f"iteration {i + 1}: decrease {tr[i] - tr[i + 1]:.3e} < {need:.3e}"
    return True, f"{rep.outer_iterations} iterations"


def _psi_monotone(inst, dual, n_pairs=50, seed=0):
    rng = np.random.default_rng(seed)
    ref = reference_lambda(inst, dual)
    lam = np.sort(ref * np.exp(rng.uniform(-8, 8, size=(n_pairs, 2))), axis=1)
    for lo, hi in lam:
        if lo == hi:
            continue
        if not bandwidth_sum(lo, inst, dual) > bandwidth_sum(hi, inst, dual):
            return False, f"not decreasing between {lo:.3e} and {hi:.3e}"
    return True, f"{n_pairs} pairs"


def _own_partials_single_user(seed, rel_step=1e-6):
    """Own-partial identity of phi at a random dual point of a one-user instance."""
    inst = generate(ScenarioSpec(n_users=1, seed=seed))
    rng = np.random.default_rng(seed)
    rep = solve(inst)
    beta = rep.dual.beta * math.exp(rng.uniform(-0.5, 0.5))
    nu = rep.dual.nu * math.exp(rng.uniform(-0.5, 0.5))
    _, _, inner = eval_phi(inst, DualParams(beta, nu))
    draw = inner.allocation.p + inst.p_cir
    hb, hn = rel_step * beta, rel_step * nu
    d1 = (eval_phi(inst, DualParams(beta + hb, nu))[0]
          - eval_phi(inst, DualParams(beta - hb, nu))[0]) / (2 * hb)
    d2 = (eval_phi(inst, DualParams(beta, nu + hn))[1]
          - eval_phi(inst, DualParams(beta, nu - hn))[1]) / (2 * hn)
    err = float(max(np.max(np.abs(d1 - draw) / draw), np.max(np.abs(d2 - draw) / draw)))
    return err <= 1e-3, f"max rel err {err:.2e}"


def _single_user_oracle(seed, n_grid=20000):
    inst = generate(ScenarioSpec(n_users=1, seed=seed))
    rep = solve(inst)
    b = inst.b_total
    p_lo = float(power_for_rate(inst.r_min, np.array([b]), inst)[0])
    p = p_lo + np.logspace(-12, 1, n_grid)
    rs = rates(p, np.full_like(p, b), inst) - inst.r_e
    f = np.array([inst.users[0].utility.f(float(x)) for x in rs])
    best = float(np.max(inst.c[0] * f / (p + inst.p_cir[0])))
    ok = rep.objective >= best * (1 - 1e-2)
    return ok, f"solver {rep.objective:.6e} grid {best:.6e}"


def run_checks(n_seeds: int = 10, inject_fault: bool = False, n_users: int = 5) -> list[CheckResult]:
    cfg = NewtonConfig(direction_sign=-1.0 if inject_fault else 1.0, max_outer=100)
    results = _check_presets()
    for seed in range(n_seeds):
        inst = generate(ScenarioSpec(n_users=n_users, seed=seed))
        try:
            rep = solve(inst, cfg)
        except SolverError as exc:
            results.append(CheckResult(f"seed{seed}:solve", False, str(exc)))
            continue
        ok, detail = _contraction(rep, cfg)
        results.append(CheckResult(f"seed{seed}:contraction", ok, detail))
        kkt_ok = rep.kkt_residual <= 1e-4
        results.append(CheckResult(f"seed{seed}:kkt", kkt_ok, f"{rep.kkt_residual:.2e}"))
        ok, detail = _psi_monotone(inst, rep.dual, seed=seed)
        results.append(CheckResult(f"seed{seed}:bandwidth_monotone", ok, detail))
        tol = stop_threshold(inst.n, cfg)
        fixed = np.max(np.abs(rep.dual.nu * (rep.allocation.p + inst.p_cir) - 1.0))
        results.append(CheckResult(f"seed{seed}:fixed_point", fixed <= tol,
                                   f"|nu (p + p_cir) - 1| = {fixed:.2e}"))
        ok, detail = _own_partials_single_user(seed)
        results.append(CheckResult(f"seed{seed}:own_partials_n1", ok, detail))
        ok, detail = _single_user_oracle(seed)
        results.append(CheckResult(f"seed{seed}:oracle_n1", ok, detail))
    return results
