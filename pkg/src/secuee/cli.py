"""Command-line front end: ``secuee {solve,compare,sweep,validate}``.

Exit status is 0 on success, 1 when a solver or validation check fails and 2
for usage or configuration errors. Set ``SECUEE_LOG`` (DEBUG, INFO, ...) for
log output on stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import baselines, outer
from .errors import DomainError, SolverError
from .results import group_rows, summary_row, user_rows, write_rows
from .scenario import ScenarioSpec, generate, group_indices, spec_from_dict

log = logging.getLogger("secuee")

ALGORITHMS = ("proposed", "ao", "p-only", "b-only")
AXES = ("b_total", "n_users", "weights", "r_e_groups")
_TOP_KEYS = {"scenario", "newton", "baselines", "output", "sweep"}


class ConfigError(Exception):
    pass


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads 1e7 and 1.0e7 as floats (YAML 1.1 does not)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                   |[0-9][0-9_]*[eE][-+]?[0-9]+
                   |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                   |[-+]?\.(?:inf|Inf|INF)
                   |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


@dataclass
class RunConfig:
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    newton: outer.NewtonConfig = field(default_factory=outer.NewtonConfig)
    baselines: baselines.BaselineConfig = field(default_factory=baselines.BaselineConfig)
    output_path: str | None = None
    output_format: str = "csv"
    sweep: dict = field(default_factory=dict)


def _build(cls, d, what, exclude=()):
    if d is None:
        return cls()
    if not isinstance(d, dict):
        raise ConfigError(f"'{what}' must be a mapping")
    known = set(cls.__dataclass_fields__) - set(exclude)
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {what} settings: {exc}") from exc


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.load(fh, Loader=_Loader)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at the top level")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    try:
        scen = spec_from_dict(raw.get("scenario") or {})
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad scenario: {exc}") from exc
    newton = _build(outer.NewtonConfig, raw.get("newton"), "newton",
                    exclude=("inner_cfg", "direction_sign"))
    base = _build(baselines.BaselineConfig, raw.get("baselines"), "baselines",
                  exclude=("root_cfg",))
    out = raw.get("output") or {}
    if not isinstance(out, dict) or set(out) - {"path", "format"}:
        raise ConfigError("output takes only 'path' and 'format'")
    sweep = raw.get("sweep") or {}
    if not isinstance(sweep, dict) or set(sweep) - {"axis", "values", "algorithms"}:
        raise ConfigError("sweep takes only 'axis', 'values' and 'algorithms'")
    return RunConfig(scen, newton, base, out.get("path"), out.get("format", "csv"), sweep)


# --- running algorithms -----------------------------------------------------------

def run_algorithm(name: str, inst, newton_cfg, base_cfg):
    if name == "proposed":
        return outer.solve(inst, newton_cfg)
    if name == "ao":
        return baselines.alternating(inst, base_cfg)
    if name == "p-only":
        return baselines.optimize_power_only(inst)
    if name == "b-only":
        return baselines.optimize_bandwidth_only(
            inst, baselines.default_fixed_powers(inst, base_cfg), base_cfg)
    raise ConfigError(f"unknown algorithm {name!r}")


def _point(args):
    spec, algorithms, newton_cfg, base_cfg = args
    inst = generate(spec)
    return inst, [run_algorithm(a, inst, newton_cfg, base_cfg) for a in algorithms]


def _parse_values(axis: str, values):
    """Sweep values: numbers for scalar axes, colon-separated tuples for group axes."""
    if isinstance(values, str):
        values = [v for v in values.split(",") if v.strip()]
    out = []
    for v in values:
        if axis in ("weights", "r_e_groups"):
            parts = v.split(":") if isinstance(v, str) else list(np.atleast_1d(v))
            out.append(tuple(float(x) for x in parts))
        elif axis == "n_users":
            out.append(int(float(v)))
        else:
            out.append(float(v))
    if not out:
        raise ConfigError("sweep needs at least one value")
    return out


def _apply_axis(spec: ScenarioSpec, axis: str, value) -> ScenarioSpec:
    if axis == "b_total":
        return spec.replace(b_total=value)
    if axis == "n_users":
        return spec.replace(n_users=value)
    if axis == "weights":
        return spec.replace(weights=value)
    if axis == "r_e_groups":
        return spec.replace(r_e_bps=tuple(f * spec.r_min_bps for f in value))
    raise ConfigError(f"unknown sweep axis {axis!r}; choose from {AXES}")


def _groups_for(spec: ScenarioSpec, n: int):
    k = 1
    for v in (spec.weights, spec.r_e_bps):
        if np.ndim(v) == 1:
            k = max(k, len(v))
    if isinstance(spec.utility, tuple):
        k = max(k, len(spec.utility))
    return group_indices(n, k)


def _value_label(v):
    if isinstance(v, tuple):
        return ":".join(repr(x) for x in v)
    return repr(v)


# --- commands ----------------------------------------------------------------

def cmd_solve(cfg: RunConfig) -> int:
    inst = generate(cfg.scenario)
    rep = outer.solve(inst, cfg.newton)
    run_id = f"solve-s{cfg.scenario.seed}"
    rows = [summary_row(run_id, rep, inst)] + list(user_rows(run_id, rep, inst))
    write_rows(rows, cfg.output_path, cfg.output_format)
    print(f"status={rep.status} objective={rep.objective!r} iterations={rep.outer_iterations} "
          f"kkt={rep.kkt_residual:.3e} phi={rep.phi_norm_trace[-1]:.3e}", file=sys.stderr)
    if rep.status != "converged":
        print(f"solver did not converge: {rep.message}", file=sys.stderr)
        return 1
    return 0


def cmd_compare(cfg: RunConfig) -> int:
    inst = generate(cfg.scenario)
    run_id = f"compare-s{cfg.scenario.seed}"
    rows, failed = [], False
    print(f"{'algorithm':<10}{'objective':>24}{'wall_time_s':>14}{'iterations':>12}", file=sys.stderr)
    for name in ALGORITHMS:
        rep = run_algorithm(name, inst, cfg.newton, cfg.baselines)
        failed |= rep.status == "error" or (name == "proposed" and rep.status != "converged")
        rows.append(summary_row(run_id, rep, inst))
        rows.extend(user_rows(run_id, rep, inst))
        print(f"{rep.algorithm:<10}{rep.objective:>24.10g}{rep.wall_time:>14.4f}"
              f"{rep.outer_iterations:>12d}", file=sys.stderr)
    write_rows(rows, cfg.output_path, cfg.output_format)
    return 1 if failed else 0


def cmd_sweep(cfg: RunConfig, axis: str, values, algorithms, jobs: int) -> int:
    if axis not in AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {AXES}")
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {a!r}; choose from {ALGORITHMS}")
    vals = _parse_values(axis, values)
    specs = [_apply_axis(cfg.scenario, axis, v) for v in vals]
    tasks = [(s, tuple(algorithms), cfg.newton, cfg.baselines) for s in specs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_point, tasks))
    else:
        results = [_point(t) for t in tasks]
    rows, failed = [], False
    for i, (v, spec, (inst, reps)) in enumerate(zip(vals, specs, results)):
        groups = _groups_for(spec, inst.n)
        label = _value_label(v)
        for rep in reps:
            bad = rep.status == "error" or (rep.algorithm == "proposed" and rep.status != "converged")
            if bad:
                print(f"{axis}={label} {rep.algorithm}: status={rep.status} {rep.message}",
                      file=sys.stderr)
            failed |= bad
            run_id = f"sweep-{axis}-s{spec.seed}-{i:03d}"
            rows.append(summary_row(run_id, rep, inst, axis, label))
            rows.extend(group_rows(run_id, rep, inst, groups, axis, label))
    write_rows(rows, cfg.output_path, cfg.output_format)
    return 1 if failed else 0


def cmd_validate(n_seeds: int, inject_fault: bool) -> int:
    from .validation import run_checks
    results = run_checks(n_seeds=n_seeds, inject_fault=inject_fault)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return 1 if n_fail else 0


# --- entry point ---------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _common(p):
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--seed", type=int, help="scenario seed (overrides the config)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "jsonl"), help="output format (default csv)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="secuee", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _common(sub.add_parser("solve", help="solve one scenario with the Newton method"))
    _common(sub.add_parser("compare", help="run the proposed method and all baselines"))
    sw = sub.add_parser("sweep", help="sweep one scenario parameter")
    _common(sw)
    sw.add_argument("--axis", choices=AXES)
    sw.add_argument("--values", help="comma-separated; group axes use a:b:c tuples")
    sw.add_argument("--algorithms", help="comma-separated subset of " + ",".join(ALGORITHMS))
    sw.add_argument("--jobs", type=int, default=1, help="parallel sweep points")
    va = sub.add_parser("validate", help="run the property suite")
    va.add_argument("--seeds", type=int, default=10)
    va.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


def _configure_logging():
    level = os.environ.get("SECUEE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args.seeds, args.inject_fault)
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg.scenario = cfg.scenario.replace(seed=args.seed)
        if args.out is not None:
            cfg.output_path = args.out
        if args.format is not None:
            cfg.output_format = args.format
        if cfg.output_format not in ("csv", "jsonl"):
            raise ConfigError(f"unknown output format {cfg.output_format!r}")
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "compare":
            return cmd_compare(cfg)
        axis = args.axis or cfg.sweep.get("axis")
        values = args.values if args.values is not None else cfg.sweep.get("values")
        algos = args.algorithms.split(",") if args.algorithms else cfg.sweep.get("algorithms", ["proposed"])
        if axis is None or values is None:
            raise ConfigError("sweep needs an axis and values (flags or config 'sweep')")
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        return cmd_sweep(cfg, axis, values, algos, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc} {exc.diagnostics}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
