"""Long-format result rows and their CSV / JSON-lines serialization."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .model import ProblemInstance
from .outer import SolveReport

COLUMNS = ("run_id", "algorithm", "axis", "axis_value", "n_users", "objective",
           "wall_time_s", "outer_iters", "kkt_residual", "user_id", "p_w", "b_hz", "uee")


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def summary_row(run_id, rep: SolveReport, inst: ProblemInstance, axis="", axis_value=""):
    return {
        "run_id": run_id, "algorithm": rep.algorithm, "axis": axis,
        "axis_value": axis_value, "n_users": inst.n, "objective": _num(rep.objective),
        "wall_time_s": _num(rep.wall_time), "outer_iters": rep.outer_iterations,
        "kkt_residual": _num(rep.kkt_residual), "user_id": None, "p_w": None,
        "b_hz": None, "uee": None,
    }


def user_rows(run_id, rep, inst, axis="", axis_value=""):
    base = summary_row(run_id, rep, inst, axis, axis_value)
    a = rep.allocation
    for n in range(inst.n):
        row = dict(base)
        row.update(user_id=str(n), p_w=_num(a.p[n]), b_hz=_num(a.b[n]),
                   uee=_num(rep.per_user_uee[n]))
        yield row


def group_rows(run_id, rep, inst, groups, axis="", axis_value=""):
    """One row per user group: summed UEE, mean power and mean bandwidth."""
    base = summary_row(run_id, rep, inst, axis, axis_value)
    a = rep.allocation
    for k, idx in enumerate(groups):
        row = dict(base)
        row.update(user_id=f"group{k}", p_w=_num(np.mean(a.p[idx])),
                   b_hz=_num(np.mean(a.b[idx])), uee=_num(np.sum(rep.per_user_uee[idx])))
        yield row


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in COLUMNS])
    return buf.getvalue()


def to_jsonl(rows) -> str:
    return "".join(json.dumps({c: r.get(c) for c in COLUMNS}) + "\n" for r in rows)


def write_rows(rows, path, fmt: str):
    text = to_csv(rows) if fmt == "csv" else to_jsonl(rows)
    if path in (None, "-"):
        import sys
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
