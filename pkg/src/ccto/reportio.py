"""Plain-text serialization of plans, risk budgets, and Monte Carlo reports.

Plan files are versioned ("ccto-plan 1"), carry the system name, total risk,
and dimensions in the header, and store every float with repr so reading a
plan back reproduces it bit for bit.
"""

import numpy as np

from .chance import RiskBudget
from .errors import ConfigError
from .miqp import PlanSolution, SolverStats
from .montecarlo import MonteCarloReport

PLAN_VERSION = "ccto-plan 1"


def _open(fp, mode):
    if isinstance(fp, (str, bytes)):
        return open(fp, mode), True
    return fp, False


def _write_matrix(w, name, M):
    M = np.atleast_2d(M)
    w(f"{name} {M.shape[0]} {M.shape[1]}\n")
    for row in M:
        w(" ".join(repr(float(v)) for v in row) + "\n")


def write_plan(plan: PlanSolution, fp, system: str = "custom",
               delta: float = float("nan")) -> None:
    fp, close = _open(fp, "w")
    try:
        w = fp.write
        w(f"# {PLAN_VERSION}\n")
        w(f"system {system}\n")
        w(f"delta {delta!r}\n")
        N, n_c = plan.z.shape
        w(f"dims N={N} n_x={plan.x_mean.shape[1]} "
          f"n_u={plan.u.shape[1]} n_c={n_c}\n")
        w(f"objective {plan.objective!r}\n")
        s = plan.solver_stats
        w(f"stats nodes={s.nodes} qp_solves={s.qp_solves} "
          f"relaxation_bound={s.relaxation_bound!r} "
          f"wall_time={s.wall_time!r} regularization={s.regularization!r}\n")
        _write_matrix(w, "x_mean", plan.x_mean)
        _write_matrix(w, "u", plan.u)
        _write_matrix(w, "lam", plan.lam)
        _write_matrix(w, "z", plan.z.astype(float))
    finally:
        if close:
            fp.close()


def _read_matrix(lines, expect_name):
    header = next(lines).split()
    if header[0] != expect_name:
        raise ConfigError(f"expected section {expect_name!r}, got {header[0]!r}")
    rows, cols = int(header[1]), int(header[2])
    M = np.array(
        [[float(t) for t in next(lines).split()] for _ in range(rows)]
    )
    if M.shape != (rows, cols):
        raise ConfigError(f"section {expect_name!r} has wrong shape")
    return M


def read_plan(fp):
    """Read a plan file; returns (plan, system name, delta)."""
    fp, close = _open(fp, "r")
    try:
        lines = iter(fp.read().splitlines())
    finally:
        if close:
            fp.close()
    if PLAN_VERSION not in next(lines):
        raise ConfigError("not a ccto plan file")
    system = next(lines).split(maxsplit=1)[1]
    delta = float(next(lines).split()[1])
    next(lines)  # dims line, redundant with the matrix headers
    objective = float(next(lines).split()[1])
    stats_kv = dict(tok.split("=") for tok in next(lines).split()[1:])
    stats = SolverStats(
        nodes=int(stats_kv["nodes"]),
        qp_solves=int(stats_kv["qp_solves"]),
        relaxation_bound=float(stats_kv["relaxation_bound"]),
        wall_time=float(stats_kv["wall_time"]),
        regularization=float(stats_kv["regularization"]),
    )
    x_mean = _read_matrix(lines, "x_mean")
    u = _read_matrix(lines, "u")
    lam = _read_matrix(lines, "lam")
    z = np.rint(_read_matrix(lines, "z")).astype(int)
    plan = PlanSolution(x_mean=x_mean, u=u, lam=lam, z=z,
                        objective=objective, solver_stats=stats)
    return plan, system, delta


def format_budget(budget: RiskBudget) -> str:
    """Human-readable audit of one risk allocation."""
    return "\n".join([
        "risk allocation:",
        f"  total delta          {budget.delta:.6g}",
        f"  complementarity half {budget.delta1:.6g} "
        f"-> theta = {budget.theta:.6g} per row-step ({budget.N} steps x "
        f"{budget.n_c} rows)",
        f"  state half           {budget.delta2:.6g} "
        f"-> {budget.delta_state:.6g} per constraint-step ({budget.N} steps x "
        f"{budget.L} constraints)",
        f"  multipliers          alpha={budget.alpha:.6f} "
        f"zeta={budget.zeta:.6f} eta={budget.eta:.6f}",
    ])


def format_report(report: MonteCarloReport, specified_delta: float) -> str:
    lines = [
        "monte carlo validation:",
        f"  trials           {report.trials}",
        f"  seed             {report.seed}",
        f"  violations       {report.violations}",
        f"  obtained delta   {report.obtained_delta:.6g} "
        f"(95% CI +/- {report.ci95:.6g})",
        f"  specified delta  {specified_delta:.6g}",
        f"  lcp failures     {report.lcp_failures}",
    ]
    if report.per_constraint:
        lines.append("  violations by constraint:")
        for label, count in sorted(report.per_constraint.items()):
            lines.append(f"    {label}: {count}")
    return "\n".join(lines)


REPORT_VERSION = "ccto-report 1"


def write_report(report: MonteCarloReport, specified_delta: float, fp,
                 system: str = "custom",
                 objective: float = float("nan")) -> None:
    fp, close = _open(fp, "w")
    try:
        fp.write(f"# {REPORT_VERSION}\n")
        fp.write(f"system {system}\n")
        fp.write(f"objective {objective!r}\n")
        fp.write(format_report(report, specified_delta) + "\n")
    finally:
        if close:
            fp.close()


def read_report(fp) -> dict:
    """Parse a report file into a flat dict for aggregation."""
    fp, close = _open(fp, "r")
    try:
        text = fp.read()
    finally:
        if close:
            fp.close()
    if REPORT_VERSION not in text.splitlines()[0]:
        raise ConfigError("not a ccto report file")
    out = {}
    for line in text.splitlines():
        toks = line.split()
        if line.startswith("system "):
            out["system"] = line.split(maxsplit=1)[1]
        elif line.startswith("objective "):
            out["objective"] = float(toks[1])
        elif line.startswith("  trials"):
            out["trials"] = int(toks[1])
        elif line.startswith("  seed"):
            out["seed"] = int(toks[1])
        elif line.startswith("  obtained delta"):
            out["obtained_delta"] = float(toks[2])
            out["ci95"] = float(toks[6].rstrip(")"))
        elif line.startswith("  specified delta"):
            out["specified_delta"] = float(toks[2])
    for key in ("system", "objective", "trials", "obtained_delta",
                "specified_delta"):
        if key not in out:
            raise ConfigError(f"report file missing field {key!r}")
    return out
