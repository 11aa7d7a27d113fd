"""Command line interface: solve, simulate, report.

Exit codes: 0 success, 2 configuration error, 3 infeasible problem,
4 solver limit reached.  CCTO_THREADS caps Monte Carlo workers.
"""

import pathlib
import sys

import click
import numpy as np

from . import benchmarks, configio, reportio
from .chance import ccc_feasibility
from .errors import (BudgetTooLoose, CctoError, ConfigError, Infeasible,
                     InfeasibleByLemma1, NodeLimitReached, OutOfDomain,
                     QpNumericalFailure)
from .montecarlo import estimate_violation, worker_count
from .planner import solve_problem

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_LIMIT = 4

_CONFIG_ERRORS = (ConfigError, BudgetTooLoose, OutOfDomain, ValueError)
_INFEASIBLE_ERRORS = (InfeasibleByLemma1, Infeasible)
_LIMIT_ERRORS = (NodeLimitReached, QpNumericalFailure)


def _fail(code, exc):
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _load_problem(system, config, delta):
    if (system is None) == (config is None):
        raise ConfigError("exactly one of --system or --config is required")
    if config is not None:
        problem = configio.load_problem(config)
        if delta is not None:
            problem.chance.delta = float(delta)
            problem.chance.__post_init__()
        return problem
    if system not in benchmarks.BUILDERS:
        raise ConfigError(
            f"unknown system {system!r}; choose from "
            f"{sorted(benchmarks.BUILDERS)} or pass --config"
        )
    if delta is None:
        return benchmarks.BUILDERS[system]()
    if not 0.0 < delta <= 0.5:
        raise ConfigError(f"delta out of (0, 0.5]: {delta}")
    return benchmarks.BUILDERS[system](delta=delta)


def _stem(problem):
    return f"{problem.name}_d{problem.chance.delta:g}"


def _lemma1_audit(result) -> str:
    problem = result.miqp.problem
    budget = result.budget
    eps = problem.chance.epsilon
    big_m = problem.chance.big_m
    lines = ["complementarity mode feasibility (per row, all steps):"]
    for i in range(problem.model.n_c):
        psi = float(result.cov.psi[0, i])
        rep = ccc_feasibility(eps, big_m, psi, budget.theta)
        forced = sum(1 for (k, j) in result.miqp.forced_modes if j == i)
        lines.append(
            f"  row {i}: sigma_y={psi:.3e} "
            f"contact needs theta>{rep.mode1_threshold:.3e} "
            f"({'ok' if rep.mode1_feasible else 'infeasible'}), "
            f"separation needs theta>{rep.mode2_threshold:.3e} "
            f"({'ok' if rep.mode2_feasible else 'infeasible'}), "
            f"forced at {forced} steps"
        )
    return "\n".join(lines)


@click.group()
def main():
    """Chance-constrained trajectory optimization for contact systems."""


@main.command()
@click.option("--system", default=None, help="Benchmark system name.")
@click.option("--config", default=None, type=click.Path(exists=True, dir_okay=False),
              help="TOML problem description.")
@click.option("--delta", default=None, type=float, help="Total risk budget.")
@click.option("--out", default=".", type=click.Path(file_okay=False),
              help="Output directory.")
@click.option("--gap-tol", default=1e-6, type=float,
              help="Relative optimality gap.")
@click.option("--node-limit", default=1_000_000, type=int,
              help="Branch-and-bound node budget.")
def solve(system, config, delta, out, gap_tol, node_limit):
    """Plan a trajectory and write plan, audit, and effective config."""
    try:
        problem = _load_problem(system, config, delta)
    except _CONFIG_ERRORS as exc:
        _fail(EXIT_CONFIG, exc)
    outdir = pathlib.Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = _stem(problem)
    try:
        result = solve_problem(problem, gap_tol=gap_tol, node_limit=node_limit)
    except _INFEASIBLE_ERRORS as exc:
        _fail(EXIT_INFEASIBLE, exc)
    except NodeLimitReached as exc:
        _fail(EXIT_LIMIT, exc)
    except QpNumericalFailure as exc:
        _fail(EXIT_LIMIT, exc)
    except _CONFIG_ERRORS as exc:
        _fail(EXIT_CONFIG, exc)

    plan_path = outdir / f"{stem}.plan.txt"
    reportio.write_plan(result.plan, str(plan_path), system=problem.name,
                        delta=problem.chance.delta)
    configio.dump_problem(problem, str(outdir / f"{stem}.config.toml"))
    stats = result.plan.solver_stats
    audit = "\n".join([
        reportio.format_budget(result.budget),
        _lemma1_audit(result),
        "solver:",
        f"  objective        {result.plan.objective!r}",
        f"  relaxation bound {stats.relaxation_bound!r}",
        f"  nodes            {stats.nodes}",
        f"  qp solves        {stats.qp_solves}",
        f"  wall time        {stats.wall_time:.3f} s",
        f"  regularization   {stats.regularization!r}",
    ])
    (outdir / f"{stem}.audit.txt").write_text(audit + "\n")
    click.echo(audit)
    click.echo(f"plan written to {plan_path}")


@main.command()
@click.option("--system", default=None, help="Benchmark system name.")
@click.option("--config", default=None, type=click.Path(exists=True, dir_okay=False),
              help="TOML problem description.")
@click.option("--delta", default=None, type=float,
              help="Risk budget (defaults to the plan file's).")
@click.option("--plan", "plan_file", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Plan file from the solve command.")
@click.option("--trials", default=1000, type=int, help="Monte Carlo trials.")
@click.option("--seed", default=0, type=int, help="Base RNG seed.")
@click.option("--out", default=".", type=click.Path(file_okay=False),
              help="Output directory.")
@click.option("--dump-trajectories", is_flag=True,
              help="Also write per-trial state trajectories.")
def simulate(system, config, delta, plan_file, trials, seed, out,
             dump_trajectories):
    """Monte Carlo validation of a plan against its system."""
    try:
        if trials < 1:
            raise ConfigError(f"trials must be >= 1, got {trials}")
        plan, plan_system, plan_delta = reportio.read_plan(plan_file)
        if delta is None and 0.0 < plan_delta <= 0.5:
            delta = plan_delta
        problem = _load_problem(system, config, delta)
        m = problem.model
        if plan.u.shape != (problem.N, m.n_u) or plan.lam.shape[1] != m.n_c:
            raise ConfigError(
                f"plan dimensions (N={plan.u.shape[0]}, n_u={plan.u.shape[1]}, "
                f"n_c={plan.lam.shape[1]}) do not match system "
                f"{problem.name!r} (N={problem.N}, n_u={m.n_u}, n_c={m.n_c})"
            )
    except _CONFIG_ERRORS as exc:
        _fail(EXIT_CONFIG, exc)
    outdir = pathlib.Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = _stem(problem)

    sink = None
    if dump_trajectories:
        sink = open(outdir / f"{stem}.trajectories.txt", "w")
    try:
        # worker_count() is the CCTO_THREADS cap; trials use counter-based
        # substreams, so the result is identical at any worker count and we
        # run serially below.
        _ = worker_count()
        report = estimate_violation(problem, plan, trials=trials, seed=seed,
                                    trajectory_sink=sink)
    finally:
        if sink is not None:
            sink.close()

    report_path = outdir / f"{stem}.report.txt"
    reportio.write_report(report, problem.chance.delta, str(report_path),
                          system=problem.name, objective=plan.objective)
    click.echo(reportio.format_report(report, problem.chance.delta))
    click.echo(
        f"obtained delta {report.obtained_delta:.4f} vs "
        f"specified {problem.chance.delta:g}"
    )
    click.echo(f"report written to {report_path}")


@main.command()
@click.option("--out", default=".", type=click.Path(exists=True, file_okay=False),
              help="Directory containing report files.")
def report(out):
    """Aggregate reports in a directory into per-system tables."""
    outdir = pathlib.Path(out)
    rows = []
    for path in sorted(outdir.glob("*.report.txt")):
        try:
            rows.append(reportio.read_report(str(path)))
        except ConfigError as exc:
            click.echo(f"skipping {path}: {exc}", err=True)
    if not rows:
        _fail(EXIT_CONFIG, f"no report files found in {outdir}")
    by_system = {}
    for row in rows:
        by_system.setdefault(row["system"], []).append(row)
    for name in sorted(by_system):
        table = sorted(by_system[name], key=lambda r: -r["specified_delta"])
        lines = [f"system: {name}",
                 f"{'specified':>10} {'obtained':>10} {'ci95':>10} "
                 f"{'objective':>12}"]
        for r in table:
            lines.append(
                f"{r['specified_delta']:>10.4g} {r['obtained_delta']:>10.4g} "
                f"{r['ci95']:>10.4g} {r['objective']:>12.6g}"
            )
        text = "\n".join(lines)
        (outdir / f"summary_{name}.txt").write_text(text + "\n")
        click.echo(text)


if __name__ == "__main__":
    main()
