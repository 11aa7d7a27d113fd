"""TOML serialization of trajectory problems.

``dump_problem`` writes a complete TrajectoryProblem; ``load_problem`` reads
it back bit-exactly (floats are emitted with repr, which round-trips IEEE
doubles).  The schema mirrors the dataclasses: a [model] table with the
matrices as nested arrays, [[path_constraint]] / [[terminal_constraint]]
tables, and a [problem] table with the scalars.
"""

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .errors import ConfigError
from .models import (ChanceSpec, LinearChanceConstraint, SdlcsModel,
                     TrajectoryProblem)

_MODEL_FIELDS = ("A", "B", "C", "D", "E", "F", "g", "h", "W", "V",
                 "sigma_C", "sigma_F", "sigma_h")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        r = repr(float(value))
        # TOML requires a decimal point or exponent in float literals.
        if "." not in r and "e" not in r and "inf" not in r and "nan" not in r:
            r += ".0"
        return r
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, np.ndarray):
        return _fmt(value.tolist())
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize {type(value).__name__} to TOML")


def _write_table(w, name, items, double=False):
    w(("[[%s]]\n" if double else "[%s]\n") % name)
    for key, value in items:
        w(f"{key} = {_fmt(value)}\n")
    w("\n")


def dump_problem(problem: TrajectoryProblem, fp) -> None:
    """Write a TrajectoryProblem as TOML; fp is a path or a text stream."""
    close = False
    if isinstance(fp, (str, bytes)):
        fp = open(fp, "w")
        close = True
    try:
        w = fp.write
        _write_table(w, "problem", [
            ("name", problem.name),
            ("N", problem.N),
            ("x_s", problem.x_s),
            ("Sigma_s", problem.Sigma_s),
            ("Q", problem.Q),
            ("R", problem.R),
            ("u_lo", [lo for lo, _ in problem.u_bounds]),
            ("u_hi", [hi for _, hi in problem.u_bounds]),
            ("lambda_u", problem.lambda_u),
            ("lambda_cov", problem.worst_case_lambda),
        ])
        _write_table(w, "chance", [
            ("delta", problem.chance.delta),
            ("epsilon", problem.chance.epsilon),
            ("big_m", problem.chance.big_m),
            ("pin_contact_band", problem.chance.pin_contact_band),
        ])
        _write_table(w, "model",
                     [(k, getattr(problem.model, k)) for k in _MODEL_FIELDS])
        for section, cons in (("path_constraint", problem.chance.path_constraints),
                              ("terminal_constraint",
                               problem.chance.terminal_constraints)):
            for con in cons:
                _write_table(w, section, [
                    ("label", con.label),
                    ("a", con.a),
                    ("b", con.b),
                    ("steps", list(con.steps)),
                    ("budget_share", con.budget_share),
                ], double=True)
    finally:
        if close:
            fp.close()


def _constraint(tbl) -> LinearChanceConstraint:
    try:
        return LinearChanceConstraint(
            a=tbl["a"], b=tbl["b"], steps=tbl["steps"], label=tbl["label"],
            budget_share=tbl.get("budget_share", 1.0),
        )
    except KeyError as exc:
        raise ConfigError(f"constraint table missing key {exc}") from None


def load_problem(fp) -> TrajectoryProblem:
    """Read a TrajectoryProblem from TOML; fp is a path or a binary stream."""
    if isinstance(fp, (str, bytes)):
        with open(fp, "rb") as handle:
            data = tomllib.load(handle)
    else:
        data = tomllib.load(fp)
    try:
        prob = data["problem"]
        chance_tbl = data["chance"]
        model_tbl = data["model"]
    except KeyError as exc:
        raise ConfigError(f"config missing table {exc}") from None
    try:
        model = SdlcsModel(**{k: model_tbl[k] for k in _MODEL_FIELDS})
        chance = ChanceSpec(
            delta=chance_tbl["delta"],
            epsilon=chance_tbl["epsilon"],
            big_m=chance_tbl["big_m"],
            pin_contact_band=chance_tbl.get("pin_contact_band", True),
            path_constraints=[_constraint(t)
                              for t in data.get("path_constraint", [])],
            terminal_constraints=[_constraint(t)
                                  for t in data.get("terminal_constraint", [])],
        )
        return TrajectoryProblem(
            name=prob["name"],
            model=model,
            N=prob["N"],
            x_s=prob["x_s"],
            Sigma_s=prob["Sigma_s"],
            Q=prob["Q"],
            R=prob["R"],
            u_bounds=list(zip(prob["u_lo"], prob["u_hi"])),
            lambda_u=prob["lambda_u"],
            chance=chance,
            lambda_cov=prob.get("lambda_cov"),
        )
    except KeyError as exc:
        raise ConfigError(f"config missing key {exc}") from None
