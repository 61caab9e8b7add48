"""Problem files (YAML), reports (JSON) and trajectory tables (CSV).

Problem file layout::

    system:
      A: [[1, 1], [0, 1]]
      B: [[0], [1]]
    x0: [0, 1]
    set: {type: ballinf, radii: [1]}      # or {type: ball2, r: 1}
    weights: {type: linear, a: 1}         # theorem1: eta, safety; explicit: values
                                          # (eta defaults to 1e-3 * (1 + ||x0||))
    horizon: 10
    solver: {eps_abs: 1e-8, eps_rel: 1e-6, max_iters: 50000, rho: 1.0}
    seed: 0
    mpc: {tau: 5, resolve_period: 1, max_steps: 100}

Demo fixtures may also carry ``x0_grid`` (a list of initial states),
``max_horizon`` (how far a demo may extend ``T``) and ``checksum`` (SHA-256
of the system matrices, see :func:`system_checksum`). Unknown keys are
rejected with the line they appear on.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .lti import LtiSystem
from .sets import AdmissibleSet, set_from_dict
from .solver import SolverConfig
from .weights import WeightSchedule, explicit_weights, linear_weights, theorem1_weights

__all__ = [
    "ProblemFileError",
    "Problem",
    "load_problem",
    "parse_problem",
    "system_checksum",
    "report_to_dict",
    "trace_to_dict",
    "write_report",
    "read_report",
    "trajectory_rows",
    "write_trajectory",
    "read_trajectory",
    "atomic_write_text",
]

_TOP_KEYS = {
    "system", "x0", "x0_grid", "set", "weights", "horizon", "solver", "seed",
    "mpc", "name", "description", "max_horizon", "checksum",
}
_SECTION_KEYS = {
    "system": {"A", "B"},
    "set": {"type", "r", "n_u", "radii"},
    "weights": {"type", "a", "eta", "safety", "values"},
    "solver": {"rho", "eps_abs", "eps_rel", "max_iters", "over_relaxation", "polish", "adaptive_rho"},
    "mpc": {"tau", "resolve_period", "max_steps", "zero_tol", "relative_time"},
}
_REQUIRED = ("system", "x0", "set", "weights", "horizon")


class ProblemFileError(ValueError):
    """Malformed problem file; the message names the file, line and field."""

    def __init__(self, message: str, source: str = "<string>", line: int | None = None, key: str | None = None):
        where = source if line is None else f"{source}:{line}"
        super().__init__(f"{where}: {message}")
        self.source = source
        self.line = line
        self.key = key


@dataclass(eq=False)
class Problem:
    sys: LtiSystem
    x0: np.ndarray
    uset: AdmissibleSet
    weights: WeightSchedule
    T: int
    solver: SolverConfig
    seed: int | None = None
    mpc: dict = field(default_factory=dict)
    x0_grid: list = field(default_factory=list)
    max_horizon: int | None = None
    name: str = ""
    raw: dict = field(default_factory=dict)

    def with_horizon(self, T: int) -> "Problem":
        """Same problem with the weight schedule rebuilt for horizon ``T``."""
        weights = _build_weights(self.raw["weights"], self.sys, self.uset, T, "<problem>", {}, self.x0)
        raw = dict(self.raw, horizon=T)
        return Problem(
            self.sys, self.x0, self.uset, weights, T, self.solver, self.seed,
            self.mpc, self.x0_grid, self.max_horizon, self.name, raw,
        )

    def with_x0(self, x0) -> "Problem":
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.shape != (self.sys.n,):
            raise ValueError(f"x0 must have length {self.sys.n}")
        raw = dict(self.raw, x0=x0.tolist())
        # a default eta depends on x0, so the schedule is rebuilt
        weights = _build_weights(self.raw["weights"], self.sys, self.uset, self.T, "<problem>", {}, x0)
        return Problem(
            self.sys, x0, self.uset, weights, self.T, self.solver, self.seed,
            self.mpc, self.x0_grid, self.max_horizon, self.name, raw,
        )


def system_checksum(A, B) -> str:
    """SHA-256 of the matrices' float64 bytes (shape-prefixed)."""
    h = hashlib.sha256()
    for M in (A, B):
        M = np.ascontiguousarray(M, dtype="<f8")
        h.update(repr(M.shape).encode())
        h.update(M.tobytes())
    return h.hexdigest()


# --- parsing -----------------------------------------------------------------

def _lines(node: yaml.Node) -> dict:
    """Map each key path (tuple) to its 1-based line."""
    out = {}

    def walk(n, path):
        if isinstance(n, yaml.MappingNode):
            for k, v in n.value:
                key = path + (k.value,)
                out[key] = k.start_mark.line + 1
                walk(v, key)

    if node is not None:
        walk(node, ())
    return out


def _number(value, where: str, source: str, line, *, integer=False):
    if isinstance(value, str):
        # YAML 1.1 reads "1e-8" as a string; accept any float literal
        try:
            value = float(value)
        except ValueError:
            raise ProblemFileError(f"{where} must be a number, got {value!r}", source, line, where) from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemFileError(f"{where} must be a number, got {value!r}", source, line, where)
    if integer:
        if float(value) != int(value):
            raise ProblemFileError(f"{where} must be an integer, got {value!r}", source, line, where)
        return int(value)
    return float(value)


def _array(value, where, source, line, ndim):
    def conv(v, depth):
        if depth == 0:
            return _number(v, where, source, line)
        if not isinstance(v, list):
            raise ProblemFileError(f"{where} must be a {ndim}-D array", source, line, where)
        return [conv(x, depth - 1) for x in v]

    try:
        arr = np.array(conv(value, ndim), dtype=np.float64)
    except ValueError:
        raise ProblemFileError(f"{where} must be a non-empty rectangular {ndim}-D array", source, line, where) from None
    if arr.ndim != ndim or 0 in arr.shape:
        raise ProblemFileError(f"{where} must be a non-empty rectangular {ndim}-D array", source, line, where)
    return arr


def _build_weights(spec, sys, uset, T, source, lines, x0):
    line = lines.get(("weights", "type"), lines.get(("weights",)))
    kind = spec.get("type")
    try:
        if kind == "linear":
            return linear_weights(_number(spec.get("a", 1.0), "weights.a", source, line), T)
        if kind == "theorem1":
            return theorem1_weights(
                sys,
                uset,
                # default stands in for the unknown smallest nonzero optimal state norm
                _number(spec.get("eta", 1e-3 * (1.0 + float(np.linalg.norm(x0)))), "weights.eta", source, line),
                _number(spec.get("safety", 1.01), "weights.safety", source, line),
                T,
            )
        if kind == "explicit":
            if "values" not in spec:
                raise ProblemFileError("weights.values is required for explicit weights", source, line, "weights.values")
            w = _array(spec["values"], "weights.values", source, lines.get(("weights", "values")), 1)
            if w.size != T:
                raise ProblemFileError(f"weights.values has {w.size} entries; horizon is {T}", source, line, "weights.values")
            return explicit_weights(w)
    except ProblemFileError:
        raise
    except (ValueError, OverflowError) as exc:
        raise ProblemFileError(f"weights: {exc}", source, line, "weights") from exc
    raise ProblemFileError(
        f"weights.type must be 'linear', 'theorem1' or 'explicit', got {kind!r}", source, line, "weights.type"
    )


def parse_problem(text: str, source: str = "<string>") -> Problem:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ProblemFileError(f"invalid YAML: {exc}", source, None if mark is None else mark.line + 1) from exc
    if not isinstance(data, dict):
        raise ProblemFileError("top level must be a mapping", source, 1)
    lines = _lines(node)

    for key in data:
        if key not in _TOP_KEYS:
            raise ProblemFileError(f"unknown key {key!r}", source, lines.get((key,)), str(key))
    for key in _REQUIRED:
        if key not in data:
            raise ProblemFileError(f"missing required field {key!r}", source, None, key)
    for section, allowed in _SECTION_KEYS.items():
        if section not in data:
            continue
        body = data[section]
        if not isinstance(body, dict):
            raise ProblemFileError(f"{section} must be a mapping", source, lines.get((section,)), section)
        for key in body:
            if key not in allowed:
                raise ProblemFileError(
                    f"unknown key {key!r} in {section!r}", source, lines.get((section, key)), f"{section}.{key}"
                )
    for key in ("A", "B"):
        if key not in data["system"]:
            raise ProblemFileError(f"missing required field 'system.{key}'", source, lines.get(("system",)), f"system.{key}")

    A = _array(data["system"]["A"], "system.A", source, lines.get(("system", "A")), 2)
    B = _array(data["system"]["B"], "system.B", source, lines.get(("system", "B")), 2)
    try:
        sys = LtiSystem(A, B)
    except ValueError as exc:
        raise ProblemFileError(f"system: {exc}", source, lines.get(("system",)), "system") from exc

    if "checksum" in data and data["checksum"] != system_checksum(sys.A, sys.B):
        raise ProblemFileError("system matrices do not match checksum", source, lines.get(("checksum",)), "checksum")

    x0 = _array(data["x0"], "x0", source, lines.get(("x0",)), 1)
    if x0.size != sys.n:
        raise ProblemFileError(f"x0 has length {x0.size}; system has {sys.n} states", source, lines.get(("x0",)), "x0")
    grid = []
    if "x0_grid" in data:
        g = _array(data["x0_grid"], "x0_grid", source, lines.get(("x0_grid",)), 2)
        if g.shape[1] != sys.n:
            raise ProblemFileError(f"x0_grid rows must have length {sys.n}", source, lines.get(("x0_grid",)), "x0_grid")
        grid = [row for row in g]

    set_spec = dict(data["set"])
    line = lines.get(("set",))
    for k in ("r", "n_u"):
        if k in set_spec:
            set_spec[k] = _number(set_spec[k], f"set.{k}", source, line, integer=(k == "n_u"))
    if "radii" in set_spec:
        set_spec["radii"] = _array(set_spec["radii"], "set.radii", source, lines.get(("set", "radii")), 1)
    try:
        uset = set_from_dict(set_spec, sys.n_u)
    except (KeyError, ValueError) as exc:
        raise ProblemFileError(f"set: {exc}", source, line, "set") from exc
    if uset.n_u != sys.n_u:
        raise ProblemFileError(f"set has dimension {uset.n_u}; B has {sys.n_u} columns", source, line, "set")

    T = _number(data["horizon"], "horizon", source, lines.get(("horizon",)), integer=True)
    if T < 1:
        raise ProblemFileError("horizon must be >= 1", source, lines.get(("horizon",)), "horizon")
    weights = _build_weights(data["weights"], sys, uset, T, source, lines, x0)

    solver_kw = {}
    for key, value in (data.get("solver") or {}).items():
        line = lines.get(("solver", key))
        if key in ("polish", "adaptive_rho"):
            if not isinstance(value, bool):
                raise ProblemFileError(f"solver.{key} must be true or false", source, line, f"solver.{key}")
            solver_kw[key] = value
        else:
            solver_kw[key] = _number(value, f"solver.{key}", source, line, integer=(key == "max_iters"))
    try:
        solver = SolverConfig(**solver_kw)
    except ValueError as exc:
        raise ProblemFileError(f"solver: {exc}", source, lines.get(("solver",)), "solver") from exc

    mpc = {}
    for key, value in (data.get("mpc") or {}).items():
        line = lines.get(("mpc", key))
        if key == "relative_time":
            mpc[key] = bool(value)
        else:
            mpc[key] = _number(value, f"mpc.{key}", source, line, integer=(key != "zero_tol"))

    seed = None
    if data.get("seed") is not None:
        seed = _number(data["seed"], "seed", source, lines.get(("seed",)), integer=True)
    max_horizon = None
    if data.get("max_horizon") is not None:
        max_horizon = _number(data["max_horizon"], "max_horizon", source, lines.get(("max_horizon",)), integer=True)

    return Problem(
        sys=sys,
        x0=x0,
        uset=uset,
        weights=weights,
        T=T,
        solver=solver,
        seed=seed,
        mpc=mpc,
        x0_grid=grid,
        max_horizon=max_horizon,
        name=str(data.get("name", "")),
        raw=data,
    )


def load_problem(path) -> Problem:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemFileError(f"cannot read problem file: {exc.strerror}", str(path)) from exc
    return parse_problem(text, str(path))


# --- output ------------------------------------------------------------------

def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def report_to_dict(report, problem: Problem | None = None, *, extra: dict | None = None) -> dict:
    """Plain-data mirror of a ``PipelineReport``.

    Floats are kept as Python floats; JSON encodes them with the shortest
    repr that parses back to the same double, so a round trip is exact.
    """
    relax = report.relaxation
    out = {
        "tool": "mintime",
        "version": __version__,
        "T": report.T,
        "T1": report.T1,
        "certified": report.certified,
        "t_star": report.t_star,
        "uniqueness_hint": report.uniqueness_hint,
        "bang_bang": report.bang_bang,
        "feas_tol": report.feas_tol,
        "zero_tol": report.zero_tol,
        "mu_lower_bound": report.mu_lower_bound,
        "condition12_refuted": report.condition12_refuted,
        "certificate": report.certificate,
        "relaxation": {
            "objective": relax.objective,
            "iterations": relax.iterations,
            "status": relax.status,
            "primal_residual": relax.primal_residual,
            "dual_residual": relax.dual_residual,
            "polished_at": relax.polished_at,
            "u": relax.u,
            "x": relax.x,
        },
        "oracle": {
            "t_star": report.oracle.t_star,
            "T_max": report.oracle.T_max,
            "feas_tol": report.oracle.feas_tol,
            "distances": {str(k): v for k, v in report.oracle.distances.items()},
        },
    }
    if problem is not None:
        out["config"] = _config_echo(problem)
    if extra:
        out.update(extra)
    return _plain(out)


def trace_to_dict(trace, problem: Problem | None = None, *, extra: dict | None = None) -> dict:
    out = {
        "tool": "mintime",
        "version": __version__,
        "tau": trace.tau,
        "reached_zero_at": trace.reached_zero_at,
        "zero_tol": trace.zero_tol,
        "solve_times": trace.solve_times,
        "iterations": trace.iterations,
        "states": trace.states,
        "inputs": trace.inputs,
    }
    if problem is not None:
        out["config"] = _config_echo(problem)
    if extra:
        out.update(extra)
    return _plain(out)


def _config_echo(problem: Problem) -> dict:
    s = problem.solver
    return {
        "name": problem.name,
        "A": problem.sys.A,
        "B": problem.sys.B,
        "x0": problem.x0,
        "set": problem.uset.to_dict(),
        "weights": problem.weights.to_dict(),
        "weight_values": problem.weights.w,
        "horizon": problem.T,
        "solver": {
            "rho": s.rho,
            "eps_abs": s.eps_abs,
            "eps_rel": s.eps_rel,
            "max_iters": s.max_iters,
            "over_relaxation": s.over_relaxation,
            "polish": s.polish,
            "adaptive_rho": s.adaptive_rho,
        },
        "seed": problem.seed,
    }


def write_report(path, data: dict) -> None:
    atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True, allow_nan=True) + "\n")


def read_report(path) -> dict:
    return json.loads(Path(path).read_text())


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def trajectory_rows(x, u, solve_times=None):
    """Header and rows of the trajectory table.

    Row ``t`` holds ``x(t)`` and the input applied at ``t``; the last row has
    empty input fields. ``solve_times`` adds a 0/1 ``solved`` column.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2:
        u = u.reshape(x.shape[0] - 1, -1)
    n, m = x.shape[1], u.shape[1]
    header = ["t"] + [f"x_{i + 1}" for i in range(n)] + [f"u_{j + 1}" for j in range(m)] + ["norm_x", "norm_u"]
    if solve_times is not None:
        header.append("solved")
        marks = set(int(s) for s in solve_times)
    rows = []
    for t in range(x.shape[0]):
        row = [str(t)] + [_fmt(v) for v in x[t]]
        if t < u.shape[0]:
            row += [_fmt(v) for v in u[t]]
            row += [_fmt(np.linalg.norm(x[t])), _fmt(np.linalg.norm(u[t]))]
        else:
            row += [""] * m + [_fmt(np.linalg.norm(x[t])), ""]
        if solve_times is not None:
            row.append("1" if t in marks else "0")
        rows.append(row)
    return header, rows


def write_trajectory(path, x, u, solve_times=None) -> None:
    header, rows = trajectory_rows(x, u, solve_times)
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def read_trajectory(path):
    """Read a trajectory table back as ``(x, u, solved)`` arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    xi = [k for k, h in enumerate(header) if h.startswith("x_")]
    ui = [k for k, h in enumerate(header) if h.startswith("u_")]
    x = np.array([[float(r[k]) for k in xi] for r in body])
    u = np.array([[float(r[k]) for k in ui] for r in body[:-1]]).reshape(len(body) - 1, len(ui))
    solved = None
    if "solved" in header:
        k = header.index("solved")
        solved = [t for t, r in enumerate(body) if r[k] == "1"]
    return x, u, solved
