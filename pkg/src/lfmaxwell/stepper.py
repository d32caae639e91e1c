"""Time marching of the staggered LF_R scheme.

p and E are stored at half-integer levels, H at integer levels. The bootstrap
step maps (p0, E0, H0) to (p^1/2, E^1/2, H^1); each interior step then maps
level n to n+1 with a single coupled solve.

Coefficient vectors are always full length. In homogeneous mode the boundary
entries of p and e stay zero; in constrained mode they are set from the exact
solution's trace at the target time.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .coeffs import SchemeCoefficients, _check_order
from .feec import DeRhamComplex, build_complex, error_norm, project_L2
from .mesh import generate_structured
from .operators import (DENSE_DOF_LIMIT, CompositeOperators, StepSystem, build_operators,
                        build_step_system, energy)
from .problems import Problem, get_problem

logger = logging.getLogger(__name__)

BC_MODES = ("auto", "homogeneous", "constrained")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def structured_dof_count(n: int, r: int) -> int:
    """dim U + dim V + dim W on the n x n structured mesh, without building it."""
    nv, ne, nt = (n + 1) ** 2, 3 * n * n + 2 * n, 2 * n * n
    if r == 1:
        return nv + ne + nt
    return (nv + ne) + (2 * ne + 2 * nt) + 3 * nt


@dataclass
class State:
    p: np.ndarray
    e: np.ndarray
    h: np.ndarray
    n: int
    dt: float

    @property
    def t_p(self) -> float:
        """Time level of p and e: 0 before the bootstrap, (n - 1/2) dt afterwards."""
        return 0.0 if self.n == 0 else (self.n - 0.5) * self.dt

    @property
    def t_h(self) -> float:
        return self.n * self.dt

    def vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.e, self.h])

    @classmethod
    def from_vector(cls, x, dims, n, dt) -> "State":
        nU, nV, _ = dims
        return cls(p=x[:nU].copy(), e=x[nU:nU + nV].copy(), h=x[nU + nV:].copy(), n=n, dt=dt)


@dataclass
class RunConfig:
    example: str = "example1"
    R: int = 6
    r: int = 1
    n: int = 8
    dt: float | None = None
    steps: int | None = None
    T: float = 1.0
    eps: float = 1.0
    mu: float = 1.0
    bc: str = "auto"
    solver: str = "dense"
    out: str | None = None
    dump_fields: int = 0

    def resolve(self) -> "RunConfig":
        """Validate and fill in dt/steps; returns a new config."""
        try:
            _check_order(self.R)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.r not in (1, 2):
            raise ConfigError(f"order r must be 1 or 2, got {self.r}")
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError(f"mesh resolution n must be a positive integer, got {self.n}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ConfigError(f"T must be positive, got {self.T}")
        if not (self.eps > 0 and self.mu > 0):
            raise ConfigError("eps and mu must be positive")
        if self.bc not in BC_MODES:
            raise ConfigError(f"bc must be one of {BC_MODES}")
        if self.solver not in ("dense", "iterative"):
            raise ConfigError("solver must be dense or iterative")
        if self.dump_fields < 0:
            raise ConfigError("dump_fields must be >= 0")
        ndof = structured_dof_count(self.n, self.r)
        if self.solver == "dense" and ndof > DENSE_DOF_LIMIT:
            raise ConfigError(f"n={self.n}, r={self.r} has {ndof} degrees of freedom, above the dense "
                              f"limit {DENSE_DOF_LIMIT}; use the iterative solver")
        try:
            get_problem(self.example)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

        dt, steps = self.dt, self.steps
        if dt is None and steps is None:
            raise ConfigError("give either dt or steps")
        if steps is not None and (not isinstance(steps, int) or steps < 1):
            raise ConfigError(f"steps must be a positive integer, got {steps}")
        if dt is not None and not dt > 0:
            raise ConfigError(f"dt must be positive, got {dt}")
        if steps is None:
            steps = int(round(self.T / dt))
            if steps < 1 or abs(steps * dt - self.T) > 1e-12:
                raise ConfigError(f"T = {self.T} is not an integer multiple of dt = {dt}")
        elif dt is None:
            dt = self.T / steps
        elif abs(steps * dt - self.T) > 1e-12:
            raise ConfigError(f"steps * dt = {steps * dt} does not equal T = {self.T}")
        return RunConfig(**{**asdict(self), "dt": float(dt), "steps": int(steps)})

    def boundary_mode(self, problem: Problem) -> str:
        if self.bc != "auto":
            return self.bc
        return "homogeneous" if problem.homogeneous_bc else "constrained"


@dataclass
class Diagnostics:
    config: dict
    mode: str
    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    max_rel_drift: float = 0.0
    max_constraint_residual: float = 0.0
    errors: dict = field(default_factory=dict)
    final: State | None = None
    wall_time: float = 0.0

    @property
    def rel_drifts(self) -> list:
        e0 = self.energies[0]
        scale = e0 if e0 > 0 else 1.0
        return [abs(e - e0) / scale for e in self.energies]


def apply_boundary_constraints(c: DeRhamComplex, problem: Problem, t: float) -> np.ndarray:
    """Trace interpolants of p and E at time t on the pinned (boundary) DOFs, ordered U then V."""
    if problem is None or problem.p is None or problem.E is None:
        raise ConfigError("constrained mode needs exact-solution traces for p and E")
    gp = c.interpolate("U", lambda x: problem.p(x, t))[c.boundary["U"]]
    ge = c.interpolate("V", lambda x: problem.E(x, t))[c.boundary["V"]]
    return np.concatenate([gp, ge])


def initialize(problem: Problem, c: DeRhamComplex, mode: str = "homogeneous", dt: float = 1.0) -> State:
    """L2 projections of the initial data (boundary-constrained in non-full modes)."""
    p0, E0, H0 = problem.initial()
    if mode == "homogeneous":
        p = project_L2(c, "U", p0, subspace="interior")
        e = project_L2(c, "V", E0, subspace="interior")
    elif mode == "constrained":
        p = project_L2(c, "U", p0, boundary_values=c.interpolate("U", p0))
        e = project_L2(c, "V", E0, boundary_values=c.interpolate("V", E0))
    else:
        raise ConfigError(f"unknown boundary mode {mode!r}")
    h = project_L2(c, "W", H0)
    return State(p=p, e=e, h=h, n=0, dt=dt)


def bootstrap(sys_boot: StepSystem, s0: State, pinned_values=None):
    if sys_boot.phase != "bootstrap":
        raise ValueError("bootstrap needs a bootstrap-phase system")
    if s0.n != 0:
        raise ValueError("bootstrap starts from the n = 0 state")
    x, res = sys_boot.solve(s0.vector(), pinned_values)
    return State.from_vector(x, (len(s0.p), len(s0.e), len(s0.h)), 1, s0.dt), res


def step(sys: StepSystem, s: State, pinned_values=None):
    if sys.phase != "interior":
        raise ValueError("step needs an interior-phase system")
    if s.n < 1:
        raise ValueError("interior steps start after the bootstrap (n >= 1)")
    x, res = sys.solve(s.vector(), pinned_values)
    return State.from_vector(x, (len(s.p), len(s.e), len(s.h)), s.n + 1, s.dt), res


@dataclass
class Discretization:
    """Complex, composite operators and factored step systems for one (R, r, n, dt)."""

    c: DeRhamComplex
    ops: CompositeOperators
    boot: StepSystem
    interior: StepSystem


def discretize(R: int, r: int, n: int, dt: float, eps: float = 1.0, mu: float = 1.0,
               solver: str = "dense", c: DeRhamComplex | None = None,
               ops: CompositeOperators | None = None) -> Discretization:
    c = c or build_complex(generate_structured(n), r)
    ops = ops or build_operators(c)
    coeffs = SchemeCoefficients.for_order(R)
    boot = build_step_system(c, ops, coeffs, dt, eps, mu, "bootstrap", solver)
    interior = build_step_system(c, ops, coeffs, dt, eps, mu, "interior", solver)
    return Discretization(c, ops, boot, interior)


def march(disc: Discretization, problem: Problem, steps: int, mode: str,
          observer: Callable[[State, float], None] | None = None) -> tuple[State, float]:
    """initialize, bootstrap, steps-1 interior steps. Returns (final state, max constraint residual)."""
    c, dt = disc.c, disc.interior.dt
    s = initialize(problem, c, mode, dt)
    if observer:
        observer(s, 0.0)

    def pins(t):
        return apply_boundary_constraints(c, problem, t) if mode == "constrained" else None

    s, res = bootstrap(disc.boot, s, pins(0.5 * dt))
    worst = res
    if observer:
        observer(s, res)
    for _ in range(steps - 1):
        s, res = step(disc.interior, s, pins((s.n + 0.5) * dt))
        worst = max(worst, res)
        if observer:
            observer(s, res)
    return s, worst


def field_errors(c: DeRhamComplex, problem: Problem, s: State, eps: float, mu: float) -> dict:
    """Weighted L2 errors: p and E at t_p, H at t_h."""
    tp, th = s.t_p, s.t_h
    ep = error_norm(c, "U", s.p, lambda x: problem.p(x, tp), 1 / eps)
    eE = error_norm(c, "V", s.e, lambda x: problem.E(x, tp), eps)
    eH = error_norm(c, "W", s.h, lambda x: problem.H(x, th), mu)
    return {"err_p": ep, "err_E": eE, "err_H": eH, "err_total": math.sqrt(ep**2 + eE**2 + eH**2),
            "times": {"p": tp, "E": tp, "H": th}}


def run(config: RunConfig, disc: Discretization | None = None) -> Diagnostics:
    """Execute a full run and write energy.csv / errors.json (and VTK) when ``config.out`` is set."""
    cfg = config.resolve()
    problem = get_problem(cfg.example)
    mode = cfg.boundary_mode(problem)
    if (cfg.eps, cfg.mu) != (problem.eps, problem.mu):
        logger.warning("exact solution assumes eps = %g, mu = %g; errors are not meaningful",
                       problem.eps, problem.mu)
    echo = {**asdict(cfg), "bc_resolved": mode}
    diag = Diagnostics(config=echo, mode=mode)
    out = Path(cfg.out) if cfg.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        disc = disc or discretize(cfg.R, cfg.r, cfg.n, cfg.dt, cfg.eps, cfg.mu, cfg.solver)
        c = disc.c

        def observe(s: State, res: float):
            diag.steps.append(s.n)
            diag.times.append(s.t_h)
            diag.energies.append(energy(c, cfg.eps, cfg.mu, s.p, s.e, s.h))
            if out and cfg.dump_fields and s.n % cfg.dump_fields == 0:
                write_vtk(c, s, out / f"fields_{s.n:06d}.vtk")

        final, worst = march(disc, problem, cfg.steps, mode, observe)
        diag.final = final
        diag.max_constraint_residual = worst
        diag.max_rel_drift = max(diag.rel_drifts)
        diag.errors = field_errors(c, problem, final, cfg.eps, cfg.mu)
        diag.wall_time = time.perf_counter() - t0
    except Exception as exc:
        if out:
            _write_energy(out / "energy.csv", diag)
            _write_json(out / "errors.json", {"config": echo, "status": "failed", "error": str(exc)})
        raise
    if out:
        _write_energy(out / "energy.csv", diag)
        _write_json(out / "errors.json", errors_record(diag))
    return diag


def errors_record(diag: Diagnostics) -> dict:
    return {
        "config": diag.config,
        "status": "ok",
        **{k: diag.errors[k] for k in ("err_p", "err_E", "err_H", "err_total", "times")},
        "max_rel_drift": diag.max_rel_drift,
        "max_constraint_residual": diag.max_constraint_residual,
        "metadata": {"wall_time_s": diag.wall_time},
    }


def _write_energy(path: Path, diag: Diagnostics) -> None:
    drifts = diag.rel_drifts if diag.energies else []
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        f.write(f"# config: {json.dumps(diag.config, sort_keys=True)}\n")
        w.writerow(["step", "time", "energy", "rel_drift"])
        for n, t, e, d in zip(diag.steps, diag.times, diag.energies, drifts):
            w.writerow([n, repr(float(t)), repr(float(e)), repr(float(d))])


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_vtk(c: DeRhamComplex, s: State, path) -> None:
    """Legacy ASCII VTK: triangles with p, H and E sampled at barycenters as cell data."""
    mesh = c.mesh
    bc = np.array([[1 / 3, 1 / 3, 1 / 3]])
    p = c.values("U", s.p, bc)[:, 0]
    H = c.values("W", s.h, bc)[:, 0]
    E = c.values("V", s.e, bc)[:, 0, :]
    lines = ["# vtk DataFile Version 3.0", f"lfmaxwell step {s.n} t_p={s.t_p!r} t_h={s.t_h!r}",
             "ASCII", "DATASET UNSTRUCTURED_GRID", f"POINTS {mesh.n_vertices} double"]
    lines += [f"{float(x)!r} {float(y)!r} 0.0" for x, y in mesh.vertices]
    nt = mesh.n_triangles
    lines.append(f"CELLS {nt} {4 * nt}")
    lines += [f"3 {a} {b} {d}" for a, b, d in mesh.triangles]
    lines.append(f"CELL_TYPES {nt}")
    lines += ["5"] * nt
    lines.append(f"CELL_DATA {nt}")
    for name, vals in (("p", p), ("H", H)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [repr(float(v)) for v in vals]
    lines.append("VECTORS E double")
    lines += [f"{float(ex)!r} {float(ey)!r} 0.0" for ex, ey in E]
    Path(path).write_text("\n".join(lines) + "\n")
