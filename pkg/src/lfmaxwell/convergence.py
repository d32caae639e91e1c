"""Spatial and temporal convergence sweeps with least-squares rate fits.

Temporal sweeps use a self-reference: the same scheme on the same complex with
dt_ref = min(dt)/32. Coarse p and E live at T - dt/2, which is never a fine
half-level, so the reference there is obtained by local Lagrange interpolation
in time over the fine trajectory (10 nodes, error far below the scheme's).
H is compared at T where the levels coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .feec import build_complex
from .mesh import generate_structured
from .operators import build_operators
from .problems import get_problem
from .stepper import RunConfig, State, discretize, field_errors, march

REFERENCE_RATIO = 32
INTERP_NODES = 10
FIELDS = ("p", "E", "H")


@dataclass
class SweepPoint:
    mode: str
    R: int
    order: int
    n: int
    dt: float
    err_p: float
    err_E: float
    err_H: float

    @property
    def err_total(self) -> float:
        return math.sqrt(self.err_p**2 + self.err_E**2 + self.err_H**2)

    def row(self) -> list:
        return [self.mode, self.R, self.order, self.n, repr(self.dt), repr(self.err_p),
                repr(self.err_E), repr(self.err_H), repr(self.err_total)]


def fit_slope(x, y) -> tuple[float, float]:
    """Least-squares slope of log y against log x and the RMS residual of the fit."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if len(lx) < 2 or not np.all(np.isfinite(ly)):
        return float("nan"), float("nan")
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(res**2)))


def slopes(points: list[SweepPoint], mode: str) -> dict:
    if mode == "spatial":
        x = [1.0 / pt.n for pt in points]
    else:
        x = [pt.dt for pt in points]
    field_slopes, resid = {}, {}
    for f in FIELDS:
        y = [getattr(pt, f"err_{f}") for pt in points]
        if min(y) <= 0:
            field_slopes[f], resid[f] = float("nan"), float("nan")
        else:
            field_slopes[f], resid[f] = fit_slope(x, y)
    total_slope, total_res = fit_slope(x, [pt.err_total for pt in points])
    return {
        "mode": mode,
        "field_slopes": field_slopes,
        "total_slope": total_slope,
        "points": len(points),
        "fit_residual": {**resid, "total": total_res},
    }


def spatial_sweep(example, R: int, r: int, ns, dt: float, T: float = 1.0, bc: str = "auto",
                  solver: str = "dense") -> list[SweepPoint]:
    """Errors against the exact solution for each mesh n at fixed dt.

    The x-axis of the fit is 1/n, proportional to the mesh size h.
    """
    pts = []
    for n in ns:
        cfg = RunConfig(example=str(example), R=R, r=r, n=int(n), dt=dt, T=T, bc=bc, solver=solver).resolve()
        problem = get_problem(cfg.example)
        disc = discretize(R, r, cfg.n, cfg.dt, solver=solver)
        s, _ = march(disc, problem, cfg.steps, cfg.boundary_mode(problem))
        e = field_errors(disc.c, problem, s, cfg.eps, cfg.mu)
        pts.append(SweepPoint("spatial", R, r, int(n), cfg.dt, e["err_p"], e["err_E"], e["err_H"]))
    return pts


def joint_sweep(example, R: int, r: int, levels, T: float = 1.0, bc: str = "auto") -> list[SweepPoint]:
    """Errors against the exact solution for (n, steps) pairs refined together."""
    pts = []
    for n, steps in levels:
        cfg = RunConfig(example=str(example), R=R, r=r, n=int(n), steps=int(steps), T=T, bc=bc).resolve()
        problem = get_problem(cfg.example)
        disc = discretize(R, r, cfg.n, cfg.dt)
        s, _ = march(disc, problem, cfg.steps, cfg.boundary_mode(problem))
        e = field_errors(disc.c, problem, s, cfg.eps, cfg.mu)
        pts.append(SweepPoint("joint", R, r, int(n), cfg.dt, e["err_p"], e["err_E"], e["err_H"]))
    return pts


def _lagrange_weights(nodes: np.ndarray, t: float) -> np.ndarray:
    w = np.ones(len(nodes))
    for j in range(len(nodes)):
        for k in range(len(nodes)):
            if k != j:
                w[j] *= (t - nodes[k]) / (nodes[j] - nodes[k])
    return w


def temporal_sweep(example, R: int, r: int, n: int, dts, T: float = 1.0, bc: str = "auto",
                   ratio: int = REFERENCE_RATIO) -> list[SweepPoint]:
    """Self-referenced time errors on a fixed complex."""
    problem = get_problem(example)
    cfgs = [RunConfig(example=str(example), R=R, r=r, n=n, dt=dt, T=T, bc=bc).resolve() for dt in dts]
    mode = cfgs[0].boundary_mode(problem)
    c = build_complex(generate_structured(n), r)
    ops = build_operators(c)

    dt_ref = min(cfg.dt for cfg in cfgs) / ratio
    ref_cfg = RunConfig(example=str(example), R=R, r=r, n=n, dt=dt_ref, T=T, bc=bc).resolve()
    N_ref = ref_cfg.steps

    # fine half-level indices m (label (m - 1/2) dt_ref) needed around each T - dt/2
    plans = {}
    needed = set()
    for cfg in cfgs:
        target = T - cfg.dt / 2
        mstar = target / dt_ref + 0.5
        lo = int(math.floor(mstar)) - INTERP_NODES // 2 + 1
        lo = max(1, min(lo, N_ref - INTERP_NODES + 1))
        ms = np.arange(lo, lo + INTERP_NODES)
        plans[cfg.dt] = (target, ms)
        needed.update(int(m) for m in ms)
    store: dict[int, State] = {}

    def keep(s: State, _res):
        if s.n in needed or s.n == N_ref:
            store[s.n] = s

    ref_disc = discretize(R, r, n, dt_ref, c=c, ops=ops)
    march(ref_disc, problem, N_ref, mode, keep)
    h_ref = store[N_ref].h

    pts = []
    for cfg in cfgs:
        disc = discretize(R, r, n, cfg.dt, c=c, ops=ops)
        s, _ = march(disc, problem, cfg.steps, mode)
        target, ms = plans[cfg.dt]
        w = _lagrange_weights((ms - 0.5) * dt_ref, target)
        p_ref = sum(wi * store[int(m)].p for wi, m in zip(w, ms))
        e_ref = sum(wi * store[int(m)].e for wi, m in zip(w, ms))
        dp, de, dh = s.p - p_ref, s.e - e_ref, s.h - h_ref
        err_p = math.sqrt(max(dp @ (c.M_U @ dp), 0.0) / cfg.eps)
        err_E = math.sqrt(max(de @ (c.M_V @ de), 0.0) * cfg.eps)
        err_H = math.sqrt(max(dh @ (c.M_W @ dh), 0.0) * cfg.mu)
        pts.append(SweepPoint("temporal", R, r, n, cfg.dt, err_p, err_E, err_H))
    return pts
