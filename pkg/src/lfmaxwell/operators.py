"""Composite operators and block step matrices of the LF_R scheme.

Powers of grad-div and curl-curl act on finite element fields through Galerkin
adjoints:

    GD = -D0 M_U^-1 D0^T M_V      (weak divergence, then exact gradient)
    CC =  D1 M_V^-1 D1^T M_W      (weak vector curl, then exact scalar curl)

The mass inverses are restricted to interior degrees of freedom, which imposes
p = 0 and E x n = 0 on the adjoints. Everything is stored on the full
coefficient spaces so the same matrices serve the homogeneous and the
boundary-constrained solves.

With the unknown ordering x = (p, e, h) the interior step is A x+ = Abar x-,

    A = [ M_U/dt   -(eps/2) K      0      ]
        [ K^T/2    (eps/dt) M_V   -L/2    ]
        [   0        L^T/2       (mu/dt) M_W ]

and Abar is A with the off-diagonal blocks negated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coeffs import SchemeCoefficients
from .feec import DeRhamComplex

logger = logging.getLogger(__name__)

DENSE_DOF_LIMIT = 8000
PHASES = ("interior", "bootstrap")


class SolverError(RuntimeError):
    """Factorization or linear solve failure."""


class CapacityError(SolverError):
    """Problem too large for the dense reference path."""


@dataclass(frozen=True)
class CompositeOperators:
    GD: np.ndarray
    CC: np.ndarray
    M_U: sp.csr_matrix = field(repr=False)
    M_V: sp.csr_matrix = field(repr=False)
    M_W: sp.csr_matrix = field(repr=False)
    D0: sp.csr_matrix = field(repr=False)
    D1: sp.csr_matrix = field(repr=False)


def _interior_inverse_apply(M: sp.csr_matrix, interior: np.ndarray, rhs: np.ndarray, name: str) -> np.ndarray:
    """M[I,I]^-1 rhs for a dense right-hand side with len(I) rows."""
    if len(interior) == 0:
        return np.zeros_like(rhs)
    try:
        lu = spla.splu(M[interior][:, interior].tocsc())
    except RuntimeError as exc:
        raise SolverError(f"factorization of interior {name} failed: {exc}") from exc
    out = lu.solve(np.ascontiguousarray(rhs))
    if not np.all(np.isfinite(out)):
        raise SolverError(f"interior {name} solve produced non-finite values")
    return out


def build_operators(c: DeRhamComplex) -> CompositeOperators:
    M_U, M_V, M_W, D0, D1 = c.M_U, c.M_V, c.M_W, c.D0, c.D1
    IU, IV = c.interior["U"], c.interior["V"]

    D0I = D0[:, IU].tocsc()
    X = _interior_inverse_apply(M_U, IU, (D0I.T @ M_V).toarray(), "M_U")
    GD = -(D0I @ X)

    D1I = D1[:, IV].tocsc()
    Y = _interior_inverse_apply(M_V, IV, (D1I.T @ M_W).toarray(), "M_V")
    CC = np.asarray(D1I @ Y)
    return CompositeOperators(GD=np.asarray(GD), CC=CC, M_U=M_U, M_V=M_V, M_W=M_W, D0=D0, D1=D1)


def coupling_matrices(ops: CompositeOperators, gamma, dt_eff: float, eps: float, mu: float):
    """K = sum gamma_s dt^2s D0^T M_V GD^s and L = sum gamma_s (-dt^2/(eps mu))^s D1^T M_W CC^s."""
    gamma = [float(g) for g in gamma]
    B = (ops.D0.T @ ops.M_V).toarray()
    K = gamma[0] * B
    for s in range(1, len(gamma)):
        B = B @ ops.GD
        K += gamma[s] * dt_eff ** (2 * s) * B
    B = (ops.D1.T @ ops.M_W).toarray()
    L = gamma[0] * B
    for s in range(1, len(gamma)):
        B = B @ ops.CC
        L += gamma[s] * (-dt_eff**2 / (eps * mu)) ** s * B
    return K, L


def _block_scalars(phase: str, dt: float, eps: float, mu: float) -> dict:
    if phase == "interior":
        return {"pp": 1 / dt, "pe": -eps / 2, "ep": 0.5, "ee": eps / dt, "eh": -0.5, "he": 0.5, "hh": mu / dt}
    # divisors dt/2 for p and E, dt for H; the p-E coupling carries an extra 1/2
    half = dt / 2
    return {"pp": 1 / half, "pe": -eps / 4, "ep": 0.25, "ee": eps / half, "eh": -0.5, "he": 0.25, "hh": mu / dt}


@dataclass
class StepSystem:
    """One factored step matrix A = D + S with D block diagonal and S the couplings.

    Only K, L and the sparse masses are stored; A and Abar = D - S are applied
    blockwise. The dense path factors A restricted to the free unknowns.
    """

    phase: str
    dt: float
    eps: float
    mu: float
    R: int
    K: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)
    masses: tuple = field(repr=False)
    free: np.ndarray = field(repr=False)
    pinned: np.ndarray = field(repr=False)
    offsets: tuple = ()
    scalars: dict = field(default_factory=dict)
    solver: str = "dense"
    _lu: tuple | None = field(default=None, repr=False)
    _precond: object = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.offsets[3]

    def apply(self, x: np.ndarray, sign: float = 1.0) -> np.ndarray:
        """(D + sign * S) x; sign = -1 gives Abar x."""
        oU, oV, oW, n = self.offsets
        sc = self.scalars
        p, e, h = x[oU:oV], x[oV:oW], x[oW:n]
        M_U, M_V, M_W = self.masses
        out = np.empty(n)
        out[oU:oV] = sc["pp"] * (M_U @ p) + sign * sc["pe"] * (self.K @ e)
        out[oV:oW] = sc["ee"] * (M_V @ e) + sign * (sc["ep"] * (self.K.T @ p) + sc["eh"] * (self.L @ h))
        out[oW:n] = sc["hh"] * (M_W @ h) + sign * sc["he"] * (self.L.T @ e)
        return out

    def matrix(self, sign: float = 1.0) -> np.ndarray:
        """Dense A (sign=+1) or Abar (sign=-1)."""
        oU, oV, oW, n = self.offsets
        sc = self.scalars
        M_U, M_V, M_W = self.masses
        A = np.zeros((n, n))
        A[oU:oV, oU:oV] = sc["pp"] * M_U.toarray()
        A[oV:oW, oV:oW] = sc["ee"] * M_V.toarray()
        A[oW:, oW:] = sc["hh"] * M_W.toarray()
        A[oU:oV, oV:oW] = sign * sc["pe"] * self.K
        A[oV:oW, oU:oV] = sign * sc["ep"] * self.K.T
        A[oV:oW, oW:] = sign * sc["eh"] * self.L
        A[oW:, oV:oW] = sign * sc["he"] * self.L.T
        return A

    @property
    def A(self) -> np.ndarray:
        return self.matrix(1.0)

    @property
    def Abar(self) -> np.ndarray:
        return self.matrix(-1.0)

    def solve(self, x_prev: np.ndarray, pinned_values: np.ndarray | None = None):
        """Advance one step; returns (x_next, max residual of the eliminated rows)."""
        rhs_full = self.apply(x_prev, -1.0)
        x = np.zeros_like(rhs_full)
        constrained = pinned_values is not None and len(self.pinned) > 0
        rhs = rhs_full[self.free]
        if constrained:
            x[self.pinned] = pinned_values
            rhs = rhs - self.apply(x, 1.0)[self.free]
        if self.solver == "dense":
            sol = scipy.linalg.lu_solve(self._lu, rhs)
            # one sweep of iterative refinement against the blockwise operator
            buf = np.zeros_like(x)
            buf[self.free] = sol
            sol = sol + scipy.linalg.lu_solve(self._lu, rhs - self.apply(buf, 1.0)[self.free])
        else:
            sol = self._krylov(rhs)
        if not np.all(np.isfinite(sol)):
            raise SolverError(f"{self.phase} solve produced non-finite values")
        x[self.free] = sol
        residual = 0.0
        if constrained:
            residual = float(np.abs(self.apply(x, 1.0)[self.pinned] - rhs_full[self.pinned]).max())
        return x, residual

    def _krylov(self, rhs):
        n_free = len(self.free)
        buf = np.zeros(self.size)

        def matvec(v):
            buf[:] = 0.0
            buf[self.free] = v
            return self.apply(buf, 1.0)[self.free]

        op = spla.LinearOperator((n_free, n_free), matvec=matvec)
        sol, info = spla.gmres(op, rhs, M=self._precond, rtol=1e-12, atol=0.0, restart=100, maxiter=200)
        if info != 0:
            raise SolverError(f"GMRES did not converge (info={info}) in the {self.phase} phase")
        return sol

    def dump(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for name, M in (("K", self.K), ("L", self.L), ("A", self.A)):
            scipy.io.mmwrite(str(d / f"{self.phase}_{name}.mtx"), M)


def _mass_preconditioner(system: StepSystem):
    """Inverse of the block diagonal part D restricted to the free unknowns."""
    oU, oV, oW, n = system.offsets
    sc = system.scalars
    D = sp.block_diag([sc["pp"] * system.masses[0], sc["ee"] * system.masses[1],
                       sc["hh"] * system.masses[2]], format="csr")
    lu = spla.splu(D[system.free][:, system.free].tocsc())
    m = len(system.free)
    return spla.LinearOperator((m, m), matvec=lu.solve)


def build_step_system(c: DeRhamComplex, ops: CompositeOperators, coeffs: SchemeCoefficients,
                      dt: float, eps: float, mu: float, phase: str = "interior",
                      solver: str = "dense") -> StepSystem:
    """Assemble and factor the block matrix of one step.

    Unknown rows are interior U, interior V and all of W. Boundary entries of p
    and e are pinned: to zero in homogeneous mode, to the trace interpolant of
    the exact solution in constrained mode (see ``StepSystem.solve``).
    """
    if phase not in PHASES:
        raise ValueError(f"phase must be one of {PHASES}, got {phase!r}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not (eps > 0 and mu > 0):
        raise ValueError("eps and mu must be positive")
    if solver not in ("dense", "iterative"):
        raise ValueError(f"unknown solver {solver!r}")
    nU, nV, nW = c.dims
    n = nU + nV + nW
    if n > DENSE_DOF_LIMIT and solver == "dense":
        raise CapacityError(f"{n} degrees of freedom exceed the dense limit {DENSE_DOF_LIMIT}; "
                            "use the iterative solver")

    dt_eff = dt if phase == "interior" else dt / 2
    K, L = coupling_matrices(ops, coeffs.gamma, dt_eff, eps, mu)
    oU, oV, oW = 0, nU, nU + nV
    pinned = np.concatenate([oU + c.boundary["U"], oV + c.boundary["V"]]).astype(np.int64)
    free = np.setdiff1d(np.arange(n), pinned)
    system = StepSystem(phase=phase, dt=dt, eps=eps, mu=mu, R=coeffs.R, K=K, L=L,
                        masses=(ops.M_U, ops.M_V, ops.M_W), free=free, pinned=pinned,
                        offsets=(oU, oV, oW, n), scalars=_block_scalars(phase, dt, eps, mu), solver=solver)
    if solver == "dense":
        A_ff = system.matrix(1.0)[np.ix_(free, free)]
        try:
            system._lu = scipy.linalg.lu_factor(A_ff, overwrite_a=True, check_finite=True)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SolverError(f"LU factorization of the {phase} matrix failed: {exc}") from exc
        if np.any(np.diag(system._lu[0]) == 0):
            raise SolverError(f"{phase} matrix is singular")
    else:
        system._precond = _mass_preconditioner(system)
    logger.debug("built %s system: %d unknowns, %d pinned", phase, len(free), len(pinned))
    return system


def energy(c: DeRhamComplex, eps: float, mu: float, p, e, h) -> float:
    """eps^-1 p^T M_U p + eps e^T M_V e + mu h^T M_W h."""
    return float(p @ (c.M_U @ p) / eps + eps * (e @ (c.M_V @ e)) + mu * (h @ (c.M_W @ h)))
