"""Discrete de Rham complex U_h -> V_h -> W_h of trimmed (Whitney) spaces, r in {1, 2}.

U_h  Lagrange P_r, degrees of freedom at vertices (and edge midpoints for r=2).
V_h  first-kind edge elements. r=1: one circulation per edge. r=2: two edge
     moments per edge (against the endpoint barycentrics, lower global vertex
     first) and two interior moments per triangle.
W_h  discontinuous P_{r-1}, degrees of freedom are moments against the
     barycentric coordinates (the cell integral for r=1).

The derivative matrices are obtained by applying the target degrees of freedom
to the derivative of each source basis function, so ``grad`` and ``curl`` are
represented exactly and ``D1 @ D0`` vanishes. In 2D ``curl E = dEy/dx - dEx/dy``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg

from .mesh import LOCAL_EDGES, Mesh
from .quadrature import line_rule, triangle_rule

SPACES = ("U", "V", "W")
ASSEMBLY_DEGREE = {1: 4, 2: 6}
ERROR_DEGREE = 8


class PointLocationError(ValueError):
    pass


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(eq=False)
class DeRhamComplex:
    mesh: Mesh
    r: int
    area: np.ndarray = field(repr=False)
    grad_lam: np.ndarray = field(repr=False)
    dofs: dict = field(repr=False)
    ndof: dict = field(repr=False)
    boundary: dict = field(repr=False)
    interior: dict = field(repr=False)
    mass: dict = field(default_factory=dict, repr=False)
    D0: sp.csr_matrix | None = field(default=None, repr=False)
    D1: sp.csr_matrix | None = field(default=None, repr=False)
    _edge_a: np.ndarray | None = field(default=None, repr=False)
    _edge_b: np.ndarray | None = field(default=None, repr=False)
    _vcoef: np.ndarray | None = field(default=None, repr=False)

    @property
    def M_U(self):
        return self.mass["U"]

    @property
    def M_V(self):
        return self.mass["V"]

    @property
    def M_W(self):
        return self.mass["W"]

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.ndof["U"], self.ndof["V"], self.ndof["W"]

    # ------------------------------------------------------------------
    # geometry helpers

    def physical_points(self, tris, bary):
        """Map barycentric points (q,3) or (m,q,3) to physical coordinates (m,q,2)."""
        X = self.mesh.vertices[self.mesh.triangles[tris]]  # (m,3,2)
        bary = np.broadcast_to(bary, (len(tris),) + np.shape(bary)[-2:])
        return np.einsum("mqk,mkd->mqd", bary, X)

    # ------------------------------------------------------------------
    # local bases

    def basis(self, space: str, tris, bary):
        """Basis values and derivatives on triangles ``tris`` at barycentric points.

        Returns ``(val, der)``. U: val (m,q,n), der = gradient (m,q,n,2).
        V: val (m,q,n,2), der = curl (m,q,n). W: val (m,q,n), der = None.
        """
        tris = np.asarray(tris)
        lam = np.broadcast_to(bary, (len(tris),) + np.shape(bary)[-2:])
        if space == "U":
            return self._basis_u(tris, lam)
        if space == "V":
            vals, curls = self._prime_v(tris, lam)
            if self.r == 2:
                C = self._vcoef[tris]
                vals = np.einsum("mqbd,mba->mqad", vals, C)
                curls = np.einsum("mqb,mba->mqa", curls, C)
            return vals, curls
        if space == "W":
            inv_area = 1.0 / self.area[tris][:, None, None]
            if self.r == 1:
                return np.ones(lam.shape[:2] + (1,)) * inv_area, None
            return (12.0 * lam - 3.0) * inv_area, None
        raise ValueError(f"unknown space {space!r}")

    def _basis_u(self, tris, lam):
        G = self.grad_lam[tris]  # (m,3,2)
        if self.r == 1:
            grad = np.broadcast_to(G[:, None, :, :], lam.shape + (2,))
            return np.array(lam), np.array(grad)
        m, q = lam.shape[:2]
        val = np.empty((m, q, 6))
        grad = np.empty((m, q, 6, 2))
        for k in range(3):
            lk = lam[:, :, k]
            val[:, :, k] = lk * (2 * lk - 1)
            grad[:, :, k] = (4 * lk - 1)[..., None] * G[:, None, k]
            i, j = LOCAL_EDGES[k]
            val[:, :, 3 + k] = 4 * lam[:, :, i] * lam[:, :, j]
            grad[:, :, 3 + k] = 4 * (lam[:, :, i, None] * G[:, None, j] + lam[:, :, j, None] * G[:, None, i])
        return val, grad

    def _prime_v(self, tris, lam):
        """Spanning functions of V_h on each triangle.

        r=1: globally oriented Whitney forms. r=2: endpoint-weighted Whitney
        forms per edge plus two face functions.
        """
        G = self.grad_lam[tris]
        ia, ib = self._edge_a[tris], self._edge_b[tris]  # (m,3)
        m, q = lam.shape[:2]
        lam_a = np.take_along_axis(lam, np.broadcast_to(ia[:, None, :], (m, q, 3)), axis=2)
        lam_b = np.take_along_axis(lam, np.broadcast_to(ib[:, None, :], (m, q, 3)), axis=2)
        Ga = np.take_along_axis(G, ia[:, :, None].repeat(2, axis=2), axis=1)  # (m,3,2)
        Gb = np.take_along_axis(G, ib[:, :, None].repeat(2, axis=2), axis=1)
        w = lam_a[..., None] * Gb[:, None] - lam_b[..., None] * Ga[:, None]  # (m,q,3,2)
        cw = np.broadcast_to(2.0 * _cross(Ga, Gb)[:, None, :], (m, q, 3))
        if self.r == 1:
            return w, np.array(cw)

        vals = np.empty((m, q, 8, 2))
        curls = np.empty((m, q, 8))
        for k in range(3):
            for s, (lw, Gw) in enumerate(((lam_a, Ga), (lam_b, Gb))):
                c = lw[:, :, k]
                vals[:, :, 2 * k + s] = c[..., None] * w[:, :, k]
                curls[:, :, 2 * k + s] = c * cw[:, :, k] + _cross(Gw[:, None, k], w[:, :, k])
        for s, (c, i, j) in enumerate(((0, 1, 2), (1, 2, 0))):
            wf = lam[:, :, i, None] * G[:, None, j] - lam[:, :, j, None] * G[:, None, i]
            cwf = 2.0 * _cross(G[:, i], G[:, j])[:, None]
            vals[:, :, 6 + s] = lam[:, :, c, None] * wf
            curls[:, :, 6 + s] = lam[:, :, c] * cwf + _cross(G[:, None, c], wf)
        return vals, curls

    # ------------------------------------------------------------------
    # degrees of freedom (local, per triangle)

    def _edge_bary(self, tris, s):
        """Barycentric coordinates of points s in [0,1] along each local edge, a -> b."""
        m = len(tris)
        ia, ib = self._edge_a[tris], self._edge_b[tris]
        lam = np.zeros((m, 3, len(s), 3))
        rows = np.arange(m)[:, None, None]
        ks = np.arange(3)[None, :, None]
        qs = np.arange(len(s))[None, None, :]
        lam[rows, ks, qs, ia[:, :, None]] = 1.0 - s
        lam[rows, ks, qs, ib[:, :, None]] = s
        return lam

    def _v_dofs(self, fn, tris=None) -> np.ndarray:
        """Apply the local V_h degrees of freedom to ``fn(tris, bary) -> (m,q,nf,2)``.

        Returns (m, nloc_V, nf).
        """
        tris = np.arange(self.mesh.n_triangles) if tris is None else np.asarray(tris)
        m = len(tris)
        X = self.mesh.vertices[self.mesh.triangles[tris]]
        ia, ib = self._edge_a[tris], self._edge_b[tris]
        Xa = np.take_along_axis(X, ia[:, :, None].repeat(2, axis=2), axis=1)
        Xb = np.take_along_axis(X, ib[:, :, None].repeat(2, axis=2), axis=1)
        tangent = Xb - Xa  # (m,3,2)
        s, ws = line_rule(4)
        eb = self._edge_bary(tris, s)  # (m,3,ns,3)
        nloc = 3 if self.r == 1 else 8
        out = None
        for k in range(3):
            f = fn(tris, eb[:, k])  # (m,ns,nf,2)
            ft = np.einsum("mqfd,md->mqf", f, tangent[:, k])
            if out is None:
                out = np.empty((m, nloc, f.shape[2]))
            if self.r == 1:
                out[:, k] = np.einsum("q,mqf->mf", ws, ft)
            else:
                out[:, 2 * k] = np.einsum("q,mqf->mf", ws * (1.0 - s), ft)
                out[:, 2 * k + 1] = np.einsum("q,mqf->mf", ws * s, ft)
        if self.r == 2:
            bq, wq = triangle_rule(4)
            f = fn(tris, bq)
            for s_, vtx in enumerate((1, 2)):
                t_int = X[:, vtx] - X[:, 0]
                out[:, 6 + s_] = np.einsum("q,mqfd,md->mf", wq, f, t_int)
        return out

    def _u_dofs(self, fn, tris=None) -> np.ndarray:
        """Point values at vertices (and edge midpoints): fn(tris, bary) -> (m,q,nf)."""
        tris = np.arange(self.mesh.n_triangles) if tris is None else np.asarray(tris)
        pts = [np.eye(3)]
        if self.r == 2:
            mids = np.zeros((3, 3))
            for k, (i, j) in enumerate(LOCAL_EDGES):
                mids[k, i] = mids[k, j] = 0.5
            pts.append(mids)
        return fn(tris, np.vstack(pts))  # (m, nloc, nf)

    def _w_dofs(self, fn, tris=None) -> np.ndarray:
        """Moments against barycentrics (cell integral for r=1): fn -> (m,q,nf)."""
        tris = np.arange(self.mesh.n_triangles) if tris is None else np.asarray(tris)
        bq, wq = triangle_rule(ERROR_DEGREE)
        f = fn(tris, bq)
        A = self.area[tris]
        if self.r == 1:
            return (A[:, None] * np.einsum("q,mqf->mf", wq, f))[:, None, :]
        return A[:, None, None] * np.einsum("q,qk,mqf->mkf", wq, bq, f)

    def _scatter(self, space, local, ncols=None):
        """Assign per-triangle DOF values into a global array (shared DOFs agree)."""
        idx = self.dofs[space]
        if local.ndim == 2:
            out = np.zeros(self.ndof[space])
            out[idx.ravel()] = local.ravel()
            return out
        out = np.zeros((self.ndof[space], local.shape[2]))
        out[idx.ravel()] = local.reshape(-1, local.shape[2])
        return out

    # ------------------------------------------------------------------
    # fields

    def values(self, space: str, coeffs, bary, tris=None, derivative=False):
        """Discrete field on every (or the given) triangle at barycentric points."""
        tris = np.arange(self.mesh.n_triangles) if tris is None else np.asarray(tris)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.ndof[space],):
            raise ValueError(f"{space} coefficients must have length {self.ndof[space]}, got {coeffs.shape}")
        val, der = self.basis(space, tris, bary)
        c = coeffs[self.dofs[space][tris]]  # (m,n)
        if derivative:
            if der is None:
                raise ValueError("W_h has no derivative in this complex")
            return np.einsum("mqn...,mn->mq...", der, c)
        return np.einsum("mqn...,mn->mq...", val, c)

    def interpolate(self, space: str, f: Callable) -> np.ndarray:
        """Apply the global degrees of freedom of ``space`` to ``f(x) -> values``."""

        def fn(tris, bary):
            v = np.asarray(f(self.physical_points(tris, bary)), dtype=float)
            return v[:, :, None] if space != "V" else v[:, :, None, :]

        if space == "U":
            return self._scatter("U", self._u_dofs(fn)[:, :, 0])
        if space == "V":
            return self._scatter("V", self._v_dofs(fn)[:, :, 0])
        if space == "W":
            return self._scatter("W", self._w_dofs(fn)[:, :, 0])
        raise ValueError(f"unknown space {space!r}")

    def load_vector(self, space: str, f: Callable) -> np.ndarray:
        bq, wq = triangle_rule(ERROR_DEGREE)
        tris = np.arange(self.mesh.n_triangles)
        val, _ = self.basis(space, tris, bq)
        fx = np.asarray(f(self.physical_points(tris, bq)), dtype=float)
        if space == "V":
            loc = np.einsum("q,m,mqnd,mqd->mn", wq, self.area, val, fx)
        else:
            loc = np.einsum("q,m,mqn,mq->mn", wq, self.area, val, fx)
        out = np.zeros(self.ndof[space])
        np.add.at(out, self.dofs[space].ravel(), loc.ravel())
        return out


# ----------------------------------------------------------------------
# construction


def _assemble(c: DeRhamComplex, space: str, degree: int) -> sp.csr_matrix:
    bq, wq = triangle_rule(degree)
    tris = np.arange(c.mesh.n_triangles)
    val, _ = c.basis(space, tris, bq)
    if space == "V":
        loc = np.einsum("q,m,mqad,mqbd->mab", wq, c.area, val, val)
    else:
        loc = np.einsum("q,m,mqa,mqb->mab", wq, c.area, val, val)
    idx = c.dofs[space]
    n = idx.shape[1]
    rows = np.repeat(idx, n, axis=1).ravel()
    cols = np.tile(idx, (1, n)).ravel()
    M = sp.coo_matrix((loc.ravel(), (rows, cols)), shape=(c.ndof[space],) * 2).tocsr()
    M = 0.5 * (M + M.T)
    M.sum_duplicates()
    return M.tocsr()


def _scatter_matrix(rows_idx, cols_idx, local, shape) -> sp.csr_matrix:
    """Global matrix from per-triangle blocks by assignment (no summation)."""
    m, nr, nc = local.shape
    rows = np.repeat(rows_idx, nc, axis=1).ravel()
    cols = np.tile(cols_idx, (1, nr)).ravel()
    vals = local.ravel()
    key = rows.astype(np.int64) * shape[1] + cols
    _, first = np.unique(key, return_index=True)
    A = sp.coo_matrix((vals[first], (rows[first], cols[first])), shape=shape).tocsr()
    A.eliminate_zeros()
    return A


def build_complex(mesh: Mesh, r: int) -> DeRhamComplex:
    if r not in (1, 2):
        raise ValueError(f"polynomial order r must be 1 or 2, got {r!r}")
    nv, ne, nt = mesh.n_vertices, mesh.n_edges, mesh.n_triangles
    X = mesh.vertices[mesh.triangles]
    J = np.stack([X[:, 1] - X[:, 0], X[:, 2] - X[:, 0]], axis=2)  # columns are edge vectors
    Jinv = np.linalg.inv(J)
    G = np.empty((nt, 3, 2))
    G[:, 1:] = Jinv
    G[:, 0] = -Jinv.sum(axis=1)
    area = 0.5 * np.linalg.det(J)

    tri = mesh.triangles
    edge_a = np.empty((nt, 3), dtype=np.int64)
    edge_b = np.empty((nt, 3), dtype=np.int64)
    for k, (i, j) in enumerate(LOCAL_EDGES):
        fwd = tri[:, i] < tri[:, j]
        edge_a[:, k] = np.where(fwd, i, j)
        edge_b[:, k] = np.where(fwd, j, i)

    bedges = mesh.boundary_edges
    if r == 1:
        dofs = {"U": tri.copy(), "V": mesh.tri_edges.copy(), "W": np.arange(nt)[:, None]}
        ndof = {"U": nv, "V": ne, "W": nt}
        bnd = {"U": mesh.boundary_vertices.copy(), "V": bedges.copy()}
    else:
        te = mesh.tri_edges
        vdofs = np.empty((nt, 8), dtype=np.int64)
        vdofs[:, 0:6:2] = 2 * te
        vdofs[:, 1:6:2] = 2 * te + 1
        vdofs[:, 6] = 2 * ne + 2 * np.arange(nt)
        vdofs[:, 7] = 2 * ne + 2 * np.arange(nt) + 1
        dofs = {
            "U": np.hstack([tri, nv + te]),
            "V": vdofs,
            "W": 3 * np.arange(nt)[:, None] + np.arange(3)[None, :],
        }
        ndof = {"U": nv + ne, "V": 2 * ne + 2 * nt, "W": 3 * nt}
        bnd = {
            "U": np.concatenate([mesh.boundary_vertices, nv + bedges]),
            "V": np.sort(np.concatenate([2 * bedges, 2 * bedges + 1])),
        }
    bnd["W"] = np.zeros(0, dtype=np.int64)
    interior = {s: np.setdiff1d(np.arange(ndof[s]), bnd[s]) for s in SPACES}

    c = DeRhamComplex(
        mesh=mesh, r=r, area=area, grad_lam=G, dofs=dofs, ndof=ndof,
        boundary=bnd, interior=interior, _edge_a=edge_a, _edge_b=edge_b,
    )

    if r == 2:
        # nodal V basis: invert the degree-of-freedom matrix of the spanning functions
        Dm = c._v_dofs(lambda t, b: c._prime_v(t, np.broadcast_to(b, (len(t),) + b.shape[-2:]))[0])
        c._vcoef = np.linalg.inv(Dm)

    deg = ASSEMBLY_DEGREE[r]
    c.mass = {s: _assemble(c, s, deg) for s in SPACES}

    if r == 1:
        e = mesh.edges
        c.D0 = sp.csr_matrix(
            (np.r_[-np.ones(ne), np.ones(ne)], (np.r_[np.arange(ne), np.arange(ne)], np.r_[e[:, 0], e[:, 1]])),
            shape=(ne, nv),
        )
        c.D1 = sp.csr_matrix(
            (mesh.tri_edge_signs.ravel().astype(float), (np.repeat(np.arange(nt), 3), mesh.tri_edges.ravel())),
            shape=(nt, ne),
        )
    else:
        grad_u = c._v_dofs(lambda t, b: c.basis("U", t, b)[1])  # (nt, 8, 6)
        c.D0 = _scatter_matrix(dofs["V"], dofs["U"], grad_u, (ndof["V"], ndof["U"]))
        curl_v = c._w_dofs(lambda t, b: c.basis("V", t, b)[1])  # (nt, 3, 8)
        c.D1 = _scatter_matrix(dofs["W"], dofs["V"], curl_v, (ndof["W"], ndof["V"]))
    return c


# ----------------------------------------------------------------------
# projection, evaluation, norms


def project_L2(c: DeRhamComplex, space: str, f: Callable, *, subspace: str = "full",
               boundary_values=None) -> np.ndarray:
    """Plain L2 projection of ``f`` onto ``space``.

    ``subspace='interior'`` projects onto the subspace with vanishing boundary
    degrees of freedom. ``boundary_values`` pins the boundary degrees of
    freedom and projects the remaining ones.
    """
    b = c.load_vector(space, f)
    M = c.mass[space]
    if subspace == "full" and boundary_values is None:
        return scipy.sparse.linalg.spsolve(M.tocsc(), b)
    I, B = c.interior[space], c.boundary[space]
    out = np.zeros(c.ndof[space])
    rhs = b[I]
    if boundary_values is not None:
        g = np.asarray(boundary_values, dtype=float)
        g = g[B] if g.shape == (c.ndof[space],) else g
        out[B] = g
        rhs = rhs - M[I][:, B] @ g
    elif subspace != "interior":
        raise ValueError(f"unknown subspace {subspace!r}")
    out[I] = scipy.sparse.linalg.spsolve(M[I][:, I].tocsc(), rhs)
    return out


def locate_points(c: DeRhamComplex, points, tol: float = 1e-12):
    """Containing triangle and barycentric coordinates for each point."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    X = c.mesh.vertices[c.mesh.triangles]
    Jinv = c.grad_lam[:, 1:]  # rows: grad lambda_1, grad lambda_2
    tris = np.empty(len(P), dtype=np.int64)
    bary = np.empty((len(P), 3))
    for start in range(0, len(P), 256):
        chunk = P[start:start + 256]
        d = chunk[:, None, :] - X[None, :, 0, :]  # (p, nt, 2)
        l12 = np.einsum("tkd,ptd->ptk", Jinv, d)
        lam = np.concatenate([1.0 - l12.sum(axis=2, keepdims=True), l12], axis=2)
        score = lam.min(axis=2)
        best = score.argmax(axis=1)
        bad = score[np.arange(len(chunk)), best] < -tol
        if bad.any():
            i = start + int(np.flatnonzero(bad)[0])
            raise PointLocationError(f"point {i} at {tuple(P[i])} lies outside the mesh")
        tris[start:start + len(chunk)] = best
        bary[start:start + len(chunk)] = lam[np.arange(len(chunk)), best]
    return tris, bary


def eval_field(c: DeRhamComplex, space: str, coeffs, points, derivative: bool = False) -> np.ndarray:
    tris, bary = locate_points(c, points)
    v = c.values(space, coeffs, bary[:, None, :], tris=tris, derivative=derivative)
    return v[:, 0]


def error_norm(c: DeRhamComplex, space: str, coeffs, exact: Callable, weight: float = 1.0) -> float:
    """sqrt(weight * integral |exact - discrete|^2) with the degree-8 rule."""
    if weight <= 0:
        raise ValueError("weight must be positive")
    bq, wq = triangle_rule(ERROR_DEGREE)
    tris = np.arange(c.mesh.n_triangles)
    vh = c.values(space, coeffs, bq)
    ve = np.asarray(exact(c.physical_points(tris, bq)), dtype=float)
    d2 = (ve - vh) ** 2
    if space == "V":
        d2 = d2.sum(axis=-1)
    return float(np.sqrt(weight * np.einsum("q,m,mq->", wq, c.area, d2)))


def dump_matrices(c: DeRhamComplex, directory) -> None:
    """Write mass and derivative matrices in Matrix Market format."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name, M in (("M_U", c.M_U), ("M_V", c.M_V), ("M_W", c.M_W), ("D0", c.D0), ("D1", c.D1)):
        scipy.io.mmwrite(str(d / f"{name}.mtx"), M)

