"""Local HHO operators for the mixed bulk problem.

The local flux space on an element T is ``K_T grad P^k(T)`` (the cell block)
times ``P^k(F)`` on each face.  Cell-block coefficients ``c`` represent
``sum_j c_j K_T grad phi_j`` over the non-constant scaled monomials of
degree <= k; face blocks hold the face-basis coefficients of the outward
normal flux ``v_TF``.  The local flux vector is laid out as
``[cell block, face 0, face 1, ...]`` following the element's face order.

All builders work on batches of elements sharing a vertex count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import basis
from .mesh import PolygonalMesh


def check_spd(K: np.ndarray) -> None:
    K = np.asarray(K, dtype=float).reshape(-1, 2, 2)
    if not np.allclose(K, np.swapaxes(K, 1, 2), rtol=1e-12, atol=0.0):
        raise ValueError("permeability tensor is not symmetric")
    if np.any(largest_eigenvalue(K) <= 0) or np.any(smallest_eigenvalue(K) <= 0):
        raise ValueError("permeability tensor is not positive definite")


def _eig_parts(K: np.ndarray):
    a, b, c = K[..., 0, 0], 0.5 * (K[..., 0, 1] + K[..., 1, 0]), K[..., 1, 1]
    mean = 0.5 * (a + c)
    rad = np.sqrt((0.5 * (a - c)) ** 2 + b**2)
    return mean, rad


def largest_eigenvalue(K: np.ndarray) -> np.ndarray:
    """Largest eigenvalue of symmetric 2x2 tensors via the closed form."""
    mean, rad = _eig_parts(np.asarray(K, dtype=float))
    return mean + rad


def smallest_eigenvalue(K: np.ndarray) -> np.ndarray:
    mean, rad = _eig_parts(np.asarray(K, dtype=float))
    return mean - rad


@dataclass(frozen=True)
class LocalLayout:
    """Local DOF sizes for degree k on an element with ``n_faces`` faces."""

    k: int
    n_faces: int

    @property
    def n_cell(self) -> int:
        return basis.cell_dim(self.k) - 1

    @property
    def n_face(self) -> int:
        return self.k + 1

    @property
    def n_flux(self) -> int:
        return self.n_cell + self.n_faces * self.n_face

    @property
    def n_pressure(self) -> int:
        return basis.cell_dim(self.k)

    def face_slice(self, i: int) -> slice:
        start = self.n_cell + i * self.n_face
        return slice(start, start + self.n_face)


@dataclass(frozen=True)
class ElementGeometry:
    """Batched geometry of elements with ``nv`` vertices."""

    elems: np.ndarray
    coords: np.ndarray  # (n, nv, 2)
    centers: np.ndarray  # (n, 2)
    h: np.ndarray  # (n,)
    faces: np.ndarray  # (n, nv) global face ids
    signs: np.ndarray  # (n, nv) orientation of the canonical normal
    normals: np.ndarray  # (n, nv, 2) outward unit normals
    face_start: np.ndarray  # (n, nv, 2) lower-index face vertex
    face_tangent: np.ndarray  # (n, nv, 2) unit tangent from the lower-index vertex
    face_h: np.ndarray  # (n, nv)

    @classmethod
    def gather(cls, mesh: PolygonalMesh, elems: np.ndarray, nv: int) -> "ElementGeometry":
        faces = mesh.group_table(elems, nv, mesh.elem_faces)
        signs = mesh.group_table(elems, nv, mesh.elem_face_signs).astype(float)
        fv = mesh.face_vertices[faces]
        p0 = mesh.vertices[fv[..., 0]]
        p1 = mesh.vertices[fv[..., 1]]
        hf = mesh.face_lengths[faces]
        return cls(
            elems=elems,
            coords=mesh.group_coords(elems, nv),
            centers=mesh.centroids[elems],
            h=mesh.diameters[elems],
            faces=faces,
            signs=signs,
            normals=mesh.face_normals[faces] * signs[..., None],
            face_start=p0,
            face_tangent=(p1 - p0) / hf[..., None],
            face_h=hf,
        )

    @classmethod
    def single(cls, mesh: PolygonalMesh, e: int) -> "ElementGeometry":
        nv = int(mesh.n_elem_vertices[e])
        return cls.gather(mesh, np.array([e]), nv)

    @property
    def nv(self) -> int:
        return self.coords.shape[1]

    def cell_rule(self, degree: int) -> basis.QuadratureRule:
        return basis.quad_polygons(self.coords, degree, self.centers)

    def face_rule(self, degree: int):
        """Face nodes as arclength (n, nv, q), physical points and weights."""
        t, w = basis.reference_segment(degree)
        s = self.face_h[..., None] * t
        pts = self.face_start[..., None, :] + s[..., None] * self.face_tangent[..., None, :]
        return s, pts, self.face_h[..., None] * w


@dataclass
class BulkOperators:
    """Local bulk matrices for a batch of elements.

    ``div`` maps local flux vectors to pressure coefficients (D_T^k);
    ``b`` is the local matrix of (D_T^k v, q)_T, rows indexed by pressure
    basis functions; ``flux`` maps flux vectors to coefficients of
    F_T^{k+1} in the K_T grad P^{k+1} basis (non-constant monomials);
    ``stab`` and ``product`` are J_T and m_T; ``gram`` is the Gram matrix
    of the local flux norm.
    """

    geom: ElementGeometry
    layout: LocalLayout
    K: np.ndarray
    mass: np.ndarray
    div: np.ndarray
    b: np.ndarray
    flux: np.ndarray
    stab: np.ndarray
    product: np.ndarray
    gram: np.ndarray


def bulk_operators(geom: ElementGeometry, K: np.ndarray, k: int, quad_degree: int | None = None) -> BulkOperators:
    """Build D_T, F_T, J_T, m_T and the flux-norm Gram matrix for a batch."""
    K = np.asarray(K, dtype=float).reshape(-1, 2, 2)
    n, nv = geom.coords.shape[:2]
    layout = LocalLayout(k, nv)
    nk, nk1 = basis.cell_dim(k), basis.cell_dim(k + 1)
    nc, nfd, nu = layout.n_cell, layout.n_face, layout.n_flux
    if quad_degree is None:
        quad_degree = 2 * (k + 1) + 2

    rule = geom.cell_rule(quad_degree)
    ctr, hh = geom.centers[:, None, :], geom.h[:, None]
    phi = basis.eval_cell(rule.points, ctr, hh, k + 1)
    grad = basis.eval_cell_grad(rule.points, ctr, hh, k + 1)
    w = rule.weights
    Kgrad = basis.apply_tensor(K, grad)
    stiff = basis.weighted_gram(w, Kgrad, grad)  # (K grad phi_i, grad phi_j)
    mass1 = basis.weighted_gram(w, phi, phi)
    mass = mass1[:, :nk, :nk]

    s, fpts, fw = geom.face_rule(quad_degree)
    zeta = basis.eval_face(s, geom.face_h[..., None], k)  # (n, nv, q, k+1)
    fphi = basis.eval_cell(fpts, ctr[:, :, None, :], hh[:, :, None], k + 1)  # (n, nv, q, nk1)
    face_moms = basis.contract("efq,efqi,efqm->efim", fw, fphi, zeta)  # (w_i, zeta_m)_F

    # local b: rows q_i in P^k, columns local flux DOFs
    rhs_d = np.zeros((n, nk, nu))
    rhs_d[:, :, :nc] = -stiff[:, :nk, 1:nk]
    for i in range(nv):
        rhs_d[:, :, layout.face_slice(i)] = face_moms[:, i, :nk, :]
    div = basis.spd_solve(mass, rhs_d)

    # flux reconstruction: test functions are the non-constant w in P^{k+1}
    rhs_f = -mass1[:, 1:, :nk] @ div
    for i in range(nv):
        rhs_f[:, :, layout.face_slice(i)] += face_moms[:, i, 1:, :]
    stiff1 = stiff[:, 1:, 1:]
    flux = basis.spd_solve(stiff1, rhs_f)

    # J_T: residual of reconstructed normal flux against face unknowns
    Kgrad_f = basis.apply_tensor(K, basis.eval_cell_grad(fpts, ctr[:, :, None, :], hh[:, :, None], k + 1))
    Fn_basis = basis.contract("efqia,efa->efqi", Kgrad_f[..., 1:, :], geom.normals)
    res = (Fn_basis.reshape(n, -1, Fn_basis.shape[-1]) @ flux).reshape(Fn_basis.shape[:3] + (nu,))
    for i in range(nv):
        res[:, i, :, layout.face_slice(i)] -= zeta[:, i]
    mu = basis.contract("efa,eab,efb->ef", geom.normals, K, geom.normals)
    scale = geom.face_h / mu
    stab = basis.weighted_gram((scale[..., None] * fw).reshape(n, -1), res.reshape(n, -1, nu), res.reshape(n, -1, nu))
    consist = np.swapaxes(flux, 1, 2) @ (stiff1 @ flux)
    product = consist + stab
    product = 0.5 * (product + np.swapaxes(product, 1, 2))
    stab = 0.5 * (stab + np.swapaxes(stab, 1, 2))

    # Gram matrix of the local flux norm
    kbar = largest_eigenvalue(K)
    gram = np.zeros((n, nu, nu))
    if nc:
        KKgrad = basis.apply_tensor(K, Kgrad[:, :, 1:nk])
        gram[:, :nc, :nc] = basis.weighted_gram(w, KKgrad, grad[:, :, 1:nk])
    face_mass = basis.weighted_gram(fw, zeta, zeta)
    for i in range(nv):
        sl = layout.face_slice(i)
        gram[:, sl, sl] = geom.face_h[:, i, None, None] * face_mass[:, i]
    gram /= kbar[:, None, None]

    return BulkOperators(geom, layout, K, mass, div, rhs_d, flux, stab, product, gram)


def interpolate_bulk(geom: ElementGeometry, K: np.ndarray, k: int, field, quad_degree: int | None = None) -> np.ndarray:
    """Local flux DOFs of a vector field on a batch of elements.

    ``field(x)`` maps points (..., 2) of the batch to vectors (..., 2); the
    leading axis of ``x`` runs over the batch elements.  Face blocks are the
    face L2 projections of the outward normal component; the cell block is
    K_T grad y_T with y_T the Neumann-problem solution, its constant dropped.
    """
    K = np.asarray(K, dtype=float).reshape(-1, 2, 2)
    n, nv = geom.coords.shape[:2]
    layout = LocalLayout(k, nv)
    if quad_degree is None:
        quad_degree = 2 * (k + 1) + 6
    out = np.zeros((n, layout.n_flux))
    if layout.n_cell:
        rule = geom.cell_rule(quad_degree)
        ctr, hh = geom.centers[:, None, :], geom.h[:, None]
        grad = basis.eval_cell_grad(rule.points, ctr, hh, k)[:, :, 1:]
        Kgrad = basis.apply_tensor(K, grad)
        stiff = basis.weighted_gram(rule.weights, Kgrad, grad)
        vals = field(rule.points)
        rhs = basis.contract("eq,eqia,eqa->ei", rule.weights, grad, vals)
        out[:, : layout.n_cell] = basis.spd_solve(stiff, rhs[..., None])[..., 0]
    s, fpts, fw = geom.face_rule(quad_degree)
    zeta = basis.eval_face(s, geom.face_h[..., None], k)
    vn = basis.contract("efqa,efa->efq", field(fpts.reshape(n, -1, 2)).reshape(fpts.shape), geom.normals)
    fmass = basis.weighted_gram(fw, zeta, zeta)
    frhs = basis.contract("efq,efqm,efq->efm", fw, zeta, vn)
    coef = basis.spd_solve(fmass, frhs[..., None])[..., 0]
    for i in range(nv):
        out[:, layout.face_slice(i)] = coef[:, i]
    return out


def project_pressure(geom: ElementGeometry, k: int, func, quad_degree: int | None = None) -> np.ndarray:
    """Cell L2 projections onto P^k of a scalar function on a batch."""
    if quad_degree is None:
        quad_degree = 2 * (k + 1) + 6
    rule = geom.cell_rule(quad_degree)
    return basis.l2_project_cell(func, rule, geom.centers, geom.h, k)


# ---------------------------------------------------------------------------
# single-element helpers


def build_flux_basis(geom: ElementGeometry, K: np.ndarray, k: int):
    """Callable evaluating the cell flux basis K_T grad phi_j, j >= 1.

    Returns a function of points (m, 2) giving an array (m, dim, 2).
    """
    K = np.asarray(K, dtype=float).reshape(2, 2)
    check_spd(K)
    ctr, h = geom.centers[0], geom.h[0]

    def evaluate(x):
        g = basis.eval_cell_grad(np.asarray(x, dtype=float), ctr, h, k)[..., 1:, :]
        return basis.contract("ab,...ib->...ia", K, g)

    return evaluate


def element_operators(mesh: PolygonalMesh, e: int, K, k: int) -> BulkOperators:
    K = np.asarray(K, dtype=float).reshape(1, 2, 2)
    check_spd(K)
    return bulk_operators(ElementGeometry.single(mesh, e), K, k)


def divergence_reconstruction(ops: BulkOperators) -> np.ndarray:
    return ops.div


def flux_reconstruction(ops: BulkOperators) -> np.ndarray:
    return ops.flux


def stabilization_JT(ops: BulkOperators) -> np.ndarray:
    return ops.stab


def local_product_mT(ops: BulkOperators) -> np.ndarray:
    return ops.product
