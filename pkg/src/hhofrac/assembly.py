"""Global numbering, assembly of the saddle-point system and static condensation.

Unknowns are ordered as

* flux: cell-flux blocks per element, then face blocks (one block per
  non-fracture interior or Dirichlet face, two per fracture face: the side-1
  then side-2 outward fluxes; Neumann faces carry no unknown);
* bulk pressure: one P^k block per element;
* fracture pressure: one P^k block per fracture face, then the vertex
  values of non-Dirichlet fracture vertices.

The matrix has the block structure ``[[A, -B^T, C^T], [B, 0, 0], [-C, 0, D]]``
where A realizes a_h^xi, B realizes b_h, C realizes c_h and D realizes d_h.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import basis
from .bulk import ElementGeometry, LocalLayout, bulk_operators, check_spd
from .fracture import fracture_operators
from .mesh import DIRICHLET, FRACTURE, NEUMANN, FaceTags, PolygonalMesh, RegionMap

log = logging.getLogger(__name__)

DEFAULT_CHUNK = 8192


def _const(value):
    return lambda x, *args: np.full(np.shape(x)[:-1], float(value))


def _as_field(value):
    if value is None:
        return _const(0.0)
    if callable(value):
        return value
    return _const(value)


@dataclass
class ProblemData:
    """Coefficients and data of the coupled bulk-fracture problem.

    Bulk callables take ``(x, side)`` where ``x`` has shape (..., 2) and
    ``side`` (broadcastable to ``x[..., 0]``) is the subdomain index (1 or 2)
    of the element being integrated; this lets fields be discontinuous across
    the fracture.  ``K(x, side)`` returns tensors (..., 2, 2) and is sampled
    at element centroids.  Fracture callables take ``x`` only.  Scalars are
    accepted in place of any callable.
    """

    K: Callable | np.ndarray = field(default_factory=lambda: np.eye(2))
    f: Callable | float = 0.0
    g_B: Callable | float = 0.0
    f_gamma: Callable | float = 0.0
    g_gamma: Callable | float = 0.0
    kappa_n: Callable | float = 1.0
    kappa_tau: Callable | float = 1.0
    ell: Callable | float = 1.0
    xi: float = 0.75

    def __post_init__(self):
        if not (0.5 < self.xi <= 1.0):
            raise ValueError(f"xi must lie in (1/2, 1], got {self.xi}")

    def element_K(self, mesh: PolygonalMesh, regions: RegionMap) -> np.ndarray:
        if callable(self.K):
            K = np.asarray(self.K(mesh.centroids, regions.subdomain), dtype=float)
        else:
            K = np.asarray(self.K, dtype=float)
        K = np.broadcast_to(K, (mesh.n_elements, 2, 2)).copy()
        check_spd(K)
        return K

    def fracture_coefficients(self, x: np.ndarray):
        """kappa_n, kappa_tau and ell at fracture face midpoints."""
        out = []
        for name in ("kappa_n", "kappa_tau", "ell"):
            v = getattr(self, name)
            arr = np.asarray(v(x) if callable(v) else np.full(len(x), float(v)), dtype=float)
            arr = np.broadcast_to(arr, (len(x),)).copy()
            if np.any(arr <= 0):
                raise ValueError(f"{name} must be strictly positive")
            out.append(arr)
        return tuple(out)

    def field(self, name: str):
        return _as_field(getattr(self, name))


# ---------------------------------------------------------------------------
# DOF numbering


@dataclass(frozen=True, eq=False)
class DofMap:
    k: int
    n_elements: int
    cell_offset: np.ndarray
    face_offset: np.ndarray
    pressure_offset: np.ndarray
    frac_face_offset: np.ndarray
    frac_vertex_index: np.ndarray
    n_flux: int
    n_pressure: int
    n_fracture: int

    @property
    def n_total(self) -> int:
        return self.n_flux + self.n_pressure + self.n_fracture

    @property
    def n_cell(self) -> int:
        return basis.cell_dim(self.k) - 1

    @property
    def n_face(self) -> int:
        return self.k + 1

    @property
    def n_cell_pressure(self) -> int:
        return basis.cell_dim(self.k)

    @property
    def blocks(self) -> dict[str, slice]:
        a = self.n_flux
        b = a + self.n_pressure
        return {"flux": slice(0, a), "pressure": slice(a, b), "fracture": slice(b, self.n_total)}

    @property
    def n_face_flux(self) -> int:
        return self.n_flux - self.n_elements * self.n_cell

    def interior_mask(self) -> np.ndarray:
        """Unknowns eliminated by static condensation."""
        mask = np.zeros(self.n_total, dtype=bool)
        mask[: self.n_elements * self.n_cell] = True
        npk = self.n_cell_pressure
        if npk > 1:
            idx = self.pressure_offset[:, None] + np.arange(1, npk)
            mask[idx.ravel()] = True
        return mask

    def interior_groups(self) -> np.ndarray:
        """Per-element interior indices, shape (n_elements, n_interior)."""
        cells = self.cell_offset[:, None] + np.arange(self.n_cell)
        press = self.pressure_offset[:, None] + np.arange(1, self.n_cell_pressure)
        return np.concatenate([cells, press], axis=1)

    def element_flux_indices(self, geom: ElementGeometry, tags: FaceTags) -> tuple[np.ndarray, np.ndarray]:
        """Global indices and signs of the local flux DOFs of a batch.

        Eliminated (Neumann) DOFs get index -1 and sign 0.
        """
        k1 = self.n_face
        n, nv = geom.faces.shape
        layout = LocalLayout(self.k, nv)
        idx = np.empty((n, layout.n_flux), dtype=np.int64)
        sgn = np.ones((n, layout.n_flux))
        idx[:, : layout.n_cell] = self.cell_offset[geom.elems, None] + np.arange(layout.n_cell)
        ar = np.arange(k1)
        for i in range(nv):
            f = geom.faces[:, i]
            sl = layout.face_slice(i)
            base = self.face_offset[f].copy()
            s = geom.signs[:, i].copy()
            is_frac = tags.face_kind[f] == FRACTURE
            if is_frac.any():
                ff = tags.face_to_fracture[f[is_frac]]
                side2 = tags.frac_face_elements[ff, 1] == geom.elems[is_frac]
                base[is_frac] += side2 * k1
                s[is_frac] = 1.0
            elim = base < 0
            s[elim] = 0.0
            idx[:, sl] = np.where(elim[:, None], -1, base[:, None] + ar)
            sgn[:, sl] = s[:, None]
        return idx, sgn


def number_dofs(mesh: PolygonalMesh, tags: FaceTags, k: int) -> DofMap:
    if k < 0:
        raise ValueError("polynomial degree must be non-negative")
    ne = mesh.n_elements
    nc = basis.cell_dim(k) - 1
    k1 = k + 1
    cell_offset = np.arange(ne, dtype=np.int64) * nc
    sizes = np.full(mesh.n_faces, k1, dtype=np.int64)
    sizes[tags.face_kind == FRACTURE] = 2 * k1
    sizes[tags.face_kind == NEUMANN] = 0
    face_offset = ne * nc + np.concatenate([[0], np.cumsum(sizes)[:-1]])
    face_offset[sizes == 0] = -1
    n_flux = int(ne * nc + sizes.sum())
    npk = basis.cell_dim(k)
    pressure_offset = n_flux + np.arange(ne, dtype=np.int64) * npk
    n_pressure = ne * npk
    nff = tags.n_fracture_faces
    frac_face_offset = n_flux + n_pressure + np.arange(nff, dtype=np.int64) * k1
    free = ~tags.fracture_dirichlet
    fvi = np.full(len(tags.fracture_vertices), -1, dtype=np.int64)
    fvi[free] = n_flux + n_pressure + nff * k1 + np.arange(free.sum())
    return DofMap(
        k=k,
        n_elements=ne,
        cell_offset=cell_offset,
        face_offset=face_offset,
        pressure_offset=pressure_offset,
        frac_face_offset=frac_face_offset,
        frac_vertex_index=fvi,
        n_flux=n_flux,
        n_pressure=n_pressure,
        n_fracture=int(nff * k1 + free.sum()),
    )


def expected_dof_count(mesh: PolygonalMesh, tags: FaceTags, k: int) -> int:
    """Unknown count from the closed-form formula."""
    k1 = k + 1
    interior = mesh.face_elements[:, 1] >= 0
    n_int = int((interior & (tags.face_kind != FRACTURE)).sum())
    n_frac = int((tags.face_kind == FRACTURE).sum())
    n_dir = int((tags.face_kind == DIRICHLET).sum())
    ne = mesh.n_elements
    free_vertices = int((~tags.fracture_dirichlet).sum())
    return (
        ne * (basis.cell_dim(k) - 1)
        + k1 * (n_int + 2 * n_frac + n_dir)
        + ne * basis.cell_dim(k)
        + k1 * n_frac
        + free_vertices
    )


# ---------------------------------------------------------------------------
# systems


@dataclass
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    blocks: dict[str, slice]

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


class _Triplets:
    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def add_dense(self, idx_r, idx_c, mat):
        """Add batched dense blocks; negative indices are dropped."""
        n, a = idx_r.shape
        b = idx_c.shape[1]
        R = np.broadcast_to(idx_r[:, :, None], (n, a, b)).ravel()
        C = np.broadcast_to(idx_c[:, None, :], (n, a, b)).ravel()
        V = mat.ravel()
        keep = (R >= 0) & (C >= 0) & (V != 0.0)
        self.rows.append(R[keep].astype(np.int64))
        self.cols.append(C[keep].astype(np.int64))
        self.vals.append(V[keep])

    def matrix(self, n: int) -> sp.csr_matrix:
        if not self.rows:
            return sp.csr_matrix((n, n))
        r = np.concatenate(self.rows)
        c = np.concatenate(self.cols)
        v = np.concatenate(self.vals)
        self.rows, self.cols, self.vals = [], [], []
        mat = sp.coo_matrix((v, (r, c)), shape=(n, n)).tocsr()
        mat.sum_duplicates()
        return mat


def _scatter_rhs(rhs: np.ndarray, idx: np.ndarray, vals: np.ndarray) -> None:
    keep = idx >= 0
    np.add.at(rhs, idx[keep], vals[keep])


@dataclass
class _ElementChunk:
    geom: ElementGeometry
    idx: np.ndarray  # (n, nU + Npk) global indices, -1 if eliminated
    sgn: np.ndarray
    local: np.ndarray  # (n, m, m) local matrix in local orientation
    rhs: np.ndarray  # (n, m)
    n_flux_local: int


def _element_chunks(mesh, tags, regions, data, dofmap, K, chunk):
    k = dofmap.k
    npk = dofmap.n_cell_pressure
    f = data.field("f")
    gB = data.field("g_B")
    qdeg = 2 * (k + 1) + 6
    for nv, elems in mesh.groups.items():
        for start in range(0, len(elems), chunk):
            sub = elems[start : start + chunk]
            geom = ElementGeometry.gather(mesh, sub, nv)
            ops = bulk_operators(geom, K[sub], k)
            nu = ops.layout.n_flux
            n = len(sub)
            m = nu + npk
            L = np.zeros((n, m, m))
            L[:, :nu, :nu] = ops.product
            L[:, :nu, nu:] = -np.swapaxes(ops.b, 1, 2)
            L[:, nu:, :nu] = ops.b
            r = np.zeros((n, m))
            side = regions.subdomain[sub][:, None]
            rule = geom.cell_rule(qdeg)
            phi = basis.eval_cell(rule.points, geom.centers[:, None, :], geom.h[:, None], k)
            r[:, nu:] = basis.contract("eq,eqi,eq->ei", rule.weights, phi, f(rule.points, side))
            # weak Dirichlet data on boundary faces
            kinds = tags.face_kind[geom.faces]
            if (kinds == DIRICHLET).any():
                s, fpts, fw = geom.face_rule(qdeg)
                zeta = basis.eval_face(s, geom.face_h[..., None], k)
                g = gB(fpts, side[:, :, None])
                mom = basis.contract("efq,efqm,efq->efm", fw, zeta, g)
                for i in range(nv):
                    dmask = kinds[:, i] == DIRICHLET
                    sl = ops.layout.face_slice(i)
                    r[dmask, sl] -= mom[dmask, i]
            fidx, fsgn = dofmap.element_flux_indices(geom, tags)
            pidx = dofmap.pressure_offset[sub, None] + np.arange(npk)
            idx = np.concatenate([fidx, pidx], axis=1)
            sgn = np.concatenate([fsgn, np.ones((n, npk))], axis=1)
            yield _ElementChunk(geom, idx, sgn, L, r, nu)


def _fracture_terms(mesh, tags, data, dofmap, trip: _Triplets, rhs: np.ndarray, index_map=None):
    """Add fracture couplings (a_h jump/average terms, c_h, d_h) and RHS."""
    nff = tags.n_fracture_faces
    if nff == 0:
        return
    k = dofmap.k
    k1 = k + 1
    ff = tags.fracture_faces
    h = mesh.face_lengths[ff]
    mids = mesh.face_midpoints[ff]
    kn, kt, ell = data.fracture_coefficients(mids)
    lam = ell / kn
    lamxi = lam * (data.xi / 2.0 - 0.25)
    fops = fracture_operators(h, kt * ell, k)
    MF = fops.mass
    remap = (lambda a: a) if index_map is None else (lambda a: np.where(a >= 0, index_map[np.maximum(a, 0)], -1))

    u1 = dofmap.face_offset[ff, None] + np.arange(k1)
    u2 = u1 + k1
    uu = np.concatenate([u1, u2], axis=1)
    cjj = (lamxi + 0.25 * lam)[:, None, None] * MF
    cjk = (lamxi - 0.25 * lam)[:, None, None] * MF
    block = np.concatenate(
        [np.concatenate([cjj, cjk], axis=2), np.concatenate([cjk, cjj], axis=2)], axis=1
    )
    trip.add_dense(remap(uu), remap(uu), block)

    qf = dofmap.frac_face_offset[:, None] + np.arange(k1)
    fv = tags.frac_face_vertices
    vidx = dofmap.frac_vertex_index[fv]
    qloc = np.concatenate([qf, vidx], axis=1)
    # c_h: flux rows get +C^T, fracture rows get -C
    CT = np.concatenate([MF, MF], axis=2)  # (n, k1, 2k1): rows q_F, cols (u1, u2)
    trip.add_dense(remap(uu), remap(qf), np.swapaxes(CT, 1, 2))
    trip.add_dense(remap(qf), remap(uu), -CT)
    trip.add_dense(remap(qloc), remap(qloc), fops.diffusion)

    # fracture source and Dirichlet lifting
    fg = data.field("f_gamma")
    gg = data.field("g_gamma")
    qdeg = 2 * (k + 1) + 6
    t, w = basis.reference_segment(qdeg)
    p0 = mesh.vertices[mesh.face_vertices[ff, 0]]
    tang = (mesh.vertices[mesh.face_vertices[ff, 1]] - p0) / h[:, None]
    s = h[:, None] * t
    pts = p0[:, None, :] + s[..., None] * tang[:, None, :]
    zeta = basis.eval_face(s, h[:, None], k)
    src = basis.contract("eq,eqm,eq->em", h[:, None] * w, zeta, ell[:, None] * fg(pts))
    _scatter_rhs(rhs, remap(qf), src)
    lift = np.zeros((nff, k + 3))
    vpos = tags.fracture_vertices[fv]
    gvals = gg(mesh.vertices[vpos])
    dmask = tags.fracture_dirichlet[fv]
    lift[:, k1:] = np.where(dmask, gvals, 0.0)
    lrhs = -basis.contract("eij,ej->ei", fops.diffusion, lift)
    _scatter_rhs(rhs, remap(qloc), lrhs)


def assemble_system(
    mesh: PolygonalMesh,
    tags: FaceTags,
    regions: RegionMap,
    data: ProblemData,
    k: int,
    dofmap: DofMap | None = None,
    chunk: int = DEFAULT_CHUNK,
) -> tuple[SparseSystem, DofMap]:
    """Assemble the full (uncondensed) saddle-point system."""
    if dofmap is None:
        dofmap = number_dofs(mesh, tags, k)
    if dofmap.k != k:
        raise ValueError("DOF map degree does not match k")
    K = data.element_K(mesh, regions)
    n = dofmap.n_total
    rhs = np.zeros(n)
    trip = _Triplets()
    for ch in _element_chunks(mesh, tags, regions, data, dofmap, K, chunk):
        S = ch.sgn[:, :, None] * ch.local * ch.sgn[:, None, :]
        trip.add_dense(ch.idx, ch.idx, S)
        _scatter_rhs(rhs, ch.idx, ch.sgn * ch.rhs)
    _fracture_terms(mesh, tags, data, dofmap, trip, rhs)
    mat = trip.matrix(n)
    if mat.shape != (n, n) or rhs.shape != (n,):
        raise RuntimeError("assembled system has inconsistent dimensions")
    return SparseSystem(mat, rhs, dofmap.blocks), dofmap


# ---------------------------------------------------------------------------
# static condensation


@dataclass
class CondensedSystem:
    """Reduced system on face fluxes, element pressure constants and fracture
    unknowns, with the data needed to recover the eliminated unknowns."""

    system: SparseSystem
    dofmap: DofMap
    skeleton: np.ndarray  # full indices of the reduced unknowns
    _recovery: list = field(repr=False, default_factory=list)

    def recover(self, y: np.ndarray) -> np.ndarray:
        x = np.zeros(self.dofmap.n_total)
        x[self.skeleton] = y
        for item in self._recovery:
            item(x)
        return x


def _reduced_index(dofmap: DofMap) -> tuple[np.ndarray, np.ndarray]:
    mask = dofmap.interior_mask()
    skeleton = np.flatnonzero(~mask)
    index = np.full(dofmap.n_total, -1, dtype=np.int64)
    index[skeleton] = np.arange(len(skeleton))
    return skeleton, index


def _reduced_blocks(dofmap: DofMap) -> dict[str, slice]:
    a = dofmap.n_face_flux
    b = a + dofmap.n_elements
    return {"flux": slice(0, a), "pressure": slice(a, b), "fracture": slice(b, b + dofmap.n_fracture)}


def assemble_condensed(
    mesh: PolygonalMesh,
    tags: FaceTags,
    regions: RegionMap,
    data: ProblemData,
    k: int,
    dofmap: DofMap | None = None,
    chunk: int = DEFAULT_CHUNK,
) -> CondensedSystem:
    """Assemble the statically condensed system element by element.

    Cell fluxes and all pressure modes but the constant are eliminated by
    small local saddle-point solves; the full system is never formed.
    """
    if dofmap is None:
        dofmap = number_dofs(mesh, tags, k)
    K = data.element_K(mesh, regions)
    skeleton, index = _reduced_index(dofmap)
    nred = len(skeleton)
    rhs = np.zeros(nred)
    trip = _Triplets()
    recovery = []
    nc = dofmap.n_cell
    npk = dofmap.n_cell_pressure
    for ch in _element_chunks(mesh, tags, regions, data, dofmap, K, chunk):
        nu = ch.n_flux_local
        I = np.r_[np.arange(nc), nu + np.arange(1, npk)]
        S = np.r_[np.arange(nc, nu), nu]
        L, r = ch.local, ch.rhs
        if len(I):
            LII = L[:, I][:, :, I]
            LIS = L[:, I][:, :, S]
            LSI = L[:, S][:, :, I]
            sol = np.linalg.solve(LII, np.concatenate([LIS, r[:, I, None]], axis=2))
            H, G = sol[:, :, :-1], sol[:, :, -1]
            schur = L[:, S][:, :, S] - LSI @ H
            gs = r[:, S] - basis.contract("eij,ej->ei", LSI, G)
        else:
            H = G = None
            schur = L[:, S][:, :, S]
            gs = r[:, S]
        idxS, sgnS = ch.idx[:, S], ch.sgn[:, S]
        ridx = np.where(idxS >= 0, index[np.maximum(idxS, 0)], -1)
        trip.add_dense(ridx, ridx, sgnS[:, :, None] * schur * sgnS[:, None, :])
        _scatter_rhs(rhs, ridx, sgnS * gs)
        if H is not None:
            recovery.append(_Recover(ch.idx[:, I], idxS, sgnS, H, G))
    _fracture_terms(mesh, tags, data, dofmap, trip, rhs, index_map=index)
    mat = trip.matrix(nred)
    system = SparseSystem(mat, rhs, _reduced_blocks(dofmap))
    return CondensedSystem(system, dofmap, skeleton, recovery)


@dataclass
class _Recover:
    idx_i: np.ndarray
    idx_s: np.ndarray
    sgn_s: np.ndarray
    H: np.ndarray
    G: np.ndarray

    def __call__(self, x: np.ndarray) -> None:
        xs = np.where(self.idx_s >= 0, x[np.maximum(self.idx_s, 0)], 0.0) * self.sgn_s
        x[self.idx_i] = self.G - basis.contract("eij,ej->ei", self.H, xs)


def static_condensation(system: SparseSystem, dofmap: DofMap) -> CondensedSystem:
    """Condense an assembled system using the per-element interior blocks."""
    skeleton, index = _reduced_index(dofmap)
    groups = dofmap.interior_groups()
    M = system.matrix.tocsr()
    b = system.rhs
    if groups.shape[1] == 0:
        red = SparseSystem(M[skeleton][:, skeleton].tocsr(), b[skeleton].copy(), _reduced_blocks(dofmap))
        return CondensedSystem(red, dofmap, skeleton, [])
    interior = groups.ravel()
    ni = groups.shape[1]
    sub = M[interior][:, interior]
    ne = dofmap.n_elements
    blocks = np.zeros((ne, ni, ni))
    coo = sub.tocoo()
    be, bi = np.divmod(coo.row, ni)
    ce, cj = np.divmod(coo.col, ni)
    if np.any(be != ce):
        raise ValueError("interior unknowns couple across elements; condensation is not local")
    blocks[be, bi, cj] = coo.data
    try:
        inv = np.linalg.inv(blocks)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular local condensation block") from exc
    Minv = _block_diag_csr(inv)
    MIS = M[interior][:, skeleton]
    MSI = M[skeleton][:, interior]
    MSS = M[skeleton][:, skeleton]
    H = (Minv @ MIS).tocsr()
    G = Minv @ b[interior]
    red = (MSS - MSI @ H).tocsr()
    red.eliminate_zeros()
    g = b[skeleton] - MSI @ G

    def recover(x, H=H, G=G, interior=interior, skeleton=skeleton):
        x[interior] = G - H @ x[skeleton]

    return CondensedSystem(SparseSystem(red, g, _reduced_blocks(dofmap)), dofmap, skeleton, [recover])


def _block_diag_csr(blocks: np.ndarray) -> sp.csr_matrix:
    n, m, _ = blocks.shape
    rows = (np.arange(n)[:, None, None] * m + np.arange(m)[None, :, None]).repeat(m, axis=2)
    cols = (np.arange(n)[:, None, None] * m + np.arange(m)[None, None, :]).repeat(m, axis=1)
    return sp.csr_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())), shape=(n * m, n * m))
