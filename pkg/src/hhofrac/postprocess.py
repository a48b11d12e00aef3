"""Discrete solutions, error norms, convergence orders, fluxes and sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import basis
from .assembly import DofMap, ProblemData
from .bulk import ElementGeometry, LocalLayout, bulk_operators, interpolate_bulk, largest_eigenvalue, project_pressure
from .fracture import fracture_operators, interpolate_fracture
from .mesh import FaceTags, PointLocator, PolygonalMesh, RegionMap


@dataclass
class DiscreteSolution:
    """Broken representation of a discrete solution.

    Element ``e`` owns the local flux vector
    ``flux[flux_ptr[e]:flux_ptr[e+1]]`` in its own outward orientation.
    ``frac_vertices`` holds values at every fracture vertex, Dirichlet
    lifting included.
    """

    k: int
    flux: np.ndarray
    flux_ptr: np.ndarray
    pressure: np.ndarray
    frac_faces: np.ndarray
    frac_vertices: np.ndarray

    def element_flux(self, e: int) -> np.ndarray:
        return self.flux[self.flux_ptr[e] : self.flux_ptr[e + 1]]

    def group_flux(self, elems: np.ndarray, nu: int) -> np.ndarray:
        return self.flux[self.flux_ptr[elems][:, None] + np.arange(nu)]


def flux_pointer(mesh: PolygonalMesh, k: int) -> np.ndarray:
    sizes = np.array([LocalLayout(k, int(nv)).n_flux for nv in mesh.n_elem_vertices], dtype=np.int64)
    ptr = np.zeros(mesh.n_elements + 1, dtype=np.int64)
    np.cumsum(sizes, out=ptr[1:])
    return ptr


def _groups(mesh: PolygonalMesh, chunk: int = 8192):
    for nv, elems in mesh.groups.items():
        for start in range(0, len(elems), chunk):
            yield nv, elems[start : start + chunk]


def extract_solution(
    x: np.ndarray, dofmap: DofMap, mesh: PolygonalMesh, tags: FaceTags, data: ProblemData
) -> DiscreteSolution:
    """Unpack a global solution vector, adding the fracture Dirichlet lifting."""
    k = dofmap.k
    ptr = flux_pointer(mesh, k)
    flux = np.zeros(ptr[-1])
    for nv, elems in _groups(mesh):
        geom = ElementGeometry.gather(mesh, elems, nv)
        idx, sgn = dofmap.element_flux_indices(geom, tags)
        vals = np.where(idx >= 0, x[np.maximum(idx, 0)], 0.0) * sgn
        flux[ptr[elems][:, None] + np.arange(idx.shape[1])] = vals
    npk = dofmap.n_cell_pressure
    pressure = x[dofmap.pressure_offset[:, None] + np.arange(npk)]
    frac = x[dofmap.frac_face_offset[:, None] + np.arange(k + 1)] if tags.n_fracture_faces else np.zeros((0, k + 1))
    verts = np.zeros(len(tags.fracture_vertices))
    free = dofmap.frac_vertex_index >= 0
    verts[free] = x[dofmap.frac_vertex_index[free]]
    if (~free).any():
        g = data.field("g_gamma")
        verts[~free] = g(mesh.vertices[tags.fracture_vertices[~free]])
    return DiscreteSolution(k, flux, ptr, pressure, frac, verts)


def _fracture_face_points(mesh: PolygonalMesh, tags: FaceTags):
    ff = tags.fracture_faces
    h = mesh.face_lengths[ff]
    p0 = mesh.vertices[mesh.face_vertices[ff, 0]]
    t = (mesh.vertices[mesh.face_vertices[ff, 1]] - p0) / h[:, None]
    return h, p0, t


def project_exact(
    u,
    p,
    p_gamma,
    mesh: PolygonalMesh,
    tags: FaceTags,
    regions: RegionMap,
    data: ProblemData,
    k: int,
) -> DiscreteSolution:
    """Interpolate exact fields: bulk interpolator for ``u``, cell L2
    projection for ``p`` and the fracture interpolator for ``p_gamma``.

    ``u`` and ``p`` take ``(x, side)``; ``p_gamma`` takes ``x``.
    """
    K = data.element_K(mesh, regions)
    ptr = flux_pointer(mesh, k)
    flux = np.zeros(ptr[-1])
    pressure = np.zeros((mesh.n_elements, basis.cell_dim(k)))
    for nv, elems in _groups(mesh):
        geom = ElementGeometry.gather(mesh, elems, nv)
        side = regions.subdomain[elems][:, None]
        vals = interpolate_bulk(geom, K[elems], k, lambda x: u(x, side))
        flux[ptr[elems][:, None] + np.arange(vals.shape[1])] = vals
        pressure[elems] = project_pressure(geom, k, lambda x: p(x, side))
    nff = tags.n_fracture_faces
    frac = np.zeros((nff, k + 1))
    verts = np.zeros(len(tags.fracture_vertices))
    if nff:
        h, p0, t = _fracture_face_points(mesh, tags)
        loc = interpolate_fracture(h, k, lambda s: p_gamma(p0[:, None, :] + s[..., None] * t[:, None, :]))
        frac = loc[:, : k + 1]
        verts = p_gamma(mesh.vertices[tags.fracture_vertices])
    return DiscreteSolution(k, flux, ptr, pressure, frac, np.asarray(verts, dtype=float))


@dataclass
class ErrorReport:
    err_Uh_H: float
    err_ph_L2: float
    err_pFract_en: float
    err_pFract_L2: float
    h: float
    dofs: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _local_face_positions(mesh: PolygonalMesh, elems: np.ndarray, faces: np.ndarray) -> np.ndarray:
    pos = np.full(len(elems), -1, dtype=np.int64)
    counts = mesh.n_elem_vertices[elems]
    for j in range(int(counts.max()) if len(elems) else 0):
        valid = j < counts
        hit = valid & (mesh.elem_faces[mesh.elem_ptr[elems] + np.minimum(j, counts - 1)] == faces)
        pos[hit & (pos < 0)] = j
    if np.any(pos < 0):
        raise ValueError("face not found in adjacent element")
    return pos


def fracture_side_fluxes(sol: DiscreteSolution, mesh: PolygonalMesh, tags: FaceTags) -> tuple[np.ndarray, np.ndarray]:
    """Outward face fluxes (v_T1F, v_T2F) on fracture faces, (nff, k+1) each."""
    k1 = sol.k + 1
    nc = basis.cell_dim(sol.k) - 1
    out = []
    for side in range(2):
        elems = tags.frac_face_elements[:, side]
        pos = _local_face_positions(mesh, elems, tags.fracture_faces)
        start = sol.flux_ptr[elems] + nc + pos * k1
        out.append(sol.flux[start[:, None] + np.arange(k1)])
    return out[0], out[1]


def _norms(
    delta: DiscreteSolution, mesh: PolygonalMesh, tags: FaceTags, regions: RegionMap, data: ProblemData
) -> tuple[float, float, float, float]:
    k = delta.k
    K = data.element_K(mesh, regions)
    eu2 = 0.0
    ep2 = 0.0
    for nv, elems in _groups(mesh):
        geom = ElementGeometry.gather(mesh, elems, nv)
        ops = bulk_operators(geom, K[elems], k)
        d = delta.group_flux(elems, ops.layout.n_flux)
        eu2 += float(basis.contract("ei,eij,ej->", d, ops.gram, d))
        dp = delta.pressure[elems]
        ep2 += float(basis.contract("ei,eij,ej->", dp, ops.mass, dp))
    eg2 = 0.0
    el2 = 0.0
    if tags.n_fracture_faces:
        ff = tags.fracture_faces
        h = mesh.face_lengths[ff]
        kn, kt, ell = data.fracture_coefficients(mesh.face_midpoints[ff])
        lam = ell / kn
        lamxi = lam * (data.xi / 2.0 - 0.25)
        fops = fracture_operators(h, kt * ell, k)
        v1, v2 = fracture_side_fluxes(delta, mesh, tags)
        jump, avg = v1 + v2, 0.5 * (v1 - v2)
        MF = fops.mass
        eu2 += float(np.sum(lamxi * basis.contract("ei,eij,ej->e", jump, MF, jump)))
        eu2 += float(np.sum(lam * basis.contract("ei,eij,ej->e", avg, MF, avg)))
        loc = np.concatenate([delta.frac_faces, delta.frac_vertices[tags.frac_face_vertices]], axis=1)
        eg2 = float(basis.contract("ei,eij,ej->", loc, fops.gram, loc))
        el2 = float(basis.contract("ei,eij,ej->", delta.frac_faces, MF, delta.frac_faces))
    return tuple(float(np.sqrt(max(v, 0.0))) for v in (eu2, ep2, eg2, el2))


def difference(a: DiscreteSolution, b: DiscreteSolution) -> DiscreteSolution:
    return DiscreteSolution(
        a.k,
        a.flux - b.flux,
        a.flux_ptr,
        a.pressure - b.pressure,
        a.frac_faces - b.frac_faces,
        a.frac_vertices - b.frac_vertices,
    )


def error_norms(
    sol: DiscreteSolution,
    proj: DiscreteSolution,
    mesh: PolygonalMesh,
    tags: FaceTags,
    regions: RegionMap,
    data: ProblemData,
    dofs: int = 0,
) -> ErrorReport:
    eu, ep, eg, el = _norms(difference(sol, proj), mesh, tags, regions, data)
    return ErrorReport(eu, ep, eg, el, mesh.h, int(dofs))


def fracture_flux(sol: DiscreteSolution, mesh: PolygonalMesh, tags: FaceTags) -> float:
    """Sum over fracture faces of the integral of the discrete flux jump."""
    if tags.n_fracture_faces == 0:
        return 0.0
    v1, v2 = fracture_side_fluxes(sol, mesh, tags)
    h = mesh.face_lengths[tags.fracture_faces]
    t, w = basis.reference_segment(sol.k + 1)
    zeta = basis.eval_face(h[:, None] * t, h[:, None], sol.k)
    mom = basis.contract("eq,eqm->em", h[:, None] * w, zeta)
    return float(np.sum((v1 + v2) * mom))


def eoc(errors, meshsizes) -> list[float]:
    """Pairwise orders log(e_i/e_{i+1}) / log(h_i/h_{i+1}); +inf if e_{i+1} = 0."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(meshsizes, dtype=float)
    if e.shape != h.shape or len(e) < 2:
        raise ValueError("need at least two (error, h) pairs of equal length")
    if np.any(np.diff(h) >= 0):
        raise ValueError("mesh sizes must be strictly decreasing")
    out = []
    for i in range(len(e) - 1):
        if e[i + 1] == 0.0:
            out.append(float("inf"))
        elif e[i] == 0.0:
            out.append(float("-inf"))
        else:
            out.append(float(np.log(e[i] / e[i + 1]) / np.log(h[i] / h[i + 1])))
    return out


def eoc_slope(errors, meshsizes) -> float:
    """Least-squares slope of log(e) against log(h)."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(meshsizes, dtype=float)
    if np.any(e <= 0):
        return float("inf")
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def evaluate_pressure(sol: DiscreteSolution, mesh: PolygonalMesh, elems: np.ndarray, x: np.ndarray) -> np.ndarray:
    phi = basis.eval_cell(x, mesh.centroids[elems], mesh.diameters[elems], sol.k)
    return basis.contract("ei,ei->e", phi, sol.pressure[elems])


def line_sample(
    sol: DiscreteSolution,
    mesh: PolygonalMesh,
    regions: RegionMap,
    segment,
    n: int,
    locator: PointLocator | None = None,
) -> list[tuple[float, float]]:
    """Bulk pressure at ``n`` uniform points on a segment.

    Points lying on an interface between the two subdomains produce one
    record per side, subdomain 1 first.
    """
    if n < 2:
        raise ValueError("need at least two sample points")
    a = np.asarray(segment[0], dtype=float)
    b = np.asarray(segment[1], dtype=float)
    t = np.linspace(0.0, 1.0, n)
    pts = a + t[:, None] * (b - a)
    length = float(np.linalg.norm(b - a))
    locator = locator or PointLocator(mesh)
    tol = 1e-9 * mesh.diameter
    out = []
    for ti, x, hits in zip(t, pts, locator.locate_all(pts, tol)):
        if len(hits) == 0:
            raise ValueError(f"sample point {x.tolist()} lies outside the mesh")
        chosen = []
        for side in (1, 2):
            in_side = hits[regions.subdomain[hits] == side]
            if len(in_side):
                chosen.append(in_side[0])
        for e in chosen:
            val = evaluate_pressure(sol, mesh, np.array([e]), x[None])[0]
            out.append((float(ti * length), float(val)))
    return out


def element_centroid_pressure(sol: DiscreteSolution, mesh: PolygonalMesh) -> np.ndarray:
    return evaluate_pressure(sol, mesh, np.arange(mesh.n_elements), mesh.centroids)
