"""Fracture and boundary tagging of a polygonal mesh."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import MeshError, PolygonalMesh

INTERIOR, FRACTURE, DIRICHLET, NEUMANN = 0, 1, 2, 3

Predicate = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Fracture:
    """Straight fracture segment from ``p0`` to ``p1``.

    The unit normal is the tangent rotated by +90 degrees; subdomain 1 is the
    side it points away from.
    """

    p0: tuple[float, float]
    p1: tuple[float, float]

    @property
    def start(self) -> np.ndarray:
        return np.asarray(self.p0, dtype=float)

    @property
    def end(self) -> np.ndarray:
        return np.asarray(self.p1, dtype=float)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end - self.start))

    @property
    def tangent(self) -> np.ndarray:
        return (self.end - self.start) / self.length

    @property
    def normal(self) -> np.ndarray:
        t = self.tangent
        return np.array([-t[1], t[0]])

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.start) @ self.normal

    def parameter(self, x: np.ndarray) -> np.ndarray:
        """Arclength coordinate of the projection onto the fracture line."""
        return (np.asarray(x, dtype=float) - self.start) @ self.tangent


@dataclass(frozen=True)
class BoundarySpec:
    """Ordered boundary rules; the first matching predicate wins.

    Each rule is ``(kind, predicate)`` with ``kind`` in {"dirichlet",
    "neumann"} and ``predicate`` mapping face midpoints (n, 2) to booleans.
    ``tips`` sets the kind of fracture endpoints lying on the domain boundary
    (immersed tips are always Neumann).
    """

    rules: Sequence[tuple[str, Predicate]] = ()
    tips: str = "dirichlet"

    @staticmethod
    def all_dirichlet() -> "BoundarySpec":
        return BoundarySpec([("dirichlet", lambda x: np.ones(len(x), dtype=bool))])


@dataclass(frozen=True, eq=False)
class FaceTags:
    """Per-face kinds and fracture connectivity.

    Fracture faces are ordered along the fracture.  For fracture face ``i``:
    ``frac_face_elements[i]`` holds the subdomain-1 element then the
    subdomain-2 element, ``frac_face_vertices[i]`` the positions in
    ``fracture_vertices`` of its lower- and higher-index mesh vertex, and
    ``tau[i, j]`` the unit tangent pointing out of the face at that endpoint.
    """

    face_kind: np.ndarray
    fracture: Fracture | None
    fracture_faces: np.ndarray
    frac_face_elements: np.ndarray
    frac_face_vertices: np.ndarray
    fracture_vertices: np.ndarray
    fracture_dirichlet: np.ndarray
    tau: np.ndarray
    face_to_fracture: np.ndarray = field(repr=False)

    @property
    def is_fracture(self) -> np.ndarray:
        return self.face_kind == FRACTURE

    @property
    def boundary_dirichlet(self) -> np.ndarray:
        return self.face_kind == DIRICHLET

    @property
    def boundary_neumann(self) -> np.ndarray:
        return self.face_kind == NEUMANN

    @property
    def fracture_dirichlet_vertices(self) -> np.ndarray:
        return self.fracture_vertices[self.fracture_dirichlet]

    @property
    def n_fracture_faces(self) -> int:
        return len(self.fracture_faces)

    @property
    def normal(self) -> np.ndarray | None:
        return None if self.fracture is None else self.fracture.normal


@dataclass(frozen=True, eq=False)
class RegionMap:
    subdomain: np.ndarray
    elem_patch: np.ndarray
    frac_patch: np.ndarray


def default_tol(mesh: PolygonalMesh) -> float:
    return 1e-10 * mesh.diameter


def tag_geometry(
    mesh: PolygonalMesh,
    fracture: Fracture | None,
    bc_spec: BoundarySpec | None = None,
    tol: float | None = None,
    elem_patch: Callable[[np.ndarray], np.ndarray] | None = None,
    frac_patch: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[FaceTags, RegionMap]:
    """Classify faces as interior, fracture, Dirichlet or Neumann.

    Raises :class:`MeshError` when a face crosses the fracture transversally,
    when a face touches the fracture at one endpoint while nearly lying on it,
    or when a boundary face matches no boundary rule.
    """
    if tol is None:
        tol = default_tol(mesh)
    if bc_spec is None:
        bc_spec = BoundarySpec.all_dirichlet()
    nf = mesh.n_faces
    kind = np.full(nf, INTERIOR, dtype=np.int8)
    fv = mesh.face_vertices
    pa, pb = mesh.vertices[fv[:, 0]], mesh.vertices[fv[:, 1]]

    if fracture is not None:
        length = fracture.length
        da, db = fracture.signed_distance(pa), fracture.signed_distance(pb)
        sa, sb = fracture.parameter(pa), fracture.parameter(pb)
        on_a = (np.abs(da) <= tol) & (sa >= -tol) & (sa <= length + tol)
        on_b = (np.abs(db) <= tol) & (sb >= -tol) & (sb <= length + tol)
        # transversal crossing strictly inside both the face and the segment
        cross = ((da > tol) & (db < -tol)) | ((da < -tol) & (db > tol))
        if cross.any():
            with np.errstate(divide="ignore", invalid="ignore"):
                w = da / (da - db)
            s_cross = sa + w * (sb - sa)
            bad = np.flatnonzero(cross & (s_cross > tol) & (s_cross < length - tol))
            if len(bad):
                raise MeshError(
                    f"faces {bad[:10].tolist()} cross the fracture transversally; "
                    "the mesh is not compliant with the fracture"
                )
        near = 1e4 * tol
        grazing = (on_a & ~on_b & (np.abs(db) <= near) & (sb > -tol) & (sb < length + tol)) | (
            on_b & ~on_a & (np.abs(da) <= near) & (sa > -tol) & (sa < length + tol)
        )
        if grazing.any():
            bad = np.flatnonzero(grazing)
            raise MeshError(
                f"faces {bad[:10].tolist()} have one endpoint on the fracture and the other "
                "off it by less than the compliance threshold"
            )
        on_frac = on_a & on_b & (mesh.face_lengths > tol)
        bnd_on = on_frac & (mesh.face_elements[:, 1] < 0)
        if bnd_on.any():
            raise MeshError(f"boundary faces {np.flatnonzero(bnd_on)[:10].tolist()} lie on the fracture")
        kind[on_frac] = FRACTURE

    bfaces = mesh.boundary_faces
    if len(bfaces):
        mids = mesh.face_midpoints[bfaces]
        assigned = np.zeros(len(bfaces), dtype=bool)
        for rule_kind, pred in bc_spec.rules:
            code = {"dirichlet": DIRICHLET, "neumann": NEUMANN}.get(rule_kind)
            if code is None:
                raise MeshError(f"unknown boundary kind {rule_kind!r}")
            hit = np.asarray(pred(mids), dtype=bool) & ~assigned
            kind[bfaces[hit]] = code
            assigned |= hit
        if not assigned.all():
            bad = bfaces[~assigned]
            raise MeshError(f"boundary faces {bad[:10].tolist()} are not covered by any boundary rule")

    # elements are assigned to a side of the fracture line by their centroid
    if fracture is not None:
        subdomain = np.where(fracture.signed_distance(mesh.centroids) < 0.0, 1, 2).astype(np.int8)
    else:
        subdomain = np.ones(mesh.n_elements, dtype=np.int8)

    ffaces = np.flatnonzero(kind == FRACTURE)
    if fracture is not None and len(ffaces):
        mid_s = fracture.parameter(mesh.face_midpoints[ffaces])
        ffaces = ffaces[np.argsort(mid_s, kind="stable")]
        e0, e1 = mesh.face_elements[ffaces, 0], mesh.face_elements[ffaces, 1]
        # face_elements[:, 0] sees the canonical normal as outward
        along = mesh.face_normals[ffaces] @ fracture.normal
        first_is_1 = along > 0
        fel = np.column_stack([np.where(first_is_1, e0, e1), np.where(first_is_1, e1, e0)])
        verts = np.unique(fv[ffaces])
        verts = verts[np.argsort(fracture.parameter(mesh.vertices[verts]), kind="stable")]
        pos = np.full(mesh.n_vertices, -1, dtype=np.int64)
        pos[verts] = np.arange(len(verts))
        ffv = pos[fv[ffaces]]
        t = (pb[ffaces] - pa[ffaces]) / mesh.face_lengths[ffaces, None]
        tau = np.stack([-t, t], axis=1)
        # endpoints of the fracture on the domain boundary follow bc_spec.tips
        bverts = np.zeros(mesh.n_vertices, dtype=bool)
        bverts[fv[bfaces].ravel()] = True
        degree = np.bincount(ffv.ravel(), minlength=len(verts))
        tips = degree == 1
        fdir = tips & bverts[verts] & (bc_spec.tips == "dirichlet")
    else:
        ffaces = np.zeros(0, dtype=np.int64)
        fel = np.zeros((0, 2), dtype=np.int64)
        verts = np.zeros(0, dtype=np.int64)
        ffv = np.zeros((0, 2), dtype=np.int64)
        tau = np.zeros((0, 2, 2))
        fdir = np.zeros(0, dtype=bool)

    f2f = np.full(nf, -1, dtype=np.int64)
    f2f[ffaces] = np.arange(len(ffaces))
    tags = FaceTags(
        face_kind=kind,
        fracture=fracture,
        fracture_faces=ffaces,
        frac_face_elements=fel,
        frac_face_vertices=ffv,
        fracture_vertices=verts,
        fracture_dirichlet=fdir,
        tau=tau,
        face_to_fracture=f2f,
    )
    ep = np.zeros(mesh.n_elements, dtype=np.int64)
    if elem_patch is not None:
        ep = np.asarray(elem_patch(mesh.centroids), dtype=np.int64)
    fp = np.zeros(len(ffaces), dtype=np.int64)
    if frac_patch is not None and len(ffaces):
        fp = np.asarray(frac_patch(mesh.face_midpoints[ffaces]), dtype=np.int64)
    return tags, RegionMap(subdomain=subdomain, elem_patch=ep, frac_patch=fp)


def no_fracture_tags(mesh: PolygonalMesh, bc_spec: BoundarySpec | None = None, tol: float | None = None):
    return tag_geometry(mesh, None, bc_spec, tol)
