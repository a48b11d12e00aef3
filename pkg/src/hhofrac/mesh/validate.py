"""Mesh and tag diagnostics; failures are reported, not raised."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import PolygonalMesh
from .io import polygon_is_simple
from .locate import PointLocator
from .tagging import DIRICHLET, FRACTURE, INTERIOR, NEUMANN, FaceTags, RegionMap, default_tol


@dataclass
class CheckResult:
    name: str
    passed: bool
    offenders: list[int] = field(default_factory=list)
    message: str = ""

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.message})" if self.message else ""
        if self.offenders:
            extra += f" offending indices: {self.offenders[:20]}"
        return f"[{status}] {self.name}{extra}"


@dataclass
class Diagnostics:
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self) -> str:
        return "\n".join(str(c) for c in self.checks)


def _check(name, bad, message="") -> CheckResult:
    bad = np.asarray(bad, dtype=np.int64).ravel()
    return CheckResult(name, len(bad) == 0, bad.tolist(), message if len(bad) else "")


def validate_mesh(
    mesh: PolygonalMesh,
    tags: FaceTags | None = None,
    regions: RegionMap | None = None,
    tol: float | None = None,
) -> Diagnostics:
    if tol is None:
        tol = default_tol(mesh)
    checks = []
    checks.append(_check("negative area", np.flatnonzero(~(mesh.areas > 0)), "element area must be positive"))

    nonsimple = []
    for nv, elems in mesh.groups.items():
        if nv == 3:
            continue
        for e in elems:
            if not polygon_is_simple(mesh.element_coords(e)):
                nonsimple.append(e)
    checks.append(_check("simple polygons", nonsimple, "self-intersecting element boundary"))

    fe = mesh.face_elements
    bad_mult = np.flatnonzero((mesh.face_multiplicity > 2) | (fe[:, 0] == fe[:, 1]))
    checks.append(_check("face multiplicity", bad_mult, "faces shared by more than two element sides"))

    checks.append(_check("zero-length faces", np.flatnonzero(mesh.face_lengths <= tol)))

    # the two elements sharing a face must traverse it in opposite directions
    counts0 = mesh.n_elem_vertices
    owner0 = np.repeat(np.arange(mesh.n_elements), counts0)
    pos = np.arange(len(owner0))
    nxt0 = mesh.elem_ptr[owner0] + (pos - mesh.elem_ptr[owner0] + 1) % counts0[owner0]
    forward = mesh.elem_vertices[pos] < mesh.elem_vertices[nxt0]
    n_forward = np.bincount(mesh.elem_faces, weights=forward, minlength=mesh.n_faces)
    shared = mesh.face_multiplicity == 2
    checks.append(
        _check(
            "consistent orientation",
            np.flatnonzero(shared & (n_forward != 1)),
            "neighbouring elements traverse a shared face in the same direction (overlap)",
        )
    )

    counts = mesh.n_elem_vertices
    owner = np.repeat(np.arange(mesh.n_elements), counts)
    face_sum = np.bincount(owner, weights=mesh.face_lengths[mesh.elem_faces], minlength=mesh.n_elements)
    v = mesh.vertices[mesh.elem_vertices]
    nxt = mesh.elem_ptr[owner] + (np.arange(len(owner)) - mesh.elem_ptr[owner] + 1) % counts[owner]
    seg = np.hypot(*(mesh.vertices[mesh.elem_vertices[nxt]] - v).T)
    perim = np.bincount(owner, weights=seg, minlength=mesh.n_elements)
    checks.append(
        _check(
            "faces partition element boundary",
            np.flatnonzero(np.abs(face_sum - perim) > 1e-12 * perim),
        )
    )

    # a boundary face must have nothing on its outer side
    bf = mesh.boundary_faces
    sides = mesh.face_elements[bf, 0]
    nout = mesh.face_normals[bf]
    probe = mesh.face_midpoints[bf] + 1e-6 * mesh.diameters[sides, None] * nout
    loc = PointLocator(mesh).locate(probe)
    checks.append(
        _check(
            "boundary faces on domain boundary",
            bf[loc >= 0],
            "element found beyond a boundary face (unsplit hanging node or overlap)",
        )
    )

    if tags is not None:
        kind = tags.face_kind
        uncovered = bf[(kind[bf] != DIRICHLET) & (kind[bf] != NEUMANN)]
        checks.append(_check("boundary condition coverage", uncovered, "boundary face without a condition"))
        interior = np.flatnonzero(fe[:, 1] >= 0)
        wrong = interior[(kind[interior] != INTERIOR) & (kind[interior] != FRACTURE)]
        checks.append(_check("interior faces untagged", wrong))

        if tags.fracture is not None:
            frac = tags.fracture
            ff = tags.fracture_faces
            ends = np.sort(frac.parameter(mesh.vertices[mesh.face_vertices[ff]]), axis=1)
            order = np.argsort(ends[:, 0])
            ends = ends[order]
            gaps = []
            if len(ends) == 0:
                gaps = [-1]
            else:
                if abs(ends[0, 0]) > tol or abs(ends[-1, 1] - frac.length) > tol:
                    gaps.append(-1)
                for i in range(len(ends) - 1):
                    if abs(ends[i + 1, 0] - ends[i, 1]) > tol:
                        gaps.append(int(ff[order[i]]))
            checks.append(
                _check("fracture coverage", gaps, "fracture faces do not cover the fracture segment")
            )
            if regions is not None:
                sub = regions.subdomain
                fel = tags.frac_face_elements
                bad = ff[(fel[:, 0] < 0) | (fel[:, 1] < 0) | (sub[fel[:, 0]] != 1) | (sub[fel[:, 1]] != 2)]
                checks.append(
                    _check("fracture faces separate subdomains", bad, "expected one element per subdomain")
                )
                straddle = []
                L = frac.length
                for nv, elems in mesh.groups.items():
                    c = mesh.group_coords(elems, nv)
                    d = frac.signed_distance(c)
                    s = frac.parameter(c)
                    both = (d.max(1) > tol) & (d.min(1) < -tol)
                    within = (s.max(1) > tol) & (s.min(1) < L - tol)
                    straddle.extend(elems[both & within].tolist())
                checks.append(_check("no element straddles the fracture", sorted(straddle)))
    return Diagnostics(checks)
