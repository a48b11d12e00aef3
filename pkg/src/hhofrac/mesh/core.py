"""Polygonal mesh with faces stored once and per-element orientation signs."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class MeshError(ValueError):
    """Raised for malformed or non-compliant meshes."""


@dataclass(frozen=True, eq=False)
class PolygonalMesh:
    """Immutable polygonal mesh.

    Element ``e`` owns ``elem_vertices[elem_ptr[e]:elem_ptr[e+1]]`` in
    counterclockwise order.  Local face ``i`` of an element joins its local
    vertices ``i`` and ``i+1``, so ``elem_faces`` and ``elem_face_signs`` share
    ``elem_ptr`` with ``elem_vertices``.

    Each face is stored once.  ``face_vertices`` is sorted (lower vertex index
    first) and ``face_elements[f]`` holds the adjacent elements in increasing
    order, ``-1`` marking the missing neighbour of a boundary face.  The
    canonical unit normal ``face_normals[f]`` points out of
    ``face_elements[f, 0]``; the outward normal of element ``e`` on ``f`` is
    the canonical normal times the sign stored in ``elem_face_signs``.
    """

    vertices: np.ndarray
    elem_ptr: np.ndarray
    elem_vertices: np.ndarray
    elem_faces: np.ndarray
    elem_face_signs: np.ndarray
    face_vertices: np.ndarray
    face_elements: np.ndarray
    face_multiplicity: np.ndarray
    face_normals: np.ndarray
    face_lengths: np.ndarray
    areas: np.ndarray
    centroids: np.ndarray
    diameters: np.ndarray

    @classmethod
    def from_elements(cls, vertices, elements) -> "PolygonalMesh":
        """Build a mesh from vertex coordinates and vertex-index cycles."""
        vertices = np.ascontiguousarray(vertices, dtype=float).reshape(-1, 2)
        elements = [np.asarray(c, dtype=np.int64) for c in elements]
        if not elements:
            raise MeshError("mesh has no elements")
        counts = np.array([len(c) for c in elements], dtype=np.int64)
        if counts.min() < 3:
            bad = np.flatnonzero(counts < 3)
            raise MeshError(f"elements with fewer than three vertices: {bad[:10].tolist()}")
        ptr = np.zeros(len(elements) + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        flat = np.concatenate(elements)
        if flat.min() < 0 or flat.max() >= len(vertices):
            raise MeshError("element references a vertex index out of range")
        return cls._build(vertices, ptr, flat)

    @classmethod
    def _build(cls, vertices: np.ndarray, ptr: np.ndarray, flat: np.ndarray) -> "PolygonalMesh":
        ne = len(ptr) - 1
        counts = np.diff(ptr)
        owner = np.repeat(np.arange(ne), counts)
        local = np.arange(len(flat)) - ptr[owner]
        nxt_pos = ptr[owner] + (local + 1) % counts[owner]
        a, b = flat, flat[nxt_pos]
        keys = np.column_stack([np.minimum(a, b), np.maximum(a, b)])
        uniq, first, inverse, mult = np.unique(
            keys, axis=0, return_index=True, return_inverse=True, return_counts=True
        )
        inverse = inverse.ravel()
        nf = len(uniq)
        # first occurrence belongs to the lowest element index since edges are
        # listed element by element
        face_elements = np.full((nf, 2), -1, dtype=np.int64)
        face_elements[:, 0] = owner[first]
        second = np.ones(len(flat), dtype=bool)
        second[first] = False
        idx2 = np.flatnonzero(second)
        # for faces with multiplicity > 2 only the first extra owner is kept;
        # validate_mesh reports them through face_multiplicity
        f2 = inverse[idx2]
        _, pick = np.unique(f2, return_index=True)
        face_elements[f2[pick], 1] = owner[idx2[pick]]
        signs = np.where(second, -1, 1).astype(np.int8)

        pa, pb = vertices[a[first]], vertices[b[first]]
        d = pb - pa
        lengths = np.hypot(d[:, 0], d[:, 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            normals = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]

        x, y = vertices[a, 0], vertices[a, 1]
        xn, yn = vertices[b, 0], vertices[b, 1]
        cr = x * yn - xn * y
        areas = 0.5 * np.add.reduceat(cr, ptr[:-1])
        with np.errstate(divide="ignore", invalid="ignore"):
            cx = np.add.reduceat((x + xn) * cr, ptr[:-1]) / (6.0 * areas)
            cy = np.add.reduceat((y + yn) * cr, ptr[:-1]) / (6.0 * areas)
        centroids = np.column_stack([cx, cy])
        diam = np.zeros(ne)
        for nv in np.unique(counts):
            elems = np.flatnonzero(counts == nv)
            c = vertices[flat[ptr[elems][:, None] + np.arange(nv)]]
            dd = c[:, :, None, :] - c[:, None, :, :]
            diam[elems] = np.sqrt((dd**2).sum(-1)).max(axis=(1, 2))
        return cls(
            vertices=vertices,
            elem_ptr=ptr,
            elem_vertices=flat,
            elem_faces=inverse.astype(np.int64),
            elem_face_signs=signs,
            face_vertices=uniq.astype(np.int64),
            face_elements=face_elements,
            face_multiplicity=mult.astype(np.int64),
            face_normals=normals,
            face_lengths=lengths,
            areas=areas,
            centroids=centroids,
            diameters=diam,
        )

    # ------------------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.elem_ptr) - 1

    @property
    def n_faces(self) -> int:
        return len(self.face_vertices)

    @property
    def h(self) -> float:
        """Mesh size, the largest element diameter."""
        return float(self.diameters.max())

    @cached_property
    def n_elem_vertices(self) -> np.ndarray:
        return np.diff(self.elem_ptr)

    @cached_property
    def face_midpoints(self) -> np.ndarray:
        return 0.5 * (self.vertices[self.face_vertices[:, 0]] + self.vertices[self.face_vertices[:, 1]])

    @cached_property
    def boundary_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_elements[:, 1] < 0)

    @cached_property
    def groups(self) -> dict[int, np.ndarray]:
        """Element indices grouped by vertex count."""
        counts = self.n_elem_vertices
        return {int(nv): np.flatnonzero(counts == nv) for nv in np.unique(counts)}

    def element_vertices(self, e: int) -> np.ndarray:
        return self.elem_vertices[self.elem_ptr[e] : self.elem_ptr[e + 1]]

    def element_faces(self, e: int) -> np.ndarray:
        return self.elem_faces[self.elem_ptr[e] : self.elem_ptr[e + 1]]

    def element_signs(self, e: int) -> np.ndarray:
        return self.elem_face_signs[self.elem_ptr[e] : self.elem_ptr[e + 1]]

    def element_coords(self, e: int) -> np.ndarray:
        return self.vertices[self.element_vertices(e)]

    def group_table(self, elems: np.ndarray, nv: int, table: np.ndarray) -> np.ndarray:
        """Gather a per-element-vertex table for elements with ``nv`` vertices."""
        return table[self.elem_ptr[elems][:, None] + np.arange(nv)]

    def group_coords(self, elems: np.ndarray, nv: int) -> np.ndarray:
        return self.vertices[self.group_table(elems, nv, self.elem_vertices)]

    def outward_normals(self, e: int) -> np.ndarray:
        f = self.element_faces(e)
        return self.face_normals[f] * self.element_signs(e)[:, None]

    @property
    def diameter(self) -> float:
        """Diameter of the bounding box of the vertex cloud."""
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return float(np.hypot(*(hi - lo)))
