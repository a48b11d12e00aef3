"""Generators for the triangular, Cartesian and nonconforming mesh families.

All families cover the unit square and are compliant with the vertical
fracture ``x1 = 0.5``.  Level 0 is the coarsest mesh and each level halves
the mesh size.
"""
from __future__ import annotations

import numpy as np

from .core import MeshError, PolygonalMesh

FAMILIES = ("triangular", "cartesian", "nonconforming")

# Top-left quadrant of the coarsest triangular mesh; the other quadrants are
# translated copies, which keeps the mesh conforming to x1 = 0.5 and to the
# diagonal x1 + x2 = 1.
_QUADRANT_TRIANGLES = (
    ((0.0, 0.5), (0.25, 0.5), (0.15, 0.65)),
    ((0.25, 0.5), (0.325, 0.675), (0.15, 0.65)),
    ((0.25, 0.5), (0.5, 0.5), (0.325, 0.675)),
    ((0.5, 0.5), (0.5, 0.75), (0.325, 0.675)),
    ((0.5, 0.75), (0.35, 0.85), (0.325, 0.675)),
    ((0.5, 0.75), (0.5, 1.0), (0.35, 0.85)),
    ((0.5, 1.0), (0.25, 1.0), (0.35, 0.85)),
    ((0.35, 0.85), (0.25, 1.0), (0.175, 0.825)),
    ((0.25, 1.0), (0.0, 1.0), (0.175, 0.825)),
    ((0.0, 1.0), (0.0, 0.75), (0.175, 0.825)),
    ((0.0, 0.75), (0.15, 0.65), (0.175, 0.825)),
    ((0.0, 0.75), (0.0, 0.5), (0.15, 0.65)),
    ((0.15, 0.65), (0.325, 0.675), (0.175, 0.825)),
    ((0.325, 0.675), (0.35, 0.85), (0.175, 0.825)),
)


def _check_level(level: int) -> int:
    if isinstance(level, bool) or not isinstance(level, (int, np.integer)) or level < 0:
        raise MeshError(f"invalid refinement level {level!r}; expected an integer >= 0")
    if level > 12:
        raise MeshError(f"refinement level {level} is too large")
    return int(level)


class _VertexPool:
    """Deduplicate vertices by rounded coordinates."""

    def __init__(self, scale: float = 1e12):
        self.scale = scale
        self.index: dict[tuple[int, int], int] = {}
        self.coords: list[tuple[float, float]] = []

    def __call__(self, x: float, y: float) -> int:
        key = (round(x * self.scale), round(y * self.scale))
        v = self.index.get(key)
        if v is None:
            v = len(self.coords)
            self.index[key] = v
            self.coords.append((x, y))
        return v


def triangular_base() -> tuple[np.ndarray, np.ndarray]:
    """Coarsest triangular mesh: 56 triangles, counterclockwise."""
    pool = _VertexPool()
    tris = []
    for sx, sy in ((0.0, 0.0), (0.0, -0.5), (0.5, 0.0), (0.5, -0.5)):
        for tri in _QUADRANT_TRIANGLES:
            p = np.array(tri) + (sx, sy)
            area = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0])
            if area < 0:
                p = p[[0, 2, 1]]
            tris.append([pool(*q) for q in p])
    return np.array(pool.coords), np.array(tris, dtype=np.int64)


def red_refine(verts: np.ndarray, tris: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split every triangle into four through its edge midpoints."""
    nv = len(verts)
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    keys = np.sort(edges, axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.ravel()
    mids = 0.5 * (verts[uniq[:, 0]] + verts[uniq[:, 1]])
    nt = len(tris)
    m01, m12, m20 = (nv + inv[i * nt : (i + 1) * nt] for i in range(3))
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    new = np.concatenate(
        [
            np.column_stack([a, m01, m20]),
            np.column_stack([m01, b, m12]),
            np.column_stack([m20, m12, c]),
            np.column_stack([m01, m12, m20]),
        ]
    )
    return np.vstack([verts, mids]), new


def triangular_mesh(level: int) -> PolygonalMesh:
    level = _check_level(level)
    verts, tris = triangular_base()
    for _ in range(level):
        verts, tris = red_refine(verts, tris)
    return PolygonalMesh.from_elements(verts, list(tris))


def cartesian_mesh(level: int) -> PolygonalMesh:
    """Uniform grid with 2**(level+1) cells per side."""
    level = _check_level(level)
    return uniform_grid(2 ** (level + 1))


def uniform_grid(nx: int, ny: int | None = None) -> PolygonalMesh:
    """Uniform nx-by-ny quadrilateral grid of the unit square."""
    ny = nx if ny is None else ny
    xs = np.linspace(0.0, 1.0, nx + 1)
    ys = np.linspace(0.0, 1.0, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    quads = np.stack(
        [idx[:-1, :-1], idx[:-1, 1:], idx[1:, 1:], idx[1:, :-1]], axis=-1
    ).reshape(-1, 4)
    return PolygonalMesh.from_elements(verts, list(quads))


def nonconforming_mesh(level: int) -> PolygonalMesh:
    """Square cells of side 2s left of x1 = 0.5 and 2s-by-s cells right of it.

    Here ``s = 2**-(level+3)``.  Left cells touching the fracture carry the
    hanging vertex of the finer right side and are therefore pentagons with
    two coplanar faces on the fracture.
    """
    level = _check_level(level)
    m = 2 ** (level + 1)  # cells per row on each side; left rows: m*2, right rows: m*4
    pool = _VertexPool()
    elems = []
    hl = 0.5 / m
    nl_rows = 2 * m
    for j in range(nl_rows):
        y0, y1 = j * hl, (j + 1) * hl
        for i in range(m):
            x0, x1 = i * hl, (i + 1) * hl
            cyc = [pool(x0, y0), pool(x1, y0)]
            if i == m - 1:
                cyc.append(pool(x1, 0.5 * (y0 + y1)))
            cyc += [pool(x1, y1), pool(x0, y1)]
            elems.append(cyc)
    wr, hr = 0.5 / m, 0.5 / m / 2
    for j in range(4 * m):
        y0, y1 = j * hr, (j + 1) * hr
        for i in range(m):
            x0, x1 = 0.5 + i * wr, 0.5 + (i + 1) * wr
            elems.append([pool(x0, y0), pool(x1, y0), pool(x1, y1), pool(x0, y1)])
    return PolygonalMesh.from_elements(np.array(pool.coords), elems)


def generate_mesh(family: str, level: int) -> PolygonalMesh:
    if family == "triangular":
        return triangular_mesh(level)
    if family == "cartesian":
        return cartesian_mesh(level)
    if family == "nonconforming":
        return nonconforming_mesh(level)
    raise MeshError(f"unknown mesh family {family!r}; expected one of {FAMILIES}")
