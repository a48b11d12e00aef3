"""Point location on polygonal meshes."""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .core import PolygonalMesh


def points_in_polygon(pts: np.ndarray, poly: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Winding test for points against a counterclockwise polygon.

    Points within ``tol`` of an edge count as inside.
    """
    pts = np.atleast_2d(pts)
    a = poly
    b = np.roll(poly, -1, axis=0)
    e = b - a
    w = pts[:, None, :] - a[None, :, :]
    cross = e[None, :, 0] * w[..., 1] - e[None, :, 1] * w[..., 0]
    # distance to each edge segment for the boundary tolerance
    el2 = (e**2).sum(-1)
    t = np.clip((w * e[None]).sum(-1) / el2[None], 0.0, 1.0)
    d = np.hypot(w[..., 0] - t * e[None, :, 0], w[..., 1] - t * e[None, :, 1])
    on_edge = (d <= tol).any(axis=1)
    # crossing-number test
    ya, yb = a[None, :, 1], b[None, :, 1]
    py = pts[:, None, 1]
    up = (ya <= py) & (yb > py)
    down = (ya > py) & (yb <= py)
    wind = (up & (cross > 0)).sum(1) - (down & (cross < 0)).sum(1)
    return (wind != 0) | on_edge


class PointLocator:
    """Find the elements containing given points."""

    def __init__(self, mesh: PolygonalMesh):
        self.mesh = mesh
        self.tree = cKDTree(mesh.centroids)
        self.radius = float(mesh.diameters.max())

    def locate_all(self, x: np.ndarray, tol: float = 0.0) -> list[np.ndarray]:
        """For each point, all elements containing it (boundary inclusive)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = []
        cands = self.tree.query_ball_point(x, self.radius + tol)
        for p, cand in zip(x, cands):
            hits = [e for e in sorted(cand) if points_in_polygon(p[None], self.mesh.element_coords(e), tol)[0]]
            out.append(np.array(hits, dtype=np.int64))
        return out

    def locate(self, x: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """One containing element per point, ``-1`` if outside the mesh."""
        return np.array([h[0] if len(h) else -1 for h in self.locate_all(x, tol)], dtype=np.int64)
