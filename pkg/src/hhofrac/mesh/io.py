"""Reading and writing the POLYMESH text format.

::

    POLYMESH 1
    NV n
    x y            (n lines)
    NE m
    c v0 ... v{c-1}  (m lines, 0-based, counterclockwise)
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .core import MeshError, PolygonalMesh


class MeshParseError(MeshError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _tokens(path: Path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                yield lineno, text.split()


def read_mesh(path, tol: float | None = None) -> PolygonalMesh:
    """Read a POLYMESH file.

    Element edges that contain other mesh vertices in their interior are
    split at those vertices, so that a long edge abutting several shorter
    ones becomes several faces, each shared by two elements.
    """
    lines = _tokens(Path(path))

    def take(expected: str | None = None):
        try:
            lineno, tok = next(lines)
        except StopIteration:
            raise MeshParseError("unexpected end of file", -1) from None
        if expected is not None and (len(tok) != 2 or tok[0] != expected):
            raise MeshParseError(f"expected '{expected} <int>', got {' '.join(tok)!r}", lineno)
        return lineno, tok

    lineno, tok = take()
    if tok != ["POLYMESH", "1"]:
        raise MeshParseError("missing 'POLYMESH 1' header", lineno)
    lineno, tok = take("NV")
    try:
        nv = int(tok[1])
    except ValueError:
        raise MeshParseError("vertex count is not an integer", lineno) from None
    verts = np.empty((nv, 2))
    for i in range(nv):
        lineno, tok = take()
        if len(tok) != 2:
            raise MeshParseError("vertex line must hold two coordinates", lineno)
        try:
            verts[i] = [float(tok[0]), float(tok[1])]
        except ValueError:
            raise MeshParseError("invalid vertex coordinate", lineno) from None
    lineno, tok = take("NE")
    try:
        ne = int(tok[1])
    except ValueError:
        raise MeshParseError("element count is not an integer", lineno) from None
    elems = []
    for _ in range(ne):
        lineno, tok = take()
        try:
            vals = [int(t) for t in tok]
        except ValueError:
            raise MeshParseError("invalid element line", lineno) from None
        c = vals[0]
        if c < 3 or len(vals) != c + 1:
            raise MeshParseError(f"element declares {c} vertices but lists {len(vals) - 1}", lineno)
        cyc = vals[1:]
        if min(cyc) < 0 or max(cyc) >= nv:
            raise MeshParseError("vertex index out of range", lineno)
        if len(set(cyc)) != c:
            raise MeshParseError("repeated vertex in element", lineno)
        elems.append(cyc)
    try:
        lineno, tok = next(lines)
        raise MeshParseError("trailing content after last element", lineno)
    except StopIteration:
        pass

    used = np.zeros(nv, dtype=bool)
    for cyc in elems:
        used[cyc] = True
    if not used.all():
        raise MeshError(f"dangling vertices not used by any element: {np.flatnonzero(~used)[:10].tolist()}")

    for e, cyc in enumerate(elems):
        if not polygon_is_simple(verts[cyc]):
            raise MeshError(f"element {e} is not a simple polygon")
        if _signed_area(verts[cyc]) <= 0.0:
            raise MeshError(f"element {e} is not counterclockwise or has zero area")

    if tol is None:
        tol = 1e-10 * float(np.hypot(*(verts.max(0) - verts.min(0))))
    elems = insert_hanging_vertices(verts, elems, tol)
    return PolygonalMesh.from_elements(verts, elems)


def write_mesh(mesh: PolygonalMesh, path) -> None:
    with open(path, "w") as fh:
        fh.write("POLYMESH 1\n")
        fh.write(f"NV {mesh.n_vertices}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        fh.write(f"NE {mesh.n_elements}\n")
        for e in range(mesh.n_elements):
            cyc = mesh.element_vertices(e)
            fh.write(" ".join(str(int(v)) for v in [len(cyc), *cyc]) + "\n")


def _signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(p, q, r, s) -> bool:
    """True if closed segments pq and rs intersect."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if v == 0 else (1 if v > 0 else -1)

    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    o1, o2, o3, o4 = orient(p, q, r), orient(p, q, s), orient(r, s, p), orient(r, s, q)
    if o1 != o2 and o3 != o4:
        return True
    return (
        (o1 == 0 and on_seg(p, q, r))
        or (o2 == 0 and on_seg(p, q, s))
        or (o3 == 0 and on_seg(r, s, p))
        or (o4 == 0 and on_seg(r, s, q))
    )


def polygon_is_simple(poly: np.ndarray) -> bool:
    """Check that non-adjacent edges of a closed polygon do not meet."""
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if _segments_cross(p, q, poly[j], poly[(j + 1) % n]):
                return False
    return True


def insert_hanging_vertices(verts: np.ndarray, elems: list, tol: float) -> list:
    """Split element edges at vertices lying strictly inside them."""
    tree = cKDTree(verts)
    out = []
    for cyc in elems:
        new = []
        n = len(cyc)
        for i in range(n):
            a, b = cyc[i], cyc[(i + 1) % n]
            new.append(a)
            pa, pb = verts[a], verts[b]
            d = pb - pa
            length = float(np.hypot(*d))
            cand = tree.query_ball_point(0.5 * (pa + pb), 0.5 * length + tol)
            hits = []
            for v in cand:
                if v == a or v == b:
                    continue
                w = verts[v] - pa
                t = float(w @ d) / length**2
                dist = abs(w[0] * d[1] - w[1] * d[0]) / length
                if dist <= tol and tol < t * length < length - tol:
                    hits.append((t, v))
            new.extend(v for _, v in sorted(hits))
        out.append(new)
    return out
