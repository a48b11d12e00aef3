"""Scaled monomial bases, quadrature rules and L2 projectors.

Cell bases are ``((x - x_T) / h_T)^alpha`` for ``|alpha| <= l``, ordered by
total degree and, within a degree, by decreasing power of the first
coordinate.  Face bases are ``t^j`` with ``t = (s - h_F/2) / h_F`` where ``s``
is the arclength measured from the first face vertex.

Most routines are batched: they act on arrays whose leading axis runs over
elements (or faces) so that local operators can be built for many elements at
once with plain numpy broadcasting.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import roots_jacobi, roots_legendre


def contract(subscripts: str, *operands):
    """``np.einsum`` with pairwise contraction ordering (much faster on batches)."""
    return np.einsum(subscripts, *operands, optimize=True)


def apply_tensor(K: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply per-element 2x2 tensors K (n, 2, 2) to vectors v (n, ..., 2)."""
    shape = (K.shape[0],) + (1,) * (v.ndim - 2)
    k = [K[:, a, b].reshape(shape) for a in range(2) for b in range(2)]
    out = np.empty(np.broadcast_shapes(v.shape, shape + (2,)))
    out[..., 0] = k[0] * v[..., 0] + k[1] * v[..., 1]
    out[..., 1] = k[2] * v[..., 0] + k[3] * v[..., 1]
    return out


def weighted_gram(w: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched sum_q w_q <a_qi, b_qj>.

    ``w`` has shape (*batch, q); ``a`` and ``b`` have shape
    (*batch, q, i, *components).  Returns (*batch, i, j).
    """
    nb = w.ndim - 1
    aw = a * w.reshape(w.shape + (1,) * (a.ndim - w.ndim))
    am = np.moveaxis(aw, nb, nb + 1).reshape(a.shape[:nb] + (a.shape[nb + 1], -1))
    bm = np.moveaxis(b, nb, nb + 1).reshape(b.shape[:nb] + (b.shape[nb + 1], -1))
    return am @ np.swapaxes(bm, -1, -2)


def cell_dim(degree: int) -> int:
    """Dimension of P^degree in two variables (0 for negative degree)."""
    if degree < 0:
        return 0
    return (degree + 1) * (degree + 2) // 2


def face_dim(degree: int) -> int:
    return max(degree + 1, 0)


@lru_cache(maxsize=None)
def exponents(degree: int) -> np.ndarray:
    """Exponent pairs (a, b) of the scaled monomials of P^degree."""
    out = [(d - j, j) for d in range(degree + 1) for j in range(d + 1)]
    arr = np.array(out, dtype=int).reshape(-1, 2)
    arr.setflags(write=False)
    return arr


def _powers(z: np.ndarray, degree: int) -> np.ndarray:
    """Stack z**0 .. z**degree along a new trailing axis."""
    p = np.empty(z.shape + (degree + 1,))
    p[..., 0] = 1.0
    for j in range(1, degree + 1):
        p[..., j] = p[..., j - 1] * z
    return p


def eval_cell(x: np.ndarray, center: np.ndarray, h, degree: int) -> np.ndarray:
    """Values of the scaled monomials.

    ``x`` has shape (..., 2); ``center`` and ``h`` broadcast against
    ``x[..., 0]``.  Returns an array of shape (..., cell_dim(degree)).
    """
    x = np.asarray(x, dtype=float)
    center = np.asarray(center, dtype=float)
    h = np.asarray(h, dtype=float)
    z = (x - center) / h[..., None]
    e = exponents(degree)
    px = _powers(z[..., 0], degree)
    py = _powers(z[..., 1], degree)
    return px[..., e[:, 0]] * py[..., e[:, 1]]


def eval_cell_grad(x: np.ndarray, center: np.ndarray, h, degree: int) -> np.ndarray:
    """Gradients of the scaled monomials, shape (..., cell_dim(degree), 2)."""
    x = np.asarray(x, dtype=float)
    center = np.asarray(center, dtype=float)
    h = np.asarray(h, dtype=float)
    z = (x - center) / h[..., None]
    e = exponents(degree)
    px = _powers(z[..., 0], degree)
    py = _powers(z[..., 1], degree)
    # derivative of z^a is a z^(a-1); index a-1 clipped, coefficient kills a=0
    ax, ay = e[:, 0], e[:, 1]
    dpx = px[..., np.maximum(ax - 1, 0)] * ax
    dpy = py[..., np.maximum(ay - 1, 0)] * ay
    g = np.empty(x.shape[:-1] + (len(e), 2))
    hinv = (1.0 / h)[..., None]
    g[..., 0] = dpx * py[..., ay] * hinv
    g[..., 1] = px[..., ax] * dpy * hinv
    return g


def eval_face(s: np.ndarray, hf, degree: int, deriv: int = 0) -> np.ndarray:
    """Face basis (or its ``deriv``-th arclength derivative) at arclength s.

    ``s`` has shape (...); ``hf`` broadcasts against it.  Returns shape
    (..., degree + 1).
    """
    s = np.asarray(s, dtype=float)
    hf = np.asarray(hf, dtype=float)
    t = (s - 0.5 * hf) / hf
    p = _powers(t, degree)
    if deriv == 0:
        return p
    out = np.zeros_like(p)
    j = np.arange(degree + 1)
    coef = np.ones(degree + 1)
    for m in range(deriv):
        coef = coef * (j - m)
    for jj in range(deriv, degree + 1):
        out[..., jj] = coef[jj] * p[..., jj - deriv]
    return out / hf[..., None] ** deriv


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Batched quadrature: ``points`` (n, nq, dim) and ``weights`` (n, nq).

    For segments the points are arclength parameters of shape (n, nq).
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate values sampled at the nodes; values shape (n, nq, ...)."""
        return contract("eq,eq...->e...", self.weights, values)


@lru_cache(maxsize=None)
def reference_triangle(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss rule on the triangle (0,0),(1,0),(0,1).

    Exact for polynomials of total degree ``degree``; weights sum to 1/2.
    """
    n = max(1, int(np.ceil((degree + 1) / 2)))
    u, wu = roots_legendre(n)
    v, wv = roots_jacobi(n, 1.0, 0.0)
    u = 0.5 * (u + 1.0)
    wu = 0.5 * wu
    v = 0.5 * (v + 1.0)
    wv = 0.25 * wv
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    pts = np.column_stack([(U * (1.0 - V)).ravel(), V.ravel()])
    return pts, W.ravel()


@lru_cache(maxsize=None)
def reference_segment(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre on [0, 1] with ceil((degree + 1) / 2) nodes."""
    n = max(1, int(np.ceil((degree + 1) / 2)))
    t, w = roots_legendre(n)
    return 0.5 * (t + 1.0), 0.5 * w


def quad_triangles(tri: np.ndarray, degree: int) -> QuadratureRule:
    """Quadrature on a batch of triangles ``tri`` of shape (n, 3, 2)."""
    ref, w = reference_triangle(degree)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    e1, e2 = b - a, c - a
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    pts = a[:, None, :] + ref[None, :, 0, None] * e1[:, None, :] + ref[None, :, 1, None] * e2[:, None, :]
    wts = np.abs(det)[:, None] * w[None, :]
    return QuadratureRule(pts, wts, degree)


def quad_polygons(coords: np.ndarray, degree: int, centers: np.ndarray | None = None) -> QuadratureRule:
    """Quadrature on a batch of polygons with the same vertex count.

    ``coords`` has shape (n, nv, 2).  Triangles are integrated directly;
    other polygons are fanned into sub-triangles from ``centers`` (the
    vertex average by default).
    """
    coords = np.asarray(coords, dtype=float)
    n, nv, _ = coords.shape
    if nv < 3:
        raise ValueError("degenerate polygon with fewer than three vertices")
    if nv == 3:
        return quad_triangles(coords, degree)
    if centers is None:
        centers = coords.mean(axis=1)
    nxt = np.roll(coords, -1, axis=1)
    tri = np.stack([np.broadcast_to(centers[:, None, :], coords.shape), coords, nxt], axis=2)
    rule = quad_triangles(tri.reshape(n * nv, 3, 2), degree)
    nq = rule.weights.shape[1]
    return QuadratureRule(rule.points.reshape(n, nv * nq, 2), rule.weights.reshape(n, nv * nq), degree)


def quad_polygon(polygon: np.ndarray, degree: int) -> QuadratureRule:
    """Quadrature on a single polygon (vertex array of shape (nv, 2))."""
    poly = np.asarray(polygon, dtype=float)
    if poly.ndim != 2 or poly.shape[0] < 3:
        raise ValueError("degenerate polygon")
    x, y = poly[:, 0], poly[:, 1]
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    if abs(area) <= 1e-300:
        raise ValueError("degenerate polygon with zero area")
    rule = quad_polygons(poly[None], degree)
    return QuadratureRule(rule.points[0], rule.weights[0], degree)


def quad_segments(lengths: np.ndarray, degree: int) -> QuadratureRule:
    """Arclength quadrature for a batch of segments of the given lengths."""
    t, w = reference_segment(degree)
    lengths = np.asarray(lengths, dtype=float)
    return QuadratureRule(lengths[:, None] * t[None, :], lengths[:, None] * w[None, :], degree)


def quad_segment(p0, p1, degree: int) -> QuadratureRule:
    """Quadrature on the segment [p0, p1]: physical nodes and weights."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    t, w = reference_segment(degree)
    length = float(np.linalg.norm(p1 - p0))
    pts = p0[None, :] + t[:, None] * (p1 - p0)[None, :]
    return QuadratureRule(pts, length * w, degree)


# ---------------------------------------------------------------------------
# dense helpers


def spd_solve(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve with a symmetric positive definite matrix (batched on axis 0)."""
    if mat.ndim == 2:
        try:
            return cho_solve(cho_factor(mat), rhs)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError("singular or indefinite mass matrix") from exc
    # batched: numpy's LU is fast and adequately stable on small SPD blocks
    return np.linalg.solve(mat, rhs)


def cell_mass(rule: QuadratureRule, centers: np.ndarray, h: np.ndarray, degree: int) -> np.ndarray:
    phi = eval_cell(rule.points, centers[:, None, :], h[:, None], degree)
    return weighted_gram(rule.weights, phi, phi)


def l2_project_cell(func, rule: QuadratureRule, centers: np.ndarray, h: np.ndarray, degree: int) -> np.ndarray:
    """Coefficients of the L2 projection of ``func(points)`` on each cell.

    ``func`` maps an array of points (..., 2) to values (...).
    """
    phi = eval_cell(rule.points, centers[:, None, :], h[:, None], degree)
    mass = weighted_gram(rule.weights, phi, phi)
    rhs = contract("eq,eqi,eq->ei", rule.weights, phi, func(rule.points))
    return spd_solve(mass, rhs[..., None])[..., 0]


def l2_project_face(values: np.ndarray, rule: QuadratureRule, lengths: np.ndarray, degree: int) -> np.ndarray:
    """Face L2 projection of values sampled at the nodes of ``rule``."""
    phi = eval_face(rule.points, lengths[:, None], degree)
    mass = weighted_gram(rule.weights, phi, phi)
    rhs = contract("eq,eqi,eq->ei", rule.weights, phi, values)
    return spd_solve(mass, rhs[..., None])[..., 0]


def l2_project(func, polygon: np.ndarray, degree: int, quad_degree: int | None = None) -> np.ndarray:
    """L2 projection of ``func`` onto P^degree of a single polygon."""
    poly = np.asarray(polygon, dtype=float)
    if quad_degree is None:
        quad_degree = 2 * degree + 6
    rule = quad_polygons(poly[None], quad_degree)
    center, h = polygon_centroid(poly), polygon_diameter(poly)
    return l2_project_cell(func, rule, center[None], np.array([h]), degree)[0]


def polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(poly: np.ndarray) -> np.ndarray:
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    a = 0.5 * cr.sum()
    return np.array([((x + xn) * cr).sum(), ((y + yn) * cr).sum()]) / (6.0 * a)


def polygon_diameter(poly: np.ndarray) -> float:
    d = poly[:, None, :] - poly[None, :, :]
    return float(np.sqrt((d**2).sum(-1)).max())
