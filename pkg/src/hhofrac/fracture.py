"""Local primal HHO operators on fracture faces.

Local fracture DOFs on a face F are ordered ``[q_F (k+1 coefficients),
q_V0, q_V1]`` where V0 is the face endpoint with the lower mesh-vertex index,
from which the arclength ``s`` is measured.  All builders are batched over
faces; ``h`` and ``KF`` are arrays of face lengths and tangential
permeabilities ``kappa_tau * ell``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import basis


@dataclass
class FractureOperators:
    """Local fracture matrices for a batch of faces.

    ``recon`` maps local DOFs to the P^{k+1}(F) coefficients of r_F^{k+1};
    ``deviation`` does the same for R_F^{k+1}.  ``stab``, ``diffusion`` and
    ``gram`` are the matrices of j_F, d_F and of the local seminorm.
    ``mass`` is the P^k(F) face mass matrix.
    """

    k: int
    h: np.ndarray
    KF: np.ndarray
    mass: np.ndarray
    recon: np.ndarray
    deviation: np.ndarray
    stab: np.ndarray
    diffusion: np.ndarray
    gram: np.ndarray

    @property
    def n_local(self) -> int:
        return self.k + 3


def _face_integrals(h: np.ndarray, degree: int, deriv_a: int, deg_a: int, deriv_b: int, deg_b: int) -> np.ndarray:
    s, w = basis.reference_segment(degree)
    s = h[:, None] * s
    w = h[:, None] * w
    A = basis.eval_face(s, h[:, None], deg_a, deriv_a)
    B = basis.eval_face(s, h[:, None], deg_b, deriv_b)
    return basis.contract("eq,eqi,eqj->eij", w, A, B)


def fracture_operators(h, KF, k: int) -> FractureOperators:
    h = np.atleast_1d(np.asarray(h, dtype=float))
    KF = np.broadcast_to(np.asarray(KF, dtype=float), h.shape).copy()
    if np.any(h <= 0):
        raise ValueError("zero-length fracture face")
    if np.any(KF <= 0):
        raise ValueError("tangential fracture permeability must be positive")
    n = len(h)
    nq, nr, nl = k + 1, k + 2, k + 3
    qdeg = 2 * (k + 1) + 2
    stiff = _face_integrals(h, qdeg, 1, k + 1, 1, k + 1)  # (zeta_i', zeta_j') on P^{k+1}
    mass1 = _face_integrals(h, qdeg, 0, k + 1, 0, k + 1)
    mass = mass1[:, :nq, :nq]
    d2 = _face_integrals(h, qdeg, 2, k + 1, 0, k)  # (zeta_i'', zeta_m), i in P^{k+1}

    zero = np.zeros(n)
    d_at0 = basis.eval_face(zero, h, k + 1, 1)  # derivatives at V0 (s = 0)
    d_at1 = basis.eval_face(h, h, k + 1, 1)
    # gradient system on non-constant modes; K_F cancels on both sides
    rhs = np.zeros((n, nr - 1, nl))
    rhs[:, :, :nq] = -d2[:, 1:, :]
    rhs[:, :, nq] = -d_at0[:, 1:]
    rhs[:, :, nq + 1] = d_at1[:, 1:]
    grad_coef = basis.spd_solve(stiff[:, 1:, 1:], rhs)

    # mean-value closure fixes the constant: (r - q_F, 1)_F = 0
    ones1 = mass1[:, 0, :]  # integrals of zeta_j, j <= k+1
    recon = np.zeros((n, nr, nl))
    recon[:, 1:, :] = grad_coef
    mean_q = np.zeros((n, nl))
    mean_q[:, :nq] = ones1[:, :nq]
    recon[:, 0, :] = (mean_q - basis.contract("ej,ejl->el", ones1[:, 1:], grad_coef)) / h[:, None]

    # R = q_F + r - pi^k r, all in P^{k+1}(F) coefficients
    proj = basis.spd_solve(mass, mass1[:, :nq, :])  # coefficients of pi^k zeta_j
    pr = basis.contract("eij,ejl->eil", proj, recon)
    deviation = recon.copy()
    deviation[:, :nq, :] -= pr
    deviation[:, :nq, :nq] += np.eye(nq)

    val0 = basis.eval_face(zero, h, k + 1)
    val1 = basis.eval_face(h, h, k + 1)
    res = np.zeros((n, 2, nl))
    res[:, 0] = basis.contract("ej,ejl->el", val0, deviation)
    res[:, 1] = basis.contract("ej,ejl->el", val1, deviation)
    res[:, 0, nq] -= 1.0
    res[:, 1, nq + 1] -= 1.0
    weight = KF / h
    stab = weight[:, None, None] * basis.contract("evl,evm->elm", res, res)
    consist = KF[:, None, None] * basis.contract("eil,eij,ejm->elm", recon[:, 1:], stiff[:, 1:, 1:], recon[:, 1:])
    diffusion = consist + stab
    diffusion = 0.5 * (diffusion + np.swapaxes(diffusion, 1, 2))

    # seminorm Gram matrix
    gram = np.zeros((n, nl, nl))
    gram[:, :nq, :nq] = KF[:, None, None] * stiff[:, :nq, :nq]
    g = np.zeros((n, 2, nl))
    g[:, 0, :nq] = val0[:, :nq]
    g[:, 1, :nq] = val1[:, :nq]
    g[:, 0, nq] -= 1.0
    g[:, 1, nq + 1] -= 1.0
    gram += weight[:, None, None] * basis.contract("evl,evm->elm", g, g)
    return FractureOperators(k, h, KF, mass, recon, deviation, stab, diffusion, gram)


def interpolate_fracture(h, k: int, values_at, quad_degree: int | None = None) -> np.ndarray:
    """Local fracture DOFs of a scalar function.

    ``values_at(s)`` evaluates the function at arclength positions ``s`` of
    shape (n, m) along each face (s = 0 at the lower-index endpoint).
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if quad_degree is None:
        quad_degree = 2 * (k + 1) + 6
    t, w = basis.reference_segment(quad_degree)
    s = h[:, None] * t
    rule = basis.QuadratureRule(s, h[:, None] * w, quad_degree)
    coef = basis.l2_project_face(values_at(s), rule, h, k)
    ends = values_at(np.column_stack([np.zeros_like(h), h]))
    return np.concatenate([coef, ends], axis=1)


def pressure_reconstruction(ops: FractureOperators) -> np.ndarray:
    return ops.recon


def deviation_RF(ops: FractureOperators) -> np.ndarray:
    return ops.deviation


def tangential_form_dF(ops: FractureOperators) -> np.ndarray:
    return ops.diffusion
