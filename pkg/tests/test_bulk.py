import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hhofrac import basis
from hhofrac.bulk import (
    ElementGeometry,
    LocalLayout,
    bulk_operators,
    check_spd,
    element_operators,
    interpolate_bulk,
    largest_eigenvalue,
    project_pressure,
    smallest_eigenvalue,
)
from hhofrac.mesh import PolygonalMesh

from .conftest import random_spd

FAMILIES = ("triangular", "cartesian", "nonconforming")


def _batches(mesh):
    for nv, elems in mesh.groups.items():
        yield ElementGeometry.gather(mesh, elems, nv)


def _poly(coeffs, degree):
    """Scalar polynomial sum c_ab x^a y^b and its gradient."""
    e = basis.exponents(degree)
    c = np.asarray(coeffs[: len(e)])

    def f(x):
        return sum(ci * x[..., 0] ** a * x[..., 1] ** b for ci, (a, b) in zip(c, e))

    def grad(x):
        gx = sum(ci * a * x[..., 0] ** max(a - 1, 0) * x[..., 1] ** b for ci, (a, b) in zip(c, e))
        gy = sum(ci * b * x[..., 0] ** a * x[..., 1] ** max(b - 1, 0) for ci, (a, b) in zip(c, e))
        return np.stack([np.broadcast_to(gx, x.shape[:-1]), np.broadcast_to(gy, x.shape[:-1])], axis=-1)

    return f, grad


def test_layout_sizes():
    lay = LocalLayout(2, 5)
    assert (lay.n_cell, lay.n_face, lay.n_flux, lay.n_pressure) == (5, 3, 20, 6)
    assert lay.face_slice(1) == slice(8, 11)


def test_eigenvalues_closed_form():
    rng = np.random.default_rng(0)
    K = np.stack([random_spd(rng) for _ in range(20)])
    ev = np.linalg.eigvalsh(K)
    assert np.allclose(largest_eigenvalue(K), ev[:, 1], rtol=1e-13)
    assert np.allclose(smallest_eigenvalue(K), ev[:, 0], rtol=1e-13)


def test_check_spd_rejects_indefinite():
    with pytest.raises(ValueError):
        check_spd(np.array([[[1.0, 0.0], [0.0, -1.0]]]))
    with pytest.raises(ValueError):
        check_spd(np.array([[[1.0, 2.0], [0.0, 1.0]]]))


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("k", [0, 1, 2])
def test_commuting_property(small_meshes, family, k):
    """D_T I_T v equals the L2 projection of div v for v of degree k+1."""
    mesh = small_meshes[family][0]
    rng = np.random.default_rng(10 * k + len(family))
    cx = rng.normal(size=basis.cell_dim(k + 1))
    cy = rng.normal(size=basis.cell_dim(k + 1))
    vx, gx = _poly(cx, k + 1)
    vy, gy = _poly(cy, k + 1)

    def v(x):
        return np.stack([vx(x), vy(x)], axis=-1)

    def div(x):
        return gx(x)[..., 0] + gy(x)[..., 1]

    for geom in _batches(mesh):
        n = len(geom.elems)
        K = np.stack([random_spd(rng) for _ in range(n)])
        ops = bulk_operators(geom, K, k)
        Iv = interpolate_bulk(geom, K, k, v)
        Dv = np.einsum("eij,ej->ei", ops.div, Iv)
        ref = project_pressure(geom, k, div)
        # compare in the element L2 norm, coefficients are basis dependent
        d = Dv - ref
        err = np.sqrt(np.einsum("ei,eij,ej->e", d, ops.mass, d))
        size = np.sqrt(np.einsum("ei,eij,ej->e", ref, ops.mass, ref))
        assert np.all(err <= 1e-11 * size)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("k", [0, 1, 2])
def test_flux_reconstruction_exact_and_stabilization_vanishes(small_meshes, family, k):
    """F_T I_T(K grad q) = K grad q and J_T vanishes for q of degree k+1."""
    mesh = small_meshes[family][0]
    rng = np.random.default_rng(7 + k)
    q, gq = _poly(rng.normal(size=basis.cell_dim(k + 1)), k + 1)
    for geom in _batches(mesh):
        n = len(geom.elems)
        K = np.stack([random_spd(rng) for _ in range(n)])
        ops = bulk_operators(geom, K, k)
        Iv = interpolate_bulk(geom, K, k, lambda x: np.einsum("eab,eqb->eqa", K, gq(x)))
        F = np.einsum("eij,ej->ei", ops.flux, Iv)
        rule = geom.cell_rule(2 * k + 6)
        qc = basis.l2_project_cell(q, rule, geom.centers, geom.h, k + 1)
        scale = np.abs(qc[:, 1:]).max() + 1.0
        assert np.abs(F - qc[:, 1:]).max() <= 1e-10 * scale
        stab = np.einsum("ei,eij,ej->e", Iv, ops.stab, Iv)
        energy = np.einsum("ei,eij,ej->e", Iv, ops.product, Iv)
        assert np.all(np.abs(stab) <= 1e-12 * energy)
        assert np.abs(np.einsum("eij,ej->ei", ops.stab, Iv)).max() <= 1e-10 * (1 + np.abs(ops.stab).max())


@pytest.mark.parametrize("k", [0, 1, 2])
def test_local_matrices_symmetric_positive(small_meshes, k):
    mesh = small_meshes["nonconforming"][0]
    for geom in _batches(mesh):
        K = np.broadcast_to(np.diag([3.0, 0.5]), (len(geom.elems), 2, 2))
        ops = bulk_operators(geom, K, k)
        for M in (ops.product, ops.gram, ops.mass):
            assert np.allclose(M, np.swapaxes(M, 1, 2), atol=1e-12 * np.abs(M).max())
            assert np.linalg.eigvalsh(M).min() > 0


def test_single_element_helpers_match_batch():
    mesh = PolygonalMesh.from_elements(
        [[0, 0], [1, 0], [1.3, 0.7], [0.6, 1.2], [-0.2, 0.8]], [[0, 1, 2, 3, 4]]
    )
    K = np.array([[2.0, 0.3], [0.3, 1.0]])
    ops = element_operators(mesh, 0, K, 1)
    geom = ElementGeometry.gather(mesh, np.array([0]), 5)
    batch = bulk_operators(geom, K[None], 1)
    assert np.allclose(ops.product, batch.product)
    assert ops.div.shape == (1, 3, 2 + 5 * 2)


@settings(max_examples=20, deadline=None)
@given(
    theta=st.floats(0, np.pi),
    l1=st.floats(0.01, 100),
    l2=st.floats(0.01, 100),
)
def test_commuting_property_under_anisotropy(theta, l1, l2):
    R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    K = (R @ np.diag([l1, l2]) @ R.T)[None]
    mesh = PolygonalMesh.from_elements([[0, 0], [0.1, 0], [0.12, 0.07], [0.02, 0.1]], [[0, 1, 2, 3]])
    geom = ElementGeometry.gather(mesh, np.array([0]), 4)
    k = 1

    def v(x):
        return np.stack([x[..., 0] ** 2 - x[..., 1], x[..., 0] * x[..., 1]], axis=-1)

    ops = bulk_operators(geom, K, k)
    Iv = interpolate_bulk(geom, K, k, v)
    Dv = ops.div[0] @ Iv[0]
    ref = project_pressure(geom, k, lambda x: 3 * x[..., 0])[0]
    assert np.abs(Dv - ref).max() <= 1e-11 * (np.abs(ref).max() + 1)
