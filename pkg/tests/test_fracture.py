import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hhofrac import basis
from hhofrac.fracture import fracture_operators, interpolate_fracture


def _face_coeffs(h, k, func):
    rule = basis.quad_segments(h, 2 * k + 8)
    return basis.l2_project_face(func(rule.points), rule, h, k)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_reconstruction_exact_on_polynomials(k):
    rng = np.random.default_rng(k)
    h = rng.uniform(0.01, 2.0, size=8)
    c = rng.normal(size=(8, k + 2))

    def q(s):
        return sum(c[:, j, None] * s**j for j in range(k + 2))

    ops = fracture_operators(h, 0.3, k)
    Iq = interpolate_fracture(h, k, q)
    ref = _face_coeffs(h, k + 1, q)
    r = np.einsum("eij,ej->ei", ops.recon, Iq)
    R = np.einsum("eij,ej->ei", ops.deviation, Iq)
    scale = np.abs(ref).max(axis=1, keepdims=True) + 1.0
    assert np.all(np.abs(r - ref) <= 1e-11 * scale)
    assert np.all(np.abs(R - ref) <= 1e-11 * scale)
    # the stabilization vanishes on interpolates of P^{k+1}
    j = np.einsum("ei,eij,ej->e", Iq, ops.stab, Iq)
    d = np.einsum("ei,eij,ej->e", Iq, ops.diffusion, Iq)
    assert np.all(np.abs(j) <= 1e-11 * (d + 1e-300) + 1e-22)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_diffusion_kernel_is_constants(k):
    h = np.array([0.1, 0.5])
    ops = fracture_operators(h, 2.0, k)
    ones = np.zeros(k + 3)
    ones[0] = 1.0
    ones[k + 1 :] = 1.0
    assert np.abs(ops.diffusion @ ones).max() < 1e-12 * np.abs(ops.diffusion).max()
    ev = np.linalg.eigvalsh(ops.diffusion)
    assert np.all(ev[:, 0] > -1e-12 * ev[:, -1])
    assert np.all(ev[:, 1] > 1e-8 * ev[:, -1])  # one-dimensional kernel


@pytest.mark.parametrize("k", [0, 1, 2])
def test_consistency_energy_of_linear_function(k):
    """d_F(I q, I q) = K_F |F| for q(s) = s (unit slope)."""
    h = np.array([0.25, 1.0])
    KF = 0.7
    ops = fracture_operators(h, KF, k)
    Iq = interpolate_fracture(h, k, lambda s: s)
    d = np.einsum("ei,eij,ej->e", Iq, ops.diffusion, Iq)
    assert np.allclose(d, KF * h, rtol=1e-12)
    g = np.einsum("ei,eij,ej->e", Iq, ops.gram, Iq)
    # for k = 0 the face unknown is the mean, so only the two vertex jumps h/2 count
    expected = KF * h if k >= 1 else KF / h * 2 * (h / 2) ** 2
    assert np.allclose(g, expected, rtol=1e-12)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        fracture_operators(np.array([0.0]), 1.0, 1)
    with pytest.raises(ValueError):
        fracture_operators(np.array([1.0]), -1.0, 1)


@settings(max_examples=25, deadline=None)
@given(
    h=st.floats(1e-3, 10.0),
    KF=st.floats(1e-3, 1e3),
    k=st.integers(0, 2),
    scale=st.sampled_from([2.0, 10.0]),
)
def test_seminorm_homogeneous_and_scaling(h, KF, k, scale):
    ops = fracture_operators(np.array([h]), KF, k)
    rng = np.random.default_rng(0)
    v = rng.normal(size=k + 3)
    n1 = v @ ops.gram[0] @ v
    n2 = (scale * v) @ ops.gram[0] @ (scale * v)
    assert n2 == pytest.approx(scale**2 * n1, rel=1e-12)
    # d_F scales linearly with K_F
    ops2 = fracture_operators(np.array([h]), 2 * KF, k)
    assert np.allclose(ops2.diffusion, 2 * ops.diffusion, rtol=1e-12, atol=1e-14 * np.abs(ops.diffusion).max())
