import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hhofrac.assembly import ProblemData
from hhofrac.driver import run_problem
from hhofrac.postprocess import (
    DiscreteSolution,
    difference,
    element_centroid_pressure,
    eoc,
    eoc_slope,
    error_norms,
    fracture_flux,
    fracture_side_fluxes,
    line_sample,
)

FAMILIES = ("triangular", "cartesian", "nonconforming")


def test_eoc_examples():
    assert eoc([1.0, 0.25], [1.0, 0.5]) == pytest.approx([2.0])
    assert eoc([1.0, 0.125], [0.2, 0.1]) == pytest.approx([3.0])
    h = 0.5 ** np.arange(5)
    e = 3.7 * h**2
    assert np.allclose(eoc(e, h), 2.0, atol=1e-12)
    assert eoc_slope(e, h) == pytest.approx(2.0, abs=1e-12)
    assert eoc([1e-3, 0.0], [0.1, 0.05]) == [float("inf")]


@pytest.mark.parametrize(
    "errors,sizes",
    [([1.0], [1.0]), ([1.0, 0.5], [1.0]), ([1.0, 0.5], [0.5, 1.0]), ([1.0, 0.5], [1.0, 1.0])],
)
def test_eoc_rejects_bad_input(errors, sizes):
    with pytest.raises(ValueError):
        eoc(errors, sizes)


def _linear_data():
    """Exact piecewise-linear solution, see the assembly tests."""
    from .test_assembly import _piecewise_linear

    return _piecewise_linear()


def _random_solution(sol, rng):
    return DiscreteSolution(
        sol.k,
        rng.normal(size=sol.flux.shape),
        sol.flux_ptr,
        rng.normal(size=sol.pressure.shape),
        rng.normal(size=sol.frac_faces.shape),
        rng.normal(size=sol.frac_vertices.shape),
    )


def _scaled(sol, s):
    return DiscreteSolution(sol.k, s * sol.flux, sol.flux_ptr, s * sol.pressure, s * sol.frac_faces, s * sol.frac_vertices)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("k", [0, 1, 2])
def test_norms_vanish_on_zero_and_are_homogeneous(small_meshes, family, k):
    mesh, tags, regions = small_meshes[family]
    data = ProblemData(K=np.diag([2.0, 1.0]), kappa_n=0.5, ell=0.1)
    base = run_problem(mesh, tags, regions, data, k, condense=True).solution
    rng = np.random.default_rng(k)
    v = _random_solution(base, rng)
    zero = difference(v, v)
    rep0 = error_norms(zero, zero, mesh, tags, regions, data)
    assert (rep0.err_Uh_H, rep0.err_ph_L2, rep0.err_pFract_en, rep0.err_pFract_L2) == (0, 0, 0, 0)
    rep1 = error_norms(v, zero, mesh, tags, regions, data)
    for s in (2.0, 10.0):
        reps = error_norms(_scaled(v, s), zero, mesh, tags, regions, data)
        for name in ("err_Uh_H", "err_ph_L2", "err_pFract_en", "err_pFract_L2"):
            assert getattr(reps, name) == pytest.approx(s * getattr(rep1, name), rel=1e-12)
            assert getattr(rep1, name) > 0


@pytest.mark.parametrize("k", [0, 1, 2])
def test_fracture_seminorm_kernel_is_constants(small_meshes, k):
    mesh, tags, regions = small_meshes["triangular"]
    data = ProblemData()
    sol = run_problem(mesh, tags, regions, data, k).solution
    zero = difference(sol, sol)
    c = 1.7
    const = DiscreteSolution(
        k, zero.flux, zero.flux_ptr, zero.pressure, zero.frac_faces.copy(), np.full_like(zero.frac_vertices, c)
    )
    const.frac_faces[:, 0] = c
    rep = error_norms(const, zero, mesh, tags, regions, data)
    assert rep.err_pFract_en <= 1e-12
    # the fracture has unit length
    assert rep.err_pFract_L2 == pytest.approx(c, rel=1e-12)
    const.frac_vertices[0] += 0.1
    assert error_norms(const, zero, mesh, tags, regions, data).err_pFract_en > 1e-3


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("k", [0, 1, 2])
def test_fracture_flux_of_exact_solution(small_meshes, family, k):
    # u = (-b_i, 0) on side i with b = (1, 3); the normal jump u1.n1 + u2.n2 is 2
    mesh, tags, regions = small_meshes[family]
    _, _, _, data = _linear_data()
    sol = run_problem(mesh, tags, regions, data, k).solution
    assert fracture_flux(sol, mesh, tags) == pytest.approx(2.0, abs=1e-10)
    v1, v2 = fracture_side_fluxes(sol, mesh, tags)
    if k == 0:
        h = mesh.face_lengths[tags.fracture_faces]
        assert np.sum((v1[:, 0] + v2[:, 0]) * h) == pytest.approx(2.0, abs=1e-10)


def _constant_solution(mesh, tags, regions, k, c=0.8):
    data = ProblemData(g_B=c, g_gamma=c, kappa_n=0.3, ell=0.02)
    return run_problem(mesh, tags, regions, data, k).solution


@pytest.mark.parametrize("family", FAMILIES)
def test_line_sample_constant_and_duplicates(small_meshes, family):
    mesh, tags, regions = small_meshes[family]
    sol = _constant_solution(mesh, tags, regions, 1)
    recs = line_sample(sol, mesh, regions, ((0.0, 0.3), (1.0, 0.3)), 5)
    s = [r[0] for r in recs]
    # the middle point lies on the fracture and is reported from both sides
    assert s == pytest.approx([0.0, 0.25, 0.5, 0.5, 0.75, 1.0])
    assert np.allclose([r[1] for r in recs], 0.8, atol=1e-10)
    assert np.allclose(element_centroid_pressure(sol, mesh), 0.8, atol=1e-10)


def test_line_sample_endpoints_and_errors(small_meshes):
    mesh, tags, regions = small_meshes["cartesian"]
    sol = _constant_solution(mesh, tags, regions, 0)
    recs = line_sample(sol, mesh, regions, ((0.1, 0.1), (0.1, 0.9)), 2)
    assert [r[0] for r in recs] == pytest.approx([0.0, 0.8])
    with pytest.raises(ValueError):
        line_sample(sol, mesh, regions, ((0.1, 0.1), (1.5, 0.1)), 4)
    with pytest.raises(ValueError):
        line_sample(sol, mesh, regions, ((0.1, 0.1), (0.2, 0.1)), 1)


@settings(max_examples=15, deadline=None)
@given(c=st.floats(-1e3, 1e3), slope=st.floats(1.05, 6.0))
def test_eoc_recovers_power_laws(c, slope):
    h = np.array([0.1, 0.05, 0.025])
    e = (abs(c) + 1.0) * h**slope
    assert np.allclose(eoc(e, h), slope, atol=1e-10)


@pytest.mark.parametrize("k", [0, 1])
def test_unit_face_difference_norm(k):
    # e_U^2 = h_F * ||1||_F^2 = h^2 for a single unit face DOF with Kbar = 1
    from hhofrac.mesh import tag_geometry, uniform_grid

    mesh = uniform_grid(4)
    tags, regions = tag_geometry(mesh, None)
    data = ProblemData()
    sol = run_problem(mesh, tags, regions, data, k).solution
    zero = difference(sol, sol)
    d = _scaled(zero, 1.0)
    nc = (k + 1) * (k + 2) // 2 - 1
    d.flux[d.flux_ptr[5] + nc] = 1.0
    assert error_norms(d, zero, mesh, tags, regions, data).err_Uh_H == pytest.approx(0.25, rel=1e-13)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("k", [0, 1, 2])
def test_fracture_flux_of_projection_matches_integral(small_meshes, family, k):
    # for the piecewise-quadratic field u1.n1 + u2.n2 = 1 + y^2 - y on the fracture
    from hhofrac.postprocess import project_exact

    from .test_assembly import _piecewise_quadratic

    mesh, tags, regions = small_meshes[family]
    u, p, pg, data = _piecewise_quadratic()
    proj = project_exact(u, p, pg, mesh, tags, regions, data, k)
    assert fracture_flux(proj, mesh, tags) == pytest.approx(5.0 / 6.0, abs=1e-10)


def test_fracture_flux_zero_data(small_meshes):
    mesh, tags, regions = small_meshes["nonconforming"]
    sol = run_problem(mesh, tags, regions, ProblemData(), 1).solution
    assert fracture_flux(sol, mesh, tags) == 0.0


def test_projection_of_zero_and_vertex_values(small_meshes):
    from hhofrac.postprocess import project_exact

    mesh, tags, regions = small_meshes["triangular"]
    data = ProblemData()
    zero = lambda x, s: np.zeros(x.shape[:-1])  # noqa: E731
    proj = project_exact(
        lambda x, s: np.zeros(x.shape), zero, lambda x: np.sin(x[..., 1]), mesh, tags, regions, data, 2
    )
    assert not np.any(proj.pressure) and not np.any(proj.flux)
    assert np.allclose(proj.frac_vertices, np.sin(mesh.vertices[tags.fracture_vertices, 1]), rtol=0, atol=0)
