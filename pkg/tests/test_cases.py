import mpmath as mp
import numpy as np
import pytest

from hhofrac.cases import (
    ELL,
    FIVESPOT_REFERENCE,
    KAPPA_TAU,
    XI,
    ManufacturedSolution,
    case_convergence,
    case_fivespot,
    case_random_perm,
    convergence_slopes,
    crossing_jump,
    fivespot_data,
    kappa_n_value,
    layer_intervals,
    random_permeability,
)

N_POINTS = 100


# ---------------------------------------------------------------------------
# manufactured solution: residual oracle in extended precision


def _oracle_fields(kappa_n):
    """Closed-form p and p_Gamma written out again in mpmath."""
    K11 = mp.mpf(kappa_n) / (2 * mp.mpf(ELL))

    def p(x1, x2, side):
        a = mp.sin(4 * x1) if side == 1 else mp.cos(4 * x1)
        return a * mp.cos(mp.pi * x2)

    def p_gamma(x2):
        return mp.mpf(XI) * (mp.cos(2) + mp.sin(2)) * mp.cos(mp.pi * x2)

    return K11, p, p_gamma


def _relative(residual, *terms):
    scale = max([1.0] + [abs(float(t)) for t in terms])
    return abs(float(residual)) / scale


@pytest.mark.parametrize("kappa_n", [2 * ELL, 1.0])
@pytest.mark.parametrize("side", [1, 2])
def test_manufactured_bulk_residuals(kappa_n, side):
    ex = ManufacturedSolution(kappa_n)
    K11, p, _ = _oracle_fields(kappa_n)
    rng = np.random.default_rng(side)
    lo, hi = (0.0, 0.5) if side == 1 else (0.5, 1.0)
    pts = np.column_stack([rng.uniform(lo, hi, N_POINTS), rng.uniform(0.0, 1.0, N_POINTS)])
    u = ex.u(pts, side)
    f = ex.f(pts, side)
    worst = 0.0
    with mp.workdps(40):
        for (x1, x2), ui, fi in zip(pts, u, f):
            X1, X2 = mp.mpf(x1), mp.mpf(x2)
            px = mp.diff(lambda t: p(t, X2, side), X1)
            py = mp.diff(lambda t: p(X1, t, side), X2)
            pxx = mp.diff(lambda t: p(t, X2, side), X1, 2)
            pyy = mp.diff(lambda t: p(X1, t, side), X2, 2)
            # Darcy's law u + K grad p = 0
            worst = max(worst, _relative(ui[0] + K11 * px, ui[0], K11 * px))
            worst = max(worst, _relative(ui[1] + py, ui[1], py))
            # mass balance div u = f with div u = -(K11 p_xx + p_yy)
            div = -(K11 * pxx + pyy)
            worst = max(worst, _relative(div - fi, div, fi))
    assert worst <= 1e-10


@pytest.mark.parametrize("kappa_n", [2 * ELL, 1.0])
def test_manufactured_fracture_residuals(kappa_n):
    ex = ManufacturedSolution(kappa_n)
    K11, p, p_gamma = _oracle_fields(kappa_n)
    lam = mp.mpf(ELL) / mp.mpf(kappa_n)
    lamxi = lam * (mp.mpf(XI) / 2 - mp.mpf(1) / 4)
    ell, kt = mp.mpf(ELL), mp.mpf(KAPPA_TAU)
    rng = np.random.default_rng(7)
    y = rng.uniform(0.0, 1.0, N_POINTS)
    pts = np.column_stack([np.full(N_POINTS, 0.5), y])
    fg = ex.f_gamma(pts)
    pg_code = ex.p_gamma(pts)
    worst = 0.0
    with mp.workdps(40):
        half = mp.mpf(1) / 2
        for yi, fgi, pgi in zip(y, fg, pg_code):
            Y = mp.mpf(yi)
            # normal velocity components u . (1, 0) on each side, u = -K grad p
            u1 = -K11 * mp.diff(lambda t: p(t, Y, 1), half)
            u2 = -K11 * mp.diff(lambda t: p(t, Y, 2), half)
            jump = u1 - u2  # u1.n1 + u2.n2 with outward normals (1, 0) and (-1, 0)
            avg = (u1 + u2) / 2  # average dotted with n_Gamma = (1, 0)
            p1, p2 = p(half, Y, 1), p(half, Y, 2)
            pg = p_gamma(Y)
            lhs = -kt * ell * mp.diff(p_gamma, Y, 2)
            rhs = ell * fgi + jump
            worst = max(worst, _relative(lhs - rhs, lhs, ell * fgi, jump))
            worst = max(worst, _relative(lam * avg - (p1 - p2), lam * avg, p1))
            worst = max(worst, _relative(lamxi * jump - ((p1 + p2) / 2 - pg), lamxi * jump, pg))
            worst = max(worst, _relative(pgi - pg, pg))
    assert worst <= 1e-10


def test_manufactured_isotropic_for_two_ell():
    assert np.allclose(ManufacturedSolution(2 * ELL).K(), np.eye(2))
    assert ManufacturedSolution(1.0).K11 == pytest.approx(50.0)


def test_kappa_n_choices():
    assert kappa_n_value("2ell") == pytest.approx(0.02)
    assert kappa_n_value("2ℓ") == pytest.approx(0.02)
    assert kappa_n_value("1") == 1.0
    assert kappa_n_value(0.5) == 0.5
    with pytest.raises(ValueError):
        kappa_n_value("lots")


def test_convergence_records_and_orders():
    recs = case_convergence("2ell", "cartesian", levels=(1, 2, 3), degrees=(0, 1))
    assert len(recs) == 6
    assert [r.level for r in recs] == [1, 2, 3, 1, 2, 3]
    assert "err_Uh_H" not in recs[0].eocs and "err_Uh_H" in recs[2].eocs
    row = recs[2].row()
    assert list(row)[:5] == ["family", "k", "level", "h", "dofs"]
    # errors decrease under refinement
    for k in (0, 1):
        e = [r.errors["err_ph_L2"] for r in recs if r.k == k]
        assert e[0] > e[1] > e[2]
    slopes = convergence_slopes(recs)
    assert slopes[("cartesian", 1, "err_ph_L2")] > 2.0


# ---------------------------------------------------------------------------
# five-spot


def test_fivespot_variants():
    assert FIVESPOT_REFERENCE == {"permeable": 9.96242e-2, "impermeable": 3.19922e-2}
    assert fivespot_data("permeable").kappa_tau == 100.0
    assert fivespot_data("impermeable").kappa_n == 1e-2
    with pytest.raises(ValueError):
        fivespot_data("leaky")


@pytest.fixture(scope="module")
def small_fivespot():
    return {v: case_fivespot(v, level=2, k=1, n_samples=101) for v in ("no_fracture", "permeable", "impermeable")}


def test_fivespot_fracture_flux_and_jump(small_fivespot):
    assert small_fivespot["no_fracture"].flux is None
    mp_, mi = small_fivespot["permeable"].flux, small_fivespot["impermeable"].flux
    assert 0 < mi < mp_
    # the fracture crosses the diagonal at (1/2, 1/2)
    s = np.sqrt(2) / 2
    jp = crossing_jump(small_fivespot["permeable"].samples, s)
    ji = crossing_jump(small_fivespot["impermeable"].samples, s)
    assert ji > jp
    with pytest.raises(ValueError):
        crossing_jump(small_fivespot["no_fracture"].samples, s)


def test_fivespot_pressure_decreases_from_injector(small_fivespot):
    # injection at the origin, production at (1, 1)
    v = np.array([val for _, val in small_fivespot["no_fracture"].samples])
    assert v[0] > 0 > v[-1]
    assert v[0] == v.max() and v[-1] == v.min()


# ---------------------------------------------------------------------------
# random permeability


def test_layer_intervals_alternate():
    iv = layer_intervals(8)
    assert len(iv) == 8
    assert iv[0] == {1: (0.0, 1.0), 2: (1.0, 2.0)}
    assert iv[1] == {1: (1.0, 2.0), 2: (0.0, 1.0)}


def test_random_permeability_in_intervals_and_deterministic():
    rng = np.random.default_rng(0)
    c = rng.random((500, 2))
    side = np.where(c[:, 0] < 0.5, 1, 2)
    mu1, mu2 = random_permeability(c, side, seed=42)
    again = random_permeability(c, side, seed=42)
    assert np.array_equal(mu1, again[0]) and np.array_equal(mu2, again[1])
    iv = layer_intervals()
    layer = np.minimum((c[:, 1] * 8).astype(int), 7)
    for m in (mu1, mu2):
        lo = np.array([iv[j][s][0] for j, s in zip(layer, side)])
        hi = np.array([iv[j][s][1] for j, s in zip(layer, side)])
        assert np.all((m > lo) & (m < hi))
    other = random_permeability(c, side, seed=43)
    assert not np.array_equal(mu1, other[0])
    h1, h2 = random_permeability(c, side, seed=None, variant="homogeneous")
    assert np.all(h1 == 1.0) and np.all(h2 == 1.0)


def test_random_perm_runs_are_bit_identical():
    a = case_random_perm("random", seed=42, n=16, k=1)
    b = case_random_perm("random", seed=42, n=16, k=1)
    assert np.array_equal(a.mu1, b.mu1)
    assert np.array_equal(a.run.solution.pressure, b.run.solution.pressure)
    assert np.array_equal(a.run.solution.frac_faces, b.run.solution.frac_faces)


@pytest.mark.slow
def test_random_perm_homogeneous_range():
    from hhofrac.postprocess import element_centroid_pressure

    res = case_random_perm("homogeneous", n=64, k=2)
    p = element_centroid_pressure(res.run.solution, res.mesh)
    assert -0.01 <= p.min() and p.max() <= 1.06
    assert p.max() > 1.0
