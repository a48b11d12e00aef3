"""Built-in scenarios: manufactured convergence study, quarter five-spot and
layered random permeability."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assembly import ProblemData
from .driver import RunResult, run_problem
from .mesh import (
    BoundarySpec,
    Fracture,
    generate_mesh,
    tag_geometry,
    uniform_grid,
)
from .postprocess import eoc, eoc_slope, error_norms, fracture_flux, line_sample, project_exact

log = logging.getLogger(__name__)

VERTICAL = Fracture((0.5, 1.0), (0.5, 0.0))
DIAGONAL = Fracture((0.0, 1.0), (1.0, 0.0))
ERROR_KEYS = ("err_Uh_H", "err_ph_L2", "err_pFract_en", "err_pFract_L2")
ELL = 0.01
XI = 0.75
KAPPA_TAU = 1.0
FIVESPOT_REFERENCE = {"permeable": 9.96242e-2, "impermeable": 3.19922e-2}


# ---------------------------------------------------------------------------
# manufactured solution


@dataclass(frozen=True)
class ManufacturedSolution:
    """Exact fields of the convergence study for a given normal permeability.

    Bulk fields take ``(x, side)`` with side 1 left of x1 = 0.5.
    """

    kappa_n: float
    kappa_tau: float = KAPPA_TAU
    ell: float = ELL
    xi: float = XI

    @property
    def K11(self) -> float:
        return self.kappa_n / (2.0 * self.ell)

    def K(self, x=None, side=None) -> np.ndarray:
        K = np.diag([self.K11, 1.0])
        if x is None:
            return K
        return np.broadcast_to(K, np.shape(x)[:-1] + (2, 2))

    def p(self, x, side):
        x1, x2 = x[..., 0], x[..., 1]
        left = np.broadcast_to(np.asarray(side) == 1, x1.shape)
        return np.where(left, np.sin(4 * x1), np.cos(4 * x1)) * np.cos(np.pi * x2)

    def grad_p(self, x, side):
        x1, x2 = x[..., 0], x[..., 1]
        left = np.broadcast_to(np.asarray(side) == 1, x1.shape)
        a = np.where(left, np.sin(4 * x1), np.cos(4 * x1))
        da = np.where(left, 4 * np.cos(4 * x1), -4 * np.sin(4 * x1))
        return np.stack([da * np.cos(np.pi * x2), -np.pi * a * np.sin(np.pi * x2)], axis=-1)

    def u(self, x, side):
        g = self.grad_p(x, side)
        return -np.stack([self.K11 * g[..., 0], g[..., 1]], axis=-1)

    def f(self, x, side):
        return (16.0 * self.K11 + np.pi**2) * self.p(x, side)

    def p_gamma(self, x):
        return self.xi * (np.cos(2.0) + np.sin(2.0)) * np.cos(np.pi * x[..., 1])

    def f_gamma(self, x):
        c = (np.cos(2.0) + np.sin(2.0)) * np.cos(np.pi * x[..., 1])
        return c * (self.kappa_tau * np.pi**2 * self.xi + 2.0 * self.kappa_n / self.ell**2)

    def problem_data(self) -> ProblemData:
        return ProblemData(
            K=self.K,
            f=self.f,
            g_B=self.p,
            f_gamma=self.f_gamma,
            g_gamma=self.p_gamma,
            kappa_n=self.kappa_n,
            kappa_tau=self.kappa_tau,
            ell=self.ell,
            xi=self.xi,
        )


def kappa_n_value(choice) -> float:
    """Map the choices '2ell' and '1' (or a number) to kappa_n."""
    if isinstance(choice, str):
        c = choice.strip().lower().replace("ℓ", "ell").replace(" ", "")
        if c in ("2ell", "2*ell", "2l"):
            return 2.0 * ELL
        return float(c)
    return float(choice)


@dataclass
class ConvergenceRecord:
    family: str
    k: int
    level: int
    h: float
    dofs: int
    errors: dict
    eocs: dict = field(default_factory=dict)

    def row(self) -> dict:
        out = {"family": self.family, "k": self.k, "level": self.level, "h": self.h, "dofs": self.dofs}
        out.update(self.errors)
        for key in ERROR_KEYS:
            out[f"eoc_{key}"] = self.eocs.get(key, float("nan"))
        return out


def case_convergence(
    kappa_n_choice="2ell",
    family: str = "triangular",
    levels=(0, 1, 2, 3),
    degrees=(0, 1, 2),
    condense: bool = True,
    backend: str = "auto",
) -> list[ConvergenceRecord]:
    """Errors and pairwise convergence orders of the manufactured solution."""
    exact = ManufacturedSolution(kappa_n_value(kappa_n_choice))
    data = exact.problem_data()
    meshes = []
    for level in levels:
        mesh = generate_mesh(family, level)
        tags, regions = tag_geometry(mesh, VERTICAL, BoundarySpec.all_dirichlet())
        meshes.append((level, mesh, tags, regions))
    records = []
    for k in degrees:
        recs = []
        for level, mesh, tags, regions in meshes:
            res = run_problem(mesh, tags, regions, data, k, condense=condense, backend=backend)
            proj = project_exact(exact.u, exact.p, exact.p_gamma, mesh, tags, regions, data, k)
            rep = error_norms(res.solution, proj, mesh, tags, regions, data, res.dofs)
            errs = {key: getattr(rep, key) for key in ERROR_KEYS}
            recs.append(ConvergenceRecord(family, k, level, mesh.h, res.dofs, errs))
        if len(recs) >= 2:
            hs = [r.h for r in recs]
            for key in ERROR_KEYS:
                orders = eoc([r.errors[key] for r in recs], hs)
                for r, o in zip(recs[1:], orders):
                    r.eocs[key] = o
        records.extend(recs)
    return records


def convergence_slopes(records: list[ConvergenceRecord]) -> dict:
    """Least-squares slopes per (family, k, error)."""
    out = {}
    keys = sorted({(r.family, r.k) for r in records})
    for fam, k in keys:
        rs = [r for r in records if r.family == fam and r.k == k]
        for key in ERROR_KEYS:
            out[(fam, k, key)] = eoc_slope([r.errors[key] for r in rs], [r.h for r in rs])
    return out


# ---------------------------------------------------------------------------
# quarter five-spot


def fivespot_source(x, side=None):
    r0 = np.hypot(x[..., 0], x[..., 1])
    r1 = np.hypot(x[..., 0] - 1.0, x[..., 1] - 1.0)
    return 200.0 * (np.tanh(200.0 * (0.025 - r0)) - np.tanh(200.0 * (0.025 - r1)))


def fivespot_boundary(tol: float = 1e-12) -> BoundarySpec:
    def neumann(x):
        return (np.abs(x[:, 0]) <= tol) | (np.abs(x[:, 1]) <= tol) | ((x[:, 0] > 0.75) & (x[:, 1] > 0.75))

    return BoundarySpec(
        [("neumann", neumann), ("dirichlet", lambda x: np.ones(len(x), dtype=bool))], tips="dirichlet"
    )


FIVESPOT_VARIANTS = {
    "no_fracture": None,
    "permeable": {"kappa_n": 1.0, "kappa_tau": 100.0},
    "impermeable": {"kappa_n": 1e-2, "kappa_tau": 1.0},
}


@dataclass
class FivespotResult:
    variant: str
    k: int
    level: int
    h: float
    dofs: int
    flux: float | None
    samples: list
    run: RunResult
    mesh: object = None
    tags: object = None
    regions: object = None


def fivespot_data(variant: str) -> ProblemData:
    if variant not in FIVESPOT_VARIANTS:
        raise ValueError(f"unknown five-spot variant {variant!r}")
    params = FIVESPOT_VARIANTS[variant] or {"kappa_n": 1.0, "kappa_tau": 1.0}
    return ProblemData(
        K=np.eye(2),
        f=fivespot_source,
        g_B=0.0,
        f_gamma=0.0,
        g_gamma=0.0,
        ell=1e-2,
        xi=XI,
        **params,
    )


def case_fivespot(
    variant: str = "permeable",
    family: str = "triangular",
    level: int = 3,
    k: int = 2,
    n_samples: int = 201,
    condense: bool = True,
    backend: str = "auto",
) -> FivespotResult:
    data = fivespot_data(variant)
    mesh = generate_mesh(family, level)
    fracture = None if variant == "no_fracture" else DIAGONAL
    tags, regions = tag_geometry(mesh, fracture, fivespot_boundary())
    res = run_problem(mesh, tags, regions, data, k, condense=condense, backend=backend)
    flux = None if fracture is None else fracture_flux(res.solution, mesh, tags)
    samples = line_sample(res.solution, mesh, regions, ((0.0, 0.0), (1.0, 1.0)), n_samples) if n_samples else []
    return FivespotResult(variant, k, level, mesh.h, res.dofs, flux, samples, res, mesh, tags, regions)


def crossing_jump(samples: list, crossing: float) -> float:
    """Pressure jump between the two records at the fracture crossing."""
    near = [v for s, v in samples if abs(s - crossing) < 1e-9]
    if len(near) < 2:
        raise ValueError("no duplicate records at the crossing")
    return abs(near[0] - near[1])


# ---------------------------------------------------------------------------
# random permeability


N_LAYERS = 8


def layer_intervals(n_layers: int = N_LAYERS) -> list[dict[int, tuple[float, float]]]:
    """Per-layer permeability interval on each side of the fracture.

    Layer j (from the bottom) uses (0, 1) on the left and (1, 2) on the
    right when j is even, and the reverse when j is odd.
    """
    low, high = (0.0, 1.0), (1.0, 2.0)
    return [{1: low, 2: high} if j % 2 == 0 else {1: high, 2: low} for j in range(n_layers)]


def random_permeability(centroids: np.ndarray, subdomain: np.ndarray, seed: int | None, variant: str = "random"):
    """Per-element (mu1, mu2) for the layered permeability field."""
    n = len(centroids)
    if variant == "homogeneous":
        return np.ones(n), np.ones(n)
    if variant != "random":
        raise ValueError(f"unknown permeability variant {variant!r}")
    rng = np.random.default_rng(seed)
    layer = np.clip((centroids[:, 1] * N_LAYERS).astype(int), 0, N_LAYERS - 1)
    intervals = layer_intervals()
    lo = np.array([intervals[j][s][0] for j, s in zip(layer, subdomain)])
    hi = np.array([intervals[j][s][1] for j, s in zip(layer, subdomain)])
    u = rng.random((2, n))
    u[u == 0.0] = 0.5
    mu = lo + (hi - lo) * u
    return mu[0], mu[1]


@dataclass
class RandomPermResult:
    variant: str
    seed: int | None
    mu1: np.ndarray
    mu2: np.ndarray
    run: RunResult
    mesh: object
    tags: object
    regions: object


def random_perm_boundary(tol: float = 1e-12) -> BoundarySpec:
    def neumann(x):
        return (np.abs(x[:, 0]) <= tol) | (np.abs(x[:, 0] - 1.0) <= tol)

    return BoundarySpec([("neumann", neumann), ("dirichlet", lambda x: np.ones(len(x), dtype=bool))])


def case_random_perm(
    variant: str = "random",
    seed: int | None = 0,
    n: int = 64,
    k: int = 2,
    condense: bool = True,
    backend: str = "auto",
) -> RandomPermResult:
    mesh = uniform_grid(n)
    tags, regions = tag_geometry(mesh, VERTICAL, random_perm_boundary())
    mu1, mu2 = random_permeability(mesh.centroids, regions.subdomain, seed, variant)
    Kel = np.zeros((mesh.n_elements, 2, 2))
    Kel[:, 0, 0] = mu1
    Kel[:, 1, 1] = mu2
    data = ProblemData(
        K=Kel,
        f=4.0,
        g_B=lambda x, side=None: x[..., 1],
        f_gamma=4.0,
        g_gamma=lambda x: x[..., 1],
        kappa_n=1.0,
        kappa_tau=100.0,
        ell=1e-2,
        xi=XI,
    )
    res = run_problem(mesh, tags, regions, data, k, condense=condense, backend=backend)
    return RandomPermResult(variant, seed, mu1, mu2, res, mesh, tags, regions)


CaseRunner = Callable[..., object]
