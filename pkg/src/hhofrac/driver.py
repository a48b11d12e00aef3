"""Assemble-solve-extract pipeline shared by the cases and the CLI."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .assembly import DofMap, ProblemData, assemble_condensed, assemble_system, number_dofs
from .mesh import FaceTags, PolygonalMesh, RegionMap
from .postprocess import DiscreteSolution, extract_solution
from .solver import solve

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    solution: DiscreteSolution
    dofmap: DofMap
    residual: float
    stats: dict = field(default_factory=dict)

    @property
    def dofs(self) -> int:
        return self.dofmap.n_total


def run_problem(
    mesh: PolygonalMesh,
    tags: FaceTags,
    regions: RegionMap,
    data: ProblemData,
    k: int,
    condense: bool = True,
    backend: str = "auto",
    rtol: float = 1e-9,
) -> RunResult:
    """Solve the coupled problem on a tagged mesh."""
    t0 = time.perf_counter()
    dofmap = number_dofs(mesh, tags, k)
    if condense:
        cond = assemble_condensed(mesh, tags, regions, data, k, dofmap)
        t1 = time.perf_counter()
        lin = solve(cond.system, backend=backend, rtol=rtol)
        x = cond.recover(lin.x)
        n_solved = cond.system.n
    else:
        system, _ = assemble_system(mesh, tags, regions, data, k, dofmap)
        t1 = time.perf_counter()
        lin = solve(system, backend=backend, rtol=rtol)
        x = lin.x
        n_solved = system.n
    t2 = time.perf_counter()
    sol = extract_solution(x, dofmap, mesh, tags, data)
    stats = dict(lin.stats)
    stats.update(assembly_time=t1 - t0, solve_time=t2 - t1, n_solved=n_solved, condensed=condense)
    log.info(
        "k=%d elements=%d dofs=%d solved=%d residual=%.2e (%.2fs assembly, %.2fs solve)",
        k, mesh.n_elements, dofmap.n_total, n_solved, lin.residual, t1 - t0, t2 - t1,
    )
    return RunResult(sol, dofmap, lin.residual, stats)
