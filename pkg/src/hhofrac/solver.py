"""Sparse direct solution with residual verification.

MKL PARDISO (through ``pypardiso``) is used when available; SuperLU from
scipy is the fallback.
"""
from __future__ import annotations

import glob
import logging
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Singular system or residual above the configured threshold."""


def _locate_mkl() -> None:
    if os.environ.get("PYPARDISO_MKL_RT"):
        return
    roots = [os.path.join(sys.prefix, "lib"), "/usr/local/lib", "/usr/lib", "/usr/lib/x86_64-linux-gnu"]
    for root in roots:
        hits = sorted(glob.glob(os.path.join(root, "libmkl_rt.so*")))
        if hits:
            os.environ["PYPARDISO_MKL_RT"] = hits[0]
            return


_PARDISO = None


def _pardiso():
    global _PARDISO
    if _PARDISO is None:
        try:
            _locate_mkl()
            import pypardiso

            _PARDISO = pypardiso
        except Exception as exc:  # missing package or MKL runtime
            log.info("PARDISO unavailable (%s); using SuperLU", exc)
            _PARDISO = False
    return _PARDISO or None


def available_backends() -> list[str]:
    out = ["superlu"]
    if _pardiso() is not None:
        out.insert(0, "pardiso")
    return out


def set_threads(n: int | None) -> None:
    """Limit the threads used by the factorization."""
    if n is None:
        n = os.environ.get("HHO_THREADS")
    if n is None:
        return
    n = int(n)
    if n < 1:
        raise ValueError("thread count must be positive")
    os.environ["MKL_NUM_THREADS"] = str(n)
    os.environ["OMP_NUM_THREADS"] = str(n)
    try:
        import mkl  # type: ignore

        mkl.set_num_threads(n)
    except Exception:
        pass


@dataclass
class LinearSolution:
    x: np.ndarray
    residual: float
    stats: dict = field(default_factory=dict)


def _relative_residual(A, x, b) -> float:
    r = A @ x - b
    nb = np.linalg.norm(b)
    nr = np.linalg.norm(r)
    if nb == 0.0:
        return float(nr)
    return float(nr / nb)


def _refine(A, b, x, apply_inverse, steps: int = 8) -> np.ndarray:
    """Iterative refinement reusing an existing factorization.

    Stops once the residual stagnates or reaches round-off level.
    """
    nb = np.linalg.norm(b)
    best = np.linalg.norm(b - A @ x)
    for _ in range(steps):
        if not np.isfinite(best) or best <= 1e-15 * nb:
            break
        x_new = x + apply_inverse(b - A @ x)
        res = np.linalg.norm(b - A @ x_new)
        if not res < 0.5 * best:
            if res < best:
                x = x_new
            break
        x, best = x_new, res
    return x


def solve(system, backend: str = "auto", rtol: float = 1e-9) -> LinearSolution:
    """Solve ``system.matrix @ x = system.rhs`` with a sparse direct method."""
    A = sp.csr_matrix(system.matrix)
    b = np.asarray(system.rhs, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise SolverError(f"system is not square or rhs has wrong size: {A.shape} vs {b.shape}")
    n = A.shape[0]
    if n == 0:
        return LinearSolution(np.zeros(0), 0.0, {"backend": "none"})
    if not np.any(b):
        return LinearSolution(np.zeros(n), 0.0, {"backend": "trivial", "n": n, "nnz": A.nnz})
    if backend == "auto":
        backend = "pardiso" if _pardiso() is not None else "superlu"
    t0 = time.perf_counter()
    stats: dict = {"backend": backend, "n": n, "nnz": int(A.nnz)}
    if backend == "pardiso":
        pyp = _pardiso()
        if pyp is None:
            raise SolverError("PARDISO backend requested but not available")
        solver = pyp.PyPardisoSolver()
        solver.set_iparm(8, 4)  # at most four internal refinement steps
        try:
            A.sort_indices()
            solver.factorize(A)  # stored so later solves reuse the factors
            x = solver.solve(A, b)
            x = _refine(A, b, x, lambda r: solver.solve(A, r))
        except Exception as exc:
            raise SolverError(f"PARDISO failed: {exc}") from exc
        finally:
            try:
                solver.free_memory(everything=True)
            except Exception:
                pass
    elif backend == "superlu":
        try:
            lu = spla.splu(A.tocsc(), permc_spec="COLAMD")
        except RuntimeError as exc:
            raise SolverError(f"matrix is numerically singular: {exc}") from exc
        x = _refine(A, b, lu.solve(b), lu.solve)
        stats["fill"] = int(lu.L.nnz + lu.U.nnz)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    stats["time"] = time.perf_counter() - t0
    if not np.all(np.isfinite(x)):
        raise SolverError("solution contains non-finite values; matrix is singular")
    res = _relative_residual(A, x, b)
    if res > rtol:
        raise SolverError(f"relative residual {res:.3e} exceeds threshold {rtol:.1e}")
    stats["residual"] = res
    return LinearSolution(x, res, stats)
