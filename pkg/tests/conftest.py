import numpy as np
import pytest

from hhofrac.mesh import BoundarySpec, VERTICAL_FRACTURE, generate_mesh, tag_geometry

# criterion -> (passed, detail); filled by test_acceptance.py and printed once
# at the end of the session, one line per criterion
ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture(scope="session")
def small_meshes():
    """Level-1 mesh of each family, tagged with the vertical fracture."""
    out = {}
    for fam in ("triangular", "cartesian", "nonconforming"):
        mesh = generate_mesh(fam, 1)
        tags, regions = tag_geometry(mesh, VERTICAL_FRACTURE, BoundarySpec.all_dirichlet())
        out[fam] = (mesh, tags, regions)
    return out


def random_spd(rng, anisotropy=10.0):
    theta = rng.uniform(0, np.pi)
    R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    lam = np.array([1.0, rng.uniform(1.0, anisotropy)]) * rng.uniform(0.1, 10.0)
    return R @ np.diag(lam) @ R.T
