import numpy as np
import pytest

from hhofrac.mesh import (
    DIRICHLET,
    FRACTURE,
    NEUMANN,
    BoundarySpec,
    Fracture,
    MeshError,
    MeshParseError,
    PointLocator,
    PolygonalMesh,
    VERTICAL_FRACTURE,
    generate_mesh,
    read_mesh,
    tag_geometry,
    uniform_grid,
    validate_mesh,
    write_mesh,
)

FAMILIES = ("triangular", "cartesian", "nonconforming")


def test_unit_square_single_element():
    mesh = PolygonalMesh.from_elements([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1, 2, 3]])
    assert mesh.n_elements == 1 and mesh.n_faces == 4
    assert mesh.areas[0] == pytest.approx(1.0)
    assert np.allclose(mesh.centroids[0], [0.5, 0.5])
    assert mesh.diameters[0] == pytest.approx(np.sqrt(2))
    normals = mesh.outward_normals(0)
    assert np.allclose(normals, [[0, -1], [1, 0], [0, 1], [-1, 0]])


def test_two_triangles_share_one_face():
    mesh = PolygonalMesh.from_elements([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1, 2], [0, 2, 3]])
    assert mesh.n_faces == 5
    shared = np.flatnonzero(mesh.face_elements[:, 1] >= 0)
    assert len(shared) == 1
    f = shared[0]
    # outward normals of the two owners are opposite
    n0 = mesh.outward_normals(0)[list(mesh.element_faces(0)).index(f)]
    n1 = mesh.outward_normals(1)[list(mesh.element_faces(1)).index(f)]
    assert np.allclose(n0, -n1)


def test_too_few_vertices_rejected():
    with pytest.raises(MeshError):
        PolygonalMesh.from_elements([[0, 0], [1, 0], [1, 1]], [[0, 1]])


@pytest.mark.parametrize("family", FAMILIES)
def test_families_halve_mesh_size(family):
    h = [generate_mesh(family, lev).h for lev in range(3)]
    assert h[1] == pytest.approx(h[0] / 2) and h[2] == pytest.approx(h[1] / 2)
    mesh = generate_mesh(family, 1)
    assert mesh.areas.sum() == pytest.approx(1.0)
    assert validate_mesh(mesh).ok


def test_family_sizes():
    assert generate_mesh("triangular", 0).n_elements == 56
    assert generate_mesh("triangular", 1).n_elements == 224
    assert generate_mesh("cartesian", 0).n_elements == 4
    mesh = generate_mesh("nonconforming", 0)
    assert set(mesh.groups) == {4, 5}


def test_invalid_level_and_family():
    with pytest.raises(MeshError):
        generate_mesh("cartesian", -1)
    with pytest.raises((MeshError, ValueError)):
        generate_mesh("hexagonal", 1)


@pytest.mark.parametrize("family", FAMILIES)
def test_polymesh_round_trip(tmp_path, family):
    mesh = generate_mesh(family, 1)
    path = tmp_path / "m.polymesh"
    write_mesh(mesh, path)
    back = read_mesh(path)
    assert back.n_elements == mesh.n_elements and back.n_faces == mesh.n_faces
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.allclose(back.areas, mesh.areas)


def test_read_mesh_splits_hanging_edges(tmp_path):
    # left square has one long edge against two right rectangles
    text = """POLYMESH 1
NV 7
0 0
1 0
2 0
2 1
1 1
0 1
2 0.5
NE 3
4 0 1 4 5
4 1 2 6 4
4 4 6 3 4
"""
    path = tmp_path / "h.polymesh"
    path.write_text(text.replace("4 4 6 3 4", "3 4 6 3"))
    mesh = read_mesh(path)
    assert mesh.n_elements == 3
    assert validate_mesh(mesh).ok


@pytest.mark.parametrize(
    "body,line",
    [
        ("POLYMESH 2\n", 1),
        ("POLYMESH 1\nNV 2\n0 0\n", -1),
        ("POLYMESH 1\nNV 3\n0 0\n1 0\nx 1\nNE 1\n3 0 1 2\n", 5),
        ("POLYMESH 1\nNV 3\n0 0\n1 0\n0 1\nNE 1\n4 0 1 2\n", 7),
        ("POLYMESH 1\nNV 3\n0 0\n1 0\n0 1\nNE 1\n3 0 1 5\n", 7),
    ],
)
def test_parse_errors_report_line(tmp_path, body, line):
    path = tmp_path / "bad.polymesh"
    path.write_text(body)
    with pytest.raises(MeshParseError) as info:
        read_mesh(path)
    assert info.value.line == line


def test_clockwise_element_rejected(tmp_path):
    path = tmp_path / "cw.polymesh"
    path.write_text("POLYMESH 1\nNV 3\n0 0\n0 1\n1 0\nNE 1\n3 0 1 2\n")
    with pytest.raises(MeshError):
        read_mesh(path)


@pytest.mark.parametrize("family", FAMILIES)
def test_vertical_fracture_tagging(family):
    mesh = generate_mesh(family, 1)
    tags, regions = tag_geometry(mesh, VERTICAL_FRACTURE, BoundarySpec.all_dirichlet())
    ff = tags.fracture_faces
    assert np.allclose(mesh.face_midpoints[ff, 0], 0.5)
    assert mesh.face_lengths[ff].sum() == pytest.approx(1.0)
    # ordered along the fracture (from (0.5, 1) down to (0.5, 0))
    assert np.all(np.diff(mesh.face_midpoints[ff, 1]) < 0)
    fel = tags.frac_face_elements
    assert np.all(mesh.centroids[fel[:, 0], 0] < 0.5) and np.all(mesh.centroids[fel[:, 1], 0] > 0.5)
    assert np.all(regions.subdomain[fel[:, 0]] == 1) and np.all(regions.subdomain[fel[:, 1]] == 2)
    # both tips on the boundary are Dirichlet
    assert tags.fracture_dirichlet.sum() == 2
    assert validate_mesh(mesh, tags, regions).ok


def test_diagonal_fracture_on_triangular_family():
    mesh = generate_mesh("triangular", 2)
    frac = Fracture((0.0, 1.0), (1.0, 0.0))
    tags, regions = tag_geometry(mesh, frac)
    assert mesh.face_lengths[tags.fracture_faces].sum() == pytest.approx(np.sqrt(2))
    assert validate_mesh(mesh, tags, regions).ok


def test_noncompliant_mesh_rejected():
    mesh = uniform_grid(3)  # x1 = 0.5 cuts through the middle column
    with pytest.raises(MeshError, match="transversally"):
        tag_geometry(mesh, VERTICAL_FRACTURE)


def test_boundary_rules_and_coverage():
    mesh = uniform_grid(4)
    left = lambda x: np.abs(x[:, 0]) < 1e-12  # noqa: E731
    spec = BoundarySpec([("neumann", left), ("dirichlet", lambda x: x[:, 1] < 1e-12)])
    with pytest.raises(MeshError, match="not covered") as info:
        tag_geometry(mesh, VERTICAL_FRACTURE, spec)
    assert "boundary faces" in str(info.value)
    spec = BoundarySpec([("neumann", left), ("dirichlet", lambda x: np.ones(len(x), bool))])
    tags, _ = tag_geometry(mesh, VERTICAL_FRACTURE, spec)
    assert (tags.face_kind == NEUMANN).sum() == 4
    assert (tags.face_kind == DIRICHLET).sum() == 12
    assert (tags.face_kind == FRACTURE).sum() == 4


def test_immersed_tip_is_neumann():
    mesh = uniform_grid(4)
    frac = Fracture((0.5, 1.0), (0.5, 0.5))
    tags, regions = tag_geometry(mesh, frac)
    assert tags.n_fracture_faces == 2
    assert tags.fracture_dirichlet.tolist() == [True, False, False]


def test_validate_reports_overlap():
    verts = [[0, 0], [1, 0], [1, 1], [0, 1]]
    mesh = PolygonalMesh.from_elements(verts, [[0, 1, 2, 3], [0, 1, 2, 3]])
    diag = validate_mesh(mesh)
    assert not diag.ok
    assert not diag["consistent orientation"].passed
    assert "FAIL" in str(diag)


def test_point_locator():
    mesh = uniform_grid(4)
    loc = PointLocator(mesh)
    e = loc.locate(np.array([[0.1, 0.1], [0.9, 0.6], [1.5, 0.5]]))
    assert e[0] == 0 and e[2] == -1
    assert np.all(np.abs(mesh.centroids[e[1]] - [0.875, 0.625]) < 1e-12)
    # a vertex shared by four elements
    assert len(loc.locate_all(np.array([[0.5, 0.5]]), 1e-12)[0]) == 4
