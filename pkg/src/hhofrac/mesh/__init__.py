from .core import MeshError, PolygonalMesh
from .families import FAMILIES, cartesian_mesh, generate_mesh, nonconforming_mesh, triangular_mesh, uniform_grid
from .io import MeshParseError, read_mesh, write_mesh
from .locate import PointLocator
from .tagging import (
    DIRICHLET,
    FRACTURE,
    INTERIOR,
    NEUMANN,
    BoundarySpec,
    FaceTags,
    Fracture,
    RegionMap,
    tag_geometry,
)
from .validate import Diagnostics, validate_mesh

VERTICAL_FRACTURE = Fracture((0.5, 1.0), (0.5, 0.0))


def generate_family(family: str, level: int, fracture: Fracture = VERTICAL_FRACTURE, bc_spec=None):
    """Mesh of a built-in family with its tags and region map."""
    mesh = generate_mesh(family, level)
    tags, regions = tag_geometry(mesh, fracture, bc_spec)
    return mesh, tags, regions


__all__ = [
    "MeshError",
    "MeshParseError",
    "PolygonalMesh",
    "FAMILIES",
    "generate_mesh",
    "generate_family",
    "triangular_mesh",
    "cartesian_mesh",
    "nonconforming_mesh",
    "uniform_grid",
    "read_mesh",
    "write_mesh",
    "PointLocator",
    "BoundarySpec",
    "FaceTags",
    "Fracture",
    "RegionMap",
    "tag_geometry",
    "Diagnostics",
    "validate_mesh",
    "VERTICAL_FRACTURE",
    "INTERIOR",
    "FRACTURE",
    "DIRICHLET",
    "NEUMANN",
]
