"""Command-line interface.

Subcommands::

    convergence   manufactured-solution error table
    fivespot      quarter five-spot with or without a fracture
    random-perm   layered random permeability
    solve         custom problem on a POLYMESH file (or built-in family)
    run           built-in named config or JSON config file
    show-config   print a built-in named config as JSON

Exit codes: 0 success, 1 configuration error, 2 solver failure, 3 mesh error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_MESH = 0, 1, 2, 3

log = logging.getLogger("hhofrac")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


# ---------------------------------------------------------------------------
# CSV output


def fmt(value) -> str:
    """Locale-independent, round-trip exact text for a CSV cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(rows: list[dict], columns: list[str], dest=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    text = buf.getvalue()
    if dest is None or str(dest) == "-":
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text)
    return text


CONVERGENCE_COLUMNS = [
    "family", "k", "level", "h", "dofs",
    "err_Uh_H", "err_ph_L2", "err_pFract_en", "err_pFract_L2",
    "eoc_err_Uh_H", "eoc_err_ph_L2", "eoc_err_pFract_en", "eoc_err_pFract_L2",
]


def cell_rows(sol, mesh, regions) -> tuple[list[dict], list[str]]:
    """Per-element pressure coefficients and centroid values."""
    from .postprocess import element_centroid_pressure

    pc = element_centroid_pressure(sol, mesh)
    ncoef = sol.pressure.shape[1]
    cols = ["element", "subdomain", "cx", "cy", "p_centroid"] + [f"c{i}" for i in range(ncoef)]
    rows = []
    for e in range(mesh.n_elements):
        row = {
            "element": e,
            "subdomain": int(regions.subdomain[e]),
            "cx": mesh.centroids[e, 0],
            "cy": mesh.centroids[e, 1],
            "p_centroid": pc[e],
        }
        row.update({f"c{i}": sol.pressure[e, i] for i in range(ncoef)})
        rows.append(row)
    return rows, cols


def fracture_rows(sol, mesh, tags) -> tuple[list[dict], list[str]]:
    """Per-fracture-face coefficients and endpoint values, in fracture order."""
    k1 = sol.k + 1
    cols = ["face", "x0", "y0", "x1", "y1", "s0", "s1", "p_v0", "p_v1"] + [f"q{i}" for i in range(k1)]
    rows = []
    if tags.fracture is None:
        return rows, cols
    for i, f in enumerate(tags.fracture_faces):
        a, b = tags.frac_face_vertices[i]
        pa = mesh.vertices[tags.fracture_vertices[a]]
        pb = mesh.vertices[tags.fracture_vertices[b]]
        row = {
            "face": int(f),
            "x0": pa[0], "y0": pa[1], "x1": pb[0], "y1": pb[1],
            "s0": float(tags.fracture.parameter(pa)),
            "s1": float(tags.fracture.parameter(pb)),
            "p_v0": sol.frac_vertices[a],
            "p_v1": sol.frac_vertices[b],
        }
        row.update({f"q{j}": sol.frac_faces[i, j] for j in range(k1)})
        rows.append(row)
    return rows, cols


def dump_fields(prefix, sol, mesh, tags, regions) -> None:
    rows, cols = cell_rows(sol, mesh, regions)
    write_csv(rows, cols, f"{prefix}_cells.csv")
    if tags.fracture is not None:
        rows, cols = fracture_rows(sol, mesh, tags)
        write_csv(rows, cols, f"{prefix}_fracture.csv")


def dump_samples(path, samples) -> None:
    write_csv([{"s": s, "p": p} for s, p in samples], ["s", "p"], path)


# ---------------------------------------------------------------------------
# configuration


BUILTIN_CONFIGS = {
    "convergence-2ell": {"case": {"name": "convergence", "kappa_n": "2ell", "family": "triangular"},
                         "degrees": [0, 1, 2], "levels": [1, 2, 3, 4]},
    "convergence-1": {"case": {"name": "convergence", "kappa_n": "1", "family": "triangular"},
                      "degrees": [0, 1, 2], "levels": [1, 2, 3, 4]},
    "fivespot-no-fracture": {"case": {"name": "fivespot", "variant": "no_fracture", "family": "triangular"},
                             "degree": 2, "level": 4},
    "fivespot-permeable": {"case": {"name": "fivespot", "variant": "permeable", "family": "triangular"},
                           "degree": 2, "level": 4},
    "fivespot-impermeable": {"case": {"name": "fivespot", "variant": "impermeable", "family": "triangular"},
                             "degree": 2, "level": 4},
    "random-perm-homogeneous": {"case": {"name": "random-perm", "variant": "homogeneous"}, "degree": 2, "seed": 0},
    "random-perm": {"case": {"name": "random-perm", "variant": "random"}, "degree": 2, "seed": 0},
    "manufactured": {
        "custom": {
            "mesh": {"family": "cartesian", "level": 2},
            "fracture": {"p0": [0.5, 1.0], "p1": [0.5, 0.0]},
            "boundary": {"rules": [{"kind": "dirichlet", "where": "all"}], "tips": "dirichlet"},
            "K": "manufactured",
            "fracture_params": {"kappa_n": 0.02, "kappa_tau": 1.0, "ell": 0.01},
            "xi": 0.75,
            "sources": {"f": "manufactured_f", "g_B": "manufactured_p",
                        "f_gamma": "manufactured_f_gamma", "g_gamma": "manufactured_p_gamma"},
            "exact": "manufactured",
        },
        "degree": 1,
    },
}


def load_config(spec: str) -> dict:
    """A built-in config name or the path of a JSON file."""
    if spec in BUILTIN_CONFIGS:
        return copy.deepcopy(BUILTIN_CONFIGS[spec])
    path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"no built-in config or file named {spec!r}; built-ins: {', '.join(BUILTIN_CONFIGS)}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{spec}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{spec}: top level must be an object")
    return cfg


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return value


def polynomial(terms, name: str):
    """Field sum(c * x1**i * x2**j) from a list of [c, i, j] triples."""
    try:
        arr = np.array(terms, dtype=float).reshape(-1, 3)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: polynomial must be a list of [coefficient, i, j] triples") from None
    if np.any(arr[:, 1:] < 0) or np.any(arr[:, 1:] != np.round(arr[:, 1:])):
        raise ConfigError(f"{name}: polynomial exponents must be non-negative integers")
    c, pi, pj = arr[:, 0], arr[:, 1].astype(int), arr[:, 2].astype(int)

    def field(x, *args):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for ci, a, b in zip(c, pi, pj):
            out = out + ci * x[..., 0] ** a * x[..., 1] ** b
        return out

    return field


def builtin_fields(kappa_n: float, xi: float) -> dict:
    from .cases import ManufacturedSolution, fivespot_source

    ms = ManufacturedSolution(kappa_n, xi=xi)
    return {
        "fivespot_source": fivespot_source,
        "manufactured_p": ms.p,
        "manufactured_f": ms.f,
        "manufactured_p_gamma": ms.p_gamma,
        "manufactured_f_gamma": ms.f_gamma,
        "x1": lambda x, *a: np.asarray(x)[..., 0],
        "x2": lambda x, *a: np.asarray(x)[..., 1],
    }


def parse_field(spec, name: str, named: dict, bulk: bool):
    """Number, built-in name, polynomial, or (bulk only) per-side mapping."""
    if spec is None:
        return 0.0
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return float(spec)
    if isinstance(spec, str):
        if spec not in named:
            raise ConfigError(f"{name}: unknown built-in field {spec!r}; known: {', '.join(sorted(named))}")
        return named[spec]
    if isinstance(spec, list):
        return polynomial(spec, name)
    if isinstance(spec, dict):
        if "poly" in spec:
            return polynomial(spec["poly"], name)
        if bulk and set(spec) == {"side1", "side2"}:
            f1 = parse_field(spec["side1"], f"{name}.side1", named, False)
            f2 = parse_field(spec["side2"], f"{name}.side2", named, False)
            g1 = f1 if callable(f1) else (lambda x, *a, v=f1: np.full(np.shape(x)[:-1], v))
            g2 = f2 if callable(f2) else (lambda x, *a, v=f2: np.full(np.shape(x)[:-1], v))

            def field(x, side=1):
                s = np.broadcast_to(np.asarray(side), np.shape(x)[:-1])
                return np.where(s == 1, g1(x, side), g2(x, side))

            return field
    raise ConfigError(f"{name}: cannot interpret field specification {spec!r}")


def _tensor(value, name: str) -> np.ndarray:
    try:
        K = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: permeability must be a number, a pair or a 2x2 matrix") from None
    if K.shape == ():
        K = K * np.eye(2)
    elif K.shape == (2,):
        K = np.diag(K)
    if K.shape != (2, 2):
        raise ConfigError(f"{name}: permeability must be a number, a pair or a 2x2 matrix")
    return K


def parse_permeability(spec, kappa_n: float):
    if spec is None:
        return np.eye(2)
    if spec == "manufactured":
        from .cases import ManufacturedSolution

        return ManufacturedSolution(kappa_n).K
    if isinstance(spec, dict):
        if set(spec) != {"1", "2"}:
            raise ConfigError("K: per-subdomain permeability needs exactly the keys '1' and '2'")
        K1, K2 = _tensor(spec["1"], "K.1"), _tensor(spec["2"], "K.2")

        def field(x, side):
            s = np.broadcast_to(np.asarray(side), np.shape(x)[:-1])[..., None, None]
            return np.where(s == 1, K1, K2)

        return field
    return _tensor(spec, "K")


SIDES = {
    "left": (0, "min"),
    "right": (0, "max"),
    "bottom": (1, "min"),
    "top": (1, "max"),
}


def parse_boundary(spec, bounds: np.ndarray):
    from .mesh import BoundarySpec

    if spec is None:
        return BoundarySpec.all_dirichlet()
    if not isinstance(spec, dict):
        raise ConfigError("boundary must be an object with 'rules' and optional 'tips'")
    tips = spec.get("tips", "dirichlet")
    if tips not in ("dirichlet", "neumann"):
        raise ConfigError(f"boundary.tips must be 'dirichlet' or 'neumann', got {tips!r}")
    lo, hi = bounds
    tol = 1e-10 * float(np.hypot(*(hi - lo)))
    rules = []
    for i, rule in enumerate(spec.get("rules", [])):
        name = f"boundary.rules[{i}]"
        if not isinstance(rule, dict) or rule.get("kind") not in ("dirichlet", "neumann"):
            raise ConfigError(f"{name}: needs kind 'dirichlet' or 'neumann'")
        where = rule.get("where")
        if where == "all":
            pred = lambda x: np.ones(len(x), dtype=bool)  # noqa: E731
        elif where in SIDES:
            axis, end = SIDES[where]
            value = lo[axis] if end == "min" else hi[axis]
            pred = lambda x, a=axis, v=value: np.abs(x[:, a] - v) <= tol  # noqa: E731
        elif isinstance(where, dict) and "box" in where:
            box = np.array(where["box"], dtype=float)
            if box.shape != (4,):
                raise ConfigError(f"{name}: box must be [xmin, ymin, xmax, ymax]")
            pred = lambda x, b=box: (  # noqa: E731
                (x[:, 0] >= b[0] - tol) & (x[:, 1] >= b[1] - tol) & (x[:, 0] <= b[2] + tol) & (x[:, 1] <= b[3] + tol)
            )
        else:
            raise ConfigError(f"{name}: 'where' must be 'all', a side name or {{'box': [...]}}")
        rules.append((rule["kind"], pred))
    return BoundarySpec(rules, tips=tips)


def build_custom(block: dict, mesh_path=None):
    """Mesh, tags, regions, problem data and optional exact solution."""
    from .assembly import ProblemData
    from .mesh import Fracture, generate_mesh, read_mesh, tag_geometry

    if not isinstance(block, dict):
        raise ConfigError("custom block must be an object")
    mesh_spec = block.get("mesh", {})
    if mesh_path is not None:
        mesh = read_mesh(mesh_path)
    elif isinstance(mesh_spec, dict) and "file" in mesh_spec:
        mesh = read_mesh(mesh_spec["file"])
    elif isinstance(mesh_spec, dict) and "family" in mesh_spec:
        mesh = generate_mesh(str(mesh_spec["family"]), _int(mesh_spec.get("level", 0), "mesh.level"))
    else:
        raise ConfigError("custom.mesh needs 'file' or 'family' (or pass a mesh file)")

    frac = block.get("fracture")
    fracture = None
    if frac is not None:
        try:
            fracture = Fracture(tuple(map(float, frac["p0"])), tuple(map(float, frac["p1"])))
        except (KeyError, TypeError, ValueError):
            raise ConfigError("fracture must be {'p0': [x, y], 'p1': [x, y]}") from None
        if fracture.length <= 0:
            raise ConfigError("fracture endpoints coincide")

    params = block.get("fracture_params", {})
    kappa_n = _number(params.get("kappa_n", 1.0), "fracture_params.kappa_n")
    kappa_tau = _number(params.get("kappa_tau", 1.0), "fracture_params.kappa_tau")
    ell = _number(params.get("ell", 1.0), "fracture_params.ell")
    xi = _number(block.get("xi", 0.75), "xi")
    if not 0.5 < xi <= 1.0:
        raise ConfigError(f"xi must lie in (1/2, 1], got {xi}")
    if min(kappa_n, kappa_tau, ell) <= 0:
        raise ConfigError("fracture parameters must be positive")

    named = builtin_fields(kappa_n, xi)
    sources = block.get("sources", {})
    unknown = set(sources) - {"f", "g_B", "f_gamma", "g_gamma"}
    if unknown:
        raise ConfigError(f"unknown source keys {sorted(unknown)}")
    data = ProblemData(
        K=parse_permeability(block.get("K"), kappa_n),
        f=parse_field(sources.get("f"), "f", named, True),
        g_B=parse_field(sources.get("g_B"), "g_B", named, True),
        f_gamma=parse_field(sources.get("f_gamma"), "f_gamma", named, False),
        g_gamma=parse_field(sources.get("g_gamma"), "g_gamma", named, False),
        kappa_n=kappa_n,
        kappa_tau=kappa_tau,
        ell=ell,
        xi=xi,
    )
    bounds = np.array([mesh.vertices.min(0), mesh.vertices.max(0)])
    bc = parse_boundary(block.get("boundary"), bounds)
    tags, regions = tag_geometry(mesh, fracture, bc)

    exact = block.get("exact")
    if exact not in (None, "manufactured"):
        raise ConfigError(f"unknown exact solution {exact!r}")
    if exact == "manufactured":
        from .cases import ManufacturedSolution

        exact = ManufacturedSolution(kappa_n, kappa_tau=kappa_tau, ell=ell, xi=xi)
    return mesh, tags, regions, data, exact


# ---------------------------------------------------------------------------
# commands


def _int_list(text: str, name: str) -> list[int]:
    try:
        vals = [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"{name}: empty list")
    return vals


def cmd_convergence(args) -> int:
    from .cases import case_convergence, kappa_n_value
    from .mesh import FAMILIES

    families = list(FAMILIES) if args.family == "all" else args.family.split(",")
    for fam in families:
        if fam not in FAMILIES:
            raise ConfigError(f"unknown mesh family {fam!r}")
    degrees = _int_list(args.degrees, "--degrees")
    if args.level_list:
        levels = _int_list(args.level_list, "--level-list")
    else:
        if args.levels < 1:
            raise ConfigError("--levels must be at least 1")
        levels = list(range(args.start_level, args.start_level + args.levels))
    try:
        kappa_n = kappa_n_value(args.kappa_n)
    except ValueError:
        raise ConfigError(f"--kappa-n: expected a number or '2ell', got {args.kappa_n!r}") from None
    if kappa_n <= 0:
        raise ConfigError("--kappa-n must be positive")
    rows = []
    for fam in families:
        recs = case_convergence(kappa_n, fam, levels, degrees, condense=args.condense, backend=args.backend)
        rows.extend(r.row() for r in recs)
    write_csv(rows, CONVERGENCE_COLUMNS, args.output)
    return EXIT_OK


def cmd_fivespot(args) -> int:
    from .cases import FIVESPOT_VARIANTS, case_fivespot

    if args.variant not in FIVESPOT_VARIANTS:
        raise ConfigError(f"unknown variant {args.variant!r}")
    res = case_fivespot(
        args.variant, args.family, args.level, args.degree,
        n_samples=args.samples if args.line_output else 0,
        condense=args.condense, backend=args.backend,
    )
    cols = ["variant", "family", "k", "level", "h", "dofs"]
    row = {"variant": res.variant, "family": args.family, "k": res.k, "level": res.level, "h": res.h, "dofs": res.dofs}
    if res.flux is not None:
        cols.append("fracture_flux")
        row["fracture_flux"] = res.flux
    write_csv([row], cols, args.output)
    if args.line_output:
        dump_samples(args.line_output, res.samples)
    if args.fields:
        dump_fields(args.fields, res.run.solution, res.mesh, res.tags, res.regions)
    return EXIT_OK


def cmd_random_perm(args) -> int:
    from .cases import case_random_perm

    res = case_random_perm(args.variant, args.seed, args.n, args.degree, condense=args.condense, backend=args.backend)
    from .postprocess import element_centroid_pressure

    pc = element_centroid_pressure(res.run.solution, res.mesh)
    row = {
        "variant": res.variant, "seed": res.seed, "n": args.n, "k": args.degree, "dofs": res.run.dofs,
        "p_centroid_min": float(pc.min()), "p_centroid_max": float(pc.max()),
    }
    write_csv([row], list(row), args.output)
    if args.permeability:
        rows = [
            {"element": e, "cx": res.mesh.centroids[e, 0], "cy": res.mesh.centroids[e, 1],
             "subdomain": int(res.regions.subdomain[e]), "mu1": res.mu1[e], "mu2": res.mu2[e]}
            for e in range(res.mesh.n_elements)
        ]
        write_csv(rows, ["element", "cx", "cy", "subdomain", "mu1", "mu2"], args.permeability)
    if args.fields:
        dump_fields(args.fields, res.run.solution, res.mesh, res.tags, res.regions)
    return EXIT_OK


def run_custom(block: dict, degree: int, condense: bool, backend: str, mesh_path=None,
               fields=None, line=None, output=None) -> int:
    from .driver import run_problem
    from .mesh import validate_mesh
    from .postprocess import error_norms, fracture_flux, line_sample, project_exact

    mesh, tags, regions, data, exact = build_custom(block, mesh_path)
    diag = validate_mesh(mesh, tags, regions)
    if not diag.ok:
        for check in diag.failures():
            print(f"mesh check failed: {check}", file=sys.stderr)
        return EXIT_MESH
    res = run_problem(mesh, tags, regions, data, degree, condense=condense, backend=backend)
    row = {"k": degree, "h": mesh.h, "dofs": res.dofs, "elements": mesh.n_elements,
           "fracture_faces": tags.n_fracture_faces, "residual": res.residual}
    if tags.fracture is not None:
        row["fracture_flux"] = fracture_flux(res.solution, mesh, tags)
    if exact is not None:
        proj = project_exact(exact.u, exact.p, exact.p_gamma, mesh, tags, regions, data, degree)
        row.update(error_norms(res.solution, proj, mesh, tags, regions, data).as_dict())
        row.pop("h", None), row.pop("dofs", None)
        row = {"k": degree, "h": mesh.h, "dofs": res.dofs, **row}
    write_csv([row], list(row), output)
    if fields:
        dump_fields(fields, res.solution, mesh, tags, regions)
    if line:
        seg = line.get("segment")
        n = _int(line.get("n", 101), "line.n")
        try:
            samples = line_sample(res.solution, mesh, regions, seg, n)
        except (TypeError, IndexError):
            raise ConfigError("line.segment must be [[x0, y0], [x1, y1]]") from None
        dump_samples(line.get("output", "-"), samples)
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    block = cfg.get("custom", cfg)
    degree = args.degree if args.degree is not None else _int(cfg.get("degree", 1), "degree")
    line = None
    if args.line:
        pts = [float(t) for t in args.line.split(",")]
        if len(pts) != 4:
            raise ConfigError("--line expects x0,y0,x1,y1")
        line = {"segment": [pts[:2], pts[2:]], "n": args.samples, "output": args.line_output or "-"}
    return run_custom(block, degree, args.condense, args.backend, args.mesh, args.fields, line, args.output)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    has_case, has_custom = "case" in cfg, "custom" in cfg
    if has_case == has_custom:
        raise ConfigError("config must contain exactly one of 'case' and 'custom'")
    solver = cfg.get("solver", {})
    condense = bool(solver.get("condense", True)) if args.condense is None else args.condense
    backend = solver.get("backend", args.backend)
    out = cfg.get("output", {})
    output = args.output or out.get("csv", "-")
    if has_custom:
        degree = _int(cfg.get("degree", 1), "degree")
        return run_custom(cfg["custom"], degree, condense, backend, fields=out.get("fields"),
                          line=cfg.get("line"), output=output)
    case = dict(cfg["case"])
    name = case.pop("name", None)
    ns = argparse.Namespace(condense=condense, backend=backend, output=output, fields=out.get("fields"))
    if name == "convergence":
        ns.family = case.get("family", "triangular")
        ns.kappa_n = str(case.get("kappa_n", "2ell"))
        ns.degrees = ",".join(str(_int(d, "degrees")) for d in cfg.get("degrees", [0, 1, 2]))
        ns.level_list = ",".join(str(_int(v, "levels")) for v in cfg.get("levels", [1, 2, 3, 4]))
        return cmd_convergence(ns)
    if name == "fivespot":
        ns.variant = case.get("variant", "permeable")
        ns.family = case.get("family", "triangular")
        ns.level = _int(cfg.get("level", 4), "level")
        ns.degree = _int(cfg.get("degree", 2), "degree")
        ns.line_output = out.get("line")
        ns.samples = _int(cfg.get("samples", 201), "samples")
        return cmd_fivespot(ns)
    if name == "random-perm":
        ns.variant = case.get("variant", "random")
        seed = cfg.get("seed", 0)
        ns.seed = None if seed is None else _int(seed, "seed")
        ns.n = _int(cfg.get("n", 64), "n")
        ns.degree = _int(cfg.get("degree", 2), "degree")
        ns.permeability = out.get("permeability")
        return cmd_random_perm(ns)
    raise ConfigError(f"unknown case {name!r}")


def cmd_show_config(args) -> int:
    if args.name not in BUILTIN_CONFIGS:
        raise ConfigError(f"unknown built-in config {args.name!r}; built-ins: {', '.join(BUILTIN_CONFIGS)}")
    json.dump(BUILTIN_CONFIGS[args.name], sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_solver_options(p: argparse.ArgumentParser, condense_default=True) -> None:
    p.add_argument("--condense", dest="condense", action="store_true", default=condense_default,
                   help="eliminate cell unknowns before solving (default)")
    p.add_argument("--no-condense", dest="condense", action="store_false", help="solve the full saddle-point system")
    p.add_argument("--backend", choices=["auto", "pardiso", "superlu"], default="auto")
    p.add_argument("-o", "--output", default="-", help="CSV destination (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hhofrac", description="HHO solver for Darcy flow in fractured porous media")
    parser.add_argument("--threads", type=int, default=None, help="cap solver threads (also HHO_THREADS)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convergence", help="manufactured-solution convergence table")
    p.add_argument("--family", default="triangular", help="triangular, cartesian, nonconforming, a comma list or all")
    p.add_argument("--degrees", default="0,1,2")
    p.add_argument("--levels", type=int, default=4, help="number of refinement levels")
    p.add_argument("--start-level", type=int, default=1)
    p.add_argument("--level-list", default=None, help="explicit comma-separated levels (overrides --levels)")
    p.add_argument("--kappa-n", default="2ell", help="normal fracture permeability: a number or '2ell'")
    _add_solver_options(p)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("fivespot", help="quarter five-spot fracture flux")
    p.add_argument("--variant", default="permeable", choices=["no_fracture", "permeable", "impermeable"])
    p.add_argument("--family", default="triangular")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--line-output", default=None, help="CSV of the pressure along x1 = x2")
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--fields", default=None, help="prefix for the field dump CSVs")
    _add_solver_options(p)
    p.set_defaults(func=cmd_fivespot)

    p = sub.add_parser("random-perm", help="layered random permeability")
    p.add_argument("--variant", default="random", choices=["homogeneous", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=64, help="elements per direction")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--permeability", default=None, help="CSV of the per-element permeability")
    p.add_argument("--fields", default=None, help="prefix for the field dump CSVs")
    _add_solver_options(p)
    p.set_defaults(func=cmd_random_perm)

    p = sub.add_parser("solve", help="custom problem from a mesh file and a config")
    p.add_argument("mesh", nargs="?", default=None, help="POLYMESH file (overrides the config mesh)")
    p.add_argument("--config", default=None, help="JSON file or built-in config name")
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--fields", default=None, help="prefix for the field dump CSVs")
    p.add_argument("--line", default=None, help="sample segment x0,y0,x1,y1")
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--line-output", default=None)
    _add_solver_options(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("run", help="run a built-in named config or a JSON config file")
    p.add_argument("config")
    p.add_argument("--condense", dest="condense", action="store_true", default=None)
    p.add_argument("--no-condense", dest="condense", action="store_false")
    p.add_argument("--backend", choices=["auto", "pardiso", "superlu"], default="auto")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("show-config", help="print a built-in config")
    p.add_argument("name")
    p.set_defaults(func=cmd_show_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    from .mesh import MeshError
    from .solver import SolverError, set_threads

    try:
        set_threads(args.threads if args.threads is not None else os.environ.get("HHO_THREADS"))
        return args.func(args)
    except MeshError as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return EXIT_MESH
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
