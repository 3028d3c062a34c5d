"""Problem configuration files, field export and run reports.

Config files are JSON objects with the sections ``mesh``, ``materials``,
``boundary``, ``sources`` and ``solver``::

    {
      "mesh": {"box": {"extent": [1, 1, 1], "divisions": [8, 8, 8],
                       "regions": [{"tag": 2, "min": [0, 0, 0.375], "max": [1, 1, 0.625]}]}},
      "materials": {"coupling": "model_a",
                    "1": {"reluctivity": 1.0},
                    "2": {"lambda": 100.0, "mu": 100.0, "reluctivity": 0.05}},
      "boundary": {"displacement": {"1": {"value": [0, 0, 0], "gradient": [[0, 0, 0], [0, 0, 0], [0, 0, 0]]}},
                   "potential": {"5": {"value": [0, 0, 0], "gradient": [[0, 0, 0], [1, 0, 0], [0, 0, 0]]}}},
      "sources": {"body_force": {"2": [0, 0, -1]}, "current": {}},
      "solver": {"tol": 1e-10}
    }

``mesh`` holds either ``file`` (a ``mesh3d`` file, relative to the config)
or ``box``. Box regions are axis-aligned boxes tested against element
centroids; later entries win and unmatched elements get ``default_region``.
Region and boundary tags are written as JSON strings. Affine fields
(``displacement``, ``potential``) map ``x`` to ``value + gradient @ x``.
"""
import json
import logging
import math
import os
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .algebra import Metric, hodge_star
from .constitutive import COUPLINGS, IsotropicElastic, MagnetoElasticEnergy
from .errors import ConfigError, InvalidMaterial
from .mesh import generate_box_mesh, read_mesh
from .solvers.problem import AffineField, ProblemSpec, SolverSettings

log = logging.getLogger(__name__)

SECTIONS = ("mesh", "materials", "boundary", "sources", "solver")
BOUNDARY_KINDS = ("displacement", "traction", "potential", "surface_field")
SOURCE_KINDS = ("body_force", "current")
_MATERIAL_GLOBALS = ("coupling", "quadratic_metric_term", "body_regions")
_SOLVER_KEYS = {f.name: f for f in dc_fields(SolverSettings)}


def _line_of(text, keys):
    """1-based line of the nested key path ``keys`` in ``text`` (best effort)."""
    if text is None:
        return None
    pos = 0
    found = None
    for key in keys:
        at = text.find(json.dumps(str(key)), pos)
        if at < 0:
            break
        pos, found = at, at
    return None if found is None else text.count("\n", 0, found) + 1


class _Reader:
    """Validation helpers that attach line numbers to error messages."""

    def __init__(self, text):
        self.text = text

    def fail(self, message, *path):
        raise ConfigError(message, line=_line_of(self.text, path))

    def number(self, value, *path, positive=False):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            self.fail(f"{'/'.join(map(str, path))}: expected a finite number, got {value!r}", *path)
        if positive and value <= 0:
            self.fail(f"{'/'.join(map(str, path))}: must be positive, got {value!r}", *path)
        return float(value)

    def vector(self, value, n, *path):
        if not isinstance(value, (list, tuple)) or len(value) != n:
            self.fail(f"{'/'.join(map(str, path))}: expected a list of {n} numbers", *path)
        return [self.number(v, *path) for v in value]

    def tag(self, key, *path):
        try:
            t = int(key)
        except (TypeError, ValueError):
            self.fail(f"{'/'.join(map(str, path))}: tag {key!r} is not an integer", *path)
        return str(t)

    def affine(self, value, *path):
        if not isinstance(value, dict) or set(value) - {"value", "gradient"}:
            self.fail(f"{'/'.join(map(str, path))}: expected an object with 'value' and 'gradient'", *path)
        v = self.vector(value.get("value", [0.0, 0.0, 0.0]), 3, *path, "value")
        g = value.get("gradient", [[0.0] * 3] * 3)
        if not isinstance(g, list) or len(g) != 3:
            self.fail(f"{'/'.join(map(str, path))}: gradient must be 3x3", *path, "gradient")
        return {"value": v, "gradient": [self.vector(row, 3, *path, "gradient") for row in g]}


def _normalize_mesh(r, sec):
    if not isinstance(sec, dict) or (("file" in sec) == ("box" in sec)):
        r.fail("mesh: give exactly one of 'file' or 'box'", "mesh")
    if "file" in sec:
        if not isinstance(sec["file"], str):
            r.fail("mesh/file must be a path string", "mesh", "file")
        return {"file": sec["file"]}
    box = sec["box"]
    if not isinstance(box, dict):
        r.fail("mesh/box must be an object", "mesh", "box")
    unknown = set(box) - {"extent", "divisions", "origin", "jitter", "seed", "regions", "default_region"}
    if unknown:
        r.fail(f"mesh/box: unknown key(s) {sorted(unknown)}", "mesh", "box", sorted(unknown)[0])
    div = box.get("divisions", [4, 4, 4])
    if isinstance(div, int):
        div = [div] * 3
    if not isinstance(div, list) or len(div) != 3 or not all(isinstance(d, int) and d >= 1 for d in div):
        r.fail("mesh/box/divisions must be 3 positive integers", "mesh", "box", "divisions")
    out = {
        "extent": [r.number(e, "mesh", "box", "extent", positive=True) for e in box.get("extent", [1.0, 1.0, 1.0])],
        "divisions": list(div),
        "origin": r.vector(box.get("origin", [0.0, 0.0, 0.0]), 3, "mesh", "box", "origin"),
        "jitter": r.number(box.get("jitter", 0.0), "mesh", "box", "jitter"),
        "seed": box.get("seed"),
        "default_region": int(box.get("default_region", 1)),
        "regions": [],
    }
    if len(out["extent"]) != 3:
        r.fail("mesh/box/extent must have 3 entries", "mesh", "box", "extent")
    if not 0 <= out["jitter"] < 0.25:
        r.fail("mesh/box/jitter must lie in [0, 0.25)", "mesh", "box", "jitter")
    for item in box.get("regions", []):
        if not isinstance(item, dict) or "tag" not in item:
            r.fail("mesh/box/regions entries need a 'tag'", "mesh", "box", "regions")
        out["regions"].append({
            "tag": int(item["tag"]),
            "min": r.vector(item.get("min", [-1e300] * 3), 3, "mesh", "box", "regions", "min"),
            "max": r.vector(item.get("max", [1e300] * 3), 3, "mesh", "box", "regions", "max"),
        })
    return {"box": out}


def _normalize_materials(r, sec):
    if not isinstance(sec, dict):
        r.fail("materials must be an object", "materials")
    out = {"coupling": sec.get("coupling", "none"),
           "quadratic_metric_term": sec.get("quadratic_metric_term", True)}
    if out["coupling"] not in COUPLINGS:
        r.fail(f"materials/coupling: unknown coupling {out['coupling']!r}; expected one of {list(COUPLINGS)}",
               "materials", "coupling")
    if not isinstance(out["quadratic_metric_term"], bool):
        r.fail("materials/quadratic_metric_term must be true or false", "materials", "quadratic_metric_term")
    if "body_regions" in sec:
        out["body_regions"] = sorted(int(t) for t in sec["body_regions"])
    regions = {}
    for key, val in sec.items():
        if key in _MATERIAL_GLOBALS:
            continue
        tag = r.tag(key, "materials", key)
        if not isinstance(val, dict):
            r.fail(f"materials/{key} must be an object", "materials", key)
        unknown = set(val) - {"lambda", "mu", "reluctivity"}
        if unknown:
            r.fail(f"materials/{key}: unknown key(s) {sorted(unknown)}", "materials", key, sorted(unknown)[0])
        if ("lambda" in val) != ("mu" in val):
            r.fail(f"region {tag}: give both 'lambda' and 'mu' or neither", "materials", key)
        regions[tag] = {k: r.number(v, "materials", key, k, positive=k != "lambda") for k, v in val.items()}
    out.update(sorted(regions.items(), key=lambda kv: int(kv[0])))
    return out


def _normalize_tagged(r, sec, kinds, section, convert):
    if not isinstance(sec, dict):
        r.fail(f"{section} must be an object", section)
    unknown = set(sec) - set(kinds)
    if unknown:
        r.fail(f"{section}: unknown key(s) {sorted(unknown)}; expected {list(kinds)}", section, sorted(unknown)[0])
    out = {}
    for kind in kinds:
        entries = sec.get(kind, {})
        if not isinstance(entries, dict):
            r.fail(f"{section}/{kind} must map tags to values", section, kind)
        norm = {r.tag(k, section, kind, k): convert(kind, v, section, kind, k) for k, v in entries.items()}
        out[kind] = dict(sorted(norm.items(), key=lambda kv: int(kv[0])))
    return out


def _normalize_solver(r, sec):
    if not isinstance(sec, dict):
        r.fail("solver must be an object", "solver")
    out = {}
    for key, val in sec.items():
        if key not in _SOLVER_KEYS:
            r.fail(f"solver: unknown key {key!r}", "solver", key)
        if key in ("max_iter", "max_outer"):
            if val is not None and (not isinstance(val, int) or isinstance(val, bool) or val < 1):
                r.fail(f"solver/{key} must be a positive integer", "solver", key)
            out[key] = val
        elif key == "freeze_metric":
            if not isinstance(val, bool):
                r.fail("solver/freeze_metric must be true or false", "solver", key)
            out[key] = val
        elif key == "extension":
            out[key] = str(val)
        else:
            out[key] = r.number(val, "solver", key, positive=True)
    try:
        SolverSettings(**out)
    except ConfigError as exc:
        r.fail(str(exc), "solver")
    return dict(sorted(out.items()))


@dataclass
class ProblemConfig:
    """Normalized problem configuration.

    ``data`` is the canonical dictionary; ``base_dir`` resolves relative
    mesh paths.
    """

    data: dict
    base_dir: str = "."
    text: str | None = None

    def to_json(self):
        return json.dumps(self.data, indent=2, sort_keys=False) + "\n"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @property
    def is_magnetic(self):
        b, s = self.data["boundary"], self.data["sources"]
        return bool(b["potential"] or b["surface_field"] or s["current"]) or \
            self.data["materials"]["coupling"] != "none"

    @property
    def is_elastic(self):
        return any("lambda" in m for m in material_regions(self.data["materials"]).values())


def parse_config(source, base_dir=None):
    """Parse and normalize a config from a JSON string, dict or file path.

    Raises
    ------
    ConfigError
        With the 1-based line number when it can be located.
    """
    text = None
    if isinstance(source, dict):
        raw = source
    else:
        if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
            base_dir = base_dir or os.path.dirname(os.path.abspath(source))
            with open(source) as fh:
                text = fh.read()
        else:
            text = str(source)
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    r = _Reader(text)
    if not isinstance(raw, dict):
        r.fail("config must be a JSON object")
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        r.fail(f"unknown section(s) {sorted(unknown)}; expected {list(SECTIONS)}", sorted(unknown)[0])
    if "mesh" not in raw or "materials" not in raw:
        r.fail("config needs at least 'mesh' and 'materials' sections")

    def boundary_value(kind, v, *path):
        return r.affine(v, *path) if kind in ("displacement", "potential") else r.vector(v, 3, *path)

    def source_value(kind, v, *path):
        return r.vector(v, 3, *path)

    data = {
        "mesh": _normalize_mesh(r, raw["mesh"]),
        "materials": _normalize_materials(r, raw["materials"]),
        "boundary": _normalize_tagged(r, raw.get("boundary", {}), BOUNDARY_KINDS, "boundary", boundary_value),
        "sources": _normalize_tagged(r, raw.get("sources", {}), SOURCE_KINDS, "sources", source_value),
        "solver": _normalize_solver(r, raw.get("solver", {})),
    }
    return ProblemConfig(data, base_dir or ".", text)


def material_regions(materials):
    """Per-region entries of a normalized ``materials`` section, keyed by tag string."""
    return {k: v for k, v in materials.items() if k not in _MATERIAL_GLOBALS}


def serialize_config(config):
    """Canonical JSON text; ``parse_config(serialize_config(c))`` reproduces ``c``."""
    return config.to_json()


# -- building problems ----------------------------------------------------
def _box_region_rule(regions, default):
    def rule(c):
        tags = np.full(len(c), default, dtype=np.int64)
        for item in regions:
            inside = np.all((c >= np.array(item["min"])) & (c <= np.array(item["max"])), axis=1)
            tags[inside] = item["tag"]
        return tags
    return rule


def mesh_from_config(config, divisions=None):
    """Mesh described by the config; ``divisions`` overrides the box resolution."""
    sec = config.data["mesh"]
    if "file" in sec:
        if divisions is not None:
            raise ConfigError("refinement levels need a 'box' mesh, not a mesh file")
        path = sec["file"]
        if not os.path.isabs(path):
            path = os.path.join(config.base_dir, path)
        if not os.path.exists(path):
            raise ConfigError(f"mesh file not found: {path}")
        return read_mesh(path)
    sec = sec["box"]
    if divisions is None:
        div = sec["divisions"]
    elif np.isscalar(divisions):
        # n cells along the shortest side, roughly cubic cells elsewhere
        ext = np.asarray(sec["extent"])
        div = [max(1, int(round(divisions * e / ext.min()))) for e in ext]
    else:
        div = divisions
    return generate_box_mesh(sec["extent"], div, _box_region_rule(sec["regions"], sec["default_region"]),
                             origin=sec["origin"], jitter=sec["jitter"], seed=sec["seed"])


def build_problem(config, mesh=None, coupling=None, tol=None, divisions=None):
    """ProblemSpec from a parsed config, with optional command-line overrides."""
    d = config.data
    mats_cfg = d["materials"]
    coupling = coupling or mats_cfg["coupling"]
    if coupling not in COUPLINGS:
        raise ConfigError(f"unknown coupling {coupling!r}; expected one of {list(COUPLINGS)}")
    mesh = mesh if mesh is not None else mesh_from_config(config, divisions)
    magnetic = config.is_magnetic or coupling != "none"
    present = sorted(set(np.unique(mesh.regions).tolist()))
    regions = material_regions(mats_cfg)
    materials = {}
    for tag in present:
        entry = regions.get(str(tag))
        line = _line_of(config.text, ("materials", str(tag)))
        if entry is None:
            raise ConfigError(f"no material for region {tag}", line=_line_of(config.text, ("materials",)))
        if magnetic and "reluctivity" not in entry:
            raise ConfigError(f"region {tag}: missing 'reluctivity' (required for a magnetic solve)", line=line)
        try:
            elastic = IsotropicElastic(entry["lambda"], entry["mu"]) if "lambda" in entry else None
            materials[tag] = MagnetoElasticEnergy(elastic, entry.get("reluctivity", 1.0), coupling,
                                                  Metric.euclidean(), mats_cfg["quadratic_metric_term"])
        except InvalidMaterial as exc:
            raise ConfigError(f"region {tag}: {exc}", line=line) from None
    settings = dict(d["solver"])
    if tol is not None:
        settings["tol"] = float(tol)
    b, s = d["boundary"], d["sources"]
    return ProblemSpec(
        mesh, materials,
        body_regions=mats_cfg.get("body_regions"),
        displacement_bc={int(t): AffineField(**v) for t, v in b["displacement"].items()},
        traction={int(t): tuple(v) for t, v in b["traction"].items()},
        body_force={int(t): tuple(v) for t, v in s["body_force"].items()},
        potential_bc={int(t): AffineField(**v) for t, v in b["potential"].items()},
        surface_field={int(t): tuple(v) for t, v in b["surface_field"].items()},
        current={int(t): tuple(v) for t, v in s["current"].items()},
        settings=SolverSettings(**settings),
        coupling=coupling,
    )


# -- output ----------------------------------------------------------------
def _cell_block(name, values, kind):
    lines = []
    if kind == "scalars":
        lines.append(f"SCALARS {name} double 1\nLOOKUP_TABLE default")
        lines.extend(f"{v:.12g}" for v in values)
    elif kind == "vectors":
        lines.append(f"VECTORS {name} double")
        lines.extend("{:.12g} {:.12g} {:.12g}".format(*v) for v in values)
    else:
        lines.append(f"TENSORS {name} double")
        for t in values:
            lines.extend("{:.12g} {:.12g} {:.12g}".format(*row) for row in t)
    return "\n".join(lines)


def write_vtk(path, mesh, report=None, title="magelastic fields"):
    """Legacy ASCII VTK unstructured grid with the report's fields.

    Point data: displacement ``nu``. Cell data: ``region``, tensors ``eps``
    (rows: vector component, columns: dx, dy, dz) and ``sigma`` /
    ``magnetic_stress`` (rows: covector component, columns: dy^dz, dx^dz,
    dx^dy as stored), and vectors ``b_star`` (the 1-form star b) and ``h``.
    """
    out = [f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID"]
    out.append(f"POINTS {mesh.n_vertices} double")
    out.extend("{:.17g} {:.17g} {:.17g}".format(*v) for v in mesh.vertices)
    out.append(f"CELLS {mesh.n_tets} {5 * mesh.n_tets}")
    out.extend("4 {} {} {} {}".format(*t) for t in mesh.tets)
    out.append(f"CELL_TYPES {mesh.n_tets}")
    out.extend(["10"] * mesh.n_tets)
    out.append(f"CELL_DATA {mesh.n_tets}")
    out.append(_cell_block("region", mesh.regions, "scalars"))
    if report is not None:
        G = report.spec.metric if report.spec is not None else Metric.euclidean()
        for name, val in (("eps", report.eps), ("sigma", report.sigma), ("magnetic_stress", report.magnetic_stress)):
            if val is not None:
                out.append(_cell_block(name, val.components, "tensors"))
        if report.b is not None:
            out.append(_cell_block("b_star", hodge_star(G, report.b).components, "vectors"))
        if report.h is not None:
            out.append(_cell_block("h", report.h.components, "vectors"))
        if report.nu is not None:
            out.append(f"POINT_DATA {mesh.n_vertices}")
            out.append(_cell_block("nu", np.asarray(report.nu).reshape(-1, 3), "vectors"))
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_report(path, report, extra=None):
    """``report.json``: energies, residuals, iteration counts, outer history."""
    data = report.summary()
    if report.spec is not None:
        mesh = report.spec.mesh
        data["mesh"] = {"vertices": mesh.n_vertices, "edges": len(mesh.edges), "faces": len(mesh.faces),
                        "tets": mesh.n_tets}
    if extra:
        data.update(extra)
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2)
        fh.write("\n")
    return data


__all__ = ["ProblemConfig", "parse_config", "serialize_config", "mesh_from_config", "build_problem",
           "write_vtk", "write_report", "material_regions", "SECTIONS"]
