"""Job configuration: declarative description of a mesh, materials, boundary
conditions, discretization orders and an analysis, with a JSON representation
whose parse -> serialize -> parse composition is a fixed point.

A config can come from a JSON file, from command-line flags, or both (the
file's explicit entries override flags).  Building the actual domain objects
(mesh, material table, boundary-condition table) happens in :func:`build_mesh`
and friends; every user error raised out of this module is a
:class:`ConfigError` naming the offending field.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .assembly import BoundaryCondition
from .generators import gen_patch_plate, gen_semicylinder
from .meshing import Mesh, mesh_from_text
from .tensors import PRESETS, Material, parse_material_file


class ConfigError(ValueError):
    """A configuration problem; the message names the field at fault."""


GENERATORS = {
    "semicylinder": gen_semicylinder,
    "patch_plate": gen_patch_plate,
}

ANALYSES = ("static", "eigen", "convergence")
QUANTITIES = ("ux", "uy", "uz", "umag", "phi")


@dataclass
class MeshSpec:
    """Mesh source: a named generator with parameters, or a mesh text file."""
    generator: str | None = None
    params: dict = field(default_factory=dict)
    file: str | None = None


@dataclass
class BCSpec:
    """Boundary data on one facet tag."""
    mech: str = "free"            # "free" | "clamp"
    potential: float | None = None


@dataclass
class ReferenceSpec:
    """A published value a probe quantity is compared against in reports."""
    probe: str
    quantity: str = "umag"        # one of QUANTITIES
    value: float = 0.0            # SI units (m for displacements, V for phi)


@dataclass
class SweepRow:
    """One refinement-study row: mesh-size label, field order, parameter
    overrides applied on top of the base generator parameters."""
    h: float
    order: int
    params: dict = field(default_factory=dict)


@dataclass
class JobConfig:
    analysis: str = "static"
    mesh: MeshSpec = field(default_factory=MeshSpec)
    materials: dict = field(default_factory=dict)   # name -> "preset:x" | path
    bcs: dict = field(default_factory=dict)         # tag -> BCSpec
    order: int = 2
    order_phi: int | None = None                    # None -> order + 1
    condense: bool = True
    seed: int = 0
    rtol: float = 1e-10
    n_modes: int = 5
    eig_tol: float = 1e-10
    eig_res_tol: float = 1e-8
    eig_max_iter: int = 400
    oc_tag: str | None = None      # eigen: electrode left floating in the
                                   # paired open-circuit run
    references: list = field(default_factory=list)  # [ReferenceSpec]
    sweep: list = field(default_factory=list)       # [SweepRow]
    report: str | None = None
    vtk: str | None = None
    vtk_subdivision: int = 2

    @property
    def q_phi(self) -> int:
        return self.order + 1 if self.order_phi is None else self.order_phi


# ---------------------------------------------------------------------------
# dict <-> dataclass with field-level validation
# ---------------------------------------------------------------------------

def _take(d: dict, cls, where: str):
    """Instantiate a dataclass from a dict, rejecting unknown keys."""
    known = cls.__dataclass_fields__
    bad = sorted(set(d) - set(known))
    if bad:
        raise ConfigError(f"{where}: unknown field(s) {bad}")
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(data: dict) -> JobConfig:
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object at top level")
    data = dict(data)
    mesh = _take(dict(data.pop("mesh", {})), MeshSpec, "mesh")
    bcs = {tag: _take(dict(spec), BCSpec, f"bcs.{tag}")
           for tag, spec in dict(data.pop("bcs", {})).items()}
    refs = [_take(dict(r), ReferenceSpec, f"references[{i}]")
            for i, r in enumerate(data.pop("references", []))]
    sweep = [_take(dict(r), SweepRow, f"sweep[{i}]")
             for i, r in enumerate(data.pop("sweep", []))]
    cfg = _take(data, JobConfig, "config")
    cfg.mesh, cfg.bcs, cfg.references, cfg.sweep = mesh, bcs, refs, sweep
    validate(cfg)
    return cfg


def config_to_dict(cfg: JobConfig) -> dict:
    return asdict(cfg)


def config_to_json(cfg: JobConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"


def config_from_json(text: str) -> JobConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from exc
    return config_from_dict(data)


def merge_dicts(base: dict, override: dict) -> dict:
    """Recursive dict merge; scalars and lists in ``override`` win."""
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge_dicts(out[k], v)
        else:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate(cfg: JobConfig) -> None:
    if cfg.analysis not in ANALYSES:
        raise ConfigError(f"analysis: '{cfg.analysis}' is not one of "
                          f"{ANALYSES}")
    have_gen = cfg.mesh.generator is not None
    have_file = cfg.mesh.file is not None
    if have_gen == have_file:
        raise ConfigError("mesh: exactly one of 'generator' and 'file' "
                          "must be set")
    if have_gen and cfg.mesh.generator not in GENERATORS:
        raise ConfigError(f"mesh.generator: '{cfg.mesh.generator}' is not "
                          f"one of {sorted(GENERATORS)}")
    if not isinstance(cfg.order, int) or cfg.order < 1:
        raise ConfigError("order: must be an integer >= 1")
    if cfg.order_phi is not None and (not isinstance(cfg.order_phi, int)
                                      or cfg.order_phi < 1):
        raise ConfigError("order_phi: must be an integer >= 1")
    for tag, bc in cfg.bcs.items():
        if bc.mech not in ("free", "clamp"):
            raise ConfigError(f"bcs.{tag}.mech: '{bc.mech}' is not 'free' "
                              "or 'clamp'")
        if bc.potential is not None and not isinstance(bc.potential,
                                                       (int, float)):
            raise ConfigError(f"bcs.{tag}.potential: must be a number")
    for i, ref in enumerate(cfg.references):
        if ref.quantity not in QUANTITIES:
            raise ConfigError(f"references[{i}].quantity: '{ref.quantity}' "
                              f"is not one of {QUANTITIES}")
    if cfg.analysis == "eigen" and cfg.n_modes < 1:
        raise ConfigError("n_modes: must be >= 1 for eigen analysis")
    if cfg.analysis == "convergence":
        if not cfg.sweep:
            raise ConfigError("sweep: convergence analysis needs at least "
                              "one row")
        if not cfg.references:
            raise ConfigError("references: convergence analysis needs a "
                              "reference value")
        if cfg.mesh.generator is None:
            raise ConfigError("mesh.generator: convergence rows override "
                              "generator parameters, a mesh file cannot "
                              "be swept")
        for i, row in enumerate(cfg.sweep):
            if not isinstance(row.order, int) or row.order < 1:
                raise ConfigError(f"sweep[{i}].order: must be an integer "
                                  ">= 1")
    if cfg.vtk_subdivision < 1:
        raise ConfigError("vtk_subdivision: must be >= 1")
    if cfg.oc_tag is not None:
        bc = cfg.bcs.get(cfg.oc_tag)
        if bc is None or bc.potential is None:
            raise ConfigError("oc_tag: must name a tag that carries a "
                              "potential in 'bcs'")


# ---------------------------------------------------------------------------
# building domain objects
# ---------------------------------------------------------------------------

def build_mesh(cfg: JobConfig, param_override: dict | None = None) -> Mesh:
    spec = cfg.mesh
    if spec.file is not None:
        path = Path(spec.file)
        if not path.exists():
            raise ConfigError(f"mesh.file: '{spec.file}' does not exist")
        try:
            return mesh_from_text(path.read_text())
        except ValueError as exc:
            raise ConfigError(f"mesh.file: {exc}") from exc
    params = dict(spec.params)
    if param_override:
        params.update(param_override)
    try:
        return GENERATORS[spec.generator](**params)
    except TypeError as exc:
        raise ConfigError(f"mesh.params: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"mesh.params: {exc}") from exc


def build_materials(cfg: JobConfig, mesh: Mesh) -> dict[str, Material]:
    out: dict[str, Material] = {}
    for name, src in cfg.materials.items():
        if not isinstance(src, str):
            raise ConfigError(f"materials.{name}: expected 'preset:<name>' "
                              "or a file path")
        if src.startswith("preset:"):
            preset = src[len("preset:"):]
            if preset not in PRESETS:
                raise ConfigError(f"materials.{name}: unknown preset "
                                  f"'{preset}' (have {sorted(PRESETS)})")
            out[name] = PRESETS[preset]()
        else:
            path = Path(src)
            if not path.exists():
                raise ConfigError(f"materials.{name}: file '{src}' does "
                                  "not exist")
            try:
                out[name] = parse_material_file(path.read_text())
            except ValueError as exc:
                raise ConfigError(f"materials.{name}: {exc}") from exc
    used = {el.material for el in mesh.elements}
    missing = sorted(used - set(out))
    if missing:
        raise ConfigError(f"materials: mesh uses {missing} but no source "
                          "is configured for them")
    return out


def build_bcs(cfg: JobConfig, mesh: Mesh) -> dict[str, BoundaryCondition]:
    mesh_tags = set(mesh.facet_tags.values())
    unknown = sorted(set(cfg.bcs) - mesh_tags)
    if unknown:
        raise ConfigError(f"bcs: tag(s) {unknown} do not appear in the mesh "
                          f"(mesh has {sorted(mesh_tags)})")
    out = {}
    for tag, bc in cfg.bcs.items():
        pot = None if bc.potential is None else float(bc.potential)
        out[tag] = BoundaryCondition(mech=bc.mech, potential=pot)
    return out


def check_probes(cfg: JobConfig, mesh: Mesh) -> None:
    for i, ref in enumerate(cfg.references):
        if ref.probe not in mesh.probes:
            raise ConfigError(f"references[{i}].probe: '{ref.probe}' is not "
                              f"a mesh probe (have {sorted(mesh.probes)})")


def probe_quantity(entry: dict, quantity: str) -> float:
    """Extract a scalar report quantity from one probe's field values."""
    import numpy as np
    u = entry["u"]
    if quantity == "ux":
        return float(u[0])
    if quantity == "uy":
        return float(u[1])
    if quantity == "uz":
        return float(u[2])
    if quantity == "umag":
        return float(np.linalg.norm(u))
    if quantity == "phi":
        return float(entry["phi"])
    raise ConfigError(f"quantity: '{quantity}' is not one of {QUANTITIES}")
