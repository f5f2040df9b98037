"""Command-line driver: static solves, eigenfrequency studies, refinement
sweeps, verification suites and VTK field export.

Subcommands: ``static``, ``eigen``, ``convergence``, ``verify``, ``export``.
A job is described by flags, a JSON config file, or both; entries in the
config file override flags.  Reports are plain text with embedded
machine-readable lines (``::kind key=value ...``) so results can be consumed
by scripts without scraping the prose.  Every run is deterministic for a
given seed, which is echoed in the report header.

Exit codes: 0 success, 1 invalid configuration or mesh, 2 numerical failure,
3 non-convergence of an iterative solve.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import AssemblyError, assemble
from .config import (ConfigError, JobConfig, build_bcs, build_materials,
                     build_mesh, check_probes, config_from_dict,
                     config_to_dict, merge_dicts, probe_quantity)
from .meshing import validate_mesh
from .solvers import (ConvergenceError, SolverError, eigen_smallest,
                      probe_values, solve_static)
from .verify import FAULTS, run_checks
from .vtk_export import export_vtk

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_NONCONVERGED = 3


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------

def machine_row(_row_kind: str, **kv) -> str:
    parts = [f"::{_row_kind}"]
    for k, v in kv.items():
        if isinstance(v, (bool, np.bool_)):
            parts.append(f"{k}={int(v)}")
        elif isinstance(v, (float, np.floating)):
            parts.append(f"{k}={v:.17e}")
        else:
            parts.append(f"{k}={v}")
    return " ".join(parts)


def parse_machine_rows(text: str) -> list[dict]:
    """Inverse of :func:`machine_row` over a whole report."""
    rows = []
    for ln in text.splitlines():
        if not ln.startswith("::"):
            continue
        parts = ln.split()
        row: dict = {"kind": parts[0][2:]}
        for part in parts[1:]:
            k, v = part.split("=", 1)
            try:
                row[k] = int(v)
            except ValueError:
                try:
                    row[k] = float(v)
                except ValueError:
                    row[k] = v
        rows.append(row)
    return rows


def _header(kind: str, cfg: JobConfig | None, seed: int) -> list[str]:
    lines = [f"tdnns {kind} report",
             f"version: {__version__}",
             f"seed: {seed}"]
    if cfg is not None:
        lines.append("config: " + json.dumps(config_to_dict(cfg),
                                             sort_keys=True))
    lines.append(machine_row("header", kind=kind, seed=seed,
                             version=__version__))
    return lines


def _emit(lines: list[str], path: str | None) -> None:
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if path:
        Path(path).write_text(text)


# ---------------------------------------------------------------------------
# analysis drivers
# ---------------------------------------------------------------------------

def _build_system(cfg: JobConfig, *, condense: bool,
                  param_override: dict | None = None, order: int | None = None,
                  bc_override: dict | None = None):
    mesh = build_mesh(cfg, param_override)
    try:
        validate_mesh(mesh)
    except ValueError as exc:
        raise ConfigError(f"mesh: {exc}") from exc
    mats = build_materials(cfg, mesh)
    bcs = build_bcs(cfg, mesh)
    if bc_override:
        bcs.update(bc_override)
    check_probes(cfg, mesh)
    p = cfg.order if order is None else order
    q = p + (cfg.q_phi - cfg.order)
    try:
        system = assemble(mesh, mats, p, q, bcs, condense=condense)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return system


def _probe_lines(cfg: JobConfig, pv: dict) -> list[str]:
    lines = []
    for name in sorted(pv):
        u = pv[name]["u"]
        phi = float(pv[name]["phi"])
        umag = float(np.linalg.norm(u))
        lines.append(
            f"probe {name}: u = ({u[0] * 1e6:.5f}, {u[1] * 1e6:.5f}, "
            f"{u[2] * 1e6:.5f}) um, |u| = {umag * 1e6:.5f} um, "
            f"phi = {phi:.5f} V")
        lines.append(machine_row("probe", name=name, ux=float(u[0]),
                                 uy=float(u[1]), uz=float(u[2]), umag=umag,
                                 phi=phi))
    for ref in cfg.references:
        val = probe_quantity(pv[ref.probe], ref.quantity)
        delta = (val - ref.value) / ref.value
        if ref.quantity == "phi":
            shown, unit = f"{val:.5f}", "V"
            shown_ref = f"{ref.value:.5f}"
        else:
            shown, unit = f"{val * 1e6:.5f}", "um"
            shown_ref = f"{ref.value * 1e6:.5f}"
        lines.append(
            f"probe {ref.probe} {ref.quantity}: {shown} {unit} vs "
            f"reference {shown_ref} {unit}: "
            f"delta_rel = {100 * delta:+.3f} %")
        lines.append(machine_row("delta", probe=ref.probe,
                                 quantity=ref.quantity, value=val,
                                 reference=ref.value, delta_rel=delta))
    return lines


def run_static(cfg: JobConfig) -> tuple[list[str], int]:
    system = _build_system(cfg, condense=cfg.condense)
    res = solve_static(system, rtol=cfg.rtol)
    pv = probe_values(system, res.x)
    lines = _header("static", cfg, cfg.seed)
    lines.append(f"elements: {len(system.dofmap.mesh.elements)}, "
                 f"order {cfg.order} / {cfg.q_phi} (potential), "
                 f"free unknowns: {len(system.free)}")
    lines.append(machine_row("size", n_elements=len(system.dofmap.mesh.elements),
                             order=cfg.order, order_phi=cfg.q_phi,
                             n_dof=len(system.free)))
    lines.append(f"solver residual: {res.residual:.3e}")
    lines += _probe_lines(cfg, pv)
    if cfg.vtk:
        n_pts, n_cells = export_vtk(
            system.dofmap, res.x, cfg.vtk, cfg.vtk_subdivision,
            title=f"tdnns static fields seed={cfg.seed}")
        lines.append(f"vtk: wrote {cfg.vtk} ({n_pts} points, "
                     f"{n_cells} cells, subdivision {cfg.vtk_subdivision})")
    return lines, EXIT_OK


def run_eigen(cfg: JobConfig) -> tuple[list[str], int]:
    # mass matrices are needed, so the eigen path never condenses
    system = _build_system(cfg, condense=False)
    eig_sc = eigen_smallest(system, cfg.n_modes, seed=cfg.seed,
                            tol=cfg.eig_tol, res_tol=cfg.eig_res_tol,
                            max_iter=cfg.eig_max_iter)
    f_sc = eig_sc.frequencies_hz
    lines = _header("eigen", cfg, cfg.seed)
    lines.append(f"modes: {cfg.n_modes}, free unknowns: {len(system.free)}")

    if cfg.oc_tag is not None:
        oc_bc = build_bcs(cfg, system.dofmap.mesh)[cfg.oc_tag]
        system_oc = _build_system(
            cfg, condense=False,
            bc_override={cfg.oc_tag: replace(oc_bc, potential=None)})
        eig_oc = eigen_smallest(system_oc, cfg.n_modes, seed=cfg.seed,
                                tol=cfg.eig_tol, res_tol=cfg.eig_res_tol,
                                max_iter=cfg.eig_max_iter)
        f_oc = eig_oc.frequencies_hz
        lines.append(f"open circuit: electrode '{cfg.oc_tag}' floating")
        lines.append("mode    f_oc [kHz]    f_sc [kHz]    gap [Hz]  "
                     "converged")
        for m in range(cfg.n_modes):
            conv = ("yes" if eig_oc.converged[m] else "NO") + "/" + \
                   ("yes" if eig_sc.converged[m] else "NO")
            lines.append(f"{m + 1:>4}    {f_oc[m] / 1e3:>10.4f}    "
                         f"{f_sc[m] / 1e3:>10.4f}    "
                         f"{f_oc[m] - f_sc[m]:>+8.2f}  {conv}")
            lines.append(machine_row(
                "eigen", mode=m + 1, f_oc_hz=float(f_oc[m]),
                f_sc_hz=float(f_sc[m]), gap_hz=float(f_oc[m] - f_sc[m]),
                conv_oc=eig_oc.converged[m], conv_sc=eig_sc.converged[m]))
        ok = eig_sc.all_converged and eig_oc.all_converged
    else:
        lines.append("mode    f [kHz]  converged  iterations")
        for m in range(cfg.n_modes):
            conv = "yes" if eig_sc.converged[m] else "NO"
            lines.append(f"{m + 1:>4}    {f_sc[m] / 1e3:>10.4f}  {conv:>9}  "
                         f"{eig_sc.iterations[m]:>10}")
            lines.append(machine_row("eigen", mode=m + 1,
                                     f_hz=float(f_sc[m]),
                                     conv=eig_sc.converged[m],
                                     iterations=eig_sc.iterations[m]))
        ok = eig_sc.all_converged
    if not ok:
        lines.append("WARNING: not all requested modes converged")
    return lines, EXIT_OK if ok else EXIT_NONCONVERGED


def run_convergence(cfg: JobConfig) -> tuple[list[str], int]:
    ref = cfg.references[0]
    lines = _header("convergence", cfg, cfg.seed)
    lines.append(f"reference: probe {ref.probe} {ref.quantity} = "
                 f"{ref.value * 1e6:.5f} um")
    results = []
    for row in cfg.sweep:
        system = _build_system(cfg, condense=cfg.condense,
                               param_override=row.params, order=row.order)
        res = solve_static(system, rtol=cfg.rtol)
        pv = probe_values(system, res.x)
        val = probe_quantity(pv[ref.probe], ref.quantity)
        delta = (val - ref.value) / ref.value
        results.append((row.h, row.order, len(system.free), val, delta))
        lines.append(machine_row("convergence", h=float(row.h), k=row.order,
                                 n_dof=len(system.free), value=val,
                                 delta_rel=delta))

    hs = sorted({r[0] for r in results})
    ks = sorted({r[1] for r in results})
    cell = {(h, k): (n, d) for h, k, n, _, d in results}
    width = 24
    lines.append("")
    lines.append("h \\ k   " + "".join(f"k={k}".ljust(width) for k in ks))
    for h in hs:
        row_txt = f"{h:<8g}"
        for k in ks:
            if (h, k) in cell:
                n, d = cell[(h, k)]
                row_txt += f"{d:+.3e} (n={n})".ljust(width)
            else:
                row_txt += "-".ljust(width)
        lines.append(row_txt)
    return lines, EXIT_OK


def run_export(cfg: JobConfig, zero: bool) -> tuple[list[str], int]:
    if not cfg.vtk:
        raise ConfigError("vtk: export needs an output path")
    system = _build_system(cfg, condense=cfg.condense)
    if zero:
        x = np.zeros(system.dofmap.n_total)
    else:
        x = solve_static(system, rtol=cfg.rtol).x
    n_pts, n_cells = export_vtk(
        system.dofmap, x, cfg.vtk, cfg.vtk_subdivision,
        title=f"tdnns fields seed={cfg.seed}")
    lines = _header("export", cfg, cfg.seed)
    lines.append(f"vtk: wrote {cfg.vtk} ({n_pts} points, {n_cells} cells, "
                 f"subdivision {cfg.vtk_subdivision}, "
                 f"{'zero solution' if zero else 'static solution'})")
    lines.append(machine_row("export", path=cfg.vtk, n_points=n_pts,
                             n_cells=n_cells,
                             subdivision=cfg.vtk_subdivision))
    return lines, EXIT_OK


def run_verify(level: str, seed: int, fault: str | None) -> tuple[list[str],
                                                                  int]:
    results = run_checks(level, seed=seed, fault=fault)
    lines = _header("verify", None, seed)
    lines.append(f"level: {level}" + (f", injected fault: {fault}"
                                      if fault else ""))
    failures = 0
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        lines.append(f"check {r.name:<42} {status}  residual {r.residual:.3e}"
                     f" (tol {r.tol:.1e})  [{r.module}]")
        if not r.ok:
            failures += 1
            if r.detail:
                lines.append(f"      -> {r.detail}")
        lines.append(machine_row("verify", check=r.name, module=r.module,
                                 ok=r.ok, residual=r.residual, tol=r.tol))
    lines.append(f"summary: {len(results)} checks, {failures} failure(s)")
    return lines, EXIT_OK if failures == 0 else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# flag parsing
# ---------------------------------------------------------------------------

def _parse_scalar(text: str):
    if re.fullmatch(r"[+-]?\d+", text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


def _parse_kv(item: str, flag: str) -> tuple[str, str]:
    if "=" not in item:
        raise ConfigError(f"{flag}: expected KEY=VALUE, got '{item}'")
    k, v = item.split("=", 1)
    return k.strip(), v.strip()


def _parse_bc(spec: str) -> dict:
    mech, _, pot = spec.partition(":")
    out: dict = {"mech": mech}
    if pot:
        out["potential"] = float(pot)
    return out


def _parse_reference(item: str) -> dict:
    left, _, value = item.partition("=")
    if not value:
        raise ConfigError("--reference: expected PROBE:QUANTITY=VALUE")
    probe, _, quantity = left.partition(":")
    return {"probe": probe, "quantity": quantity or "umag",
            "value": float(value)}


def _parse_row(item: str) -> dict:
    row: dict = {"params": {}}
    for part in item.split(","):
        k, v = _parse_kv(part, "--row")
        if k == "h":
            row["h"] = float(v)
        elif k == "k":
            row["order"] = int(v)
        else:
            row["params"][k] = _parse_scalar(v)
    if "h" not in row or "order" not in row:
        raise ConfigError("--row: needs at least h=... and k=...")
    return row


def _job_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; its entries "
                        "override flags")
    parser.add_argument("--generator", help="mesh generator name")
    parser.add_argument("--mesh-file", help="mesh text file")
    parser.add_argument("--param", action="append", default=[],
                        metavar="K=V", help="generator parameter (repeat)")
    parser.add_argument("--geom-order", type=int,
                        help="geometry order of generated meshes")
    parser.add_argument("--material", action="append", default=[],
                        metavar="NAME=SRC", help="material source: "
                        "'preset:<name>' or a file path (repeat)")
    parser.add_argument("--bc", action="append", default=[],
                        metavar="TAG=KIND[:V]", help="boundary condition, "
                        "e.g. clamp=clamp or top=free:100 (repeat)")
    parser.add_argument("--order", type=int, help="displacement/stress order")
    parser.add_argument("--order-phi", type=int, help="potential order "
                        "(default: order + 1)")
    parser.add_argument("--seed", type=int, help="RNG seed (default 0)")
    parser.add_argument("--no-condense", action="store_true",
                        help="skip interior elimination")
    parser.add_argument("--rtol", type=float, help="static residual bound")
    parser.add_argument("--reference", action="append", default=[],
                        metavar="PROBE:QTY=VAL",
                        help="reference value for a probe quantity (repeat)")
    parser.add_argument("-o", "--output", help="also write the report here")


def _flags_to_dict(args: argparse.Namespace, analysis: str) -> dict:
    d: dict = {"analysis": analysis}
    mesh: dict = {}
    if args.generator:
        mesh["generator"] = args.generator
    if args.mesh_file:
        mesh["file"] = args.mesh_file
    params = {}
    for item in args.param:
        k, v = _parse_kv(item, "--param")
        params[k] = _parse_scalar(v)
    if args.geom_order is not None:
        params["geom_order"] = args.geom_order
    if params:
        mesh["params"] = params
    if mesh:
        d["mesh"] = mesh
    materials = {}
    for item in args.material:
        k, v = _parse_kv(item, "--material")
        materials[k] = v
    if materials:
        d["materials"] = materials
    bcs = {}
    for item in args.bc:
        k, v = _parse_kv(item, "--bc")
        bcs[k] = _parse_bc(v)
    if bcs:
        d["bcs"] = bcs
    if args.order is not None:
        d["order"] = args.order
    if args.order_phi is not None:
        d["order_phi"] = args.order_phi
    if args.seed is not None:
        d["seed"] = args.seed
    if args.no_condense:
        d["condense"] = False
    if args.rtol is not None:
        d["rtol"] = args.rtol
    if args.reference:
        d["references"] = [_parse_reference(r) for r in args.reference]
    if args.output:
        d["report"] = args.output
    if getattr(args, "vtk", None):
        d["vtk"] = args.vtk
    if getattr(args, "subdivision", None) is not None:
        d["vtk_subdivision"] = args.subdivision
    if getattr(args, "modes", None) is not None:
        d["n_modes"] = args.modes
    if getattr(args, "oc_tag", None):
        d["oc_tag"] = args.oc_tag
    if getattr(args, "tol", None) is not None:
        d["eig_tol"] = args.tol
    if getattr(args, "res_tol", None) is not None:
        d["eig_res_tol"] = args.res_tol
    if getattr(args, "max_iter", None) is not None:
        d["eig_max_iter"] = args.max_iter
    if getattr(args, "row", None):
        d["sweep"] = [_parse_row(r) for r in args.row]
    return d


def _load_config(args: argparse.Namespace, analysis: str) -> JobConfig:
    d = _flags_to_dict(args, analysis)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"--config: '{args.config}' does not exist")
        try:
            file_dict = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--config: invalid JSON ({exc})") from exc
        if not isinstance(file_dict, dict):
            raise ConfigError("--config: expected a JSON object")
        d = merge_dicts(d, file_dict)
    d.setdefault("analysis", analysis)
    return config_from_dict(d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdnns",
        description="Mixed tangential-displacement / normal-normal-stress "
                    "finite elements for piezoelasticity")
    sub = parser.add_subparsers(dest="command", required=True)

    p_static = sub.add_parser("static", help="solve a static drive problem")
    _job_flags(p_static)
    p_static.add_argument("--vtk", help="write solution fields to this "
                          "legacy VTK file")
    p_static.add_argument("--subdivision", type=int,
                          help="VTK element subdivision level (default 2)")

    p_eigen = sub.add_parser("eigen", help="smallest eigenfrequencies")
    _job_flags(p_eigen)
    p_eigen.add_argument("--modes", type=int, help="number of modes "
                         "(default 5)")
    p_eigen.add_argument("--oc-tag", help="also run with this electrode "
                         "floating and tabulate open vs short circuit")
    p_eigen.add_argument("--tol", type=float, help="eigenvalue settling "
                         "tolerance")
    p_eigen.add_argument("--res-tol", type=float, help="pencil residual "
                         "tolerance")
    p_eigen.add_argument("--max-iter", type=int, help="inverse-iteration "
                         "sweep limit")

    p_conv = sub.add_parser("convergence", help="refinement sweep against "
                            "a reference value")
    _job_flags(p_conv)
    p_conv.add_argument("--row", action="append", default=[],
                        metavar="h=H,k=K[,PARAM=V...]",
                        help="one sweep row: mesh-size label, order, "
                        "generator overrides (repeat)")

    p_verify = sub.add_parser("verify", help="run built-in correctness "
                              "checks")
    p_verify.add_argument("--level", choices=("quick", "full"),
                          default="quick")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--inject-fault", choices=FAULTS, default=None,
                          help="corrupt an internal table to prove the "
                          "checks catch it (testing fixture)")
    p_verify.add_argument("-o", "--output", help="also write the report "
                          "here")

    p_export = sub.add_parser("export", help="write solution fields to "
                              "legacy VTK")
    _job_flags(p_export)
    p_export.add_argument("--vtk", required=True, help="output VTK path")
    p_export.add_argument("--subdivision", type=int,
                          help="element subdivision level (default 2)")
    p_export.add_argument("--zero", action="store_true",
                          help="export the zero solution (mesh preview)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            lines, code = run_verify(args.level, args.seed, args.inject_fault)
            _emit(lines, args.output)
            return code
        cfg = _load_config(args, "static" if args.command == "export"
                           else args.command)
        if args.command == "static":
            lines, code = run_static(cfg)
        elif args.command == "eigen":
            lines, code = run_eigen(cfg)
        elif args.command == "convergence":
            lines, code = run_convergence(cfg)
        else:
            lines, code = run_export(cfg, args.zero)
        _emit(lines, cfg.report)
        return code
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SolverError, AssemblyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
