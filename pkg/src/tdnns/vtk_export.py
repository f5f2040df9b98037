"""Legacy-VTK export of solution fields on subdivided curved elements.

Each element is evaluated on a reference sub-lattice and written as a block
of straight-sided sub-cells (wedges for prisms, hexahedra for hexes), so
curved geometry and high-order fields survive into viewers that only know
linear cells.  Export is evaluation-only: the values written at a lattice
point are exactly what :func:`tdnns.assembly.evaluate_element` returns there,
independent of the subdivision level.

Point data: ``u`` (vector), ``phi`` (scalar), ``E`` (vector) and the six
stress components ``S11 S22 S33 S23 S13 S12`` (scalars).
"""
from __future__ import annotations

from functools import lru_cache
from pathlib import Path

import numpy as np

from .assembly import DofMap, evaluate_element

VTK_WEDGE = 13
VTK_HEXAHEDRON = 12

_STRESS_COMPONENTS = (("S11", 0, 0), ("S22", 1, 1), ("S33", 2, 2),
                      ("S23", 1, 2), ("S13", 0, 2), ("S12", 0, 1))


@lru_cache(maxsize=None)
def element_sublattice(kind: str, s: int):
    """Reference lattice points and linear sub-cell connectivity.

    Returns ``(pts, cells, vtk_type)`` with ``pts`` of shape (n, 3) and
    ``cells`` an integer array of local point indices, one row per sub-cell.
    """
    if s < 1:
        raise ValueError("subdivision level must be >= 1")
    if kind == "hex":
        idx = lambda i, j, k: (k * (s + 1) + j) * (s + 1) + i
        pts = np.array([[i / s, j / s, k / s]
                        for k in range(s + 1)
                        for j in range(s + 1)
                        for i in range(s + 1)])
        cells = [[idx(i, j, k), idx(i + 1, j, k),
                  idx(i + 1, j + 1, k), idx(i, j + 1, k),
                  idx(i, j, k + 1), idx(i + 1, j, k + 1),
                  idx(i + 1, j + 1, k + 1), idx(i, j + 1, k + 1)]
                 for k in range(s) for j in range(s) for i in range(s)]
        return pts, np.array(cells), VTK_HEXAHEDRON
    if kind == "prism":
        tri_index = {}
        tri_pts = []
        for b in range(s + 1):
            for a in range(s + 1 - b):
                tri_index[(a, b)] = len(tri_pts)
                tri_pts.append((a / s, b / s))
        nt = len(tri_pts)
        pts = np.array([[x, y, k / s]
                        for k in range(s + 1) for x, y in tri_pts])
        tris = []
        for b in range(s):
            for a in range(s - b):
                tris.append((tri_index[(a, b)], tri_index[(a + 1, b)],
                             tri_index[(a, b + 1)]))
                if a + b < s - 1:
                    tris.append((tri_index[(a + 1, b)],
                                 tri_index[(a + 1, b + 1)],
                                 tri_index[(a, b + 1)]))
        cells = [[k * nt + t0, k * nt + t1, k * nt + t2,
                  (k + 1) * nt + t0, (k + 1) * nt + t1, (k + 1) * nt + t2]
                 for k in range(s) for (t0, t1, t2) in tris]
        return pts, np.array(cells), VTK_WEDGE
    raise ValueError(f"unknown element kind '{kind}'")


def _fmt_rows(arr: np.ndarray, per_row: int) -> list[str]:
    flat = np.asarray(arr, dtype=float).reshape(-1, per_row)
    return [" ".join(f"{v:.9e}" for v in row) for row in flat]


def export_vtk(dm: DofMap, x: np.ndarray, path: str | Path,
               subdivision: int = 2,
               title: str = "tdnns fields") -> tuple[int, int]:
    """Write the solution ``x`` on ``dm``'s mesh as a legacy-VTK text file.

    Returns the written (point count, cell count).
    """
    mesh = dm.mesh
    pts_blocks, u_blocks, phi_blocks, e_blocks, s_blocks = [], [], [], [], []
    cells, types = [], []
    offset = 0
    for e, el in enumerate(mesh.elements):
        ref, conn, vtk_type = element_sublattice(el.kind, subdivision)
        ev = evaluate_element(dm, e, ref, x)
        pts_blocks.append(ev["x"])
        u_blocks.append(ev["u"])
        phi_blocks.append(ev["phi"])
        e_blocks.append(ev["E"])
        s_blocks.append(ev["stress"])
        cells.append(conn + offset)
        types.extend([vtk_type] * len(conn))
        offset += len(ref)

    points = np.concatenate(pts_blocks)
    u = np.concatenate(u_blocks)
    phi = np.concatenate(phi_blocks)
    efield = np.concatenate(e_blocks)
    stress = np.concatenate(s_blocks)
    n_pts = len(points)
    n_cells = len(types)

    lines = ["# vtk DataFile Version 3.0", title, "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {n_pts} double"]
    lines += _fmt_rows(points, 3)
    conn_rows = [row for block in cells for row in block]
    total = sum(len(row) + 1 for row in conn_rows)
    lines.append(f"CELLS {n_cells} {total}")
    lines += [f"{len(row)} " + " ".join(str(i) for i in row)
              for row in conn_rows]
    lines.append(f"CELL_TYPES {n_cells}")
    lines += [str(t) for t in types]
    lines.append(f"POINT_DATA {n_pts}")
    lines.append("VECTORS u double")
    lines += _fmt_rows(u, 3)
    lines.append("SCALARS phi double")
    lines.append("LOOKUP_TABLE default")
    lines += _fmt_rows(phi, 1)
    lines.append("VECTORS E double")
    lines += _fmt_rows(efield, 3)
    for name, i, j in _STRESS_COMPONENTS:
        lines.append(f"SCALARS {name} double")
        lines.append("LOOKUP_TABLE default")
        lines += _fmt_rows(stress[:, i, j], 1)
    Path(path).write_text("\n".join(lines) + "\n")
    return n_pts, n_cells
