"""Shared small meshes and solve helpers for the test-suite."""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from tdnns import tensors
from tdnns.cells import tri_lambda
from tdnns.generators import tag_remaining_boundary
from tdnns.meshing import Element, Mesh
from tdnns.transform import cell_lattice

PZT = tensors.pzt5h()
ALU = tensors.aluminium()
MATS = {"pzt5h": PZT, "alu": ALU}

COORDS = {
    0: (0, 0, 0), 1: (1, 0, 0), 2: (0, 1, 0), 3: (0, 0, 1), 4: (1, 0, 1),
    5: (0, 1, 1), 6: (1, 1, 0), 7: (1, 1, 1), 8: (2, 0, 0), 9: (2, 1, 0),
    10: (2, 0, 1), 11: (2, 1, 1), 12: (0, 0, 2), 13: (1, 0, 2), 14: (0, 1, 2),
    15: (2, 0.5, 0), 16: (2, 0.5, 1),
}


def lin_nodes(kind, V, g):
    """Affine-interpolated node lattice of geometric order g."""
    lat = cell_lattice(kind, g)
    if kind == "prism":
        lam = tri_lambda(lat[:, :2]).T
        z = lat[:, 2]
        return (lam @ V[:3]) * (1 - z)[:, None] + (lam @ V[3:]) * z[:, None]
    x, y, z = lat.T
    w = np.stack([(1 - x) * (1 - y) * (1 - z), x * (1 - y) * (1 - z),
                  x * y * (1 - z), (1 - x) * y * (1 - z),
                  (1 - x) * (1 - y) * z, x * (1 - y) * z,
                  x * y * z, (1 - x) * y * z], axis=1)
    return w @ V


def smooth_warp(X):
    """Curving deformation; shared lattice nodes stay shared."""
    return X + 0.06 * np.stack([
        np.sin(0.9 * X[:, 1] + 0.4 * X[:, 2]),
        np.cos(0.7 * X[:, 0] - 0.5 * X[:, 2]),
        np.sin(0.6 * X[:, 0] + 0.8 * X[:, 1]),
    ], axis=1)


def build_mesh(spec, material, g=1, warp=None, coords=COORDS, tags=None,
               probes=None):
    els = []
    for kind, verts in spec:
        V = np.array([coords[v] for v in verts], float)
        nodes = lin_nodes(kind, V, g)
        if warp is not None:
            nodes = warp(nodes)
        els.append(Element(kind, tuple(verts), material, nodes, None))
    return Mesh(geom_order=g, elements=tuple(els),
                facet_tags=dict(tags or {}), probes=dict(probes or {}),
                frame_fields={})


TWO_ELEMENT_SPECS = {
    # two prisms sharing the diagonal quad face {1,2,4,5}
    "prism-prism-quad": [("prism", (0, 1, 2, 3, 4, 5)),
                         ("prism", (1, 6, 2, 4, 7, 5))],
    # stacked prisms sharing the triangle {3,4,5}; second listed rotated
    "prism-prism-tri": [("prism", (0, 1, 2, 3, 4, 5)),
                        ("prism", (4, 5, 3, 13, 14, 12))],
    # two hexes sharing the x=1 face; the second has its local axes rotated
    "hex-hex": [("hex", (0, 1, 6, 2, 3, 4, 7, 5)),
                ("hex", (1, 4, 10, 8, 6, 7, 11, 9))],
    # hex plus a prism docked onto the x=1 face through a prism quad face
    "hex-prism": [("hex", (0, 1, 6, 2, 3, 4, 7, 5)),
                  ("prism", (1, 15, 6, 4, 16, 7))],
}

HYBRID_SPEC = [("prism", (0, 1, 2, 3, 4, 5)),
               ("prism", (1, 6, 2, 4, 7, 5)),
               ("hex", (1, 8, 9, 6, 4, 10, 11, 7))]

# linear distortion for the constant-stress test: affine, far from orthogonal
DISTORT = np.array([[1.0, 0.21, -0.13], [0.05, 0.93, 0.11],
                    [-0.08, 0.17, 1.07]])
SHIFT = np.array([0.3, -0.2, 0.1])


def hybrid_mesh(g=1, warp=None, material="alu"):
    coords = {k: np.asarray(v, float) @ DISTORT.T + SHIFT
              for k, v in COORDS.items()}
    mesh = build_mesh(HYBRID_SPEC, material, g=g, warp=warp, coords=coords)
    tag_remaining_boundary(mesh, "wall")
    return mesh


def equilibrated_solve(system):
    """Row-max scaled sparse LU on the reduced symmetric system."""
    Aff, bf, _ = system.reduced()
    d = np.sqrt(np.abs(Aff).max(axis=1).toarray().ravel())
    Di = 1.0 / np.maximum(d, 1e-300)
    D = sp.diags(Di)
    lu = spla.splu((D @ Aff @ D).tocsc())
    return system.expand(Di * lu.solve(Di * bf))
