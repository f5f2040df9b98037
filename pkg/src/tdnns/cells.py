"""Reference cells: vertex/edge/facet topology and facet parametrizations.

Reference domains
-----------------
segment   [0, 1]
triangle  vertices (0,0), (1,0), (0,1); barycentrics lam0 = 1-x-y, lam1 = x,
          lam2 = y; edge ``g`` is opposite vertex ``g`` (edge 0 = hypotenuse,
          edge 1 = {x=0}, edge 2 = {y=0})
prism     triangle x [0, 1] in z
hex       [0, 1]^3, VTK vertex order

Unit normal-normal tensors
--------------------------
``TRI_UNIT_TENSORS[g]`` is the symmetric 2x2 tensor whose normal-normal trace
is one on triangle edge ``g`` and zero on the other two edges.  They are the
algebraic anchor of the stress catalogs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polynomials import quad_hex, quad_prism, quad_quad, quad_segment, quad_triangle

#: unit tensors S_g with n.S_g.n = 1 on edge g, 0 on the others
TRI_UNIT_TENSORS = (
    np.array([[0.0, 1.0], [1.0, 0.0]]),            # edge 0: hypotenuse
    np.array([[1.0, -0.5], [-0.5, 0.0]]),          # edge 1: x = 0
    np.array([[0.0, -0.5], [-0.5, 1.0]]),          # edge 2: y = 0
)

#: triangle edge g as the (alpha, beta) vertex pair it connects
TRI_EDGES = ((1, 2), (0, 2), (0, 1))

TRI_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def tri_lambda(pts: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of 2-D points, shape (3,) + pts.shape[:-1]."""
    x, y = pts[..., 0], pts[..., 1]
    return np.stack([1.0 - x - y, x, y])


#: constant barycentric gradients on the reference triangle
TRI_LAMBDA_GRAD = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class CellTopology:
    kind: str
    vertices: np.ndarray              # (nv, 3) reference coordinates
    edges: tuple[tuple[int, int], ...]
    faces: tuple[tuple[int, ...], ...]  # vertex cycles; len 3 => tri, 4 => quad
    face_normals: np.ndarray          # (nf, 3) outward unit normals


_PRISM_VERTS = np.array([
    [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0],
])

_S2 = 1.0 / np.sqrt(2.0)

PRISM = CellTopology(
    kind="prism",
    vertices=_PRISM_VERTS,
    # bottom triangle edges, top triangle edges, vertical edges
    edges=((0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)),
    faces=(
        (0, 1, 2),        # 0: tri z=0
        (3, 4, 5),        # 1: tri z=1
        (1, 2, 5, 4),     # 2: quad over triangle edge 0 (hypotenuse)
        (0, 2, 5, 3),     # 3: quad over triangle edge 1 (x=0)
        (0, 1, 4, 3),     # 4: quad over triangle edge 2 (y=0)
    ),
    face_normals=np.array([
        [0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0],
        [_S2, _S2, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
    ]),
)

_HEX_VERTS = np.array([
    [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0],
])

HEX = CellTopology(
    kind="hex",
    vertices=_HEX_VERTS,
    edges=((0, 1), (1, 2), (2, 3), (0, 3), (4, 5), (5, 6), (6, 7), (4, 7),
           (0, 4), (1, 5), (2, 6), (3, 7)),
    faces=(
        (0, 3, 7, 4),     # 0: x=0
        (1, 2, 6, 5),     # 1: x=1
        (0, 1, 5, 4),     # 2: y=0
        (3, 2, 6, 7),     # 3: y=1
        (0, 1, 2, 3),     # 4: z=0
        (4, 5, 6, 7),     # 5: z=1
    ),
    face_normals=np.array([
        [-1.0, 0.0, 0.0], [1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0], [0.0, 1.0, 0.0],
        [0.0, 0.0, -1.0], [0.0, 0.0, 1.0],
    ]),
)

CELLS = {"prism": PRISM, "hex": HEX}

#: prism quad facet id for triangle edge g
PRISM_QUAD_OF_EDGE = {0: 2, 1: 3, 2: 4}

#: hex facet id for (axis, side)
HEX_FACE_OF = {(0, 0): 0, (0, 1): 1, (1, 0): 2, (1, 1): 3, (2, 0): 4, (2, 1): 5}


def cell(kind: str) -> CellTopology:
    return CELLS[kind]


def facet_is_quad(kind: str, facet: int) -> bool:
    return len(CELLS[kind].faces[facet]) == 4


def facet_corner_coords(kind: str, facet: int, cycle: tuple[int, ...] | None = None) -> np.ndarray:
    """Reference coordinates of a facet's corners in the given vertex order."""
    topo = CELLS[kind]
    verts = topo.faces[facet] if cycle is None else cycle
    return topo.vertices[list(verts)]


def facet_embed(corners: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Map facet parameters to cell reference coordinates.

    ``corners`` has 3 rows (triangle, affine map with barycentric weights) or
    4 rows (quad, bilinear in the cycle order).  ``params`` is (npts, 2).
    Returns (npts, 3) together with the constant/point-wise tangents via
    :func:`facet_embed_tangents`.
    """
    a, b = params[:, 0], params[:, 1]
    if len(corners) == 3:
        w = np.stack([1.0 - a - b, a, b], axis=1)
        return w @ corners
    w = np.stack([(1 - a) * (1 - b), a * (1 - b), a * b, (1 - a) * b], axis=1)
    return w @ corners


def facet_embed_tangents(corners: np.ndarray, params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tangent vectors d(embed)/da, d(embed)/db at the given parameters."""
    a, b = params[:, 0], params[:, 1]
    if len(corners) == 3:
        ta = np.broadcast_to(corners[1] - corners[0], (len(a), corners.shape[1])).copy()
        tb = np.broadcast_to(corners[2] - corners[0], (len(a), corners.shape[1])).copy()
        return ta, tb
    c0, c1, c2, c3 = corners
    ta = np.outer(1 - b, c1 - c0) + np.outer(b, c2 - c3)
    tb = np.outer(1 - a, c3 - c0) + np.outer(a, c2 - c1)
    return ta, tb


def facet_quadrature(kind: str, facet: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature rule in facet parameters (triangle or unit square)."""
    if facet_is_quad(kind, facet):
        return quad_quad(n)
    return quad_triangle(n)


def quad_cell(kind: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Volume quadrature on the reference cell."""
    return {"prism": quad_prism, "hex": quad_hex}[kind](n)


def pairs_total(n: int) -> list[tuple[int, int]]:
    """Index pairs (i, j) with i + j <= n in deterministic order."""
    return [(i, s - i) for s in range(n + 1) for i in range(s + 1)]


def facet_edge_ids(kind: str, facet: int) -> tuple[int, ...]:
    """Ids of the cell edges lying on the given facet (cycle order)."""
    topo = CELLS[kind]
    cycle = topo.faces[facet]
    index = {tuple(sorted(e)): i for i, e in enumerate(topo.edges)}
    out = []
    for k in range(len(cycle)):
        pair = tuple(sorted((cycle[k], cycle[(k + 1) % len(cycle)])))
        out.append(index[pair])
    return tuple(out)


def entity_on_facet(kind: str, entity: tuple[str, int], facet: int) -> bool:
    """True when the entity belongs to the closure of the facet."""
    ekind, idx = entity
    topo = CELLS[kind]
    if ekind == "face":
        return idx == facet
    if ekind == "edge":
        return idx in facet_edge_ids(kind, facet)
    if ekind == "vertex":
        return idx in topo.faces[facet]
    return False


def edge_param_coords(kind: str, edge: int, s: np.ndarray) -> np.ndarray:
    """Cell reference coordinates along local edge ``edge`` at parameters s."""
    topo = CELLS[kind]
    a, b = topo.edges[edge]
    ca, cb = topo.vertices[a], topo.vertices[b]
    return ca + np.outer(s, cb - ca)
