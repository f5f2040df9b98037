"""Curvilinear element geometry and field push-forwards.

Geometry is an isoparametric Lagrange map of order ``g`` per element; nodes
follow the documented lattice ordering (x fastest, then y, then z / triangle
rows).  Fields transform as

* displacement: covariant,  u = F^{-T} u_ref  (preserves tangential traces);
* stress: weighted Piola,  s = (1/J^2) F s_ref F^T  (preserves the
  normal-normal trace up to the intrinsic surface weight, making it
  single-valued across matching faces);
* potential: identity (gradient transforms covariantly).

The physical strain and stress divergence are evaluated through exact chain
rules involving the map Hessian; finite-difference tests pin them down.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cells import CELLS, facet_corner_coords, facet_embed, facet_embed_tangents


# ------------------------------------------------------------------ lattices

def segment_lattice(g: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, g + 1)


def triangle_lattice(g: int) -> np.ndarray:
    """Rows j = 0..g, x index fastest: [(i/g, j/g) for j for i <= g-j]."""
    pts = [(i / g, j / g) for j in range(g + 1) for i in range(g + 1 - j)]
    return np.array(pts)


def cell_lattice(kind: str, g: int) -> np.ndarray:
    """Reference lattice nodes of the geometry map, shape (n_nodes, 3)."""
    if kind == "prism":
        tri = triangle_lattice(g)
        zs = segment_lattice(g)
        return np.array([[tx, ty, z] for z in zs for tx, ty in tri])
    if kind == "hex":
        s = segment_lattice(g)
        return np.array([[x, y, z] for z in s for y in s for x in s])
    raise ValueError(kind)


# ------------------------------------------------------------- Lagrange basis

def _monomial_powers(kind: str, g: int) -> list[tuple[int, int, int]]:
    if kind == "prism":
        return [(a, b, c) for c in range(g + 1)
                for b in range(g + 1) for a in range(g + 1 - b)]
    return [(a, b, c) for c in range(g + 1)
            for b in range(g + 1) for a in range(g + 1)]


class GeometryBasis:
    """Nodal Lagrange basis on the reference lattice (monomial coefficients)."""

    def __init__(self, kind: str, g: int):
        self.kind = kind
        self.g = g
        self.nodes = cell_lattice(kind, g)
        self.powers = _monomial_powers(kind, g)
        V = np.array([[x ** a * y ** b * z ** c for (a, b, c) in self.powers]
                      for (x, y, z) in self.nodes])
        if V.shape[0] != V.shape[1]:
            raise RuntimeError("lattice / monomial count mismatch")
        self.coeff = np.linalg.inv(V)  # coeff[m, node]: node basis in monomials

    def eval(self, pts: np.ndarray):
        """N (nn, npts), dN (nn, npts, 3), d2N (nn, npts, 3, 3)."""
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        gmax = self.g
        pow_tab = np.empty((3, gmax + 1, len(pts)))
        for d, t in enumerate((x, y, z)):
            pow_tab[d, 0] = 1.0
            for k in range(1, gmax + 1):
                pow_tab[d, k] = pow_tab[d, k - 1] * t

        def mono(a, b, c):
            return pow_tab[0, a] * pow_tab[1, b] * pow_tab[2, c]

        def dmono(a, b, c, axis):
            e = [a, b, c]
            if e[axis] == 0:
                return np.zeros(len(pts))
            k = e[axis]
            e[axis] -= 1
            return k * mono(*e)

        def d2mono(a, b, c, ax1, ax2):
            e = [a, b, c]
            if e[ax1] == 0:
                return np.zeros(len(pts))
            k = e[ax1]
            e[ax1] -= 1
            return k * dmono(*e, ax2)

        nm = len(self.powers)
        M = np.empty((nm, len(pts)))
        dM = np.empty((nm, len(pts), 3))
        d2M = np.empty((nm, len(pts), 3, 3))
        for m, (a, b, c) in enumerate(self.powers):
            M[m] = mono(a, b, c)
            for ax in range(3):
                dM[m, :, ax] = dmono(a, b, c, ax)
            for ax1 in range(3):
                for ax2 in range(ax1, 3):
                    v = d2mono(a, b, c, ax1, ax2)
                    d2M[m, :, ax1, ax2] = v
                    d2M[m, :, ax2, ax1] = v
        N = np.einsum("mn,mq->nq", self.coeff, M)
        dN = np.einsum("mn,mqa->nqa", self.coeff, dM)
        d2N = np.einsum("mn,mqab->nqab", self.coeff, d2M)
        return N, dN, d2N


@lru_cache(maxsize=None)
def geometry_basis(kind: str, g: int) -> GeometryBasis:
    return GeometryBasis(kind, g)


# ------------------------------------------------------------------- the map

@dataclass
class MapData:
    """Geometry quantities at a batch of reference points."""

    x: np.ndarray        # (q, 3) physical coordinates
    F: np.ndarray        # (q, 3, 3) jacobian dx_i/dxhat_j
    J: np.ndarray        # (q,) determinant
    Finv: np.ndarray     # (q, 3, 3)
    H: np.ndarray        # (q, 3, 3, 3) d2 x_i / dxhat_a dxhat_b


class ElementMap:
    def __init__(self, kind: str, g: int, nodes: np.ndarray):
        self.kind = kind
        self.g = g
        self.nodes = np.asarray(nodes, dtype=float)
        expected = len(cell_lattice(kind, g))
        if self.nodes.shape != (expected, 3):
            raise ValueError(f"expected {expected} geometry nodes, got {self.nodes.shape}")

    def at(self, pts: np.ndarray) -> MapData:
        N, dN, d2N = geometry_basis(self.kind, self.g).eval(pts)
        x = np.einsum("nq,ni->qi", N, self.nodes)
        F = np.einsum("nqa,ni->qia", dN, self.nodes)
        H = np.einsum("nqab,ni->qiab", d2N, self.nodes)
        J = np.linalg.det(F)
        if np.any(J <= 0):
            raise ValueError("element map has non-positive jacobian")
        Finv = np.linalg.inv(F)
        return MapData(x=x, F=F, J=J, Finv=Finv, H=H)


# -------------------------------------------------------------- push-forwards

def push_displacement(md: MapData, uh: np.ndarray, guh: np.ndarray):
    """Covariant push: values and physical gradients.

    uh (n, q, 3), guh (n, q, 3, 3) reference values/gradients; returns
    (u, grad_u) with grad_u[..., i, j] = du_i/dx_j.
    """
    u = np.einsum("qba,fqb->fqa", md.Finv, uh, optimize=True)
    # d/dxhat_m of (F^{-T} uh) = F^{-T} (guh_col_m - (dF^T/dxhat_m) F^{-T} uh)
    corr = np.einsum("qdcm,fqd->fqcm", md.H, u, optimize=True)
    t = np.einsum("qca,fqcm->fqam", md.Finv, guh - corr, optimize=True)
    grad = np.einsum("fqam,qmj->fqaj", t, md.Finv, optimize=True)
    return u, grad


def symmetric_gradient(grad: np.ndarray) -> np.ndarray:
    return 0.5 * (grad + np.swapaxes(grad, -1, -2))


def push_stress(md: MapData, sh: np.ndarray, dsh: np.ndarray):
    """Weighted Piola push: values and physical divergence.

    sh (n, q, 3, 3), dsh (n, q, 3) reference values/divergences.
    """
    inv_j2 = 1.0 / (md.J * md.J)
    Fsh = np.matmul(md.F[None], sh)
    s = np.matmul(Fsh, np.swapaxes(md.F, -1, -2)[None]) \
        * inv_j2[None, :, None, None]
    # dJ/dxhat_b = J * Finv_ac H_cab
    dJ = md.J[:, None] * np.einsum("qac,qcab->qb", md.Finv, md.H, optimize=True)
    G = (md.H * inv_j2[:, None, None, None]
         - np.einsum("qia,qb->qiab", md.F, dJ) * (inv_j2 / md.J)[:, None, None, None])
    div = (np.einsum("qiab,fqab->fqi", G, sh, optimize=True)
           + np.einsum("q,qia,fqa->fqi", inv_j2, md.F, dsh, optimize=True))
    return s, div


def push_potential(md: MapData, ph: np.ndarray, gph: np.ndarray):
    """Identity push for values; covariant gradient."""
    grad = np.einsum("qba,fqb->fqa", md.Finv, gph, optimize=True)
    return ph, grad


# ------------------------------------------------------------------- facets

@dataclass
class FacetFrame:
    """Physical facet geometry at facet parameter points."""

    x: np.ndarray        # (q, 3)
    normal: np.ndarray   # (q, 3) outward unit normal
    dS: np.ndarray       # (q,) surface jacobian wrt the facet parameters
    md: MapData          # volume map data at the embedded points


def facet_frame(emap: ElementMap, facet: int, params: np.ndarray,
                cycle: tuple[int, ...] | None = None) -> FacetFrame:
    """Outward normal and surface measure for a facet parametrization.

    ``cycle`` selects the corner order of the parametrization (defaults to the
    local reference cycle); any rotation/reflection of the local cycle is
    valid, which is how globally oriented facet frames are evaluated.
    """
    kind = emap.kind
    corners = facet_corner_coords(kind, facet, cycle)
    X = facet_embed(corners, params)
    Ta, Tb = facet_embed_tangents(corners, params)
    md = emap.at(X)
    ta = np.einsum("qia,qa->qi", md.F, Ta)
    tb = np.einsum("qia,qa->qi", md.F, Tb)
    cross = np.cross(ta, tb)
    dS = np.linalg.norm(cross, axis=1)
    # orient by the reference outward normal
    ref_cross = np.cross(Ta, Tb)
    sign = np.sign(ref_cross @ CELLS[kind].face_normals[facet])
    normal = cross / dS[:, None] * sign[:, None]
    return FacetFrame(x=md.x, normal=normal, dS=dS, md=md)
