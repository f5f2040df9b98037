"""Tangentially continuous displacement catalogs.

The triangle carries a full [P_p]^2 tangential-edge-trace space (Whitney edge
functions plus integrated-Legendre edge gradients, plus gradient/rotational
interior fields).  The 3-D catalogs are tensor products:

* prism: (triangle tangential, order p) x 1-D hierarchy of order p+1 for the
  in-plane components, (triangle H1, order p+1) x Legendre(p) for the axial
  component;
* hex: per axis, Legendre(p) along the axis times the order-(p+1) hierarchy
  in the two cross directions.

The 1-D hierarchy U_{p+1} = {1-t, t, L_2, ..., L_{p+1}} makes every edge
trace a degree-p Legendre series while keeping blocks entity-local.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..cells import CELLS, PRISM_QUAD_OF_EDGE, TRI_EDGES, TRI_LAMBDA_GRAD, pairs_total, tri_lambda
from .catalog import Block, group_functions
from .potential import PRISM_BOTTOM_EDGE, PRISM_TOP_EDGE, tri_h1
from .scalars import (
    seg_hats,
    seg_integrated,
    seg_legendre,
    tri_bubble,
    tri_edge_integrated_legendre,
    tri_qij,
)


class TriTangential:
    """2-D tangential catalog on the reference triangle, order p >= 1.

    Edge blocks have traces 1, l_1(2s-1), ..., l_p(2s-1) along the owning
    edge (low-to-high vertex parameter) and zero tangential trace elsewhere.
    """

    def __init__(self, p: int):
        if p < 1:
            raise ValueError("tangential catalog needs p >= 1")
        self.p = p
        items = []
        for g in range(3):
            for i in range(p + 1):
                items.append((("edge", g), ("edge", g, i)))
        for (i, j) in pairs_total(p - 2):
            items.append((("interior", 0), ("grad", i, j)))
        for (i, j) in pairs_total(p - 2):
            items.append((("interior", 0), ("rotA", i, j)))
        for i in range(p - 1):
            items.append((("interior", 0), ("rotB", i)))
        self._descs, self.blocks = group_functions(items)
        self.n = len(self._descs)
        self._block_of = {b.entity: b for b in self.blocks}

    def block(self, entity):
        if entity not in self._block_of:
            return Block(entity, 0, 0)
        return self._block_of[entity]

    def eval(self, pts: np.ndarray):
        """Values (n, npts, 2) and gradients (n, npts, 2, 2), grad[..,i,j]=d_j v_i."""
        p = self.p
        npts = len(pts)
        x, y = pts[:, 0], pts[:, 1]
        lam = tri_lambda(pts)
        edge = {g: tri_edge_integrated_legendre(p + 1, g, pts, nderiv=2) for g in range(3)}
        if p >= 2:
            bv, bg, bh = tri_bubble(pts, nderiv=2)
            qv, qg, qh = tri_qij(p, pts, nderiv=2)
        # lam_0 psi_0 and lam_1 psi_1 rotational weights and their jacobians
        w0 = np.stack([-y * (1 - x - y), x * (1 - x - y)], axis=-1)
        dw0 = np.empty((npts, 2, 2))
        dw0[:, 0, 0] = y
        dw0[:, 0, 1] = -1 + x + 2 * y
        dw0[:, 1, 0] = 1 - 2 * x - y
        dw0[:, 1, 1] = -x
        w1 = np.stack([x * y, x * (1 - x)], axis=-1)
        dw1 = np.empty((npts, 2, 2))
        dw1[:, 0, 0] = y
        dw1[:, 0, 1] = x
        dw1[:, 1, 0] = 1 - 2 * x
        dw1[:, 1, 1] = 0.0

        vals = np.empty((self.n, npts, 2))
        grads = np.empty((self.n, npts, 2, 2))
        for row, d in enumerate(self._descs):
            tag = d[0]
            if tag == "edge":
                _, g, i = d
                a, b = TRI_EDGES[g]
                ga, gb = TRI_LAMBDA_GRAD[a], TRI_LAMBDA_GRAD[b]
                if i == 0:
                    vals[row] = lam[a][:, None] * gb - lam[b][:, None] * ga
                    grads[row] = np.outer(gb, ga) - np.outer(ga, gb)
                else:
                    _, Lg, Lh = edge[g]
                    vals[row] = 0.5 * Lg[i + 1]
                    grads[row] = 0.5 * Lh[i + 1]
            elif tag == "grad":
                _, i, j = d
                vals[row] = bg * qv[i, j][:, None] + bv[:, None] * qg[i, j]
                grads[row] = (bh * qv[i, j][:, None, None]
                              + bg[:, :, None] * qg[i, j][:, None, :]
                              + qg[i, j][:, :, None] * bg[:, None, :]
                              + bv[:, None, None] * qh[i, j])
            elif tag == "rotA":
                _, i, j = d
                vals[row] = w0 * qv[i, j][:, None]
                grads[row] = dw0 * qv[i, j][:, None, None] + w0[:, :, None] * qg[i, j][:, None, :]
            else:
                _, i = d[0], d[1]
                vals[row] = w1 * qv[i, 0][:, None]
                grads[row] = dw1 * qv[i, 0][:, None, None] + w1[:, :, None] * qg[i, 0][:, None, :]
        return vals, grads


class DisplacementCatalog:
    """3-D displacement catalog with entity blocks."""

    def __init__(self, kind: str, p: int):
        if p < 1:
            raise ValueError("displacement catalog needs p >= 1")
        self.kind = kind
        self.p = p
        builder = {"prism": _build_prism, "hex": _build_hex}[kind]
        self._descs, self.blocks = builder(p)
        self.n = len(self._descs)
        self._block_of = {b.entity: b for b in self.blocks}

    def block(self, entity):
        if entity not in self._block_of:
            return Block(entity, 0, 0)
        return self._block_of[entity]

    def eval(self, pts: np.ndarray):
        """Values (n, npts, 3) and gradients (n, npts, 3, 3), grad[..,i,j]=d_j u_i."""
        if self.kind == "prism":
            return _eval_prism(self, pts)
        return _eval_hex(self, pts)


def _build_prism(p: int):
    tri = tri_tangential(p)
    h1 = tri_h1(p + 1)
    items = []
    # in-plane: triangle tangential x U_{p+1}(z)
    for blk in tri.blocks:
        for t_idx in range(blk.start, blk.stop):
            if blk.entity[0] == "edge":
                g = blk.entity[1]
                for a, emap in ((0, PRISM_BOTTOM_EDGE), (1, PRISM_TOP_EDGE)):
                    items.append((("edge", emap[g]), ("ip", t_idx, ("hat", a))))
                for l in range(2, p + 2):
                    items.append((("face", PRISM_QUAD_OF_EDGE[g]), ("ip", t_idx, ("L", l))))
            else:
                for a in (0, 1):
                    items.append((("face", a), ("ip", t_idx, ("hat", a))))
                for l in range(2, p + 2):
                    items.append((("interior", 0), ("ip", t_idx, ("L", l))))
    # axial: triangle H1 of order p+1 x Legendre(p)
    for blk in h1.blocks:
        for s_idx in range(blk.start, blk.stop):
            if blk.entity[0] == "vertex":
                entity = ("edge", 6 + blk.entity[1])
            elif blk.entity[0] == "edge":
                entity = ("face", PRISM_QUAD_OF_EDGE[blk.entity[1]])
            else:
                entity = ("interior", 0)
            for k in range(p + 1):
                items.append((entity, ("z", s_idx, k)))
    return group_functions(items)


def _eval_prism(cat: DisplacementCatalog, pts: np.ndarray):
    p = cat.p
    npts = len(pts)
    xy, z = pts[:, :2], pts[:, 2]
    tri = tri_tangential(p)
    h1 = tri_h1(p + 1)
    tv, tg = tri.eval(xy)
    sv, sg = h1.eval(xy)
    hz, dhz = seg_hats(z)
    Lz = seg_integrated(p + 1, z)
    lz = seg_legendre(p, z)
    vals = np.zeros((cat.n, npts, 3))
    grads = np.zeros((cat.n, npts, 3, 3))
    for row, d in enumerate(cat._descs):
        if d[0] == "ip":
            _, t_idx, zmode = d
            g, dg = (hz[zmode[1]], dhz[zmode[1]]) if zmode[0] == "hat" else (Lz[0, zmode[1]], Lz[1, zmode[1]])
            vals[row, :, :2] = tv[t_idx] * g[:, None]
            grads[row, :, :2, :2] = tg[t_idx] * g[:, None, None]
            grads[row, :, :2, 2] = tv[t_idx] * dg[:, None]
        else:
            _, s_idx, k = d
            vals[row, :, 2] = sv[s_idx] * lz[0, k]
            grads[row, :, 2, :2] = sg[s_idx] * lz[0, k][:, None]
            grads[row, :, 2, 2] = sv[s_idx] * lz[1, k]
    return vals, grads


def _build_hex(p: int):
    topo = CELLS["hex"]
    edge_lookup = {}
    for e, (a, b) in enumerate(topo.edges):
        va, vb = topo.vertices[a], topo.vertices[b]
        axis = int(np.nonzero(va != vb)[0][0])
        sides = tuple(int(va[ax]) for ax in range(3) if ax != axis)
        edge_lookup[(axis, sides)] = e
    from ..cells import HEX_FACE_OF

    # edges whose low-to-high vertex direction runs against the axis need a
    # parity sign so traces follow the sorted-vertex orientation
    edge_reversed = {}
    for e, (a, b) in enumerate(topo.edges):
        va, vb = topo.vertices[a], topo.vertices[b]
        axis = int(np.nonzero(va != vb)[0][0])
        edge_reversed[e] = va[axis] > vb[axis]

    items = []
    for axis in range(3):
        others = [ax for ax in range(3) if ax != axis]
        for i in range(p + 1):
            for m1 in range(p + 2):       # hat0, hat1, L_2 .. L_{p+1}
                for m2 in range(p + 2):
                    hat1, hat2 = m1 < 2, m2 < 2
                    sign = 1.0
                    if hat1 and hat2:
                        e = edge_lookup[(axis, (m1, m2))]
                        entity = ("edge", e)
                        if edge_reversed[e]:
                            sign = -((-1.0) ** i)
                    elif hat1:
                        entity = ("face", HEX_FACE_OF[(others[0], m1)])
                    elif hat2:
                        entity = ("face", HEX_FACE_OF[(others[1], m2)])
                    else:
                        entity = ("interior", 0)
                    items.append((entity, ("comp", axis, i, m1, m2, sign)))
    return group_functions(items)


def _eval_hex(cat: DisplacementCatalog, pts: np.ndarray):
    p = cat.p
    npts = len(pts)
    leg = [seg_legendre(p, pts[:, ax]) for ax in range(3)]
    hats = [seg_hats(pts[:, ax]) for ax in range(3)]
    Lint = [seg_integrated(p + 1, pts[:, ax]) for ax in range(3)]

    def umode(axis, m):
        if m < 2:
            return hats[axis][0][m], hats[axis][1][m]
        return Lint[axis][0, m], Lint[axis][1, m]

    vals = np.zeros((cat.n, npts, 3))
    grads = np.zeros((cat.n, npts, 3, 3))
    for row, d in enumerate(cat._descs):
        _, axis, i, m1, m2, sign = d
        others = [ax for ax in range(3) if ax != axis]
        fa, dfa = leg[axis][0, i], leg[axis][1, i]
        f1, df1 = umode(others[0], m1)
        f2, df2 = umode(others[1], m2)
        vals[row, :, axis] = sign * fa * f1 * f2
        grads[row, :, axis, axis] = sign * dfa * f1 * f2
        grads[row, :, axis, others[0]] = sign * fa * df1 * f2
        grads[row, :, axis, others[1]] = sign * fa * f1 * df2
    return vals, grads


@lru_cache(maxsize=None)
def tri_tangential(p: int) -> TriTangential:
    return TriTangential(p)


@lru_cache(maxsize=None)
def displacement_catalog(kind: str, p: int) -> DisplacementCatalog:
    return DisplacementCatalog(kind, p)
