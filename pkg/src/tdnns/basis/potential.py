"""Continuous scalar (electric potential) catalogs: hierarchic serendipity.

Vertex hats, integrated-Legendre edge bubbles, and total-degree-limited face
and interior bubbles.  The quad-face bubble rule is identical on prism and
hex faces, so mixed meshes stay conforming.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..cells import CELLS, HEX_FACE_OF, PRISM_QUAD_OF_EDGE, TRI_LAMBDA_GRAD, tri_lambda
from .catalog import Block, group_functions
from .scalars import seg_hats, seg_integrated, tri_bubble, tri_edge_integrated_legendre, tri_qij

#: prism edge id of triangle edge g on the bottom / top copy
PRISM_BOTTOM_EDGE = {0: 1, 1: 2, 2: 0}
PRISM_TOP_EDGE = {0: 4, 1: 5, 2: 3}


class TriH1:
    """2-D hierarchic H1 catalog on the reference triangle, order q >= 1."""

    def __init__(self, q: int):
        self.q = q
        items = [(("vertex", v), ("vert", v)) for v in range(3)]
        for g in range(3):
            for i in range(2, q + 1):
                items.append((("edge", g), ("edge", g, i)))
        for (k, l) in _bubble_pairs(q):
            items.append((("interior", 0), ("bub", k, l)))
        self._descs, self.blocks = group_functions(items)
        self.n = len(self._descs)
        self._block_of = {b.entity: b for b in self.blocks}

    def block(self, entity):
        if entity not in self._block_of:
            return Block(entity, 0, 0)
        return self._block_of[entity]

    def eval(self, pts: np.ndarray):
        """Values (n, npts) and gradients (n, npts, 2)."""
        q = self.q
        npts = len(pts)
        lam = tri_lambda(pts)
        edge = {g: tri_edge_integrated_legendre(max(q, 1), g, pts) for g in range(3)}
        if q >= 3:
            bv, bg = tri_bubble(pts)
            qv, qg = tri_qij(q, pts)
        vals = np.empty((self.n, npts))
        grads = np.empty((self.n, npts, 2))
        for row, d in enumerate(self._descs):
            if d[0] == "vert":
                v = d[1]
                vals[row] = lam[v]
                grads[row] = TRI_LAMBDA_GRAD[v]
            elif d[0] == "edge":
                _, g, i = d
                vals[row] = edge[g][0][i]
                grads[row] = edge[g][1][i]
            else:
                _, k, l = d
                vals[row] = bv * qv[k, l]
                grads[row] = bg * qv[k, l][:, None] + bv[:, None] * qg[k, l]
        return vals, grads


def _bubble_pairs(q: int):
    return [(k, l) for s in range(max(q - 2, 0)) for k in range(s + 1) for l in [s - k]]


class PotentialCatalog:
    """3-D H1 catalog with entity blocks, order q >= 1."""

    def __init__(self, kind: str, q: int):
        if q < 1:
            raise ValueError("potential catalog needs q >= 1")
        self.kind = kind
        self.q = q
        builder = {"prism": _build_prism, "hex": _build_hex}[kind]
        self._descs, self.blocks = builder(q)
        self.n = len(self._descs)
        self._block_of = {b.entity: b for b in self.blocks}

    def block(self, entity):
        if entity not in self._block_of:
            return Block(entity, 0, 0)
        return self._block_of[entity]

    def eval(self, pts: np.ndarray):
        """Values (n, npts) and gradients (n, npts, 3)."""
        if self.kind == "prism":
            return _eval_prism(self, pts)
        return _eval_hex(self, pts)


def _build_prism(q: int):
    items = []
    for v in range(3):
        for a in (0, 1):
            items.append((("vertex", v + 3 * a), ("vh", v, a)))
    for v in range(3):
        for i in range(2, q + 1):
            items.append((("edge", 6 + v), ("vL", v, i)))
    for g in range(3):
        for a, emap in ((0, PRISM_BOTTOM_EDGE), (1, PRISM_TOP_EDGE)):
            for i in range(2, q + 1):
                items.append((("edge", emap[g]), ("eh", g, i, a)))
    for g in range(3):
        face = PRISM_QUAD_OF_EDGE[g]
        for i in range(2, q + 1):
            for j in range(2, q + 1 - i):
                items.append((("face", face), ("eL", g, i, j)))
    for a in (0, 1):
        for (k, l) in _bubble_pairs(q):
            items.append((("face", a), ("bh", k, l, a)))
    for j in range(2, q + 1):
        for (k, l) in _bubble_pairs(q - j):
            items.append((("interior", 0), ("bL", k, l, j)))
    return group_functions(items)


def _eval_prism(cat: PotentialCatalog, pts: np.ndarray):
    q = cat.q
    npts = len(pts)
    xy, z = pts[:, :2], pts[:, 2]
    lam = tri_lambda(xy)
    hz, dhz = seg_hats(z)
    Lz = seg_integrated(q, z)
    edge = {g: tri_edge_integrated_legendre(q, g, xy) for g in range(3)}
    if q >= 3:
        bv, bg = tri_bubble(xy)
        qv, qg = tri_qij(q, xy)
    vals = np.empty((cat.n, npts))
    grads = np.empty((cat.n, npts, 3))
    for row, d in enumerate(cat._descs):
        tag = d[0]
        if tag == "vh":
            _, v, a = d
            vals[row] = lam[v] * hz[a]
            grads[row, :, :2] = TRI_LAMBDA_GRAD[v] * hz[a][:, None]
            grads[row, :, 2] = lam[v] * dhz[a]
        elif tag == "vL":
            _, v, i = d
            vals[row] = lam[v] * Lz[0, i]
            grads[row, :, :2] = TRI_LAMBDA_GRAD[v] * Lz[0, i][:, None]
            grads[row, :, 2] = lam[v] * Lz[1, i]
        elif tag == "eh":
            _, g, i, a = d
            ev, eg = edge[g]
            vals[row] = ev[i] * hz[a]
            grads[row, :, :2] = eg[i] * hz[a][:, None]
            grads[row, :, 2] = ev[i] * dhz[a]
        elif tag == "eL":
            _, g, i, j = d
            ev, eg = edge[g]
            vals[row] = ev[i] * Lz[0, j]
            grads[row, :, :2] = eg[i] * Lz[0, j][:, None]
            grads[row, :, 2] = ev[i] * Lz[1, j]
        elif tag == "bh":
            _, k, l, a = d
            s = bv * qv[k, l]
            ds = bg * qv[k, l][:, None] + bv[:, None] * qg[k, l]
            vals[row] = s * hz[a]
            grads[row, :, :2] = ds * hz[a][:, None]
            grads[row, :, 2] = s * dhz[a]
        else:
            _, k, l, j = d
            s = bv * qv[k, l]
            ds = bg * qv[k, l][:, None] + bv[:, None] * qg[k, l]
            vals[row] = s * Lz[0, j]
            grads[row, :, :2] = ds * Lz[0, j][:, None]
            grads[row, :, 2] = s * Lz[1, j]
    return vals, grads


def _build_hex(q: int):
    topo = CELLS["hex"]
    items = []
    for v in range(8):
        sides = tuple(int(c) for c in topo.vertices[v])
        items.append((("vertex", v), ("vert", sides)))
    for e, (a, b) in enumerate(topo.edges):
        va, vb = topo.vertices[a], topo.vertices[b]
        axis = int(np.nonzero(va != vb)[0][0])
        sides = tuple(int(va[ax]) for ax in range(3) if ax != axis)
        reversed_edge = va[axis] > vb[axis]
        for i in range(2, q + 1):
            sign = (-1.0) ** i if reversed_edge else 1.0
            items.append((("edge", e), ("edge", axis, sides, i, sign)))
    for (axis, side), face in HEX_FACE_OF.items():
        for i in range(2, q + 1):
            for j in range(2, q + 1 - i):
                items.append((("face", face), ("face", axis, side, i, j)))
    for i in range(2, q + 1):
        for j in range(2, q + 1 - i):
            for k in range(2, q + 1 - i - j):
                items.append((("interior", 0), ("int", i, j, k)))
    return group_functions(items)


def _eval_hex(cat: PotentialCatalog, pts: np.ndarray):
    q = cat.q
    npts = len(pts)
    hats = [seg_hats(pts[:, ax]) for ax in range(3)]
    L = [seg_integrated(q, pts[:, ax]) for ax in range(3)]
    vals = np.empty((cat.n, npts))
    grads = np.empty((cat.n, npts, 3))

    def factor(axis, mode):
        """(value, derivative) of a 1-D factor along an axis."""
        if mode[0] == "hat":
            return hats[axis][0][mode[1]], hats[axis][1][mode[1]]
        return L[axis][0, mode[1]], L[axis][1, mode[1]]

    for row, d in enumerate(cat._descs):
        tag = d[0]
        sign = 1.0
        if tag == "vert":
            modes = [("hat", s) for s in d[1]]
        elif tag == "edge":
            _, axis, sides, i, sign = d
            modes = [None, None, None]
            modes[axis] = ("L", i)
            others = [ax for ax in range(3) if ax != axis]
            for ax, s in zip(others, sides):
                modes[ax] = ("hat", s)
        elif tag == "face":
            _, axis, side, i, j = d
            modes = [None, None, None]
            modes[axis] = ("hat", side)
            others = [ax for ax in range(3) if ax != axis]
            modes[others[0]] = ("L", i)
            modes[others[1]] = ("L", j)
        else:
            _, i, j, k = d
            modes = [("L", i), ("L", j), ("L", k)]
        f = [factor(ax, modes[ax]) for ax in range(3)]
        vals[row] = sign * f[0][0] * f[1][0] * f[2][0]
        grads[row, :, 0] = sign * f[0][1] * f[1][0] * f[2][0]
        grads[row, :, 1] = sign * f[0][0] * f[1][1] * f[2][0]
        grads[row, :, 2] = sign * f[0][0] * f[1][0] * f[2][1]
    return vals, grads


@lru_cache(maxsize=None)
def tri_h1(q: int) -> TriH1:
    return TriH1(q)


@lru_cache(maxsize=None)
def potential_catalog(kind: str, q: int) -> PotentialCatalog:
    return PotentialCatalog(kind, q)
