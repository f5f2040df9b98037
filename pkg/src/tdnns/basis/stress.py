"""Normal-normal-continuous symmetric stress catalogs on prism and hex.

Every shape function is a scalar polynomial times a constant symmetric
tensor.  Face blocks carry the normal-normal trace (the tensor has unit
normal-normal component on the owning face and zero on all others); interior
blocks have vanishing normal-normal trace on the whole boundary.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..cells import HEX_FACE_OF, PRISM_QUAD_OF_EDGE, TRI_UNIT_TENSORS, pairs_total
from .catalog import Block, group_functions
from .scalars import seg_hats, seg_legendre, tri_edge_scaled_legendre, tri_qij

#: embed a 2x2 in-plane tensor into 3x3
def _embed2(t2: np.ndarray) -> np.ndarray:
    t = np.zeros((3, 3))
    t[:2, :2] = t2
    return t


_EZZ = np.zeros((3, 3))
_EZZ[2, 2] = 1.0


def _sym_pair(a: int, b: int) -> np.ndarray:
    t = np.zeros((3, 3))
    t[a, b] = t[b, a] = 0.5
    return t


_AXIS_UNIT = tuple(np.eye(3)[i][:, None] * np.eye(3)[i][None, :] for i in range(3))


class StressCatalog:
    """Catalog of symmetric-tensor shape functions with entity blocks."""

    def __init__(self, kind: str, p: int):
        if p < 1:
            raise ValueError("stress catalog needs p >= 1")
        self.kind = kind
        self.p = p
        builder = {"prism": _build_prism, "hex": _build_hex}[kind]
        # each item: (scalar_descriptor, tensor); scalar evaluated at call time
        self._items, self.blocks = builder(p)
        self.n = len(self._items)
        self._block_of = {b.entity: b for b in self.blocks}

    def block(self, entity: tuple[str, int]) -> Block:
        if entity not in self._block_of:
            return Block(entity, 0, 0)
        return self._block_of[entity]

    def eval(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values (n, npts, 3, 3) and divergences (n, npts, 3)."""
        scal, grad = _eval_scalars(self.kind, self.p, [it[0] for it in self._items], pts)
        tensors = np.stack([it[1] for it in self._items])
        vals = tensors[:, None, :, :] * scal[:, :, None, None]
        divs = np.einsum("fij,fqj->fqi", tensors, grad)
        return vals, divs


def _eval_scalars(kind, p, descs, pts):
    """Evaluate the scalar factors of all catalog items at once."""
    npts = len(pts)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    nmax = p + 2
    lz = seg_legendre(nmax, z, nderiv=1)
    hats_z, dhats_z = seg_hats(z)
    vals = np.empty((len(descs), npts))
    grads = np.empty((len(descs), npts, 3))

    if kind == "prism":
        qv, qg = tri_qij(nmax, pts[:, :2], nderiv=1)
        edge = {g: tri_edge_scaled_legendre(nmax, g, pts[:, :2]) for g in range(3)}
    else:
        lx = seg_legendre(nmax, x, nderiv=1)
        ly = seg_legendre(nmax, y, nderiv=1)
        axes_val = (lx, ly, lz)
        hats = (seg_hats(x), seg_hats(y), seg_hats(z))
        bub = (x * (1 - x), y * (1 - y), z * (1 - z))
        dbub = (1 - 2 * x, 1 - 2 * y, 1 - 2 * z)

    for row, d in enumerate(descs):
        tag = d[0]
        if tag == "tri_face":      # prism: q_ij * hat_a(z)
            _, i, j, a = d
            v2, g2 = qv[i, j], qg[i, j]
            h, dh = hats_z[a], dhats_z[a]
            vals[row] = v2 * h
            grads[row, :, 0] = g2[:, 0] * h
            grads[row, :, 1] = g2[:, 1] * h
            grads[row, :, 2] = v2 * dh
        elif tag == "quad_face":   # prism: edge scaled-Legendre * leg_k(z)
            _, g, i, k = d
            ev, eg = edge[g]
            vals[row] = ev[i] * lz[0, k]
            grads[row, :, 0] = eg[i, :, 0] * lz[0, k]
            grads[row, :, 1] = eg[i, :, 1] * lz[0, k]
            grads[row, :, 2] = ev[i] * lz[1, k]
        elif tag == "pri_a":       # q_ij * lam_g(x,y) * leg_k(z)
            _, i, j, g, k = d
            lam_val, lam_grad = _prism_lam(g, x, y)
            base = qv[i, j] * lam_val
            vals[row] = base * lz[0, k]
            grads[row, :, 0] = (qg[i, j, :, 0] * lam_val + qv[i, j] * lam_grad[0]) * lz[0, k]
            grads[row, :, 1] = (qg[i, j, :, 1] * lam_val + qv[i, j] * lam_grad[1]) * lz[0, k]
            grads[row, :, 2] = base * lz[1, k]
        elif tag == "pri_b":       # q_ij * z(1-z) * leg_k(z)
            _, i, j, k = d
            bz = z * (1.0 - z)
            dbz = 1.0 - 2.0 * z
            vals[row] = qv[i, j] * bz * lz[0, k]
            grads[row, :, 0] = qg[i, j, :, 0] * bz * lz[0, k]
            grads[row, :, 1] = qg[i, j, :, 1] * bz * lz[0, k]
            grads[row, :, 2] = qv[i, j] * (dbz * lz[0, k] + bz * lz[1, k])
        elif tag == "pri_c":       # q_ij * leg_k(z)
            _, i, j, k = d
            vals[row] = qv[i, j] * lz[0, k]
            grads[row, :, 0] = qg[i, j, :, 0] * lz[0, k]
            grads[row, :, 1] = qg[i, j, :, 1] * lz[0, k]
            grads[row, :, 2] = qv[i, j] * lz[1, k]
        elif tag == "hex_face":    # leg_i(u1) leg_j(u2) hat_a(axis)
            _, axis, a, i, j = d
            u1, u2 = [ax for ax in range(3) if ax != axis]
            t1, t2 = axes_val[u1], axes_val[u2]
            hv, hd = hats[axis]
            vals[row] = t1[0, i] * t2[0, j] * hv[a]
            g = np.zeros((npts, 3))
            g[:, u1] = t1[1, i] * t2[0, j] * hv[a]
            g[:, u2] = t1[0, i] * t2[1, j] * hv[a]
            g[:, axis] = t1[0, i] * t2[0, j] * hd[a]
            grads[row] = g
        elif tag == "hex_a":       # leg_j(u1) leg_k(u2) * bubble(axis)*leg_i(axis)
            _, axis, i, j, k = d
            u1, u2 = [ax for ax in range(3) if ax != axis]
            t1, t2, ta = axes_val[u1], axes_val[u2], axes_val[axis]
            bv, bd = bub[axis], dbub[axis]
            base = bv * ta[0, i]
            dbase = bd * ta[0, i] + bv * ta[1, i]
            vals[row] = t1[0, j] * t2[0, k] * base
            g = np.zeros((npts, 3))
            g[:, u1] = t1[1, j] * t2[0, k] * base
            g[:, u2] = t1[0, j] * t2[1, k] * base
            g[:, axis] = t1[0, j] * t2[0, k] * dbase
            grads[row] = g
        elif tag == "hex_b":       # leg_i(x) leg_j(y) leg_k(z)
            _, i, j, k = d
            vals[row] = lx[0, i] * ly[0, j] * lz[0, k]
            grads[row, :, 0] = lx[1, i] * ly[0, j] * lz[0, k]
            grads[row, :, 1] = lx[0, i] * ly[1, j] * lz[0, k]
            grads[row, :, 2] = lx[0, i] * ly[0, j] * lz[1, k]
        else:
            raise ValueError(f"unknown scalar tag {tag}")
    return vals, grads


def _prism_lam(g: int, x: np.ndarray, y: np.ndarray):
    """Barycentric lam_g (vanishing on triangle edge g) and its gradient."""
    if g == 0:
        return 1.0 - x - y, (-1.0, -1.0)
    if g == 1:
        return x, (1.0, 0.0)
    return y, (0.0, 1.0)


def _build_prism(p: int):
    items = []
    # triangle faces: scalar q_ij * hat, tensor ez x ez
    for a, face in ((0, 0), (1, 1)):
        for (i, j) in pairs_total(p):
            items.append((("face", face), (("tri_face", i, j, a), _EZZ)))
    # quad faces: edge scaled-Legendre * Legendre(z), in-plane unit tensor
    for g in range(3):
        face = PRISM_QUAD_OF_EDGE[g]
        t3 = _embed2(TRI_UNIT_TENSORS[g])
        for i in range(p + 1):
            for k in range(p + 1):
                items.append((("face", face), (("quad_face", g, i, k), t3)))
    # interior family a: in-plane tensors killed on the boundary by lam_g
    for g in range(3):
        t3 = _embed2(TRI_UNIT_TENSORS[g])
        for (i, j) in pairs_total(p - 1):
            for k in range(p + 2):
                items.append((("interior", 0), (("pri_a", i, j, g, k), t3)))
    # interior family b: ez x ez killed by the z bubble
    for (i, j) in pairs_total(p + 1):
        for k in range(p):
            items.append((("interior", 0), (("pri_b", i, j, k), _EZZ)))
    # interior family c: symmetrized in-plane/z couplings (zero nn-trace)
    for axis in (0, 1):
        t3 = _sym_pair(axis, 2)
        for (i, j) in pairs_total(p):
            for k in range(p + 1):
                items.append((("interior", 0), (("pri_c", i, j, k), t3)))
    payloads, blocks = group_functions(items)
    return payloads, blocks


def _build_hex(p: int):
    items = []
    for axis in range(3):
        taxis = _AXIS_UNIT[axis]
        for side in (0, 1):
            face = HEX_FACE_OF[(axis, side)]
            for i in range(p + 1):
                for j in range(p + 1):
                    items.append((("face", face), (("hex_face", axis, side, i, j), taxis)))
        # interior family a: normal tensor killed by the axis bubble
        for i in range(p):
            for j in range(p + 2):
                for k in range(p + 2):
                    items.append((("interior", 0), (("hex_a", axis, i, j, k), taxis)))
    # interior family b: shear couplings, identically zero nn-trace
    for (a1, a2) in ((0, 1), (0, 2), (1, 2)):
        t3 = _sym_pair(a1, a2)
        a3 = 3 - a1 - a2
        for i in range(p + 1):
            for j in range(p + 1):
                for k in range(p + 2):
                    ijk = [0, 0, 0]
                    ijk[a1], ijk[a2], ijk[a3] = i, j, k
                    items.append((("interior", 0), (("hex_b", *ijk), t3)))
    payloads, blocks = group_functions(items)
    return payloads, blocks


@lru_cache(maxsize=None)
def stress_catalog(kind: str, p: int) -> StressCatalog:
    return StressCatalog(kind, p)


def stress_count(kind: str, p: int) -> int:
    return stress_catalog(kind, p).n
