"""Global assembly of the mixed displacement/stress/potential system.

Degrees of freedom live on mesh entities: tangential displacement on edges
and faces, normal-normal stress on faces, scalar potential on vertices,
edges and faces, plus element-private interior functions for all three
fields.  Each global degree of freedom is *defined* by a canonical trace
polynomial in globally oriented facet parameters (edges run from low to high
vertex id, faces use the canonical corner frame stored by the topology).
Per-element transfer matrices re-express the element's own shape functions in
this shared trace language, which makes the assembled fields conforming on
hybrid prism/hex meshes independent of local vertex order.

The assembled saddle-point block structure over (u, sigma, phi) is

    [ 0    B^T   0   ] [u    ]   [f]
    [ B   -C     Dt^T] [sigma] = [g]
    [ 0    Dt   -E   ] [phi  ]   [0]

with B the distributional strain-stress duality (volume term minus facet
normal-normal coupling), C the elastic compliance at constant field, Dt the
piezoelectric coupling and E the dielectric form at constant stress.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis.displacement import displacement_catalog, tri_tangential
from .basis.potential import potential_catalog
from .basis.stress import stress_catalog
from .cells import (
    CELLS,
    facet_corner_coords,
    facet_embed,
    facet_embed_tangents,
    facet_quadrature,
    pairs_total,
    quad_cell,
)
from .meshing import Mesh
from .polynomials import (
    integrated_legendre_unit,
    legendre_unit,
    quad_segment,
    scaled_integrated_legendre_jet,
)
from .basis.scalars import tri_bubble, tri_qij
from .tensors import Material, tensor_to_voigt_strain, tensor_to_voigt_stress
from .transform import (
    facet_frame,
    push_displacement,
    push_potential,
    push_stress,
    symmetric_gradient,
)

#: hard bound on the relative residual of every trace re-expression; a
#: violation means the element cannot represent the shared trace exactly.
TRANSFER_RTOL = 1e-9

_FIELDS = ("u", "s", "phi")


class AssemblyError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# canonical trace polynomials
# ---------------------------------------------------------------------------
# Faces are parametrized over the unit triangle / unit square in the corner
# order of the global face frame; mu are the triangle barycentrics attached to
# the frame corners, quads use corners P0..P3 = (0,0),(1,0),(1,1),(0,1).

_QUAD_POS = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
_TRI_SIDES = ((0, 1), (1, 2), (0, 2))  # frame corners sorted: never flipped
_QUAD_SIDES = ((0, 1), (1, 2), (2, 3), (3, 0))
_TRI_MU_GRAD = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def _tri_mu(params: np.ndarray) -> np.ndarray:
    a, b = params[:, 0], params[:, 1]
    return np.stack([1.0 - a - b, a, b])


def face_dof_count(fld: str, ftype: str, order: int) -> int:
    """Number of global degrees of freedom carried by a face."""
    if fld == "u":
        if ftype == "tri":
            return (order - 1) * (order + 1)
        return 2 * order * (order + 1)
    if fld == "s":
        if ftype == "tri":
            return (order + 1) * (order + 2) // 2
        return (order + 1) ** 2
    if ftype == "tri":
        return (order - 2) * (order - 1) // 2 if order >= 3 else 0
    return (order - 2) * (order - 3) // 2 if order >= 4 else 0


def edge_dof_count(fld: str, order: int) -> int:
    if fld == "u":
        return order + 1
    if fld == "phi":
        return order - 1
    return 0


def _u_face_targets(ftype: str, p: int, params: np.ndarray) -> np.ndarray:
    """Canonical tangential face bubbles, shape (n, npts, 2)."""
    npts = len(params)
    if ftype == "tri":
        n = face_dof_count("u", "tri", p)
        if n == 0:
            return np.zeros((0, npts, 2))
        cat = tri_tangential(p)
        blk = cat.block(("interior", 0))
        vals = cat.eval(params)[0]
        return vals[blk.start:blk.stop]
    a, b = params[:, 0], params[:, 1]
    la, lb = legendre_unit(p, a)[0], legendre_unit(p, b)[0]
    La = integrated_legendre_unit(p + 1, a)[0]
    Lb = integrated_legendre_unit(p + 1, b)[0]
    out = np.zeros((2 * p * (p + 1), npts, 2))
    k = 0
    for i in range(p + 1):
        for m in range(2, p + 2):
            out[k, :, 0] = la[i] * Lb[m]
            k += 1
    for i in range(p + 1):
        for m in range(2, p + 2):
            out[k, :, 1] = La[m] * lb[i]
            k += 1
    return out


def _s_face_targets(ftype: str, p: int, params: np.ndarray) -> np.ndarray:
    """Canonical weighted normal-normal traces, shape (n, npts)."""
    if ftype == "tri":
        val = tri_qij(p, params)[0]
        return np.stack([val[i, j] for (i, j) in pairs_total(p)])
    a, b = params[:, 0], params[:, 1]
    la, lb = legendre_unit(p, a)[0], legendre_unit(p, b)[0]
    return np.stack([la[i] * lb[j] for i in range(p + 1) for j in range(p + 1)])


def _phi_face_targets(ftype: str, q: int, params: np.ndarray) -> np.ndarray:
    npts = len(params)
    if ftype == "tri":
        if q < 3:
            return np.zeros((0, npts))
        bub = tri_bubble(params)[0]
        val = tri_qij(max(q - 3, 0), params)[0]
        return np.stack([bub * val[i, j] for (i, j) in pairs_total(q - 3)])
    if q < 4:
        return np.zeros((0, npts))
    a, b = params[:, 0], params[:, 1]
    La = integrated_legendre_unit(q, a)[0]
    Lb = integrated_legendre_unit(q, b)[0]
    return np.stack([La[i] * Lb[j]
                     for i in range(2, q + 1) for j in range(2, q + 1)
                     if i + j <= q])


def _phi_vertex_ext(ftype: str, corner: int, params: np.ndarray) -> np.ndarray:
    """Trace of the global vertex function on an adjacent face."""
    if ftype == "tri":
        return _tri_mu(params)[corner]
    a, b = params[:, 0], params[:, 1]
    return [(1 - a) * (1 - b), a * (1 - b), a * b, (1 - a) * b][corner]


def _edge_param(ftype: str, side: int, flip: bool, params: np.ndarray):
    """Along-parameter t (low-to-high) and perpendicular hat for a face side."""
    if ftype == "tri":
        j, k = _TRI_SIDES[side]
        mu = _tri_mu(params)
        return mu[k], None  # perpendicular decay handled per field
    j, k = _QUAD_SIDES[side]
    D = _QUAD_POS[k] - _QUAD_POS[j]
    ax = 0 if D[0] != 0 else 1
    t = params[:, ax] if D[ax] > 0 else 1.0 - params[:, ax]
    if flip:
        t = 1.0 - t
    c = _QUAD_POS[j][1 - ax]
    perp = params[:, 1 - ax] if c == 1.0 else 1.0 - params[:, 1 - ax]
    return t, (ax, D, perp)


def _u_edge_ext(ftype: str, side: int, flip: bool, p: int,
                params: np.ndarray) -> np.ndarray:
    """Face extension of the global edge functions, shape (p+1, npts, 2)."""
    npts = len(params)
    out = np.zeros((p + 1, npts, 2))
    if ftype == "tri":
        j, k = _TRI_SIDES[side]
        if flip:
            j, k = k, j
        mu = _tri_mu(params)
        # Whitney field for the constant trace; gradients of the scaled edge
        # bubbles for the higher traces (degree i, trace l_i, zero elsewhere)
        out[0] = (mu[j][:, None] * _TRI_MU_GRAD[k]
                  - mu[k][:, None] * _TRI_MU_GRAD[j])
        jet = scaled_integrated_legendre_jet(p + 1, mu[k] - mu[j],
                                             mu[j] + mu[k])
        gx = _TRI_MU_GRAD[k] - _TRI_MU_GRAD[j]
        gt = _TRI_MU_GRAD[k] + _TRI_MU_GRAD[j]
        for i in range(1, p + 1):
            out[i] = 0.5 * (jet["fx"][i + 1][:, None] * gx
                            + jet["ft"][i + 1][:, None] * gt)
        return out
    t, (ax, D, perp) = _edge_param("quad", side, flip, params)
    sign = float(np.sign(D[ax])) * (-1.0 if flip else 1.0)
    leg = legendre_unit(p, t)[0]
    for i in range(p + 1):
        out[i, :, ax] = sign * perp * leg[i]
    return out


def _phi_edge_ext(ftype: str, side: int, flip: bool, q: int,
                  params: np.ndarray) -> np.ndarray:
    """Face extension of the global edge potential bubbles, (q-1, npts)."""
    if ftype == "tri":
        j, k = _TRI_SIDES[side]
        if flip:
            j, k = k, j
        mu = _tri_mu(params)
        jet = scaled_integrated_legendre_jet(q, mu[k] - mu[j], mu[j] + mu[k])
        return jet["f"][2:q + 1]
    t, (_, _, perp) = _edge_param("quad", side, flip, params)
    L = integrated_legendre_unit(q, t)[0]
    return perp[None, :] * L[2:q + 1]


# ---------------------------------------------------------------------------
# per-element conforming transfers
# ---------------------------------------------------------------------------

_catalog_of = {
    "u": displacement_catalog,
    "s": stress_catalog,
    "phi": potential_catalog,
}

_transfer_cache: dict[tuple, np.ndarray] = {}


def _face_type(kind: str, lf: int) -> str:
    return "quad" if len(CELLS[kind].faces[lf]) == 4 else "tri"


def element_transfer(fld: str, kind: str, order: int,
                     edge_orders: tuple[tuple[int, int], ...],
                     face_cycles: tuple[tuple[int, ...], ...]) -> np.ndarray:
    """Boundary-block transfer matrix X: local coefficients = X @ global.

    Columns follow the fixed per-element global ordering (vertices, then
    edges in local order, then faces in local order); rows are the catalog's
    boundary functions (everything before the interior block).
    """
    key = (fld, kind, order, edge_orders, face_cycles)
    hit = _transfer_cache.get(key)
    if hit is not None:
        return hit

    cat = _catalog_of[fld](kind, order)
    topo = CELLS[kind]
    n_bnd = cat.n - cat.block(("interior", 0)).size
    nq = order + 2

    pts_list, row_builders = [], []
    # vertex value rows (potential only)
    if fld == "phi":
        pts_list.append(topo.vertices)
        row_builders.append(("verts", None))
    # edge trace rows
    if fld in ("u", "phi"):
        s1, w1 = quad_segment(nq)
        for le, (lo, hi) in enumerate(edge_orders):
            X = topo.vertices[lo] + np.outer(s1, topo.vertices[hi] - topo.vertices[lo])
            pts_list.append(X)
            row_builders.append(("edge", (le, lo, hi, s1, np.sqrt(w1))))
    # face trace rows
    for lf, cyc in enumerate(face_cycles):
        corners = facet_corner_coords(kind, lf, cyc)
        params, wf = facet_quadrature(kind, lf, nq)
        pts_list.append(facet_embed(corners, params))
        ta, tb = facet_embed_tangents(corners, params)
        row_builders.append(("face", (lf, params, np.sqrt(wf), ta, tb)))

    all_pts = np.concatenate(pts_list, axis=0)
    vals = cat.eval(all_pts)[0]

    # global column layout
    cols: list[tuple] = []
    if fld == "phi":
        cols += [("vertex", v, 0) for v in range(len(topo.vertices))]
    ne = edge_dof_count(fld, order)
    if ne:
        cols += [("edge", le, i) for le in range(len(topo.edges)) for i in range(ne)]
    for lf in range(len(topo.faces)):
        nf = face_dof_count(fld, _face_type(kind, lf), order)
        cols += [("face", lf, i) for i in range(nf)]
    n_glob = len(cols)
    col_of = {c: j for j, c in enumerate(cols)}
    if n_glob != n_bnd:
        raise AssemblyError(
            f"{fld}/{kind} order {order}: boundary count {n_bnd} != "
            f"canonical trace count {n_glob}")

    rows, tgts = [], []
    off = 0
    for (tag, info), pts in zip(row_builders, pts_list):
        npts = len(pts)
        V = vals[:n_bnd, off:off + npts]
        off += npts
        if tag == "verts":
            R = V.T  # (nverts, n_bnd)
            T = np.zeros((npts, n_glob))
            for v in range(npts):
                T[v, col_of[("vertex", v, 0)]] = 1.0
        elif tag == "edge":
            le, lo, hi, s1, sw = info
            if fld == "u":
                tvec = topo.vertices[hi] - topo.vertices[lo]
                R = np.einsum("fqa,a->qf", V, tvec)
            else:
                R = V.T
            T = np.zeros((npts, n_glob))
            if fld == "u":
                leg = legendre_unit(order, s1)[0]
                for i in range(order + 1):
                    T[:, col_of[("edge", le, i)]] = leg[i]
            else:
                L = integrated_legendre_unit(order, s1)[0]
                for i in range(order - 1):
                    T[:, col_of[("edge", le, i)]] = L[i + 2]
            if fld == "phi":
                T[:, col_of[("vertex", lo, 0)]] = 1.0 - s1
                T[:, col_of[("vertex", hi, 0)]] = s1
            R = R * sw[:, None]
            T = T * sw[:, None]
        else:  # face
            lf, params, sw, ta, tb = info
            ftype = _face_type(kind, lf)
            cyc = face_cycles[lf]
            nf = face_dof_count(fld, ftype, order)
            if fld == "u":
                Ra = np.einsum("fqa,qa->qf", V, ta)
                Rb = np.einsum("fqa,qa->qf", V, tb)
                R = np.concatenate([Ra, Rb], axis=0)
                T = np.zeros((2 * npts, n_glob))
                if nf:
                    tgt = _u_face_targets(ftype, order, params)
                    for i in range(nf):
                        T[:npts, col_of[("face", lf, i)]] = tgt[i, :, 0]
                        T[npts:, col_of[("face", lf, i)]] = tgt[i, :, 1]
                sides = _TRI_SIDES if ftype == "tri" else _QUAD_SIDES
                for side, (pj, pk) in enumerate(sides):
                    le, flip = _side_edge(kind, lf, cyc, pj, pk, edge_orders)
                    ext = _u_edge_ext(ftype, side, flip, order, params)
                    for i in range(order + 1):
                        T[:npts, col_of[("edge", le, i)]] = ext[i, :, 0]
                        T[npts:, col_of[("edge", le, i)]] = ext[i, :, 1]
                sw2 = np.concatenate([sw, sw])
                R = R * sw2[:, None]
                T = T * sw2[:, None]
            elif fld == "s":
                nvec = np.cross(ta, tb)
                R = np.einsum("qa,fqab,qb->qf", nvec, V, nvec)
                T = np.zeros((npts, n_glob))
                if nf:
                    tgt = _s_face_targets(ftype, order, params)
                    for i in range(nf):
                        T[:, col_of[("face", lf, i)]] = tgt[i]
                R = R * sw[:, None]
                T = T * sw[:, None]
            else:  # phi
                R = V.T
                T = np.zeros((npts, n_glob))
                if nf:
                    tgt = _phi_face_targets(ftype, order, params)
                    for i in range(nf):
                        T[:, col_of[("face", lf, i)]] = tgt[i]
                for pos, lv in enumerate(cyc):
                    T[:, col_of[("vertex", lv, 0)]] = _phi_vertex_ext(
                        ftype, pos, params)
                sides = _TRI_SIDES if ftype == "tri" else _QUAD_SIDES
                for side, (pj, pk) in enumerate(sides):
                    le, flip = _side_edge(kind, lf, cyc, pj, pk, edge_orders)
                    ext = _phi_edge_ext(ftype, side, flip, order, params)
                    for i in range(order - 1):
                        T[:, col_of[("edge", le, i)]] = ext[i]
                R = R * sw[:, None]
                T = T * sw[:, None]
        rows.append(R)
        tgts.append(T)

    R = np.concatenate(rows, axis=0)
    T = np.concatenate(tgts, axis=0)
    X, _, rank, _ = np.linalg.lstsq(R, T, rcond=None)
    if rank < n_bnd:
        raise AssemblyError(
            f"{fld}/{kind} order {order}: boundary trace matrix is rank "
            f"deficient ({rank} < {n_bnd})")
    res = np.abs(R @ X - T).max()
    scale = max(1.0, np.abs(T).max())
    if res > TRANSFER_RTOL * scale:
        raise AssemblyError(
            f"{fld}/{kind} order {order}: trace re-expression residual "
            f"{res:.3e} exceeds tolerance")
    _transfer_cache[key] = X
    return X


def _side_edge(kind: str, lf: int, cyc: tuple[int, ...], pj: int, pk: int,
               edge_orders: tuple[tuple[int, int], ...]) -> tuple[int, bool]:
    """Local edge id under a face-frame side, and whether the global edge
    direction (low-to-high id) is opposite to the frame's side direction."""
    a, b = cyc[pj], cyc[pk]
    topo = CELLS[kind]
    for le, ed in enumerate(topo.edges):
        if {ed[0], ed[1]} == {a, b}:
            lo, hi = edge_orders[le]
            return le, (lo, hi) != (a, b)
    raise AssemblyError(f"face side ({a},{b}) is not an edge of {kind}")


# ---------------------------------------------------------------------------
# degree-of-freedom layout
# ---------------------------------------------------------------------------

@dataclass
class ElementGather:
    cols: np.ndarray            # global dof ids touched by the element
    G: np.ndarray               # (n_local, len(cols)); x_loc = G @ x_glob
    nloc: tuple[int, int, int]  # local (u, s, phi) sizes
    loc_int: np.ndarray         # local indices of interior functions
    loc_bnd: np.ndarray


class DofMap:
    """Entity-based global numbering for the three fields (u | s | phi)."""

    def __init__(self, mesh: Mesh, materials: dict[str, Material],
                 p: int, p_phi: int):
        if p < 1:
            raise ValueError("displacement/stress order must be >= 1")
        if p_phi < 1:
            raise ValueError("potential order must be >= 1")
        self.mesh = mesh
        self.materials = dict(materials)
        for el in mesh.elements:
            if el.material not in self.materials:
                raise ValueError(f"mesh references unknown material "
                                 f"'{el.material}'")
        self.p, self.q = p, p_phi
        topo = mesh.topology
        self.topo = topo

        self.electric = np.array(
            [self.materials[el.material].electric for el in mesh.elements])

        ftype = ["quad" if len(f) == 4 else "tri" for f in topo.face_frames]
        edge_order = sorted(range(topo.n_edges), key=lambda g: topo.edge_keys[g])
        face_order = sorted(range(topo.n_faces),
                            key=lambda g: tuple(sorted(topo.face_frames[g])))

        phi_verts: set[int] = set()
        phi_edges: set[int] = set()
        phi_faces: set[int] = set()
        for e, el in enumerate(mesh.elements):
            if not self.electric[e]:
                continue
            phi_verts.update(el.verts)
            phi_edges.update(topo.elem_edges[e])
            phi_faces.update(topo.elem_faces[e])

        def layout(entries):
            table, n = {}, 0
            for key, size in entries:
                table[key] = (n, size)
                n += size
            return table, n

        kinds = [el.kind for el in mesh.elements]
        u_int = [displacement_catalog(k, p).block(("interior", 0)).size
                 for k in kinds]
        s_int = [stress_catalog(k, p).block(("interior", 0)).size for k in kinds]
        f_int = [potential_catalog(k, p_phi).block(("interior", 0)).size
                 for k in kinds]

        self.u_edge, n1 = layout([(g, p + 1) for g in edge_order])
        self.u_face, n2 = layout(
            [(g, face_dof_count("u", ftype[g], p)) for g in face_order])
        self.u_int, n3 = layout([(e, u_int[e]) for e in range(len(kinds))])
        for tab, shift in ((self.u_face, n1), (self.u_int, n1 + n2)):
            for k in tab:
                tab[k] = (tab[k][0] + shift, tab[k][1])
        self.n_u = n1 + n2 + n3
        self.n_u_bnd = n1 + n2

        self.s_face, m1 = layout(
            [(g, face_dof_count("s", ftype[g], p)) for g in face_order])
        self.s_int, m2 = layout([(e, s_int[e]) for e in range(len(kinds))])
        for k in self.s_int:
            self.s_int[k] = (self.s_int[k][0] + m1, self.s_int[k][1])
        self.n_s = m1 + m2
        self.n_s_bnd = m1

        self.phi_vert, k1 = layout(
            [(v, 1) for v in topo.vertex_ids if v in phi_verts])
        self.phi_edge, k2 = layout(
            [(g, p_phi - 1) for g in edge_order if g in phi_edges])
        self.phi_face, k3 = layout(
            [(g, face_dof_count("phi", ftype[g], p_phi))
             for g in face_order if g in phi_faces])
        self.phi_int, k4 = layout(
            [(e, f_int[e]) for e in range(len(kinds)) if self.electric[e]])
        for tab, shift in ((self.phi_edge, k1), (self.phi_face, k1 + k2),
                           (self.phi_int, k1 + k2 + k3)):
            for k in tab:
                tab[k] = (tab[k][0] + shift, tab[k][1])
        self.n_phi = k1 + k2 + k3 + k4
        self.n_phi_bnd = k1 + k2 + k3

        self.off_u, self.off_s = 0, self.n_u
        self.off_phi = self.n_u + self.n_s
        self.n_total = self.n_u + self.n_s + self.n_phi

        self.interior_mask = np.zeros(self.n_total, dtype=bool)
        for tab, off in ((self.u_int, self.off_u), (self.s_int, self.off_s),
                         (self.phi_int, self.off_phi)):
            for start, size in tab.values():
                self.interior_mask[off + start:off + start + size] = True

        self._gathers: list[ElementGather | None] = [None] * len(kinds)

    # ----------------------------------------------------------- dof lookup

    def _dofs(self, table: dict, key, off: int) -> np.ndarray:
        start, size = table[key]
        return np.arange(off + start, off + start + size)

    def u_edge_dofs(self, gedge: int) -> np.ndarray:
        return self._dofs(self.u_edge, gedge, self.off_u)

    def u_face_dofs(self, gface: int) -> np.ndarray:
        return self._dofs(self.u_face, gface, self.off_u)

    def s_face_dofs(self, gface: int) -> np.ndarray:
        return self._dofs(self.s_face, gface, self.off_s)

    def phi_vert_dofs(self, v: int) -> np.ndarray:
        if v not in self.phi_vert:
            return np.empty(0, dtype=int)
        return self._dofs(self.phi_vert, v, self.off_phi)

    def phi_edge_dofs(self, gedge: int) -> np.ndarray:
        if gedge not in self.phi_edge:
            return np.empty(0, dtype=int)
        return self._dofs(self.phi_edge, gedge, self.off_phi)

    def phi_face_dofs(self, gface: int) -> np.ndarray:
        if gface not in self.phi_face:
            return np.empty(0, dtype=int)
        return self._dofs(self.phi_face, gface, self.off_phi)

    def counts(self) -> dict[str, int]:
        n_int = int(self.interior_mask.sum())
        return {
            "u": self.n_u, "stress": self.n_s, "potential": self.n_phi,
            "total": self.n_total, "interior": n_int,
            "condensed": self.n_total - n_int,
        }

    # ------------------------------------------------------ element gathers

    def _signature(self, e: int):
        topo, el = self.topo, self.mesh.elements[e]
        nedge = len(CELLS[el.kind].edges)
        nface = len(CELLS[el.kind].faces)
        edge_orders = tuple(topo.edge_local_order(e, le) for le in range(nedge))
        face_cycles = tuple(topo.local_face_cycle(e, lf) for lf in range(nface))
        return edge_orders, face_cycles

    def element_gather(self, e: int) -> ElementGather:
        hit = self._gathers[e]
        if hit is not None:
            return hit
        el = self.mesh.elements[e]
        kind = el.kind
        topo = self.topo
        edge_orders, face_cycles = self._signature(e)
        electric = bool(self.electric[e])

        blocks: list[tuple[int, np.ndarray, np.ndarray]] = []  # (row0, cols, X)
        nloc = []
        row_off = 0
        loc_int: list[np.ndarray] = []
        for fld, off in (("u", self.off_u), ("s", self.off_s),
                         ("phi", self.off_phi)):
            if fld == "phi" and not electric:
                nloc.append(0)
                continue
            order = self.q if fld == "phi" else self.p
            cat = _catalog_of[fld](kind, order)
            n_int = cat.block(("interior", 0)).size
            n_bnd = cat.n - n_int
            X = element_transfer(fld, kind, order, edge_orders, face_cycles)
            cols = []
            if fld == "phi":
                for v in el.verts:
                    cols.extend(self.phi_vert_dofs(v))
            if fld in ("u", "phi"):
                table = self.u_edge if fld == "u" else self.phi_edge
                toff = self.off_u if fld == "u" else self.off_phi
                for ge in topo.elem_edges[e]:
                    cols.extend(self._dofs(table, ge, toff))
            ftable = {"u": self.u_face, "s": self.s_face,
                      "phi": self.phi_face}[fld]
            for gf in topo.elem_faces[e]:
                cols.extend(self._dofs(ftable, gf, off))
            if len(cols) != n_bnd:
                raise AssemblyError(
                    f"element {e} field {fld}: gathered {len(cols)} boundary "
                    f"dofs, expected {n_bnd}")
            itable = {"u": self.u_int, "s": self.s_int, "phi": self.phi_int}[fld]
            icols = self._dofs(itable, e, off)
            blocks.append((row_off, np.asarray(cols + list(icols), dtype=int),
                           X))
            loc_int.append(np.arange(row_off + n_bnd, row_off + n_bnd + n_int))
            nloc.append(n_bnd + n_int)
            row_off += n_bnd + n_int

        n_rows = row_off
        cols_all = np.concatenate([b[1] for b in blocks])
        G = np.zeros((n_rows, len(cols_all)))
        c0 = 0
        for row0, cols, X in blocks:
            nb = X.shape[0]
            ni = len(cols) - nb
            G[row0:row0 + nb, c0:c0 + nb] = X
            G[row0 + nb:row0 + nb + ni, c0 + nb:c0 + len(cols)] = np.eye(ni)
            c0 += len(cols)
        loc_int_all = (np.concatenate(loc_int) if loc_int
                       else np.empty(0, dtype=int))
        loc_bnd = np.setdiff1d(np.arange(n_rows), loc_int_all)
        g = ElementGather(cols=cols_all, G=G, nloc=tuple(nloc),
                          loc_int=loc_int_all, loc_bnd=loc_bnd)
        self._gathers[e] = g
        return g


# ---------------------------------------------------------------------------
# boundary conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryCondition:
    """Per-tag boundary data.

    mech 'free' leaves displacement unknown and imposes zero normal-normal
    stress on boundary facets; 'clamp' fixes the tangential displacement
    (to the trace of ``displacement`` if given, else zero) and couples the
    normal displacement data through the stress test functions.  A non-None
    ``potential`` grounds the facet's potential trace to that constant.
    """

    mech: str = "free"
    potential: float | None = None
    displacement: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.mech not in ("free", "clamp"):
            raise ValueError(f"unknown mechanical condition '{self.mech}'")


@dataclass
class Constraints:
    mask: np.ndarray   # True where the dof is essential
    value: np.ndarray
    disp_data: dict[tuple[int, int], Callable]  # clamp facets with given data

    def set(self, dofs: np.ndarray, vals) -> None:
        vals = np.broadcast_to(np.asarray(vals, dtype=float), dofs.shape)
        old = self.value[dofs]
        scale = max(np.max(np.abs(vals), initial=0.0),
                    np.max(np.abs(old), initial=0.0))
        clash = self.mask[dofs] & (np.abs(old - vals) > 1e-8 * scale)
        if np.any(clash):
            raise ValueError("conflicting essential values on shared "
                             "boundary entities")
        self.mask[dofs] = True
        self.value[dofs] = vals


def boundary_constraints(mesh: Mesh, dm: DofMap,
                         bcs: dict[str, BoundaryCondition]) -> Constraints:
    topo = dm.topo
    tagged = {}
    for (e, lf), tag in sorted(mesh.facet_tags.items()):
        if tag not in bcs:
            raise ValueError(f"facet tag '{tag}' has no boundary condition")
        gf = topo.elem_faces[e][lf]
        if gf in tagged and tagged[gf][1] != tag:
            raise ValueError(
                f"facet {gf} carries conflicting tags "
                f"'{tagged[gf][1]}' and '{tag}'")
        tagged[gf] = ((e, lf), tag)
    missing = [f for f in topo.boundary_faces() if f not in tagged]
    if missing:
        raise ValueError(
            f"{len(missing)} boundary facet(s) carry no tag; every exterior "
            "facet needs a boundary condition")

    con = Constraints(np.zeros(dm.n_total, dtype=bool),
                      np.zeros(dm.n_total), {})
    for gf, ((e, lf), tag) in sorted(tagged.items()):
        bc = bcs[tag]
        el = mesh.elements[e]
        boundary = len(topo.face_elems[gf]) == 1
        if bc.mech == "clamp":
            if not boundary:
                raise ValueError(f"tag '{tag}': clamp applied to an interior "
                                 "facet")
            if bc.displacement is None:
                con.set(dm.u_face_dofs(gf), 0.0)
                for le in _facet_edges(el.kind, lf):
                    con.set(dm.u_edge_dofs(topo.elem_edges[e][le]), 0.0)
            else:
                _project_clamp_data(mesh, dm, con, e, lf, gf, bc.displacement)
                con.disp_data[(e, lf)] = bc.displacement
        elif boundary:
            con.set(dm.s_face_dofs(gf), 0.0)
        if bc.potential is not None:
            if not np.any(dm.electric[[o[0] for o in topo.face_elems[gf]]]):
                raise ValueError(f"tag '{tag}': electrode on a facet with no "
                                 "electric material")
            for v in (el.verts[i] for i in CELLS[el.kind].faces[lf]):
                con.set(dm.phi_vert_dofs(v), float(bc.potential))
            for le in _facet_edges(el.kind, lf):
                con.set(dm.phi_edge_dofs(topo.elem_edges[e][le]), 0.0)
            con.set(dm.phi_face_dofs(gf), 0.0)
    return con


def _facet_edges(kind: str, lf: int) -> tuple[int, ...]:
    topo = CELLS[kind]
    cycle = topo.faces[lf]
    index = {tuple(sorted(ed)): i for i, ed in enumerate(topo.edges)}
    return tuple(index[tuple(sorted((cycle[k], cycle[(k + 1) % len(cycle)])))]
                 for k in range(len(cycle)))


def _project_clamp_data(mesh: Mesh, dm: DofMap, con: Constraints,
                        e: int, lf: int, gf: int, fn: Callable) -> None:
    """Essential tangential-displacement values from a boundary function."""
    topo, el = dm.topo, mesh.elements[e]
    emap = mesh.element_map(e)
    p = dm.p
    # edges: 1-d least squares against the Legendre trace basis
    s1, w1 = quad_segment(p + 3)
    sw = np.sqrt(w1)
    for le in _facet_edges(el.kind, lf):
        lo, hi = topo.edge_local_order(e, le)
        V = CELLS[el.kind].vertices
        X = V[lo] + np.outer(s1, V[hi] - V[lo])
        md = emap.at(X)
        tang = np.einsum("qia,a->qi", md.F, V[hi] - V[lo])
        data = np.einsum("qi,qi->q", fn(md.x), tang)
        leg = legendre_unit(p, s1)[0]
        coef, _, _, _ = np.linalg.lstsq((leg * sw).T, data * sw, rcond=None)
        con.set(dm.u_edge_dofs(topo.elem_edges[e][le]), coef)
    # face: least squares for the bubble remainder in the canonical frame
    nf = dm.u_face[gf][1]
    cyc = topo.local_face_cycle(e, lf)
    ftype = _face_type(el.kind, lf)
    corners = facet_corner_coords(el.kind, lf, cyc)
    params, wf = facet_quadrature(el.kind, lf, p + 3)
    Xf = facet_embed(corners, params)
    Ta, Tb = facet_embed_tangents(corners, params)
    md = emap.at(Xf)
    ta = np.einsum("qia,qa->qi", md.F, Ta)
    tb = np.einsum("qia,qa->qi", md.F, Tb)
    uv = fn(md.x)
    data = np.concatenate([np.einsum("qi,qi->q", uv, ta),
                           np.einsum("qi,qi->q", uv, tb)])
    edge_orders, _ = dm._signature(e)
    sides = _TRI_SIDES if ftype == "tri" else _QUAD_SIDES
    for side, (pj, pk) in enumerate(sides):
        le, flip = _side_edge(el.kind, lf, cyc, pj, pk, edge_orders)
        ext = _u_edge_ext(ftype, side, flip, p, params)
        cdofs = dm.u_edge_dofs(topo.elem_edges[e][le])
        coeffs = con.value[cdofs]
        data[:len(params)] -= coeffs @ ext[:, :, 0]
        data[len(params):] -= coeffs @ ext[:, :, 1]
    if nf:
        tgt = _u_face_targets(ftype, p, params)
        A = np.concatenate([tgt[:, :, 0], tgt[:, :, 1]], axis=1).T
        sw = np.sqrt(np.concatenate([wf, wf]))
        coef, _, _, _ = np.linalg.lstsq(A * sw[:, None], data * sw, rcond=None)
        con.set(dm.u_face_dofs(gf), coef)


# ---------------------------------------------------------------------------
# element matrices and global assembly
# ---------------------------------------------------------------------------

def _material_tables(dm: DofMap, e: int, x: np.ndarray):
    """Rotated compliance/coupling/permittivity tables at the points x."""
    mat = dm.materials[dm.mesh.elements[e].material]
    R = dm.mesh.frames_at(e, x)
    if R is None:
        n = len(x)
        return (np.broadcast_to(mat.S, (n, 6, 6)),
                np.broadcast_to(mat.d, (n, 3, 6)),
                np.broadcast_to(mat.eps_T, (n, 3, 3)), mat)
    S, d, eps = mat.rotated_batch(R)
    return S, d, eps, mat


def element_system(dm: DofMap, e: int, nq: int | None = None,
                   volume_load: Callable | None = None,
                   disp_data: Callable | None | dict = None):
    """Local saddle-point matrix, mass matrix and load vector.

    Row/column order is [u | sigma | phi(if electric)].  ``disp_data`` maps
    local facet ids to boundary displacement functions whose normal component
    enters the stress test equations.
    """
    mesh = dm.mesh
    el = mesh.elements[e]
    kind, p, q = el.kind, dm.p, dm.q
    electric = bool(dm.electric[e])
    emap = mesh.element_map(e)
    if nq is None:
        nq = max(p, q if electric else 1) + mesh.geom_order + 1

    ucat = displacement_catalog(kind, p)
    scat = stress_catalog(kind, p)
    pts, w = quad_cell(kind, nq)
    md = emap.at(pts)
    wJ = w * md.J

    uh, guh = ucat.eval(pts)
    u, gu = push_displacement(md, uh, guh)
    strain = symmetric_gradient(gu)
    sh, dsh = scat.eval(pts)
    s, _ = push_stress(md, sh, dsh)

    S, d, eps, mat = _material_tables(dm, e, md.x)
    sV = tensor_to_voigt_stress(s)
    eV = tensor_to_voigt_strain(strain)

    nu, ns = ucat.n, scat.n
    nphi = potential_catalog(kind, q).n if electric else 0
    n = nu + ns + nphi
    A = np.zeros((n, n))
    su, ss = slice(0, nu), slice(nu, nu + ns)
    sphi = slice(nu + ns, n)

    # large contractions are staged as batched matmul + tensordot (BLAS)
    sQ = np.ascontiguousarray(sV.transpose(1, 0, 2))       # (q, m, a)
    B = np.tensordot(sV * wJ[None, :, None], eV, axes=([1, 2], [1, 2]))
    SsV = np.matmul(sQ, S)                                  # (q, m, b)
    C = np.tensordot(SsV * wJ[:, None, None], sQ, axes=([0, 2], [0, 2]))
    M = mat.rho * np.tensordot(u * wJ[None, :, None], u, axes=([1, 2], [1, 2]))
    f = np.zeros(n)
    if volume_load is not None:
        f[su] = np.einsum("iqa,qa,q->i", u, volume_load(md.x), wJ)

    if electric:
        fh, gfh = potential_catalog(kind, q).eval(pts)
        _, gphi = push_potential(md, fh, gfh)
        dsig = np.matmul(sQ, d.transpose(0, 2, 1))          # (q, m, c)
        Dt = np.tensordot(gphi * wJ[None, :, None], dsig,
                          axes=([1, 2], [0, 2]))
        gQ = np.ascontiguousarray(gphi.transpose(1, 0, 2))  # (q, a, c)
        epsg = np.matmul(gQ, eps)
        E = np.tensordot(epsg * wJ[:, None, None], gQ, axes=([0, 2], [0, 2]))
        A[ss, sphi] = Dt.T
        A[sphi, ss] = Dt
        A[sphi, sphi] = -E

    # facet coupling: subtract the normal-normal stress / normal displacement
    # pairing on every facet of the element
    nqf = p + mesh.geom_order + 1
    for lf in range(len(CELLS[kind].faces)):
        params, wf = facet_quadrature(kind, lf, nqf)
        fr = facet_frame(emap, lf, params)
        shf, dshf = scat.eval(facet_embed(facet_corner_coords(kind, lf), params))
        sf, _ = push_stress(fr.md, shf, dshf)
        uhf, guhf = ucat.eval(facet_embed(facet_corner_coords(kind, lf), params))
        uf, _ = push_displacement(fr.md, uhf, guhf)
        snn = np.einsum("qa,mqab,qb->mq", fr.normal, sf, fr.normal,
                        optimize=True)
        un = np.einsum("iqa,qa->iq", uf, fr.normal, optimize=True)
        wdS = wf * fr.dS
        B -= (snn * wdS) @ un.T
        if disp_data and (e, lf) in disp_data:
            gn = np.einsum("qa,qa->q", disp_data[(e, lf)](fr.x), fr.normal)
            f[ss] -= np.einsum("mq,q,q->m", snn, gn, wdS)

    A[su, ss] = B.T
    A[ss, su] = B
    A[ss, ss] = -C
    A = 0.5 * (A + A.T)
    return A, M, f


@dataclass
class BlockSystem:
    """Assembled global system with essential-constraint bookkeeping."""

    dofmap: DofMap
    A: sp.csr_matrix
    M: sp.csr_matrix | None
    b: np.ndarray
    constraints: Constraints
    condensed: bool = False
    recovery: tuple | None = None

    @property
    def n(self) -> int:
        return self.dofmap.n_total

    @property
    def free(self) -> np.ndarray:
        keep = ~self.constraints.mask
        if self.condensed:
            keep &= ~self.dofmap.interior_mask
        return np.flatnonzero(keep)

    def field_of_dof(self) -> np.ndarray:
        """0 for u, 1 for stress, 2 for potential, per global dof."""
        dm = self.dofmap
        out = np.full(dm.n_total, 2, dtype=int)
        out[:dm.n_u] = 0
        out[dm.n_u:dm.n_u + dm.n_s] = 1
        return out

    def reduced(self):
        free = self.free
        ess = self.constraints.mask
        A = self.A.tocsr()
        b = self.b[free] - A[free][:, ess] @ self.constraints.value[ess]
        return A[free][:, free], b, free

    def reduced_mass(self):
        if self.M is None:
            raise ValueError("system was condensed; mass is unavailable")
        free = self.free
        return self.M.tocsr()[free][:, free]

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        x = self.constraints.value.copy()
        x[self.free] = x_free
        if self.condensed:
            ii, lu, Aib, b_i = self.recovery
            if len(ii):
                x[ii] = lu.solve(b_i - Aib @ x)
        return x


def assemble(mesh: Mesh, materials: dict[str, Material], p: int, p_phi: int,
             bcs: dict[str, BoundaryCondition], *,
             condense: bool = False,
             volume_load: Callable | None = None,
             nquad: int | None = None) -> BlockSystem:
    """Assemble the coupled system on the mesh.

    With ``condense=True`` the element-interior unknowns are eliminated by a
    global Schur complement (the interior coupling block is element-block
    diagonal); the returned system solves for interface unknowns only and
    recovers interiors on :meth:`BlockSystem.expand`.
    """
    dm = DofMap(mesh, materials, p, p_phi)
    con = boundary_constraints(mesh, dm, bcs)
    _check_grounding(mesh, dm, con)

    n = dm.n_total
    acc_a, acc_m = _CooAccumulator(n), _CooAccumulator(n)
    b = np.zeros(n)
    for e in range(len(mesh.elements)):
        g = dm.element_gather(e)
        A_loc, M_loc, f_loc = element_system(
            dm, e, nq=nquad, volume_load=volume_load,
            disp_data=con.disp_data)
        acc_a.add(g.cols, g.G.T @ A_loc @ g.G)
        nu = g.nloc[0]
        Gu = g.G[:nu]
        acc_m.add(g.cols, Gu.T @ M_loc @ Gu)
        np.add.at(b, g.cols, g.G.T @ f_loc)

    system = BlockSystem(dofmap=dm, A=acc_a.tocsr(), M=acc_m.tocsr(), b=b,
                         constraints=con)
    if condense:
        system = static_condense(system)
    return system


class _CooAccumulator:
    """Sparse accumulation of dense element blocks with bounded memory."""

    def __init__(self, n: int, flush_at: int = 4_000_000):
        self.n = n
        self.flush_at = flush_at
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.vals: list[np.ndarray] = []
        self.stored = 0
        self.partial: sp.csr_matrix | None = None

    def add(self, dofs: np.ndarray, block: np.ndarray) -> None:
        i, j = np.nonzero(block)
        self.rows.append(dofs[i])
        self.cols.append(dofs[j])
        self.vals.append(block[i, j])
        self.stored += len(i)
        if self.stored >= self.flush_at:
            self._flush()

    def _flush(self) -> None:
        if not self.rows:
            return
        part = sp.coo_matrix(
            (np.concatenate(self.vals),
             (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(self.n, self.n)).tocsr()
        self.partial = part if self.partial is None else self.partial + part
        self.rows, self.cols, self.vals = [], [], []
        self.stored = 0

    def tocsr(self) -> sp.csr_matrix:
        self._flush()
        if self.partial is None:
            return sp.csr_matrix((self.n, self.n))
        out = self.partial
        out.eliminate_zeros()
        return out


def _check_grounding(mesh: Mesh, dm: DofMap, con: Constraints) -> None:
    """Every connected electric region needs at least one electrode."""
    if dm.n_phi == 0:
        return
    parent: dict[int, int] = {}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for e, el in enumerate(mesh.elements):
        if not dm.electric[e]:
            continue
        for v in el.verts:
            parent.setdefault(v, v)
        for v in el.verts[1:]:
            union(el.verts[0], v)
    grounded = set()
    for v, (start, size) in dm.phi_vert.items():
        if con.mask[dm.off_phi + start]:
            grounded.add(find(v))
    floating = {find(v) for v in parent} - grounded
    if floating:
        raise ValueError(
            f"{len(floating)} electric region(s) have no electrode; the "
            "potential would float")


def static_condense(system: BlockSystem) -> BlockSystem:
    """Schur-complement elimination of element-interior unknowns."""
    if system.condensed:
        return system
    dm = system.dofmap
    ii = np.flatnonzero(dm.interior_mask)
    bb = np.flatnonzero(~dm.interior_mask)
    if len(ii) == 0:
        return BlockSystem(dofmap=dm, A=system.A, M=None, b=system.b,
                           constraints=system.constraints, condensed=True,
                           recovery=(ii, None, None, system.b[ii]))
    if system.constraints.mask[ii].any():
        raise AssemblyError("interior dofs must not carry essential values")
    A = system.A.tocsc()
    Aii = A[ii][:, ii].tocsc()
    Aib = A[ii][:, bb].tocsc()
    Abi = A[bb][:, ii].tocsc()
    Abb = A[bb][:, bb]
    lu = spla.splu(Aii, permc_spec="NATURAL")
    Y = spla.spsolve(Aii, Aib)
    if sp.issparse(Y):
        S = (Abb - Abi @ Y).tocoo()
    else:
        S = sp.coo_matrix(Abb.toarray() - Abi.toarray() @ Y)
    b_i = system.b[ii]
    b_new = np.zeros_like(system.b)
    b_new[bb] = system.b[bb] - Abi @ lu.solve(b_i)
    A_new = sp.coo_matrix((S.data, (bb[S.row], bb[S.col])),
                          shape=A.shape).tocsr()
    # recovery is x_i = Aii^-1 (b_i - Aib x_b); store Aib against full-size
    # vectors (interior columns zeroed) for simple indexing
    keep = sp.diags((~dm.interior_mask).astype(float))
    Aib_full = (A[ii] @ keep).tocsr()
    return BlockSystem(dofmap=dm, A=A_new, M=None, b=b_new,
                       constraints=system.constraints, condensed=True,
                       recovery=(ii, lu, Aib_full, b_i))


# ---------------------------------------------------------------------------
# field evaluation
# ---------------------------------------------------------------------------

def element_coefficients(dm: DofMap, e: int, x: np.ndarray):
    """Split a global solution vector into local (u, s, phi) coefficients."""
    g = dm.element_gather(e)
    loc = g.G @ x[g.cols]
    nu, ns, nphi = g.nloc
    return loc[:nu], loc[nu:nu + ns], loc[nu + ns:]


def evaluate_element(dm: DofMap, e: int, ref_pts: np.ndarray,
                     x: np.ndarray) -> dict[str, np.ndarray]:
    """Physical fields of a solution at reference points of one element."""
    mesh = dm.mesh
    el = mesh.elements[e]
    cu, cs, cphi = element_coefficients(dm, e, x)
    emap = mesh.element_map(e)
    md = emap.at(ref_pts)
    out: dict[str, np.ndarray] = {"x": md.x}

    uh, guh = displacement_catalog(el.kind, dm.p).eval(ref_pts)
    u, gu = push_displacement(md, uh, guh)
    out["u"] = np.einsum("f,fqa->qa", cu, u)
    gusol = np.einsum("f,fqab->qab", cu, gu)
    out["strain"] = symmetric_gradient(gusol)

    sh, dsh = stress_catalog(el.kind, dm.p).eval(ref_pts)
    s, ds = push_stress(md, sh, dsh)
    out["stress"] = np.einsum("f,fqab->qab", cs, s)
    out["div_stress"] = np.einsum("f,fqa->qa", cs, ds)

    if len(cphi):
        fh, gfh = potential_catalog(el.kind, dm.q).eval(ref_pts)
        ph, gphi = push_potential(md, fh, gfh)
        out["phi"] = np.einsum("f,fq->q", cphi, ph)
        out["E"] = -np.einsum("f,fqa->qa", cphi, gphi)
    else:
        nq = len(ref_pts)
        out["phi"] = np.zeros(nq)
        out["E"] = np.zeros((nq, 3))
    return out
