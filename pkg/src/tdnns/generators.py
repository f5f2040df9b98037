"""Built-in benchmark mesh generators.

Two generators are provided:

``gen_semicylinder``
    Half cylindrical shell (piezoelectric, radially poled), meshed with one
    prism layer through the thickness; the triangulation lives on the
    (angle, length) surface grid and is extruded radially.  Electrodes on the
    inner/outer surfaces, one straight edge face clamped.

``gen_patch_plate``
    Square plate with a circular patch bonded on top.  In-plane zones:
    triangulated core disk (prisms), structured ring layers around the patch
    circumference (hexes), and a blended circle-to-square fill (prisms).  The
    patch region repeats the disk/ring pattern in a second extrusion layer.

All curved coordinates are sampled from shared per-edge parametrizations so
that neighbouring elements produce identical facet nodes (conformity up to
roundoff), independent of element kind.
"""

from __future__ import annotations

import numpy as np

from .cells import PRISM_QUAD_OF_EDGE, TRI_EDGES, tri_lambda
from .meshing import Element, FrameField, Mesh
from .transform import cell_lattice


def _transfinite_tri(V: np.ndarray, curved: dict, pts: np.ndarray) -> np.ndarray:
    """Map reference-triangle points through vertices V (3,2) with optional
    curved edges.

    ``curved[e]`` is a vectorized curve c(s) -> (n,2) running from the first
    to the second vertex of reference edge e; the straight-edge blend
    (c(s) - chord(s)) * (lam_a + lam_b)^2 vanishes on the other two edges, so
    neighbouring elements agree wherever they share an edge curve.
    """
    lam = tri_lambda(pts).T
    x = lam @ V
    for e, curve in curved.items():
        a, b = TRI_EDGES[e]
        den = lam[:, a] + lam[:, b]
        safe = np.where(den > 0, den, 1.0)
        s = np.where(den > 0, lam[:, b] / safe, 0.0)
        chord = np.outer(1.0 - s, V[a]) + np.outer(s, V[b])
        x = x + (curve(s) - chord) * (den ** 2)[:, None]
    return x


def _arc(center: np.ndarray, r: float, th_a: float, th_b: float):
    def curve(s):
        th = th_a + s * (th_b - th_a)
        return center + r * np.column_stack([np.cos(th), np.sin(th)])
    return curve


# ------------------------------------------------------------- semicylinder

def gen_semicylinder(r: float, t: float, L: float, n_circ: int, n_len: int,
                     geom_order: int = 2) -> Mesh:
    """Half cylindrical shell: outer radius r, thickness t, length L (along
    global z), angle 0..pi, one prism element through the thickness.

    Tags: ``electrode_inner`` / ``electrode_outer`` (curved surfaces),
    ``clamp`` (the straight face at angle 0), ``free`` (remaining boundary).
    Probes: ``tip`` / ``tip_inner`` / ``tip_mid`` at the free-edge corner
    (angle pi, z = 0) on the outer/inner/mid surface.
    """
    if not (0.0 < t < r) or L <= 0.0:
        raise ValueError("semicylinder needs 0 < t < r and L > 0")
    if n_circ < 2 or n_len < 1:
        raise ValueError("semicylinder needs n_circ >= 2, n_len >= 1")
    g = geom_order
    theta = np.pi * np.arange(n_circ + 1) / n_circ
    zlen = L * np.arange(n_len + 1) / n_len
    r_in = r - t

    def vid(i: int, j: int, k: int) -> int:
        return (k * (n_len + 1) + j) * (n_circ + 1) + i

    lat = cell_lattice("prism", g)
    lam = tri_lambda(lat[:, :2]).T
    rho = r_in + t * lat[:, 2]

    elements: list[Element] = []
    facet_tags: dict[tuple[int, int], str] = {}
    probes: dict[str, tuple[int, np.ndarray]] = {}

    for j in range(n_len):
        for i in range(n_circ):
            s00, s10 = (i, j), (i + 1, j)
            s11, s01 = (i + 1, j + 1), (i, j + 1)
            for tri in ((s00, s10, s11), (s00, s11, s01)):
                th = lam @ np.array([theta[a] for a, _ in tri])
                zz = lam @ np.array([zlen[b] for _, b in tri])
                nodes = np.column_stack([rho * np.cos(th), rho * np.sin(th), zz])
                verts = tuple(vid(a, b, 0) for a, b in tri) + \
                        tuple(vid(a, b, 1) for a, b in tri)
                e = len(elements)
                elements.append(Element("prism", verts, "pzt5h", nodes, "radial"))
                facet_tags[(e, 0)] = "electrode_inner"
                facet_tags[(e, 1)] = "electrode_outer"
            if i == 0:
                # second triangle's edge (vertex0, vertex2) lies on angle 0
                facet_tags[(len(elements) - 1, PRISM_QUAD_OF_EDGE[1])] = "clamp"

    tip_elem = 2 * (n_circ - 1)          # first z-row, last angular cell, tri 1
    probes["tip"] = (tip_elem, np.array([1.0, 0.0, 1.0]))
    probes["tip_inner"] = (tip_elem, np.array([1.0, 0.0, 0.0]))
    probes["tip_mid"] = (tip_elem, np.array([1.0, 0.0, 0.5]))

    mesh = Mesh(g, elements, facet_tags, probes,
                {"radial": FrameField("radial", (0.0, 0.0, 0.0), (0.0, 0.0, 1.0))})
    tag_remaining_boundary(mesh, "free")
    return mesh


# -------------------------------------------------------------- patch plate

def gen_patch_plate(plate_len: float, plate_t: float, patch_d: float,
                    patch_t: float, n_ring_layers: int = 2, geom_order: int = 2,
                    *, n_theta: int = 16, n_fill: int = 2,
                    ring_width: float | None = None) -> Mesh:
    """Square plate (side plate_len, thickness plate_t) with a circular patch
    (diameter patch_d, thickness patch_t) bonded concentrically on top.

    Tags: ``clamp`` (plate side face at x = 0), ``electrode_top`` (patch top),
    ``electrode_bottom`` (patch/plate interface under the patch), ``free``.
    Probes: ``corner`` at (plate_len, plate_len, plate_t) and
    ``corner_bottom`` below it.
    """
    if patch_d >= plate_len:
        raise ValueError("patch must fit inside the plate")
    if n_theta % 8 != 0:
        raise ValueError("n_theta must be a multiple of 8 (square corners on rays)")
    if n_ring_layers < 1 or n_fill < 1:
        raise ValueError("need at least one ring and one fill layer")
    g = geom_order
    c = np.array([plate_len / 2.0, plate_len / 2.0])
    R_patch = patch_d / 2.0
    if ring_width is None:
        ring_width = 0.5 * patch_t
    R_core = R_patch - n_ring_layers * ring_width
    if R_core <= 0.25 * R_patch:
        raise ValueError("ring layers too wide for the patch radius")

    th = 2.0 * np.pi * np.arange(n_theta + 1) / n_theta
    # in-plane stations: 0 center; 1 core/2; 2 core; rings; fill blend; square
    radii = [R_core / 2.0, R_core]
    radii += [R_core + (k + 1) * (R_patch - R_core) / n_ring_layers
              for k in range(n_ring_layers)]
    n_disk_st = 1 + len(radii)                    # stations with a patch level
    sfill = [(m + 1) / n_fill for m in range(n_fill)]
    n_st = n_disk_st + n_fill
    half = plate_len / 2.0

    def square_pt(tk: float) -> np.ndarray:
        rad = half / max(abs(np.cos(tk)), abs(np.sin(tk)))
        return c + rad * np.array([np.cos(tk), np.sin(tk)])

    def blend_pt(tk: float, s: float) -> np.ndarray:
        circ = c + R_patch * np.array([np.cos(tk), np.sin(tk)])
        return (1.0 - s) * circ + s * square_pt(tk)

    def blend_curve(s: float, th_a: float, th_b: float):
        def curve(u):
            tk = th_a + u * (th_b - th_a)
            return np.array([blend_pt(v, s) for v in tk])
        return curve

    def station_xy(st: int, k: int) -> np.ndarray:
        if st == 0:
            return c.copy()
        if st < n_disk_st:
            rr = radii[st - 1]
            return c + rr * np.array([np.cos(th[k]), np.sin(th[k])])
        return blend_pt(th[k], sfill[st - n_disk_st])

    n_plane = 1 + n_theta * (n_st - 1)
    n_disk = 1 + n_theta * (n_disk_st - 1)

    def pid(st: int, k: int) -> int:
        if st == 0:
            return 0
        return 1 + (st - 1) * n_theta + (k % n_theta)

    def vid(level: int, st: int, k: int) -> int:
        if level < 2:
            return level * n_plane + pid(st, k)
        return 2 * n_plane + pid(st, k)          # patch top: disk stations only

    zlev = [0.0, plate_t, plate_t + patch_t]
    lat_p = cell_lattice("prism", g)
    lat_h = cell_lattice("hex", g)

    elements: list[Element] = []
    facet_tags: dict[tuple[int, int], str] = {}
    probes: dict[str, tuple[int, np.ndarray]] = {}

    def add_prism(tri_st, curved, level, material):
        xy = _transfinite_tri(np.array([station_xy(st, k) for st, k in tri_st]),
                              curved, lat_p[:, :2])
        zz = zlev[level] + (zlev[level + 1] - zlev[level]) * lat_p[:, 2]
        nodes = np.column_stack([xy, zz])
        verts = tuple(vid(level, st, k) for st, k in tri_st) + \
                tuple(vid(level + 1, st, k) for st, k in tri_st)
        elements.append(Element("prism", verts, material, nodes))
        return len(elements) - 1

    def add_ring_hex(st_a, st_b, k, level, material):
        r_a, r_b = radii[st_a - 1], radii[st_b - 1]
        rr = r_a + lat_h[:, 0] * (r_b - r_a)
        tt = th[k] + lat_h[:, 1] * (th[k + 1] - th[k])
        xy = c + rr[:, None] * np.column_stack([np.cos(tt), np.sin(tt)])
        zz = zlev[level] + (zlev[level + 1] - zlev[level]) * lat_h[:, 2]
        cyc = ((st_a, k), (st_b, k), (st_b, k + 1), (st_a, k + 1))
        verts = tuple(vid(level, st, kk) for st, kk in cyc) + \
                tuple(vid(level + 1, st, kk) for st, kk in cyc)
        elements.append(Element("hex", verts,
                                material, np.column_stack([xy, zz])))
        return len(elements) - 1

    def disk_layer(level: int, material: str) -> list[int]:
        """Fan + strip prisms and ring hexes for one extrusion layer."""
        ids = []
        for k in range(n_theta):                     # fan around the center
            tri = ((0, 0), (1, k), (1, k + 1))
            ids.append(add_prism(tri, {0: _arc(c, radii[0], th[k], th[k + 1])},
                                 level, material))
        for k in range(n_theta):                     # strip core/2 -> core
            quad = ((1, k), (2, k), (2, k + 1), (1, k + 1))
            ids.append(add_prism((quad[0], quad[1], quad[2]),
                                 {0: _arc(c, radii[1], th[k], th[k + 1])},
                                 level, material))
            ids.append(add_prism((quad[0], quad[2], quad[3]),
                                 {1: _arc(c, radii[0], th[k], th[k + 1])},
                                 level, material))
        for m in range(n_ring_layers):               # ring hexes
            for k in range(n_theta):
                ids.append(add_ring_hex(2 + m, 3 + m, k, level, material))
        return ids

    # plate level: disk pattern, then circle-to-square fill
    disk_layer(0, "aluminium")
    corner_ray = n_theta // 8
    clamp_lo, clamp_hi = 3 * n_theta // 8, 5 * n_theta // 8
    for m in range(n_fill):
        s_in = 0.0 if m == 0 else sfill[m - 1]
        s_out = sfill[m]
        st_in = n_disk_st - 1 if m == 0 else n_disk_st + m - 1
        st_out = n_disk_st + m
        for k in range(n_theta):
            quad = ((st_in, k), (st_out, k), (st_out, k + 1), (st_in, k + 1))
            inner = (_arc(c, R_patch, th[k], th[k + 1]) if m == 0
                     else blend_curve(s_in, th[k], th[k + 1]))
            e1 = add_prism((quad[0], quad[1], quad[2]),
                           {0: blend_curve(s_out, th[k], th[k + 1])},
                           0, "aluminium")
            add_prism((quad[0], quad[2], quad[3]), {1: inner}, 0, "aluminium")
            if m == n_fill - 1 and clamp_lo <= k < clamp_hi:
                facet_tags[(e1, PRISM_QUAD_OF_EDGE[0])] = "clamp"
            if m == n_fill - 1 and k == corner_ray:
                probes["corner"] = (e1, np.array([1.0, 0.0, 1.0]))
                probes["corner_bottom"] = (e1, np.array([1.0, 0.0, 0.0]))

    # patch level: same disk pattern one layer up
    for e in disk_layer(1, "pzt5h"):
        kind = elements[e].kind
        top, bottom = ((1, 0) if kind == "prism" else (5, 4))
        facet_tags[(e, top)] = "electrode_top"
        facet_tags[(e, bottom)] = "electrode_bottom"

    mesh = Mesh(g, elements, facet_tags, probes)
    tag_remaining_boundary(mesh, "free")
    return mesh


def tag_remaining_boundary(mesh: Mesh, tag: str) -> None:
    """Tag every untagged boundary facet (solvers require full coverage)."""
    topo = mesh.topology
    for fid in topo.boundary_faces():
        (e, lf), = topo.face_elems[fid]
        if (e, lf) not in mesh.facet_tags:
            mesh.facet_tags[(e, lf)] = tag
