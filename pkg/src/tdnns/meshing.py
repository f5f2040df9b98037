"""Mesh container, entity topology, conformity validation, and text IO.

A mesh is a list of curvilinear elements (prisms/hexes) with global vertex
ids, per-element geometry lattice nodes, an optional named material-frame
field (e.g. radial poling), facet tags for boundary conditions, and named
probe points given as (element, reference coords).

Entities are identified intrinsically: an edge by its sorted global vertex
pair, a face by its sorted global vertex tuple.  Canonical orientation frames
(edge: low-to-high vertex; quad face: cycle starting at the smallest vertex
toward its smaller neighbour; triangle: sorted vertices) make DOF coupling
independent of element ordering and local numbering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .cells import CELLS, facet_corner_coords, facet_embed, quad_cell
from .transform import ElementMap, cell_lattice


@dataclass(frozen=True)
class FrameField:
    """Material-frame field: rotation matrix R(x) whose columns are the
    material axes in global coordinates (poling along column 3).

    kinds:
      "identity"  material axes = global axes
      "radial"    column 3 = radial direction about the line (origin, axis),
                  column 2 = axis, column 1 = axis x radial (right-handed)
    """

    kind: str
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def eval(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = len(x)
        if self.kind == "identity":
            return np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
        if self.kind != "radial":
            raise ValueError(f"unknown frame field kind '{self.kind}'")
        a = np.asarray(self.axis, dtype=float)
        a = a / np.linalg.norm(a)
        rv = x - np.asarray(self.origin)
        rv = rv - np.outer(rv @ a, a)
        rn = np.linalg.norm(rv, axis=1)
        if rn.min() < 1e-14 * max(rn.max(), 1.0):
            raise ValueError("radial frame evaluated on its axis")
        e3 = rv / rn[:, None]
        e2 = np.broadcast_to(a, (n, 3))
        e1 = np.cross(e2, e3)
        return np.stack([e1, e2, e3], axis=-1)


@dataclass
class Element:
    kind: str
    verts: tuple[int, ...]
    material: str
    nodes: np.ndarray                 # (n_lattice, 3)
    frame: str | None = None          # name of a FrameField, None = identity


@dataclass
class Mesh:
    geom_order: int
    elements: list[Element]
    facet_tags: dict[tuple[int, int], str] = field(default_factory=dict)
    probes: dict[str, tuple[int, np.ndarray]] = field(default_factory=dict)
    frame_fields: dict[str, FrameField] = field(default_factory=dict)

    def __post_init__(self):
        for e, el in enumerate(self.elements):
            expected = len(cell_lattice(el.kind, self.geom_order))
            if el.nodes.shape != (expected, 3):
                raise ValueError(f"element {e}: expected {expected} nodes, got {el.nodes.shape}")
            nverts = len(CELLS[el.kind].vertices)
            if len(el.verts) != nverts:
                raise ValueError(f"element {e}: expected {nverts} vertex ids")
            if el.frame is not None and el.frame not in self.frame_fields:
                raise ValueError(f"element {e}: unknown frame field '{el.frame}'")

    @cached_property
    def topology(self) -> "MeshTopology":
        return MeshTopology(self)

    def element_map(self, e: int) -> ElementMap:
        el = self.elements[e]
        return ElementMap(el.kind, self.geom_order, el.nodes)

    def frames_at(self, e: int, x: np.ndarray) -> np.ndarray | None:
        """Material-frame rotations at physical points x, or None = identity."""
        name = self.elements[e].frame
        if name is None:
            return None
        return self.frame_fields[name].eval(x)

    def volume(self, nquad: int = 4) -> float:
        total = 0.0
        for e, el in enumerate(self.elements):
            pts, w = quad_cell(el.kind, nquad)
            total += float(self.element_map(e).at(pts).J @ w)
        return total

    def diameter(self) -> float:
        lo = np.full(3, np.inf)
        hi = np.full(3, -np.inf)
        for el in self.elements:
            lo = np.minimum(lo, el.nodes.min(axis=0))
            hi = np.maximum(hi, el.nodes.max(axis=0))
        return float(np.linalg.norm(hi - lo))


def canonical_quad(cycle: tuple[int, ...]) -> tuple[int, ...]:
    """Canonical representative of a 4-cycle: smallest vertex first, walking
    toward its smaller cycle neighbour."""
    i = int(np.argmin(cycle))
    nxt, prv = cycle[(i + 1) % 4], cycle[(i - 1) % 4]
    if nxt < prv:
        return tuple(cycle[(i + k) % 4] for k in range(4))
    return tuple(cycle[(i - k) % 4] for k in range(4))


class MeshTopology:
    """Global entity tables derived from element vertex ids."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        edge_id: dict[tuple[int, int], int] = {}
        face_id: dict[tuple[int, ...], int] = {}
        self.face_frames: list[tuple[int, ...]] = []  # oriented vertex tuples
        self.elem_edges: list[list[int]] = []
        self.elem_faces: list[list[int]] = []
        self.face_elems: list[list[tuple[int, int]]] = []

        for e, el in enumerate(mesh.elements):
            topo = CELLS[el.kind]
            verts = el.verts
            eids = []
            for (a, b) in topo.edges:
                key = tuple(sorted((verts[a], verts[b])))
                if key not in edge_id:
                    edge_id[key] = len(edge_id)
                eids.append(edge_id[key])
            self.elem_edges.append(eids)
            fids = []
            for lf, cyc in enumerate(topo.faces):
                gcyc = tuple(verts[v] for v in cyc)
                key = tuple(sorted(gcyc))
                if key not in face_id:
                    face_id[key] = len(face_id)
                    self.face_frames.append(
                        canonical_quad(gcyc) if len(gcyc) == 4 else tuple(sorted(gcyc)))
                    self.face_elems.append([])
                fid = face_id[key]
                fids.append(fid)
                self.face_elems[fid].append((e, lf))
            self.elem_faces.append(fids)

        self.edge_keys: list[tuple[int, int]] = [None] * len(edge_id)  # type: ignore
        for key, i in edge_id.items():
            self.edge_keys[i] = key
        self.n_edges = len(edge_id)
        self.n_faces = len(face_id)
        self.vertex_ids = sorted({v for el in mesh.elements for v in el.verts})

        for fid, owners in enumerate(self.face_elems):
            if len(owners) > 2:
                raise ValueError(f"face {fid} shared by {len(owners)} elements")

    def boundary_faces(self) -> list[int]:
        return [f for f, owners in enumerate(self.face_elems) if len(owners) == 1]

    def local_face_cycle(self, e: int, lf: int) -> tuple[int, ...]:
        """Local vertex indices of facet lf ordered to match the global frame.

        Raises if the global frame is not a rotation/reflection of the local
        cycle (twisted face), which would break conformity.
        """
        el = self.mesh.elements[e]
        cyc = CELLS[el.kind].faces[lf]
        gcyc = tuple(el.verts[v] for v in cyc)
        frame = self.face_frames[self.elem_faces[e][lf]]
        if len(cyc) == 3:
            return tuple(cyc[gcyc.index(v)] for v in frame)
        n = 4
        if set(frame) != set(gcyc):
            raise ValueError("face frame/vertex mismatch")
        i = gcyc.index(frame[0])
        fwd = tuple(gcyc[(i + k) % n] for k in range(n))
        bwd = tuple(gcyc[(i - k) % n] for k in range(n))
        if fwd == frame:
            return tuple(cyc[(i + k) % n] for k in range(n))
        if bwd == frame:
            return tuple(cyc[(i - k) % n] for k in range(n))
        raise ValueError(f"twisted quad face between elements at face {frame}")

    def edge_local_order(self, e: int, le: int) -> tuple[int, int]:
        """Local endpoints of edge le ordered low-to-high global id."""
        el = self.mesh.elements[e]
        a, b = CELLS[el.kind].edges[le]
        if el.verts[a] <= el.verts[b]:
            return (a, b)
        return (b, a)


def validate_mesh(mesh: Mesh, tol: float = 1e-12, nsample: int = 4) -> None:
    """Check positive jacobians and facet point-matching.

    Shared faces must agree pointwise between both parametrizations (relative
    to the mesh diameter), which is what makes all three fields conforming on
    curved interfaces.
    """
    topo = mesh.topology
    scale = mesh.diameter()
    for e, el in enumerate(mesh.elements):
        pts, _ = quad_cell(el.kind, 4)
        mesh.element_map(e).at(pts)          # raises on J <= 0
    s = np.linspace(0.12, 0.88, nsample)
    A, B = np.meshgrid(s, s, indexing="ij")
    params_quad = np.column_stack([A.ravel(), B.ravel()])
    params_tri = params_quad / 2.0
    for fid, owners in enumerate(topo.face_elems):
        if len(owners) != 2:
            continue
        xs = []
        for (e, lf) in owners:
            el = mesh.elements[e]
            order = topo.local_face_cycle(e, lf)
            corners = facet_corner_coords(el.kind, lf, order)
            params = params_quad if len(order) == 4 else params_tri
            X = facet_embed(corners, params)
            xs.append(mesh.element_map(e).at(X).x)
        gap = np.abs(xs[0] - xs[1]).max()
        if gap > tol * max(scale, 1.0):
            raise ValueError(f"face {fid} mismatch {gap:.3e} between elements "
                             f"{owners[0][0]} and {owners[1][0]}")


# ------------------------------------------------------------------ text IO

def _fmt(x: float) -> str:
    return np.format_float_positional(x, unique=True, trim="0")


def mesh_to_text(mesh: Mesh) -> str:
    out = ["tdnns-mesh 1", f"geom_order {mesh.geom_order}"]
    for name, ff in sorted(mesh.frame_fields.items()):
        coords = [*ff.origin, *ff.axis]
        out.append(f"frame_field {name} {ff.kind} " + " ".join(_fmt(v) for v in coords))
    for el in mesh.elements:
        out.append(f"element {el.kind} {el.material} {el.frame or '-'}")
        out.append("verts " + " ".join(str(v) for v in el.verts))
        for row in el.nodes:
            out.append("node " + " ".join(_fmt(v) for v in row))
    for (e, lf), tag in sorted(mesh.facet_tags.items()):
        out.append(f"facet_tag {e} {lf} {tag}")
    for name, (e, ref) in sorted(mesh.probes.items()):
        out.append(f"probe {name} {e} " + " ".join(_fmt(v) for v in ref))
    return "\n".join(out) + "\n"


def mesh_from_text(text: str) -> Mesh:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("tdnns-mesh"):
        raise ValueError("not a mesh file (missing 'tdnns-mesh' header)")
    geom_order = None
    elements: list[Element] = []
    facet_tags: dict[tuple[int, int], str] = {}
    probes: dict[str, tuple[int, np.ndarray]] = {}
    frame_fields: dict[str, FrameField] = {}
    cur: dict | None = None

    def flush():
        nonlocal cur
        if cur is None:
            return
        elements.append(Element(cur["kind"], tuple(cur["verts"]), cur["material"],
                                np.array(cur["nodes"]), cur["frame"]))
        cur = None

    for ln in lines[1:]:
        parts = ln.split()
        key = parts[0]
        if key == "geom_order":
            geom_order = int(parts[1])
        elif key == "frame_field":
            v = [float(t) for t in parts[3:9]]
            frame_fields[parts[1]] = FrameField(parts[2], tuple(v[:3]), tuple(v[3:]))
        elif key == "element":
            flush()
            frame = None if parts[3] == "-" else parts[3]
            cur = {"kind": parts[1], "material": parts[2], "frame": frame,
                   "verts": [], "nodes": []}
        elif key == "verts":
            cur["verts"] = [int(v) for v in parts[1:]]
        elif key == "node":
            cur["nodes"].append([float(v) for v in parts[1:]])
        elif key == "facet_tag":
            flush()
            facet_tags[(int(parts[1]), int(parts[2]))] = parts[3]
        elif key == "probe":
            flush()
            probes[parts[1]] = (int(parts[2]), np.array([float(v) for v in parts[3:]]))
        else:
            raise ValueError(f"unknown mesh directive: {key}")
    flush()
    if geom_order is None:
        raise ValueError("mesh file missing geom_order")
    return Mesh(geom_order, elements, facet_tags, probes, frame_fields)
