"""Mesh container, generators, conformity validation, and text round-trip."""

import numpy as np
import pytest

from tdnns.generators import gen_patch_plate, gen_semicylinder
from tdnns.meshing import (Mesh, canonical_quad, mesh_from_text, mesh_to_text,
                           validate_mesh)

R_OUT, THICK, LEN = 0.015, 0.001, 0.005
PLATE_L, PLATE_T, PATCH_D, PATCH_T = 0.025, 0.001, 0.015, 0.0005


@pytest.fixture(scope="module")
def shell():
    return gen_semicylinder(R_OUT, THICK, LEN, n_circ=6, n_len=2, geom_order=2)


@pytest.fixture(scope="module")
def plate():
    return gen_patch_plate(PLATE_L, PLATE_T, PATCH_D, PATCH_T,
                           n_ring_layers=2, geom_order=2, n_theta=8, n_fill=1)


class TestCanonicalQuad:
    def test_rotations_and_reflections_agree(self):
        base = (3, 7, 11, 5)
        reps = [tuple(base[(i + k) % 4] for k in range(4)) for i in range(4)]
        reps += [tuple(rep[::-1]) for rep in reps]
        assert {canonical_quad(r) for r in reps} == {(3, 5, 11, 7)}

    def test_starts_at_min_toward_smaller_neighbour(self):
        assert canonical_quad((9, 2, 4, 8)) == (2, 4, 8, 9)
        assert canonical_quad((8, 4, 2, 9)) == (2, 4, 8, 9)


class TestSemicylinder:
    def test_element_count_and_kinds(self, shell):
        assert len(shell.elements) == 2 * 6 * 2
        assert all(el.kind == "prism" for el in shell.elements)
        assert all(el.material == "pzt5h" for el in shell.elements)

    def test_validates(self, shell):
        validate_mesh(shell)

    def test_volume_against_analytic(self):
        exact = 0.5 * np.pi * (R_OUT**2 - (R_OUT - THICK)**2) * LEN
        errs = []
        for g in (1, 2, 3):
            m = gen_semicylinder(R_OUT, THICK, LEN, 6, 1, geom_order=g)
            errs.append(abs(m.volume(nquad=6) - exact) / exact)
        assert errs[1] < 1e-3            # curved geometry hits 0.1 %
        assert errs[2] < 1e-4
        assert errs[0] > 4 * errs[1] and errs[1] > 4 * errs[2]

    def test_boundary_fully_tagged(self, shell):
        topo = shell.topology
        for fid in topo.boundary_faces():
            (e, lf), = topo.face_elems[fid]
            assert (e, lf) in shell.facet_tags

    def test_electrode_and_clamp_positions(self, shell):
        from tdnns.cells import CELLS
        r_in = R_OUT - THICK
        ref_verts = np.asarray(CELLS["prism"].vertices, dtype=float)
        for (e, lf), tag in shell.facet_tags.items():
            cyc = CELLS["prism"].faces[lf]
            pts = shell.element_map(e).at(ref_verts[list(cyc)]).x
            if tag == "electrode_inner":
                assert np.allclose(np.hypot(*pts[:, :2].T), r_in, rtol=1e-12)
            elif tag == "electrode_outer":
                assert np.allclose(np.hypot(*pts[:, :2].T), R_OUT, rtol=1e-12)
            elif tag == "clamp":
                assert np.allclose(pts[:, 1], 0.0, atol=1e-15)
                assert np.all(pts[:, 0] > 0)

    def test_tip_probe_location(self, shell):
        e, ref = shell.probes["tip"]
        x = shell.element_map(e).at(ref[None, :]).x[0]
        assert np.allclose(x, [-R_OUT, 0.0, 0.0], atol=1e-12)
        e, ref = shell.probes["tip_inner"]
        x = shell.element_map(e).at(ref[None, :]).x[0]
        assert np.allclose(x, [-(R_OUT - THICK), 0.0, 0.0], atol=1e-12)

    def test_radial_frame(self, shell):
        e, ref = shell.probes["tip_mid"]
        x = shell.element_map(e).at(ref[None, :]).x
        R = shell.frames_at(e, x)[0]
        assert np.allclose(R.T @ R, np.eye(3), atol=1e-14)
        assert np.isclose(np.linalg.det(R), 1.0)
        radial = np.array([-1.0, 0.0, 0.0])       # outward at angle pi
        assert np.allclose(R[:, 2], radial, atol=1e-12)
        assert np.allclose(R[:, 1], [0, 0, 1], atol=1e-14)

    def test_invalid_dimensions_raise(self):
        with pytest.raises(ValueError):
            gen_semicylinder(0.01, 0.02, LEN, 6, 1)
        with pytest.raises(ValueError):
            gen_semicylinder(R_OUT, THICK, LEN, 1, 1)


class TestPatchPlate:
    def test_hybrid_kinds(self, plate):
        kinds = {el.kind for el in plate.elements}
        assert kinds == {"prism", "hex"}
        mats = {el.material for el in plate.elements}
        assert mats == {"aluminium", "pzt5h"}

    def test_validates(self, plate):
        validate_mesh(plate)

    def test_prism_hex_interfaces_exist(self, plate):
        topo = plate.topology
        mixed = 0
        for owners in topo.face_elems:
            if len(owners) == 2:
                k0 = plate.elements[owners[0][0]].kind
                k1 = plate.elements[owners[1][0]].kind
                mixed += k0 != k1
        assert mixed > 0

    def test_volumes(self):
        m = gen_patch_plate(PLATE_L, PLATE_T, PATCH_D, PATCH_T,
                            n_ring_layers=2, geom_order=2, n_theta=16, n_fill=2)
        patch_exact = 0.25 * np.pi * PATCH_D**2 * PATCH_T
        total_exact = PLATE_L**2 * PLATE_T + patch_exact
        patch_vol = 0.0
        for e, el in enumerate(m.elements):
            if el.material == "pzt5h":
                from tdnns.cells import quad_cell
                pts, w = quad_cell(el.kind, 6)
                patch_vol += float(m.element_map(e).at(pts).J @ w)
        assert abs(patch_vol - patch_exact) / patch_exact < 1e-3
        assert abs(m.volume(nquad=6) - total_exact) / total_exact < 1e-3

    def test_boundary_fully_tagged(self, plate):
        topo = plate.topology
        for fid in topo.boundary_faces():
            (e, lf), = topo.face_elems[fid]
            assert (e, lf) in plate.facet_tags

    def test_tag_positions(self, plate):
        from tdnns.cells import CELLS
        z_top = PLATE_T + PATCH_T
        saw = {"clamp": 0, "electrode_top": 0, "electrode_bottom": 0}
        for (e, lf), tag in plate.facet_tags.items():
            if tag not in saw:
                continue
            saw[tag] += 1
            el = plate.elements[e]
            cyc = CELLS[el.kind].faces[lf]
            ref = np.asarray(CELLS[el.kind].vertices, dtype=float)[list(cyc)]
            pts = plate.element_map(e).at(ref).x
            if tag == "clamp":
                assert np.allclose(pts[:, 0], 0.0, atol=1e-12 * PLATE_L)
            elif tag == "electrode_top":
                assert np.allclose(pts[:, 2], z_top, atol=1e-15)
            elif tag == "electrode_bottom":
                assert np.allclose(pts[:, 2], PLATE_T, atol=1e-15)
        assert all(v > 0 for v in saw.values())

    def test_electrode_bottom_is_interior(self, plate):
        topo = plate.topology
        for (e, lf), tag in plate.facet_tags.items():
            if tag == "electrode_bottom":
                fid = topo.elem_faces[e][lf]
                assert len(topo.face_elems[fid]) == 2

    def test_corner_probe(self, plate):
        e, ref = plate.probes["corner"]
        x = plate.element_map(e).at(ref[None, :]).x[0]
        assert np.allclose(x, [PLATE_L, PLATE_L, PLATE_T], atol=1e-12)
        e, ref = plate.probes["corner_bottom"]
        x = plate.element_map(e).at(ref[None, :]).x[0]
        assert np.allclose(x, [PLATE_L, PLATE_L, 0.0], atol=1e-12)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            gen_patch_plate(PLATE_L, PLATE_T, PLATE_L * 1.1, PATCH_T)
        with pytest.raises(ValueError):
            gen_patch_plate(PLATE_L, PLATE_T, PATCH_D, PATCH_T, n_theta=12)


class TestTopology:
    def test_interior_faces_have_two_owners(self, plate):
        topo = plate.topology
        counts = [len(owners) for owners in topo.face_elems]
        assert set(counts) <= {1, 2}

    def test_local_face_cycles_resolve(self, plate):
        topo = plate.topology
        for e, el in enumerate(plate.elements):
            from tdnns.cells import CELLS
            for lf in range(len(CELLS[el.kind].faces)):
                order = topo.local_face_cycle(e, lf)
                frame = topo.face_frames[topo.elem_faces[e][lf]]
                assert tuple(el.verts[v] for v in order) == frame

    def test_edge_local_order(self, shell):
        topo = shell.topology
        for e, el in enumerate(shell.elements):
            for le in range(9):
                a, b = topo.edge_local_order(e, le)
                assert el.verts[a] < el.verts[b]


class TestTextRoundTrip:
    def test_bit_exact(self, shell, plate):
        for mesh in (shell, plate):
            text = mesh_to_text(mesh)
            back = mesh_from_text(text)
            assert back.geom_order == mesh.geom_order
            assert len(back.elements) == len(mesh.elements)
            for a, b in zip(mesh.elements, back.elements):
                assert a.kind == b.kind and a.verts == b.verts
                assert a.material == b.material and a.frame == b.frame
                assert np.array_equal(a.nodes, b.nodes)
            assert back.facet_tags == mesh.facet_tags
            assert set(back.probes) == set(mesh.probes)
            for name in mesh.probes:
                assert back.probes[name][0] == mesh.probes[name][0]
                assert np.array_equal(back.probes[name][1], mesh.probes[name][1])
            assert back.frame_fields == mesh.frame_fields
            assert mesh_to_text(back) == text

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            mesh_from_text("not a mesh\n")
