"""Entity numbering, conforming traces, element matrices, BCs, assembly."""

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from meshes import (ALU, COORDS, DISTORT, HYBRID_SPEC, MATS, PZT, SHIFT,
                    TWO_ELEMENT_SPECS, build_mesh, equilibrated_solve,
                    hybrid_mesh, lin_nodes, smooth_warp)
from tdnns.assembly import (BoundaryCondition, DofMap, assemble,
                            edge_dof_count, element_system, element_transfer,
                            evaluate_element, face_dof_count)
from tdnns.cells import (CELLS, facet_corner_coords, facet_embed,
                         facet_embed_tangents)
from tdnns.generators import tag_remaining_boundary
from tdnns.meshing import Element, Mesh, validate_mesh


# ---------------------------------------------------------------------------
# canonical trace re-expression
# ---------------------------------------------------------------------------

class TestTransfers:
    def test_entity_dof_counts(self):
        assert [edge_dof_count("u", p) for p in (1, 2, 3)] == [2, 3, 4]
        assert [edge_dof_count("phi", q) for q in (1, 2, 3)] == [0, 1, 2]
        assert edge_dof_count("s", 3) == 0
        assert [face_dof_count("u", "tri", p) for p in (1, 2, 3)] == [0, 3, 8]
        assert [face_dof_count("u", "quad", p) for p in (1, 2, 3)] == [4, 12, 24]
        assert [face_dof_count("s", "tri", p) for p in (1, 2)] == [3, 6]
        assert [face_dof_count("s", "quad", p) for p in (1, 2)] == [4, 9]
        assert [face_dof_count("phi", "tri", q) for q in (2, 3, 4)] == [0, 1, 3]
        assert [face_dof_count("phi", "quad", q) for q in (2, 3, 4, 5)] == [0, 0, 1, 3]

    @pytest.mark.parametrize("kind", ["prism", "hex"])
    def test_square_and_well_conditioned(self, kind):
        spec = [(kind, tuple(range(6 if kind == "prism" else 8)))]
        coords = {i: CELLS[kind].vertices[i] for i in range(len(spec[0][1]))}
        mesh = build_mesh(spec, "pzt5h", coords=coords)
        dm = DofMap(mesh, MATS, 1, 1)
        eo, fc = dm._signature(0)
        for fld, orders in (("u", (1, 2, 3)), ("s", (1, 2, 3)),
                            ("phi", (1, 2, 3, 4))):
            for order in orders:
                X = element_transfer(fld, kind, order, eo, fc)
                assert X.shape[0] == X.shape[1]
                assert np.linalg.cond(X) < 4.0


# ---------------------------------------------------------------------------
# global numbering
# ---------------------------------------------------------------------------

class TestDofCounts:
    def test_shared_entities_deduplicated(self):
        p, q = 2, 3
        coords = {i: CELLS["hex"].vertices[i] for i in range(8)}
        single = build_mesh([("hex", tuple(range(8)))], "pzt5h", coords=coords)
        double = build_mesh([("hex", (0, 1, 6, 2, 3, 4, 7, 5)),
                             ("hex", (1, 8, 9, 6, 4, 10, 11, 7))], "pzt5h")
        dm1 = DofMap(single, MATS, p, q)
        dm2 = DofMap(double, MATS, p, q)
        # the shared quad face carries 4 vertices, 4 edges and one face
        shared_u = 4 * edge_dof_count("u", p) + face_dof_count("u", "quad", p)
        shared_s = face_dof_count("s", "quad", p)
        shared_phi = (4 + 4 * edge_dof_count("phi", q)
                      + face_dof_count("phi", "quad", q))
        assert dm2.n_u == 2 * dm1.n_u - shared_u
        assert dm2.n_s == 2 * dm1.n_s - shared_s
        assert dm2.n_phi == 2 * dm1.n_phi - shared_phi
        c = dm2.counts()
        assert c["total"] == c["interior"] + c["condensed"]
        assert c["total"] == dm2.n_u + dm2.n_s + dm2.n_phi

    def test_potential_only_near_electric_material(self):
        double = build_mesh([("hex", (0, 1, 6, 2, 3, 4, 7, 5))], "pzt5h")
        mixed = Mesh(geom_order=1, elements=(
            double.elements[0],
            Element("hex", (1, 8, 9, 6, 4, 10, 11, 7), "alu",
                    lin_nodes("hex", np.array(
                        [COORDS[v] for v in (1, 8, 9, 6, 4, 10, 11, 7)],
                        float), 1), None)),
            facet_tags={}, probes={}, frame_fields={})
        dm1 = DofMap(double, MATS, 2, 2)
        dmx = DofMap(mixed, MATS, 2, 2)
        assert dmx.n_phi == dm1.n_phi  # only the pzt element's entities
        x = np.random.default_rng(0).standard_normal(dmx.n_total)
        ev = evaluate_element(dmx, 1, np.array([[0.4, 0.5, 0.6]]), x)
        assert np.all(ev["phi"] == 0.0) and np.all(ev["E"] == 0.0)

    def test_order_validation(self):
        mesh = build_mesh([("hex", (0, 1, 6, 2, 3, 4, 7, 5))], "pzt5h")
        with pytest.raises(ValueError, match="order"):
            DofMap(mesh, MATS, 0, 1)
        with pytest.raises(ValueError, match="order"):
            DofMap(mesh, MATS, 1, 0)
        with pytest.raises(ValueError, match="unknown material"):
            DofMap(mesh, {"alu": ALU}, 1, 1)


# ---------------------------------------------------------------------------
# conformity across curved interfaces
# ---------------------------------------------------------------------------

def interface_params(nverts):
    s = np.linspace(0.1, 0.9, 4)
    A, B = np.meshgrid(s, s, indexing="ij")
    params = np.column_stack([A.ravel(), B.ravel()])
    return params if nverts == 4 else params / 2.0


def side_trace(mesh, dm, x, e, lf, params):
    el = mesh.elements[e]
    cyc = mesh.topology.local_face_cycle(e, lf)
    corners = facet_corner_coords(el.kind, lf, cyc)
    ref = facet_embed(corners, params)
    ta_r, tb_r = facet_embed_tangents(corners, params)
    md = mesh.element_map(e).at(ref)
    ta = np.einsum("qia,qa->qi", md.F, ta_r)
    tb = np.einsum("qia,qa->qi", md.F, tb_r)
    return evaluate_element(dm, e, ref, x), ta, tb


@pytest.mark.parametrize("name", sorted(TWO_ELEMENT_SPECS))
class TestInterfaceContinuity:
    """Tangential u, normal-normal stress and the potential match pointwise
    across a shared curved face for arbitrary coefficient vectors."""

    def jumps(self, name):
        mesh = build_mesh(TWO_ELEMENT_SPECS[name], "pzt5h", g=2,
                          warp=smooth_warp)
        validate_mesh(mesh)
        topo = mesh.topology
        gf, = [f for f, own in enumerate(topo.face_elems) if len(own) == 2]
        dm = DofMap(mesh, MATS, 2, 3)
        x = np.random.default_rng(7).standard_normal(dm.n_total)
        params = interface_params(len(topo.face_frames[gf]))
        (evA, ta, tb), (evB, _, _) = [
            side_trace(mesh, dm, x, e, lf, params)
            for (e, lf) in topo.face_elems[gf]]
        n = np.cross(ta, tb)
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        assert np.abs(evA["x"] - evB["x"]).max() < 1e-12
        du = evA["u"] - evB["u"]
        ds = evA["stress"] - evB["stress"]
        return {
            "u_t": np.abs(du - np.einsum("qa,qa,qb->qb", du, n, n)).max(),
            "s_nn": np.abs(np.einsum("qa,qab,qb->q", n, ds, n)).max(),
            "phi": np.abs(evA["phi"] - evB["phi"]).max(),
            "s_full": np.abs(ds).max(),
            "scales": (np.abs(evA["u"]).max(), np.abs(evA["stress"]).max(),
                       np.abs(evA["phi"]).max()),
        }

    def test_traces_continuous(self, name):
        j = self.jumps(name)
        su, ss, sphi = j["scales"]
        assert j["u_t"] < 1e-11 * su
        assert j["s_nn"] < 1e-11 * ss
        assert j["phi"] < 1e-11 * sphi

    def test_full_stress_tensor_jumps(self, name):
        # only sigma_nn is matched; the remaining components must not be
        j = self.jumps(name)
        assert j["s_full"] > 1e-3 * j["scales"][1]


# ---------------------------------------------------------------------------
# element matrices
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def curved_prism():
    coords = {i: CELLS["prism"].vertices[i] for i in range(6)}
    mesh = build_mesh([("prism", tuple(range(6)))], "pzt5h", g=2,
                      warp=smooth_warp, coords=coords)
    dm = DofMap(mesh, MATS, 2, 2)
    return (dm, *element_system(dm, 0))


class TestElementSystem:
    def test_symmetric(self, curved_prism):
        _, A, _, _ = curved_prism
        assert np.array_equal(A, A.T)

    def test_block_definiteness(self, curved_prism):
        dm, A, M, _ = curved_prism
        nu, ns, nphi = dm.element_gather(0).nloc
        su = slice(0, nu)
        ss = slice(nu, nu + ns)
        sphi = slice(nu + ns, nu + ns + nphi)
        assert np.all(np.linalg.eigvalsh(-A[ss, ss]) > 0)   # compliance
        # the dielectric form is singular exactly on the constant potential
        we = np.linalg.eigvalsh(-A[sphi, sphi])
        assert abs(we[0]) < 1e-12 * we[-1] and we[1] > 0
        assert np.abs(A[su, su]).max() == 0.0
        assert np.abs(A[su, sphi]).max() == 0.0
        assert M.shape == (nu, nu)  # inertia acts on displacement only
        assert np.all(np.linalg.eigvalsh(M) > 0)

    def test_load_vector_zero_without_data(self, curved_prism):
        _, _, _, f = curved_prism
        assert np.all(f == 0.0)


# ---------------------------------------------------------------------------
# exact solutions reproduced by the discrete system
# ---------------------------------------------------------------------------

def voigt_to_tensor_strain(v):
    return np.array([[v[0], v[5] / 2, v[4] / 2],
                     [v[5] / 2, v[1], v[3] / 2],
                     [v[4] / 2, v[3], v[2]]])


class TestParallelPlateCapacitor:
    """Single piezoceramic brick between electrodes: the exact solution has
    zero stress, a uniform field and a linear displacement, all of which lie
    in the discrete spaces for every order."""

    V0, H = 100.0, 1e-3

    def solution(self):
        E_vec = np.array([0.0, 0.0, -self.V0 / self.H])
        eps_t = voigt_to_tensor_strain(PZT.d.T @ E_vec)
        return E_vec, eps_t, (lambda x: x @ eps_t)

    @pytest.mark.parametrize("p,q", [(1, 1), (2, 2), (2, 3)])
    def test_recovered_to_machine_precision(self, p, q):
        E_vec, eps_t, u_exact = self.solution()
        coords = {i: np.asarray(CELLS["hex"].vertices[i]) * self.H
                  for i in range(8)}
        tags = {(0, 4): "bot", (0, 5): "top",
                (0, 0): "side", (0, 1): "side", (0, 2): "side", (0, 3): "side"}
        mesh = build_mesh([("hex", tuple(range(8)))], "pzt5h", coords=coords,
                          tags=tags)
        bcs = {
            "bot": BoundaryCondition(mech="clamp", potential=0.0,
                                     displacement=u_exact),
            "top": BoundaryCondition(mech="clamp", potential=self.V0,
                                     displacement=u_exact),
            "side": BoundaryCondition(mech="free"),
        }
        system = assemble(mesh, MATS, p, q, bcs)
        asym = abs(system.A - system.A.T).max()
        assert asym <= 1e-12 * abs(system.A).max()
        x = equilibrated_solve(system)
        pts = np.array([[0.3, 0.2, 0.6], [0.7, 0.5, 0.1], [0.5, 0.9, 0.8]])
        ev = evaluate_element(system.dofmap, 0, pts, x)
        s_scale = np.abs(PZT.C).max() * np.abs(eps_t).max()
        assert np.abs(ev["u"] - u_exact(ev["x"])).max() < 1e-12 * np.abs(eps_t).max() * self.H
        assert np.abs(ev["phi"] - self.V0 * ev["x"][:, 2] / self.H).max() < 1e-12 * self.V0
        assert np.abs(ev["E"] - E_vec).max() < 1e-12 * np.abs(E_vec).max()
        assert np.abs(ev["stress"]).max() < 1e-12 * s_scale


class TestConstantStressPatch:
    """A linear displacement field with its constant stress is reproduced
    exactly on a distorted hybrid mesh when clamped to the exact traces."""

    A_G = np.array([[2.1e-4, 0.4e-4, -0.7e-4],
                    [0.3e-4, -1.2e-4, 0.6e-4],
                    [0.9e-4, -0.2e-4, 1.5e-4]])

    def exact(self):
        eps = 0.5 * (self.A_G + self.A_G.T)
        eps_v = np.array([eps[0, 0], eps[1, 1], eps[2, 2],
                          2 * eps[1, 2], 2 * eps[0, 2], 2 * eps[0, 1]])
        sv = ALU.C @ eps_v
        sig = np.array([[sv[0], sv[5], sv[4]],
                        [sv[5], sv[1], sv[3]],
                        [sv[4], sv[3], sv[2]]])
        return (lambda x: x @ self.A_G.T), sig

    @pytest.mark.parametrize("p", [1, 2])
    def test_exact_on_hybrid_mesh(self, p):
        u_exact, sig = self.exact()
        mesh = hybrid_mesh()
        validate_mesh(mesh)
        bcs = {"wall": BoundaryCondition(mech="clamp", displacement=u_exact)}
        system = assemble(mesh, MATS, p, 1, bcs)
        x = equilibrated_solve(system)
        pts = np.array([[0.25, 0.3, 0.45], [0.1, 0.2, 0.7]])
        for e in range(len(mesh.elements)):
            ev = evaluate_element(system.dofmap, e, pts, x)
            assert (np.abs(ev["u"] - u_exact(ev["x"])).max()
                    < 1e-12 * np.abs(u_exact(ev["x"])).max())
            assert np.abs(ev["stress"] - sig).max() < 1e-12 * np.abs(sig).max()

    def test_condensation_matches_full(self):
        u_exact, sig = self.exact()
        mesh = hybrid_mesh()
        bcs = {"wall": BoundaryCondition(mech="clamp", displacement=u_exact)}
        full = assemble(mesh, MATS, 2, 1, bcs)
        cond = assemble(mesh, MATS, 2, 1, bcs, condense=True)
        c = cond.dofmap.counts()
        assert len(cond.free) == len(full.free) - c["interior"]
        assert cond.M is None
        with pytest.raises(ValueError, match="condensed"):
            cond.reduced_mass()
        xf = equilibrated_solve(full)
        xc = equilibrated_solve(cond)
        pts = np.array([[0.25, 0.3, 0.45], [0.1, 0.2, 0.7]])
        for e in range(len(mesh.elements)):
            a = evaluate_element(full.dofmap, e, pts, xf)
            b = evaluate_element(cond.dofmap, e, pts, xc)
            assert np.abs(a["u"] - b["u"]).max() < 1e-12 * np.abs(a["u"]).max()
            assert (np.abs(a["stress"] - b["stress"]).max()
                    < 1e-12 * np.abs(sig).max())


# ---------------------------------------------------------------------------
# invariance and determinism
# ---------------------------------------------------------------------------

class TestElementOrderInvariance:
    def setup_problem(self, reverse):
        coords = {k: np.asarray(v, float) @ DISTORT.T + SHIFT
                  for k, v in COORDS.items()}
        spec = HYBRID_SPEC[::-1] if reverse else HYBRID_SPEC
        mesh = build_mesh(spec, "alu", coords=coords)
        tag_remaining_boundary(mesh, "wall")
        load = lambda x: np.column_stack([
            0.3 * np.sin(3 * x[:, 0]), np.zeros(len(x)),
            -0.7 * np.cos(2 * x[:, 1])])
        bcs = {"wall": BoundaryCondition(mech="clamp")}
        system = assemble(mesh, MATS, 2, 1, bcs, volume_load=load)
        return mesh, system, equilibrated_solve(system)

    def test_solution_independent_of_element_order(self):
        _, _, x0 = self.setup_problem(False)
        _, _, x1 = self.setup_problem(True)
        sys0 = self.setup_problem(False)[1]
        sys1 = self.setup_problem(True)[1]
        pts = np.array([[0.3, 0.4, 0.5]])
        a = evaluate_element(sys0.dofmap, 2, pts, x0)   # the hex, listed last
        b = evaluate_element(sys1.dofmap, 0, pts, x1)   # the hex, listed first
        assert np.abs(a["x"] - b["x"]).max() < 1e-13
        assert np.abs(a["u"] - b["u"]).max() < 1e-10 * np.abs(a["u"]).max()
        assert (np.abs(a["stress"] - b["stress"]).max()
                < 1e-10 * np.abs(a["stress"]).max())

    def test_bitwise_deterministic(self):
        _, _, x0 = self.setup_problem(False)
        _, _, x1 = self.setup_problem(False)
        assert np.array_equal(x0, x1)


# ---------------------------------------------------------------------------
# boundary-condition validation
# ---------------------------------------------------------------------------

class TestBoundaryValidation:
    def two_prisms(self, tags):
        return build_mesh(TWO_ELEMENT_SPECS["prism-prism-quad"], "pzt5h",
                          tags=tags)

    def test_untagged_boundary_rejected(self):
        mesh = self.two_prisms({})
        with pytest.raises(ValueError, match="carry no tag"):
            assemble(mesh, MATS, 1, 1, {})

    def test_unknown_tag_rejected(self):
        mesh = self.two_prisms({})
        tag_remaining_boundary(mesh, "wall")
        with pytest.raises(ValueError, match="no boundary condition"):
            assemble(mesh, MATS, 1, 1, {})

    def test_conflicting_tags_rejected(self):
        mesh = self.two_prisms({(0, 2): "a", (1, 3): "b"})
        tag_remaining_boundary(mesh, "wall")
        free = BoundaryCondition(mech="free")
        with pytest.raises(ValueError, match="conflicting tags"):
            assemble(mesh, MATS, 1, 1, {"a": free, "b": free, "wall": free})

    def test_clamp_on_interior_facet_rejected(self):
        mesh = self.two_prisms({(0, 2): "mid"})
        tag_remaining_boundary(mesh, "wall")
        with pytest.raises(ValueError, match="interior"):
            assemble(mesh, MATS, 1, 1, {
                "mid": BoundaryCondition(mech="clamp"),
                "wall": BoundaryCondition(mech="clamp", potential=0.0)})

    def test_electrode_needs_electric_material(self):
        mesh = build_mesh(TWO_ELEMENT_SPECS["prism-prism-quad"], "alu")
        tag_remaining_boundary(mesh, "wall")
        with pytest.raises(ValueError, match="no electric material"):
            assemble(mesh, MATS, 1, 1, {
                "wall": BoundaryCondition(mech="free", potential=0.0)})

    def test_floating_potential_rejected(self):
        mesh = self.two_prisms({})
        tag_remaining_boundary(mesh, "wall")
        with pytest.raises(ValueError, match="float"):
            assemble(mesh, MATS, 1, 1,
                     {"wall": BoundaryCondition(mech="free")})

    def test_conflicting_electrode_values_rejected(self):
        coords = {i: CELLS["hex"].vertices[i] for i in range(8)}
        tags = {(0, 0): "a", (0, 2): "b", (0, 1): "w", (0, 3): "w",
                (0, 4): "w", (0, 5): "w"}
        mesh = build_mesh([("hex", tuple(range(8)))], "pzt5h",
                          coords=coords, tags=tags)
        with pytest.raises(ValueError, match="conflicting essential"):
            assemble(mesh, MATS, 1, 1, {
                "a": BoundaryCondition(mech="free", potential=100.0),
                "b": BoundaryCondition(mech="free", potential=0.0),
                "w": BoundaryCondition(mech="free")})

    def test_unknown_mech_rejected(self):
        with pytest.raises(ValueError, match="unknown mechanical"):
            BoundaryCondition(mech="pinned")
