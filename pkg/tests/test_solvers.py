"""Static direct solves and the generalized eigensolver."""

import numpy as np
import pytest
import scipy.sparse as sp

from meshes import (MATS, TWO_ELEMENT_SPECS, build_mesh, equilibrated_solve,
                    hybrid_mesh)
from tdnns.assembly import BoundaryCondition, assemble, evaluate_element
from tdnns.cells import CELLS
from tdnns.generators import tag_remaining_boundary
from tdnns.solvers import (EigenResult, SolverError, dense_reduction_spectrum,
                           eigen_smallest, probe_values, solve_static)


class ToyPencil:
    """Duck-typed stand-in for a BlockSystem with explicit matrices."""

    condensed = False

    def __init__(self, A, M):
        self.A_, self.M_ = sp.csr_matrix(A), sp.csr_matrix(M)
        self.n = A.shape[0]

    def reduced(self):
        return self.A_, np.zeros(self.n), np.arange(self.n)

    def reduced_mass(self):
        return self.M_


def clamped_hybrid_system(p=1):
    mesh = hybrid_mesh()
    return assemble(mesh, MATS, p, 1,
                    {"wall": BoundaryCondition(mech="clamp")})


def piezo_system():
    """Two short-circuited prisms, one clamped side face."""
    tags = {(0, 0): "el", (1, 0): "el", (0, 1): "el2", (1, 1): "el2",
            (0, 3): "fix"}
    mesh = build_mesh(TWO_ELEMENT_SPECS["prism-prism-quad"], "pzt5h",
                      tags=tags)
    tag_remaining_boundary(mesh, "free")
    return assemble(mesh, MATS, 1, 2, {
        "el": BoundaryCondition(mech="free", potential=0.0),
        "el2": BoundaryCondition(mech="free", potential=0.0),
        "fix": BoundaryCondition(mech="clamp"),
        "free": BoundaryCondition(mech="free")})


class TestStaticSolve:
    def test_matches_reference_recipe(self):
        mesh = hybrid_mesh()
        load = lambda x: np.column_stack(
            [np.sin(x[:, 0]), np.cos(x[:, 1]), x[:, 2] ** 2])
        system = assemble(mesh, MATS, 2, 1,
                          {"wall": BoundaryCondition(mech="clamp")},
                          volume_load=load)
        res = solve_static(system)
        x_ref = equilibrated_solve(system)
        assert np.array_equal(res.x, x_ref)
        assert res.residual < 1e-12
        assert res.n_free == len(system.free)

    def test_condensed_solve_matches_full(self):
        mesh = hybrid_mesh()
        load = lambda x: np.column_stack(
            [np.sin(x[:, 0]), np.cos(x[:, 1]), x[:, 2] ** 2])
        bcs = {"wall": BoundaryCondition(mech="clamp")}
        sys_f = assemble(mesh, MATS, 2, 1, bcs, volume_load=load)
        sys_c = assemble(mesh, MATS, 2, 1, bcs, volume_load=load,
                         condense=True)
        full = solve_static(sys_f)
        cond = solve_static(sys_c)
        pts = np.array([[0.3, 0.3, 0.4]])
        for e in range(3):
            a = evaluate_element(sys_f.dofmap, e, pts, full.x)
            b = evaluate_element(sys_c.dofmap, e, pts, cond.x)
            assert np.abs(a["u"] - b["u"]).max() < 1e-11 * np.abs(a["u"]).max()
            assert (np.abs(a["stress"] - b["stress"]).max()
                    < 1e-11 * np.abs(a["stress"]).max())

    def test_rigid_modes_rejected(self):
        # nothing clamped: rigid modes make the system singular, and a load
        # with a net force has no solution at all
        mesh = hybrid_mesh()
        load = lambda x: np.tile([0.0, 0.0, 1e3], (len(x), 1))
        system = assemble(mesh, MATS, 1, 1,
                          {"wall": BoundaryCondition(mech="free")},
                          volume_load=load)
        with pytest.raises(SolverError):
            solve_static(system)

    def test_probe_values(self):
        coords = {i: CELLS["hex"].vertices[i] for i in range(8)}
        tags = {(0, lf): ("bot" if lf == 4 else "rest") for lf in range(6)}
        mesh = build_mesh([("hex", tuple(range(8)))], "alu", coords=coords,
                          tags=tags, probes={"mid": (0, np.array([0.5, 0.5, 0.5]))})
        load = lambda x: np.column_stack(
            [np.zeros(len(x)), np.zeros(len(x)), np.full(len(x), 1e6)])
        system = assemble(mesh, MATS, 2, 1, {
            "bot": BoundaryCondition(mech="clamp"),
            "rest": BoundaryCondition(mech="free")}, volume_load=load)
        res = solve_static(system)
        vals = probe_values(system, res.x)
        ev = evaluate_element(system.dofmap, 0,
                              np.array([[0.5, 0.5, 0.5]]), res.x)
        assert np.array_equal(vals["mid"]["u"], ev["u"][0])
        assert vals["mid"]["u"][2] > 0  # pushed upward


class TestEigenToyPencils:
    def test_diagonal(self):
        r = eigen_smallest(ToyPencil(np.diag([2.0, 5.0]), np.eye(2)), 1,
                           seed=3)
        assert r.all_converged
        assert abs(r.values[0] - 2.0) < 1e-12

    def test_general_symmetric_pencil(self):
        t = ToyPencil(np.array([[3.0, 1.0], [1.0, 3.0]]),
                      np.diag([1.0, 2.0]))
        r = eigen_smallest(t, 2, seed=1)
        exact = np.array([(9 - np.sqrt(17)) / 4, (9 + np.sqrt(17)) / 4])
        assert r.all_converged
        assert np.abs(r.values - exact).max() < 1e-10
        G = r.vectors.T @ t.M_ @ r.vectors
        assert np.abs(G - np.eye(2)).max() < 1e-10

    def test_frequency_conversion(self):
        r = EigenResult(values=np.array([(2 * np.pi * 50.0) ** 2]),
                        vectors=np.zeros((1, 1)), iterations=[1],
                        converged=[True])
        assert abs(r.frequencies_hz[0] - 50.0) < 1e-10


class TestEigenOnMeshes:
    @pytest.mark.parametrize("make,k", [(clamped_hybrid_system, 4),
                                        (piezo_system, 3)])
    def test_matches_dense_reduction(self, make, k):
        system = make()
        r = eigen_smallest(system, k, seed=0)
        w = dense_reduction_spectrum(system)
        assert r.all_converged
        assert np.all(np.diff(r.values) >= 0)
        assert np.abs(r.values - w[:k]).max() < 1e-8 * w[:k].max()
        V = r.vectors[system.free]
        M = system.reduced_mass()
        assert np.abs(V.T @ M @ V - np.eye(k)).max() < 1e-8

    def test_bitwise_deterministic(self):
        system = clamped_hybrid_system()
        a = eigen_smallest(system, 3, seed=0)
        b = eigen_smallest(system, 3, seed=0)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.vectors, b.vectors)

    def test_condensed_system_rejected(self):
        mesh = hybrid_mesh()
        system = assemble(mesh, MATS, 1, 1,
                          {"wall": BoundaryCondition(mech="clamp")},
                          condense=True)
        with pytest.raises(ValueError, match="uncondensed"):
            eigen_smallest(system, 2)

    def test_k_out_of_range(self):
        with pytest.raises(ValueError, match="eigenpairs"):
            eigen_smallest(ToyPencil(np.eye(2), np.eye(2)), 5)

    def test_dense_check_size_guard(self):
        system = clamped_hybrid_system(p=2)
        with pytest.raises(ValueError, match="dense cross-check"):
            dense_reduction_spectrum(system, max_dofs=10)
