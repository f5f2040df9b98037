"""Geometry map and push-forward tests: finite-difference oracles, transform
invariants, and the element-level integration-by-parts identity."""

import numpy as np
import pytest

from tdnns.basis import displacement_catalog, potential_catalog, stress_catalog
from tdnns.cells import CELLS, facet_quadrature, quad_cell
from tdnns.polynomials import quad_quad
from tdnns.testing import random_curved_element
from tdnns.transform import (
    ElementMap,
    cell_lattice,
    facet_frame,
    geometry_basis,
    push_displacement,
    push_potential,
    push_stress,
    symmetric_gradient,
)

KINDS = ("prism", "hex")


def interior_points(kind, n, rng):
    pts = rng.random((4 * n, 3)) * 0.9 + 0.05
    if kind == "prism":
        pts = pts[pts[:, 0] + pts[:, 1] < 0.95]
    return pts[:n]


# --------------------------------------------------------------- geometry map

class TestGeometryBasis:
    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("g", [1, 2, 3])
    def test_nodal_interpolation(self, kind, g):
        gb = geometry_basis(kind, g)
        N, _, _ = gb.eval(gb.nodes)
        assert np.abs(N - np.eye(len(gb.nodes))).max() < 1e-10

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("g", [1, 2, 3])
    def test_partition_of_unity(self, kind, g):
        gb = geometry_basis(kind, g)
        rng = np.random.default_rng(5)
        pts = interior_points(kind, 50, rng)
        N, dN, _ = gb.eval(pts)
        assert np.abs(N.sum(axis=0) - 1.0).max() < 1e-10
        assert np.abs(dN.sum(axis=0)).max() < 1e-10

    @pytest.mark.parametrize("kind", KINDS)
    def test_identity_map(self, kind):
        emap = ElementMap(kind, 2, cell_lattice(kind, 2))
        rng = np.random.default_rng(6)
        pts = interior_points(kind, 30, rng)
        md = emap.at(pts)
        assert np.abs(md.x - pts).max() < 1e-12
        assert np.abs(md.F - np.eye(3)).max() < 1e-12
        assert np.abs(md.H).max() < 1e-10
        assert np.abs(md.J - 1.0).max() < 1e-12


class TestMapDerivatives:
    """Jacobian and Hessian against central finite differences."""

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("g", [1, 2, 3])
    def test_fd(self, kind, g):
        rng = np.random.default_rng(100 + g)
        for trial in range(4):
            emap = random_curved_element(kind, g, rng)
            pts = interior_points(kind, 10, rng)
            md = emap.at(pts)
            h = 1e-5
            for m in range(3):
                dp = pts.copy(); dp[:, m] += h
                dm = pts.copy(); dm[:, m] -= h
                fd_F = (emap.at(dp).x - emap.at(dm).x) / (2 * h)
                assert np.abs(fd_F - md.F[:, :, m]).max() < 1e-6
                fd_H = (emap.at(dp).F - emap.at(dm).F) / (2 * h)
                assert np.abs(fd_H - md.H[:, :, :, m]).max() < 1e-6


# --------------------------------------------------------------- invariants

class TestTransformInvariants:
    def test_uniform_scaling(self):
        """x = 2 xhat: covariant halves values, weighted Piola gives 1/16."""
        emap = ElementMap("hex", 1, cell_lattice("hex", 1) * 2.0)
        pts = np.array([[0.3, 0.4, 0.5], [0.1, 0.2, 0.7]])
        md = emap.at(pts)
        uh = np.zeros((1, 2, 3)); uh[0, :, 0] = 1.0
        guh = np.zeros((1, 2, 3, 3))
        u, gu = push_displacement(md, uh, guh)
        assert np.abs(u[0, :, 0] - 0.5).max() < 1e-14
        assert np.abs(gu).max() < 1e-14
        sh = np.zeros((1, 2, 3, 3)); sh[0, :, 0, 0] = 1.0
        dsh = np.zeros((1, 2, 3))
        s, div = push_stress(md, sh, dsh)
        assert np.abs(s[0, :, 0, 0] - 1.0 / 16.0).max() < 1e-14
        assert np.abs(div).max() < 1e-14

    @pytest.mark.parametrize("kind", KINDS)
    def test_tangential_values_preserved(self, kind):
        """u . (F tau) equals uhat . tau pointwise for the covariant push."""
        rng = np.random.default_rng(7)
        emap = random_curved_element(kind, 3, rng)
        pts = interior_points(kind, 20, rng)
        md = emap.at(pts)
        cat = displacement_catalog(kind, 1)
        vals, grads = cat.eval(pts)
        u, _ = push_displacement(md, vals, grads)
        tau = rng.random((len(pts), 3)) - 0.5
        t_phys = np.einsum("qia,qa->qi", md.F, tau)
        lhs = np.einsum("fqi,qi->fq", u, t_phys)
        rhs = np.einsum("fqa,qa->fq", vals, tau)
        assert np.abs(lhs - rhs).max() < 1e-12

    @pytest.mark.parametrize("kind", KINDS)
    def test_normal_normal_weight(self, kind):
        """n.s.n = (nhat.shat.nhat) / |cof(F) nhat|^2 on every facet."""
        rng = np.random.default_rng(8)
        emap = random_curved_element(kind, 2, rng)
        cat = stress_catalog(kind, 2)
        for f in range(len(CELLS[kind].faces)):
            params, _ = facet_quadrature(kind, f, 4)
            frame = facet_frame(emap, f, params)
            md = frame.md
            from tdnns.cells import facet_corner_coords, facet_embed
            X = facet_embed(facet_corner_coords(kind, f), params)
            vals, divs = cat.eval(X)
            s, _ = push_stress(md, vals, divs)
            nn_phys = np.einsum("fqij,qi,qj->fq", s, frame.normal, frame.normal)
            nhat = CELLS[kind].face_normals[f]
            cofn = md.J[:, None] * np.einsum("qba,b->qa", md.Finv, nhat)
            w = np.einsum("qa,qa->q", cofn, cofn)
            nn_ref = np.einsum("fqab,a,b->fq", vals, nhat, nhat)
            assert np.abs(nn_phys - nn_ref / w).max() < 1e-10


# ------------------------------------------------------- strain / divergence

class TestFieldDerivatives:
    """Physical strain and divergence against reference-coordinate FD."""

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("g", [1, 2, 3])
    def test_strain_chain_rule(self, kind, g):
        rng = np.random.default_rng(200 + g)
        emap = random_curved_element(kind, g, rng)
        pts = interior_points(kind, 12, rng)
        md = emap.at(pts)
        cat = displacement_catalog(kind, 2)
        vals, grads = cat.eval(pts)
        _, gu = push_displacement(md, vals, grads)
        h = 1e-5
        scale = max(1.0, np.abs(gu).max())
        for m in range(3):
            dp = pts.copy(); dp[:, m] += h
            dm = pts.copy(); dm[:, m] -= h
            up, _ = push_displacement(emap.at(dp), *cat.eval(dp))
            um, _ = push_displacement(emap.at(dm), *cat.eval(dm))
            fd = (up - um) / (2 * h)                       # d u_i / d xhat_m
            chain = np.einsum("fqij,qj->fqi", gu, md.F[:, :, m])
            assert np.abs(fd - chain).max() < 1e-6 * scale

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("g", [1, 2, 3])
    def test_divergence_chain_rule(self, kind, g):
        rng = np.random.default_rng(300 + g)
        emap = random_curved_element(kind, g, rng)
        pts = interior_points(kind, 12, rng)
        md = emap.at(pts)
        cat = stress_catalog(kind, 2)
        vals, divs = cat.eval(pts)
        s_phys, div_phys = push_stress(md, vals, divs)
        h = 1e-5
        fd_ref = np.zeros(s_phys.shape + (3,))             # d s_ij / d xhat_m
        for m in range(3):
            dp = pts.copy(); dp[:, m] += h
            dm = pts.copy(); dm[:, m] -= h
            sp, _ = push_stress(emap.at(dp), *cat.eval(dp))
            sm, _ = push_stress(emap.at(dm), *cat.eval(dm))
            fd_ref[..., m] = (sp - sm) / (2 * h)
        fd_div = np.einsum("fqijm,qmj->fqi", fd_ref, md.Finv)
        scale = max(1.0, np.abs(div_phys).max())
        assert np.abs(fd_div - div_phys).max() < 1e-6 * scale

    @pytest.mark.parametrize("kind", KINDS)
    def test_potential_gradient(self, kind):
        rng = np.random.default_rng(9)
        emap = random_curved_element(kind, 2, rng)
        pts = interior_points(kind, 12, rng)
        md = emap.at(pts)
        cat = potential_catalog(kind, 3)
        vals, grads = cat.eval(pts)
        _, gp = push_potential(md, vals, grads)
        h = 1e-5
        for m in range(3):
            dp = pts.copy(); dp[:, m] += h
            dm = pts.copy(); dm[:, m] -= h
            fd = (cat.eval(dp)[0] - cat.eval(dm)[0]) / (2 * h)
            chain = np.einsum("fqi,qi->fq", gp, md.F[:, :, m])
            assert np.abs(fd - chain).max() < 5e-6 * max(1.0, np.abs(gp).max())


# ------------------------------------------------------------------- duality

def duality_gap(emap, p, rng, nvol=10, nsurf=10):
    """Both integration-by-parts forms of <eps(u), sigma> and their difference.

    form A: int s:eps(u) - sum_facets int s_nn u_n
    form B: -int div(s).u + sum_facets int s_nt . u_t
    """
    kind = emap.kind
    ucat = displacement_catalog(kind, p)
    scat = stress_catalog(kind, p)
    pts, w = quad_cell(kind, nvol)
    md = emap.at(pts)
    uh, guh = ucat.eval(pts)
    sh, dsh = scat.eval(pts)
    cu = rng.standard_normal(ucat.n)
    cs = rng.standard_normal(scat.n)
    u, gu = push_displacement(md, np.einsum("f,fqa->qa", cu, uh)[None],
                              np.einsum("f,fqab->qab", cu, guh)[None])
    s, ds = push_stress(md, np.einsum("f,fqab->qab", cs, sh)[None],
                        np.einsum("f,fqa->qa", cs, dsh)[None])
    u, gu, s, ds = u[0], gu[0], s[0], ds[0]
    eps = symmetric_gradient(gu)
    wj = w * md.J
    vol_a = np.einsum("qij,qij,q->", s, eps, wj)
    vol_b = -np.einsum("qi,qi,q->", ds, u, wj)
    surf_a = surf_b = 0.0
    for f in range(len(CELLS[kind].faces)):
        params, fw = facet_quadrature(kind, f, nsurf)
        frame = facet_frame(emap, f, params)
        from tdnns.cells import facet_corner_coords, facet_embed
        X = facet_embed(facet_corner_coords(kind, f), params)
        mdf = frame.md
        uhF, guhF = ucat.eval(X)
        shF, dshF = scat.eval(X)
        uF, _ = push_displacement(mdf, np.einsum("f,fqa->qa", cu, uhF)[None],
                                  np.einsum("f,fqab->qab", cu, guhF)[None])
        sF, _ = push_stress(mdf, np.einsum("f,fqab->qab", cs, shF)[None],
                            np.einsum("f,fqa->qa", cs, dshF)[None])
        uF, sF = uF[0], sF[0]
        n = frame.normal
        sn = np.einsum("qij,qj->qi", sF, n)
        snn = np.einsum("qi,qi->q", sn, n)
        un = np.einsum("qi,qi->q", uF, n)
        snt = sn - snn[:, None] * n
        ut = uF - un[:, None] * n
        dA = fw * frame.dS
        surf_a += np.einsum("q,q,q->", snn, un, dA)
        surf_b += np.einsum("qi,qi,q->", snt, ut, dA)
    formA = vol_a - surf_a
    formB = vol_b + surf_b
    scale = max(abs(vol_a), abs(vol_b), abs(surf_a), abs(surf_b), 1e-30)
    return formA, formB, scale


class TestDuality:
    def test_hand_cases_on_reference_hex(self):
        """Constant-stress hand examples pin the sign conventions."""
        emap = ElementMap("hex", 1, cell_lattice("hex", 1))
        pts, w = quad_cell("hex", 4)
        md = emap.at(pts)

        def forms(sigma_const, u_of_x):
            s = np.broadcast_to(sigma_const, (len(pts), 3, 3))
            u = u_of_x(md.x)
            eps_xy = 0.5 * (np.linalg.norm(sigma_const - np.diag(np.diag(sigma_const))) > 0)
            vol_a = np.einsum("qij,qij,q->", s, _eps_exact(u_of_x, md.x), w * md.J)
            surf_a = surf_b = 0.0
            for f in range(6):
                params, fw = facet_quadrature("hex", f, 4)
                frame = facet_frame(emap, f, params)
                sF = np.broadcast_to(sigma_const, (len(params), 3, 3))
                uF = u_of_x(frame.x)
                n = frame.normal
                sn = np.einsum("qij,qj->qi", sF, n)
                snn = np.einsum("qi,qi->q", sn, n)
                un = np.einsum("qi,qi->q", uF, n)
                snt = sn - snn[:, None] * n
                ut = uF - un[:, None] * n
                dA = fw * frame.dS
                surf_a += np.einsum("q,q,q->", snn, un, dA)
                surf_b += np.einsum("qi,qi,q->", snt, ut, dA)
            return vol_a - surf_a, 0.0 + surf_b

        def _eps_exact(u_of_x, x):
            h = 1e-6
            eps = np.zeros((len(x), 3, 3))
            for j in range(3):
                dp = x.copy(); dp[:, j] += h
                dm = x.copy(); dm[:, j] -= h
                der = (u_of_x(dp) - u_of_x(dm)) / (2 * h)
                eps[:, :, j] += 0.5 * der
                eps[:, j, :] += 0.5 * der
            return eps

        exx = np.zeros((3, 3)); exx[0, 0] = 1.0
        fa, fb = forms(exx, lambda x: np.stack([x[:, 0], 0 * x[:, 0], 0 * x[:, 0]], axis=1))
        assert abs(fa) < 1e-10 and abs(fb) < 1e-10

        sxy = np.zeros((3, 3)); sxy[0, 1] = sxy[1, 0] = 0.5
        fa, fb = forms(sxy, lambda x: np.stack([x[:, 1], 0 * x[:, 0], 0 * x[:, 0]], axis=1))
        assert abs(fa - 0.5) < 1e-9 and abs(fb - 0.5) < 1e-9

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("g", [1, 2, 3])
    def test_integration_by_parts_identity(self, kind, g):
        rng = np.random.default_rng(400 + g)
        for trial in range(3):
            emap = random_curved_element(kind, g, rng, amplitude=0.1)
            fa, fb, scale = duality_gap(emap, p=2, rng=rng)
            assert abs(fa - fb) / scale < 1e-9
