"""Scalar polynomial building blocks shared by the field catalogs.

All helpers return dense tables indexed by polynomial degree so the catalog
builders can pick entries; points are the trailing axis.
"""

from __future__ import annotations

import numpy as np

from ..cells import TRI_EDGES, TRI_LAMBDA_GRAD, tri_lambda
from ..polynomials import (
    integrated_legendre_unit,
    legendre_unit,
    scaled_integrated_legendre_jet,
    scaled_legendre_jet,
)


def tri_qij(n: int, pts: np.ndarray, nderiv: int = 1):
    """Degree-graded triangle polynomials q_ij spanning P_{i+j}.

    q_ij = P^S_i(lam0 - lam1, lam0 + lam1) * leg_j(y on [0,1]) with P^S the
    scaled Legendre family.  Returns (val, grad[, hess]) with shapes
    (n+1, n+1, npts), (n+1, n+1, npts, 2)[, (n+1, n+1, npts, 2, 2)];
    entries with i + j > n are filled but unused by callers.
    """
    x, y = pts[:, 0], pts[:, 1]
    u = 1.0 - 2.0 * x - y
    t = 1.0 - y
    du = np.array([-2.0, -1.0])
    dt = np.array([0.0, -1.0])
    jet = scaled_legendre_jet(n, u, t)
    ly = legendre_unit(n, y, nderiv=nderiv + 1)

    # chain rule through the constant-gradient arguments
    p_val = jet["f"]
    p_grad = jet["fx"][..., None] * du + jet["ft"][..., None] * dt

    val = p_val[:, None, :] * ly[0][None, :, :]
    grad = np.empty((n + 1, n + 1, len(x), 2))
    grad[..., 0] = p_grad[:, None, :, 0] * ly[0][None, :, :]
    grad[..., 1] = (p_grad[:, None, :, 1] * ly[0][None, :, :]
                    + p_val[:, None, :] * ly[1][None, :, :])
    if nderiv < 2:
        return val, grad

    outer_uu = np.outer(du, du)
    outer_ut = np.outer(du, dt) + np.outer(dt, du)
    outer_tt = np.outer(dt, dt)
    p_hess = (jet["fxx"][..., None, None] * outer_uu
              + jet["fxt"][..., None, None] * outer_ut
              + jet["ftt"][..., None, None] * outer_tt)
    hess = np.zeros((n + 1, n + 1, len(x), 2, 2))
    hess += p_hess[:, None]* ly[0][None, :, :, None, None]
    # cross terms: the Legendre factor depends on y only
    hess[..., 0, 1] += p_grad[:, None, :, 0] * ly[1][None, :, :]
    hess[..., 1, 0] += p_grad[:, None, :, 0] * ly[1][None, :, :]
    hess[..., 1, 1] += (2.0 * p_grad[:, None, :, 1] * ly[1][None, :, :]
                        + p_val[:, None, :] * ly[2][None, :, :])
    return val, grad, hess


def tri_edge_scaled_legendre(n: int, gamma: int, pts: np.ndarray):
    """Scaled Legendre P^S_i(lam_a - lam_b, lam_a + lam_b) for edge gamma.

    Returns (val, grad) of shapes (n+1, npts) and (n+1, npts, 2).
    """
    lam = tri_lambda(pts)
    a, b = TRI_EDGES[gamma]
    u = lam[a] - lam[b]
    t = lam[a] + lam[b]
    du = TRI_LAMBDA_GRAD[a] - TRI_LAMBDA_GRAD[b]
    dt = TRI_LAMBDA_GRAD[a] + TRI_LAMBDA_GRAD[b]
    jet = scaled_legendre_jet(n, u, t)
    grad = jet["fx"][..., None] * du + jet["ft"][..., None] * dt
    return jet["f"], grad


def tri_edge_integrated_legendre(n: int, gamma: int, pts: np.ndarray, nderiv: int = 1):
    """Integrated scaled Legendre L^S_i(lam_b - lam_a, lam_a + lam_b), edge gamma.

    The argument order (low vertex to high vertex) makes the trace on the own
    edge equal L_i on [0, 1] in the edge parameter.  Returns (val, grad) or
    (val, grad, hess).
    """
    lam = tri_lambda(pts)
    a, b = TRI_EDGES[gamma]
    u = lam[b] - lam[a]
    t = lam[a] + lam[b]
    du = TRI_LAMBDA_GRAD[b] - TRI_LAMBDA_GRAD[a]
    dt = TRI_LAMBDA_GRAD[a] + TRI_LAMBDA_GRAD[b]
    jet = scaled_integrated_legendre_jet(n, u, t)
    grad = jet["fx"][..., None] * du + jet["ft"][..., None] * dt
    if nderiv < 2:
        return jet["f"], grad
    hess = (jet["fxx"][..., None, None] * np.outer(du, du)
            + jet["fxt"][..., None, None] * (np.outer(du, dt) + np.outer(dt, du))
            + jet["ftt"][..., None, None] * np.outer(dt, dt))
    return jet["f"], grad, hess


def tri_bubble(pts: np.ndarray, nderiv: int = 1):
    """Cubic bubble lam0*lam1*lam2 with derivatives."""
    x, y = pts[:, 0], pts[:, 1]
    val = x * y * (1.0 - x - y)
    grad = np.stack([y - 2 * x * y - y * y, x - x * x - 2 * x * y], axis=-1)
    if nderiv < 2:
        return val, grad
    hess = np.empty((len(x), 2, 2))
    hess[:, 0, 0] = -2 * y
    hess[:, 1, 1] = -2 * x
    hess[:, 0, 1] = hess[:, 1, 0] = 1.0 - 2 * x - 2 * y
    return val, grad, hess


def seg_legendre(n: int, t: np.ndarray, nderiv: int = 1) -> np.ndarray:
    """Legendre on [0,1]: shape (nderiv+1, n+1, npts)."""
    return legendre_unit(n, t, nderiv=nderiv)


def seg_integrated(n: int, t: np.ndarray, nderiv: int = 1) -> np.ndarray:
    """Integrated Legendre on [0,1]: shape (nderiv+1, n+1, npts)."""
    return integrated_legendre_unit(n, t, nderiv=nderiv)


def seg_hats(t: np.ndarray):
    """Linear hats (1-t, t) and their derivatives (-1, 1)."""
    val = np.stack([1.0 - t, t])
    dval = np.stack([np.full_like(t, -1.0), np.ones_like(t)])
    return val, dval
