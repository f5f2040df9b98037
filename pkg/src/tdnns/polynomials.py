"""Legendre-type polynomial families and Gauss quadrature rules.

All shape-function catalogs are built from four 1-D/2-D building blocks:

* Legendre polynomials ``l_i`` on [-1, 1],
* integrated Legendre polynomials ``L_i`` (edge bubbles, ``L_i(+-1) = 0``),
* scaled Legendre polynomials ``l_i^S(x, t) = t**i * l_i(x/t)`` in polynomial
  form (safe at ``t = 0``),
* scaled integrated Legendre polynomials ``L_i^S(x, t) = t**i * L_i(x/t)``.

The scaled families are evaluated through recurrences that never divide by
``t``; derivative tables up to second order come from differentiating the
recurrences directly.
"""

from __future__ import annotations

import numpy as np
from scipy.special import roots_jacobi


def legendre_table(n: int, t: np.ndarray, nderiv: int = 1) -> np.ndarray:
    """Evaluate Legendre polynomials l_0..l_n on [-1, 1].

    Returns an array of shape ``(nderiv + 1, n + 1) + t.shape`` holding values
    and the first ``nderiv`` derivatives with respect to ``t``.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros((nderiv + 1, n + 1) + t.shape)
    out[0, 0] = 1.0
    if n >= 1:
        out[0, 1] = t
        if nderiv >= 1:
            out[1, 1] = 1.0
    for i in range(1, n):
        # (i+1) l_{i+1} = (2i+1) t l_i - i l_{i-1}, differentiated d times:
        # (i+1) l_{i+1}^(d) = (2i+1) (t l_i^(d) + d l_i^(d-1)) - i l_{i-1}^(d)
        for d in range(nderiv + 1):
            acc = (2 * i + 1) * t * out[d, i] - i * out[d, i - 1]
            if d >= 1:
                acc += (2 * i + 1) * d * out[d - 1, i]
            out[d, i + 1] = acc / (i + 1)
    return out


def legendre_unit(n: int, x: np.ndarray, nderiv: int = 1) -> np.ndarray:
    """Legendre polynomials composed with the affine map of [0, 1] to [-1, 1].

    Derivatives are with respect to the unit coordinate ``x``.
    """
    tab = legendre_table(n, 2.0 * np.asarray(x, dtype=float) - 1.0, nderiv)
    for d in range(1, nderiv + 1):
        tab[d] *= 2.0**d
    return tab


def integrated_legendre_table(n: int, t: np.ndarray, nderiv: int = 1) -> np.ndarray:
    """Integrated Legendre polynomials L_i(t) = int_{-1}^t l_{i-1}.

    Rows 0 and 1 hold the conventional starters ``L_0 = 1`` and ``L_1 = t``;
    rows ``i >= 2`` are the bubbles ``(l_i - l_{i-2}) / (2i - 1)`` vanishing at
    both endpoints.  Shape as in :func:`legendre_table`.
    """
    leg = legendre_table(n, t, nderiv)
    out = np.zeros_like(leg)
    out[0, 0] = 1.0
    if n >= 1:
        out[:, 1] = leg[:, 1]
    for i in range(2, n + 1):
        out[:, i] = (leg[:, i] - leg[:, i - 2]) / (2 * i - 1)
    return out


def integrated_legendre_unit(n: int, x: np.ndarray, nderiv: int = 1) -> np.ndarray:
    """Integrated Legendre bubbles on [0, 1] with unit-coordinate derivatives."""
    tab = integrated_legendre_table(n, 2.0 * np.asarray(x, dtype=float) - 1.0, nderiv)
    for d in range(1, nderiv + 1):
        tab[d] *= 2.0**d
    return tab


def scaled_legendre_jet(n: int, x: np.ndarray, t: np.ndarray) -> dict[str, np.ndarray]:
    """Scaled Legendre polynomials l_i^S(x, t) = t**i l_i(x/t), i = 0..n.

    Returns a dict with keys ``f, fx, ft, fxx, fxt, ftt`` each of shape
    ``(n + 1,) + x.shape``.  Polynomial in (x, t): the recurrence

        (i+1) P_{i+1} = (2i+1) x P_i - i t**2 P_{i-1}

    and its derivatives are used, so ``t = 0`` is a regular point.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    shp = (n + 1,) + x.shape
    f = np.zeros(shp)
    fx = np.zeros(shp)
    ft = np.zeros(shp)
    fxx = np.zeros(shp)
    fxt = np.zeros(shp)
    ftt = np.zeros(shp)
    f[0] = 1.0
    if n >= 1:
        f[1] = x
        fx[1] = 1.0
    for i in range(1, n):
        a, b = (2 * i + 1) / (i + 1), i / (i + 1)
        t2 = t * t
        f[i + 1] = a * x * f[i] - b * t2 * f[i - 1]
        fx[i + 1] = a * (f[i] + x * fx[i]) - b * t2 * fx[i - 1]
        ft[i + 1] = a * x * ft[i] - b * (2 * t * f[i - 1] + t2 * ft[i - 1])
        fxx[i + 1] = a * (2 * fx[i] + x * fxx[i]) - b * t2 * fxx[i - 1]
        fxt[i + 1] = a * (ft[i] + x * fxt[i]) - b * (2 * t * fx[i - 1] + t2 * fxt[i - 1])
        ftt[i + 1] = a * x * ftt[i] - b * (2 * f[i - 1] + 4 * t * ft[i - 1] + t2 * ftt[i - 1])
    return {"f": f, "fx": fx, "ft": ft, "fxx": fxx, "fxt": fxt, "ftt": ftt}


def scaled_integrated_legendre_jet(n: int, x: np.ndarray, t: np.ndarray) -> dict[str, np.ndarray]:
    """Scaled integrated Legendre L_i^S(x, t) = t**i L_i(x/t), i = 0..n.

    ``L_i^S`` vanishes on the lines x = t and x = -t for i >= 2 (it carries the
    factor (t - x)(t + x)), which is what makes it an edge bubble in barycentric
    coordinates.  Same key layout as :func:`scaled_legendre_jet`.
    """
    p = scaled_legendre_jet(n, x, t)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    shp = p["f"].shape
    out = {k: np.zeros(shp) for k in ("f", "fx", "ft", "fxx", "fxt", "ftt")}
    out["f"][0] = 1.0
    if n >= 1:
        out["f"][1] = x
        out["fx"][1] = 1.0
    t2 = t * t
    for i in range(2, n + 1):
        c = 1.0 / (2 * i - 1)
        out["f"][i] = c * (p["f"][i] - t2 * p["f"][i - 2])
        out["fx"][i] = c * (p["fx"][i] - t2 * p["fx"][i - 2])
        out["ft"][i] = c * (p["ft"][i] - 2 * t * p["f"][i - 2] - t2 * p["ft"][i - 2])
        out["fxx"][i] = c * (p["fxx"][i] - t2 * p["fxx"][i - 2])
        out["fxt"][i] = c * (p["fxt"][i] - 2 * t * p["fx"][i - 2] - t2 * p["fxt"][i - 2])
        out["ftt"][i] = c * (
            p["ftt"][i] - 2 * p["f"][i - 2] - 4 * t * p["ft"][i - 2] - t2 * p["ftt"][i - 2]
        )
    return out


# ---------------------------------------------------------------------------
# quadrature rules (all on unit reference domains)
# ---------------------------------------------------------------------------


def quad_segment(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss rule on [0, 1]; exact for degree <= 2n - 1."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def quad_triangle(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Jacobi rule on the unit triangle, exact for degree <= 2n - 1.

    Built from the Duffy map (u, v) -> (u, v (1 - u)) with the (1 - u) Jacobian
    absorbed into a Gauss-Jacobi rule, so no accuracy is lost to the collapse.
    """
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    u = (xj + 1.0) / 2.0
    wu = wj / 4.0
    v, wv = quad_segment(n)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ww = np.outer(wu, wv)
    pts = np.column_stack([uu.ravel(), (vv * (1.0 - uu)).ravel()])
    return pts, ww.ravel()


def quad_quad(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule on the unit square."""
    x, w = quad_segment(n)
    a, b = np.meshgrid(x, x, indexing="ij")
    pts = np.column_stack([a.ravel(), b.ravel()])
    return pts, np.outer(w, w).ravel()


def quad_prism(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Triangle x segment tensor rule on the reference prism."""
    pt, wt = quad_triangle(n)
    z, wz = quad_segment(n)
    pts = np.concatenate(
        [np.repeat(pt, len(z), axis=0), np.tile(z, len(wt))[:, None]], axis=1
    )
    w = np.outer(wt, wz).ravel()
    return pts, w


def quad_hex(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule on the unit cube."""
    x, w = quad_segment(n)
    a, b, c = np.meshgrid(x, x, x, indexing="ij")
    pts = np.column_stack([a.ravel(), b.ravel(), c.ravel()])
    ww = np.einsum("i,j,k->ijk", w, w, w).ravel()
    return pts, ww
