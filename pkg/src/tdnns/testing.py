"""Utilities for randomized geometry in the test-suite and verification runs."""

from __future__ import annotations

import numpy as np

from .cells import quad_cell
from .transform import ElementMap, cell_lattice


def random_curved_element(kind: str, g: int, rng: np.random.Generator,
                          amplitude: float = 0.15) -> ElementMap:
    """Random well-conditioned element with polynomial curvature of order g.

    Applies a random affine map (positive determinant, bounded skew) plus a
    degree-g polynomial perturbation of the node lattice, retrying with a
    smaller amplitude until the jacobian is safely positive.
    """
    lattice = cell_lattice(kind, g)
    probe, _ = quad_cell(kind, 6)
    while True:
        A = np.eye(3) + 0.3 * (rng.random((3, 3)) - 0.5)
        if np.linalg.det(A) < 0.4:
            continue
        shift = rng.random(3)
        nodes = lattice @ A.T + shift
        if g >= 2:
            # smooth polynomial warp, zero where any coordinate is 0 or 1 is
            # not required -- facets may curve too
            for comp in range(3):
                coeffs = amplitude * (rng.random((3, 3)) - 0.5)
                x, y, z = lattice.T
                warp = (coeffs[0, 0] * x * y + coeffs[0, 1] * y * z + coeffs[0, 2] * x * z
                        + coeffs[1, 0] * x * x + coeffs[1, 1] * y * y + coeffs[1, 2] * z * z)
                if g >= 3:
                    warp = warp + (coeffs[2, 0] * x * y * z
                                   + coeffs[2, 1] * x * x * y + coeffs[2, 2] * y * z * z)
                nodes[:, comp] += warp
        emap = ElementMap(kind, g, nodes)
        try:
            md = emap.at(probe)
        except ValueError:
            amplitude *= 0.5
            continue
        if md.J.min() > 0.05 * md.J.max():
            return emap
        amplitude *= 0.5
