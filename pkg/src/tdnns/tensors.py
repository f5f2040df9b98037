"""Symmetric-tensor algebra, Voigt notation and piezoelectric material laws.

Voigt ordering is (11, 22, 33, 23, 13, 12) throughout.  Stress-like tensors
map to plain component vectors; strain-like tensors carry the engineering
factor 2 on the shear entries so that ``sigma : eps == sigma_v @ eps_v``.

A material law is kept in compliance form

    eps     = S^E sigma + d^T E
    D_elec  = d   sigma + eps_T E

with ``S^E`` the 6x6 compliance at constant field, ``d`` the 3x6 piezoelectric
strain coefficients and ``eps_T`` the 3x3 permittivity at constant stress.
Stiffness-form inputs (C^E, e, eps_S) are converted on construction via

    S^E = (C^E)^-1,    d = e S^E,    eps_T = eps_S + d e^T.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: index pairs of the Voigt slots (11, 22, 33, 23, 13, 12)
VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))

#: engineering weights: 1 on normal, 2 on shear slots
VOIGT_WEIGHTS = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])


def tensor_to_voigt_stress(s: np.ndarray) -> np.ndarray:
    """Map symmetric 3x3 stress-like tensors to plain Voigt vectors.

    Accepts any leading batch shape ``(..., 3, 3)``.
    """
    s = np.asarray(s)
    return np.stack([s[..., i, j] for i, j in VOIGT_PAIRS], axis=-1)


def tensor_to_voigt_strain(e: np.ndarray) -> np.ndarray:
    """Map symmetric 3x3 strain-like tensors to engineering Voigt vectors."""
    return tensor_to_voigt_stress(e) * VOIGT_WEIGHTS


def voigt_stress_to_tensor(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    out = np.zeros(v.shape[:-1] + (3, 3))
    for k, (i, j) in enumerate(VOIGT_PAIRS):
        out[..., i, j] = v[..., k]
        out[..., j, i] = v[..., k]
    return out


def voigt_strain_to_tensor(v: np.ndarray) -> np.ndarray:
    return voigt_stress_to_tensor(np.asarray(v) / VOIGT_WEIGHTS)


def _voigt4_to_tensor(m: np.ndarray, strain_rows: bool, strain_cols: bool) -> np.ndarray:
    """Expand a 6x6 Voigt matrix to the full symmetric 4th-order tensor."""
    t = np.zeros((3, 3, 3, 3))
    for a, (i, j) in enumerate(VOIGT_PAIRS):
        for b, (k, l) in enumerate(VOIGT_PAIRS):
            v = m[a, b]
            if strain_rows and a >= 3:
                v /= 2.0
            if strain_cols and b >= 3:
                v /= 2.0
            for ii, jj in ((i, j), (j, i)):
                for kk, ll in ((k, l), (l, k)):
                    t[ii, jj, kk, ll] = v
    return t


def _tensor_to_voigt4(t: np.ndarray, strain_rows: bool, strain_cols: bool) -> np.ndarray:
    m = np.zeros((6, 6))
    for a, (i, j) in enumerate(VOIGT_PAIRS):
        for b, (k, l) in enumerate(VOIGT_PAIRS):
            v = t[i, j, k, l]
            if strain_rows and a >= 3:
                v *= 2.0
            if strain_cols and b >= 3:
                v *= 2.0
            m[a, b] = v
    return m


def _voigt3_to_tensor(d: np.ndarray, strain_cols: bool) -> np.ndarray:
    t = np.zeros((3, 3, 3))
    for a in range(3):
        for b, (k, l) in enumerate(VOIGT_PAIRS):
            v = d[a, b]
            if strain_cols and b >= 3:
                v /= 2.0
            t[a, k, l] = v
            t[a, l, k] = v
    return t


def _tensor_to_voigt3(t: np.ndarray, strain_cols: bool) -> np.ndarray:
    d = np.zeros((3, 6))
    for a in range(3):
        for b, (k, l) in enumerate(VOIGT_PAIRS):
            v = t[a, k, l]
            if strain_cols and b >= 3:
                v *= 2.0
            d[a, b] = v
    return d


def check_rotation(R: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Validate a proper rotation matrix (orthogonal, det = +1)."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {R.shape}")
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol:
        raise ValueError("matrix is not orthogonal within tolerance")
    if abs(np.linalg.det(R) - 1.0) > tol:
        raise ValueError("matrix is not a proper rotation (det != +1)")
    return R


@dataclass(frozen=True)
class Material:
    """Piezoelectric material law in compliance form plus mass density.

    Attributes
    ----------
    S : (6, 6) compliance at constant electric field, engineering Voigt.
    d : (3, 6) piezoelectric strain coefficients, engineering columns.
    eps_T : (3, 3) permittivity at constant stress.
    rho : mass density [kg/m^3].
    electric : whether the electric potential lives on this material.
    name : preset or user label.
    """

    S: np.ndarray
    d: np.ndarray
    eps_T: np.ndarray
    rho: float
    electric: bool = True
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "S", np.asarray(self.S, dtype=float))
        object.__setattr__(self, "d", np.asarray(self.d, dtype=float))
        object.__setattr__(self, "eps_T", np.asarray(self.eps_T, dtype=float))
        if self.S.shape != (6, 6) or self.d.shape != (3, 6) or self.eps_T.shape != (3, 3):
            raise ValueError("material blocks have wrong shapes")
        if np.max(np.abs(self.S - self.S.T)) > 1e-9 * np.max(np.abs(self.S)):
            raise ValueError("compliance matrix must be symmetric")

    @staticmethod
    def from_stiffness(C: np.ndarray, e: np.ndarray | None = None,
                       eps_S: np.ndarray | None = None, rho: float = 0.0,
                       electric: bool | None = None, name: str = "") -> "Material":
        """Build from stiffness-form constants (C^E, e, eps_S)."""
        C = np.asarray(C, dtype=float)
        S = np.linalg.inv(C)
        S = 0.5 * (S + S.T)
        if e is None:
            e = np.zeros((3, 6))
        e = np.asarray(e, dtype=float)
        if eps_S is None:
            eps_S = np.zeros((3, 3))
        eps_S = np.asarray(eps_S, dtype=float)
        d = e @ S
        eps_T = eps_S + d @ e.T
        if electric is None:
            electric = bool(np.any(e) or np.any(eps_S))
        return Material(S=S, d=d, eps_T=0.5 * (eps_T + eps_T.T), rho=rho,
                        electric=electric, name=name)

    @staticmethod
    def isotropic(E: float, nu: float, rho: float = 0.0, name: str = "isotropic") -> "Material":
        """Isotropic elastic material (no electric coupling)."""
        lam = E * nu / ((1 + nu) * (1 - 2 * nu))
        mu = E / (2 * (1 + nu))
        C = np.zeros((6, 6))
        C[:3, :3] = lam
        C[0, 0] = C[1, 1] = C[2, 2] = lam + 2 * mu
        C[3, 3] = C[4, 4] = C[5, 5] = mu
        return Material.from_stiffness(C, rho=rho, electric=False, name=name)

    @property
    def C(self) -> np.ndarray:
        """Stiffness at constant field (inverse of the compliance)."""
        return np.linalg.inv(self.S)

    @property
    def e(self) -> np.ndarray:
        """Stress-form coupling e = d C^E."""
        return self.d @ self.C

    @property
    def eps_S(self) -> np.ndarray:
        """Permittivity at constant strain."""
        return self.eps_T - self.d @ self.e.T

    def rotated(self, R: np.ndarray) -> "Material":
        """Material law of this material with its axes rotated by R.

        Standard 4th/3rd/2nd-order tensor rotations, performed on the full
        tensors and collapsed back to engineering Voigt form.
        """
        R = check_rotation(R)
        S4 = _voigt4_to_tensor(self.S, strain_rows=True, strain_cols=True)
        S4 = np.einsum("ia,jb,kc,ld,abcd->ijkl", R, R, R, R, S4)
        d3 = _voigt3_to_tensor(self.d, strain_cols=True)
        d3 = np.einsum("ia,kc,ld,acd->ikl", R, R, R, d3)
        epsT = R @ self.eps_T @ R.T
        return Material(
            S=_tensor_to_voigt4(S4, strain_rows=True, strain_cols=True),
            d=_tensor_to_voigt3(d3, strain_cols=True),
            eps_T=0.5 * (epsT + epsT.T),
            rho=self.rho, electric=self.electric, name=self.name,
        )

    def rotated_batch(self, R: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Rotate the law by a batch of rotations R with shape (n, 3, 3).

        Returns (S, d, eps_T) arrays of shapes (n,6,6), (n,3,6), (n,3,3).
        Used per quadrature point for spatially varying polarization frames.
        """
        R = np.asarray(R, dtype=float)
        S4 = _voigt4_to_tensor(self.S, strain_rows=True, strain_cols=True)
        S4r = np.einsum("qia,qjb,qkc,qld,abcd->qijkl", R, R, R, R, S4,
                        optimize=True)
        d3 = _voigt3_to_tensor(self.d, strain_cols=True)
        d3r = np.einsum("qia,qkc,qld,acd->qikl", R, R, R, d3, optimize=True)
        epsr = np.einsum("qia,qjb,ab->qij", R, R, self.eps_T, optimize=True)
        n = R.shape[0]
        Sv = np.empty((n, 6, 6))
        dv = np.empty((n, 3, 6))
        for b, (k, l) in enumerate(VOIGT_PAIRS):
            fb = 2.0 if b >= 3 else 1.0
            dv[:, :, b] = fb * d3r[:, :, k, l]
            for a, (i, j) in enumerate(VOIGT_PAIRS):
                fa = 2.0 if a >= 3 else 1.0
                Sv[:, a, b] = fa * fb * S4r[:, i, j, k, l]
        return Sv, dv, epsr


def pzt5h() -> Material:
    """PZT-5H preset (SI units).

    Stiffness in Pa, coupling in C/m^2, permittivity in C/(V m), density in
    kg/m^3.  The permittivity uses +6.62e-9 C/(V m) on both axes; the raw data
    sheet this preset was transcribed from prints these entries with a
    non-physical negative sign, which is corrected here (a negative definite
    permittivity has no physical meaning).  The resulting strain coefficients
    are the familiar PZT-5H values d31 = -274 pm/V, d33 = 593 pm/V,
    d15 = 741 pm/V.
    """
    C11, C12, C13 = 127.205e9, 80.212e9, 84.670e9
    C33, C44, C66 = 117.436e9, 22.988e9, 23.474e9
    C = np.array([
        [C11, C12, C13, 0, 0, 0],
        [C12, C11, C13, 0, 0, 0],
        [C13, C13, C33, 0, 0, 0],
        [0, 0, 0, C44, 0, 0],
        [0, 0, 0, 0, C44, 0],
        [0, 0, 0, 0, 0, C66],
    ])
    e31, e33, e15 = -6.62, 23.24, 17.03
    e = np.zeros((3, 6))
    e[0, 4] = e15
    e[1, 3] = e15
    e[2, 0] = e31
    e[2, 1] = e31
    e[2, 2] = e33
    eps_S = np.eye(3) * 6.62e-9
    return Material.from_stiffness(C, e, eps_S, rho=7500.0, name="pzt5h")


def aluminium() -> Material:
    """Aluminium plate preset: E = 65 GPa, nu = 0.3, rho = 2700 kg/m^3."""
    return Material.isotropic(65e9, 0.3, rho=2700.0, name="aluminium")


PRESETS = {"pzt5h": pzt5h, "aluminium": aluminium}


# ---------------------------------------------------------------------------
# material files: structured text with explicit unit annotations
# ---------------------------------------------------------------------------

_UNIT_SCALE = {
    "Pa": 1.0, "GPa": 1e9, "MPa": 1e6,
    "C/m^2": 1.0, "C/mm^2": 1e6,
    "C/(V*m)": 1.0, "F/m": 1.0,
    "kg/m^3": 1.0, "kg/mm^3": 1e9, "t/mm^3": 1e12,
    "1": 1.0, "-": 1.0,
}


def parse_material_file(text: str) -> Material:
    """Parse a material description from structured text.

    Format: one ``key = value [unit]`` per line, ``#`` comments.  Recognised
    keys: ``name``, ``rho``, ``electric``, elastic constants ``C11 C12 C13 C33
    C44 C66`` (transversely isotropic, poled along axis 3) or ``E nu``
    (isotropic), coupling ``e31 e33 e15`` and permittivity ``eps11 eps33``.
    Every numeric entry must carry a unit annotation from the documented table;
    values are converted to SI on ingestion.
    """
    vals: dict[str, float] = {}
    name = "custom"
    electric = None
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {ln}: expected 'key = value unit'")
        key, rhs = (part.strip() for part in line.split("=", 1))
        if key == "name":
            name = rhs
            continue
        if key == "electric":
            electric = rhs.lower() in ("1", "true", "yes")
            continue
        parts = rhs.split()
        if len(parts) != 2:
            raise ValueError(f"line {ln}: '{key}' needs a value and a unit")
        num, unit = parts
        if unit not in _UNIT_SCALE:
            raise ValueError(f"line {ln}: unknown unit '{unit}'")
        vals[key] = float(num) * _UNIT_SCALE[unit]

    rho = vals.pop("rho", 0.0)
    if "E" in vals:
        m = Material.isotropic(vals.pop("E"), vals.pop("nu"), rho=rho, name=name)
        if vals:
            raise ValueError(f"unused material keys: {sorted(vals)}")
        return m
    C = np.zeros((6, 6))
    C11, C12, C13 = vals.pop("C11"), vals.pop("C12"), vals.pop("C13")
    C33, C44, C66 = vals.pop("C33"), vals.pop("C44"), vals.pop("C66")
    C[:3, :3] = np.array([[C11, C12, C13], [C12, C11, C13], [C13, C13, C33]])
    C[3, 3] = C[4, 4] = C44
    C[5, 5] = C66
    e = np.zeros((3, 6))
    if "e31" in vals:
        e31, e33, e15 = vals.pop("e31"), vals.pop("e33"), vals.pop("e15")
        e[0, 4] = e15
        e[1, 3] = e15
        e[2, 0] = e31
        e[2, 1] = e31
        e[2, 2] = e33
    eps_S = np.zeros((3, 3))
    if "eps11" in vals or "eps33" in vals:
        e11 = vals.pop("eps11", 0.0)
        e33 = vals.pop("eps33", e11)
        eps_S = np.diag([e11, e11, e33])
    if vals:
        raise ValueError(f"unused material keys: {sorted(vals)}")
    return Material.from_stiffness(C, e, eps_S, rho=rho, electric=electric, name=name)
