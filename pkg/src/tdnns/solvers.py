"""Sparse direct statics and a generalized inverse-iteration eigensolver.

Both solvers work on the reduced (constraint-free) saddle-point system.  The
raw matrix mixes entries of wildly different magnitude (compliance ~1e-11,
permittivity ~1e-8, duality blocks ~element volume), so every factorization
is preceded by a symmetric row-max equilibration: with D = diag(1/sqrt(max_j
|A_ij|)) we factor D A D, which is a congruence and therefore preserves
symmetry, inertia and generalized eigenvalues.

The eigensolver runs inverse iteration on the pencil (A, M) where the mass
acts on the displacement block only.  M is singular, so the pencil carries a
large infinite-eigenvalue subspace; applying A^{-1} M projects onto the
finite part after one step, and converged vectors are deflated in the
M-inner product, which is the invariant one for a symmetric pencil.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import BlockSystem, evaluate_element

SINGULAR_HINT = ("saddle-point system is singular; check that every boundary "
                 "facet carries a usable condition and that each electric "
                 "region touches an electrode")


class SolverError(RuntimeError):
    """Numerical failure (singular factorization, excessive residual)."""


class ConvergenceError(RuntimeError):
    """An iterative method ran out of iterations."""


@dataclass
class StaticResult:
    x: np.ndarray        # full-length coefficient vector
    residual: float      # relative residual of the reduced solve
    n_free: int


@dataclass
class EigenResult:
    values: np.ndarray       # ascending generalized eigenvalues (omega^2)
    vectors: np.ndarray      # (n_total, k), M-orthonormal displacement part
    iterations: list[int]
    converged: list[bool]

    @property
    def frequencies_hz(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.values, 0.0)) / (2.0 * np.pi)

    @property
    def all_converged(self) -> bool:
        return all(self.converged)


def _equilibrated_lu(Aff: sp.spmatrix):
    """Symmetric row-max scaling and sparse LU of the scaled matrix."""
    Aff = Aff.tocsr()
    d = np.abs(Aff).max(axis=1).toarray().ravel()
    if np.any(d == 0.0):
        raise SolverError(f"empty matrix row; {SINGULAR_HINT}")
    Di = 1.0 / np.sqrt(d)
    D = sp.diags(Di)
    scaled = (D @ Aff @ D).tocsc()
    try:
        lu = spla.splu(scaled)
    except RuntimeError as exc:
        raise SolverError(f"{exc}; {SINGULAR_HINT}") from exc
    return lu, Di, scaled


def solve_static(system: BlockSystem, rtol: float = 1e-10) -> StaticResult:
    """Direct solve of the constrained static system.

    The relative residual of the reduced system is checked against ``rtol``;
    a violation signals a near-singular matrix that the sparse LU factored
    without an explicit error.
    """
    Aff, bf, free = system.reduced()
    if len(free) == 0:
        return StaticResult(system.expand(np.empty(0)), 0.0, 0)
    lu, Di, _ = _equilibrated_lu(Aff)
    xf = Di * lu.solve(Di * bf)
    if not np.all(np.isfinite(xf)):
        raise SolverError(f"non-finite solution; {SINGULAR_HINT}")
    bnorm = np.linalg.norm(bf)
    res = np.linalg.norm(Aff @ xf - bf) / (bnorm if bnorm > 0 else 1.0)
    if res > rtol:
        raise SolverError(f"static residual {res:.3e} exceeds {rtol:.1e}; "
                          + SINGULAR_HINT)
    return StaticResult(system.expand(xf), float(res), len(free))


def probe_values(system: BlockSystem, x: np.ndarray) -> dict[str, dict]:
    """Field values at the mesh's named probe points."""
    out = {}
    for name, (e, ref) in sorted(system.dofmap.mesh.probes.items()):
        ev = evaluate_element(system.dofmap, e, ref[None, :], x)
        out[name] = {k: v[0] for k, v in ev.items()}
    return out


# ---------------------------------------------------------------------------
# eigenvalues
# ---------------------------------------------------------------------------

def _m_orthonormalize(X: np.ndarray, Mt: sp.spmatrix) -> np.ndarray:
    """Whiten the block in the M inner product (M is only semidefinite)."""
    G = X.T @ (Mt @ X)
    G = 0.5 * (G + G.T)
    g, V = np.linalg.eigh(G)
    if g[-1] <= 0.0 or g[0] <= 1e-28 * g[-1]:
        raise SolverError("iteration block collapsed onto the mass "
                          f"nullspace; {SINGULAR_HINT}")
    return X @ (V / np.sqrt(g))


def eigen_smallest(system: BlockSystem, k: int, *, seed: int = 0,
                   tol: float = 1e-10, res_tol: float = 1e-8,
                   max_iter: int = 400) -> EigenResult:
    """The ``k`` smallest generalized eigenvalues by block inverse iteration.

    A subspace of ``k`` plus a few buffer vectors is driven by the single
    factorization computed up front; each sweep M-orthonormalizes the block
    (which deflates converged directions from the rest) and extracts Ritz
    values.  Convergence of each of the first ``k`` values requires both a
    settled Ritz value (relative change below ``tol``) and a small pencil
    residual (below ``res_tol``).  Partial results are returned with
    per-value ``converged`` flags rather than raised away.
    """
    if system.condensed:
        raise ValueError("eigen solves need the uncondensed system")
    Aff, _, free = system.reduced()
    Mff = system.reduced_mass()
    n = Aff.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"cannot extract {k} eigenpairs from a system of "
                         f"size {n}")
    lu, Di, At = _equilibrated_lu(Aff)
    Mt = (sp.diags(Di) @ Mff @ sp.diags(Di)).tocsr()

    m = min(n, k + max(4, k))
    rng = np.random.default_rng(seed)
    X = lu.solve(Mt @ rng.standard_normal((n, m)))
    th_old = np.full(m, np.inf)
    first_hit = np.zeros(k, dtype=int)
    conv = np.zeros(k, dtype=bool)
    it = 0
    for it in range(1, max_iter + 1):
        X = _m_orthonormalize(X, Mt)
        H = X.T @ (At @ X)
        th, Q = np.linalg.eigh(0.5 * (H + H.T))
        X = X @ Q
        AX = At @ X[:, :k]
        MX = Mt @ X[:, :k]
        res = (np.linalg.norm(AX - MX * th[:k], axis=0)
               / np.maximum(np.linalg.norm(AX, axis=0), 1e-300))
        settled = np.abs(th[:k] - th_old[:k]) <= tol * np.maximum(
            np.abs(th[:k]), 1e-300)
        conv = settled & (res <= res_tol)
        first_hit[conv & (first_hit == 0)] = it
        if conv.all():
            break
        th_old = th
        X = lu.solve(Mt @ X)

    full = np.zeros((system.n, k))
    full[free] = Di[:, None] * X[:, :k]
    return EigenResult(values=th[:k].copy(), vectors=full,
                       iterations=[int(h) if h else it for h in first_hit],
                       converged=list(map(bool, conv)))


def dense_reduction_spectrum(system: BlockSystem,
                             max_dofs: int = 2000) -> np.ndarray:
    """All finite eigenvalues via dense elimination of potential and stress.

    Eliminating the potential gives the piezoelectrically stiffened
    compliance, which must be symmetric positive definite; eliminating the
    stress then leaves an ordinary symmetric-definite displacement pencil
    solved densely.  Intended as an independent cross-check on small systems.
    """
    free = system.free
    if len(free) > max_dofs:
        raise ValueError(f"dense cross-check limited to {max_dofs} unknowns "
                         f"(got {len(free)})")
    A = system.A.tocsr()[free][:, free].toarray()
    Mu_all = system.reduced_mass().toarray()
    fod = system.field_of_dof()[free]
    iu, isg, iph = fod == 0, fod == 1, fod == 2
    Bt = A[np.ix_(iu, isg)]
    C = -A[np.ix_(isg, isg)]
    if iph.any():
        Dt = A[np.ix_(iph, isg)]
        E = -A[np.ix_(iph, iph)]
        C = C - Dt.T @ sla.solve(E, Dt, assume_a="pos")
    try:
        sla.cholesky(C)
    except sla.LinAlgError as exc:
        raise SolverError(
            "stiffened compliance block is not positive definite") from exc
    K = Bt @ sla.solve(C, Bt.T, assume_a="pos")
    Mu = Mu_all[np.ix_(iu, iu)]
    return sla.eigh(0.5 * (K + K.T), 0.5 * (Mu + Mu.T), eigvals_only=True)
