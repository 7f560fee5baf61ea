"""Dense complex factorizations used by the algebraic solvers.

The Takagi factorization is computed from an SVD of the symmetrized input:
if C = P S Q^H with C complex symmetric, the unitary mixer Z = P^H conj(Q)
is block diagonal with respect to clusters of equal singular values, and
U = P Z^{1/2} (principal square root per block, eigenphases halved) gives
C = U S U^T.  Clustering generously is safe; splitting a true cluster is not,
so the cluster tolerance is wider than machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import GLElement, KAPPA_MAX, SIGMA_MIN, TAU_SYM, as_complex_matrix
from .errors import (
    DefectiveMatrix,
    OrthogonalizationFailure,
    SingularPseudoCovariance,
    SymmetryViolation,
)

_CLUSTER_RTOL = 1e-7


@dataclass(frozen=True)
class TakagiFactorization:
    """C = U diag(sigma) U^T with unitary U and nonincreasing sigma >= 0."""

    u: np.ndarray
    sigma: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.u @ (self.sigma[:, None] * self.u.T)


@dataclass(frozen=True)
class HermitianEVD:
    """C = V diag(lam) V^H with unitary V and real lam sorted descending."""

    v: np.ndarray
    lam: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.v @ (self.lam[:, None] * self.v.conj().T)


def _unitary_sqrt(s: np.ndarray) -> np.ndarray:
    """Principal square root of a (numerically) unitary matrix.

    Schur form of a normal matrix is diagonal, so this is eigenphase halving
    in an orthonormal basis; the branch maps arg to (-pi/2, pi/2].
    """
    t, z = scipy.linalg.schur(s, output="complex")
    return z @ (np.sqrt(np.diag(t))[:, None] * z.conj().T)


def takagi(c, rtol: float = TAU_SYM) -> TakagiFactorization:
    """Takagi factorization of a complex symmetric matrix.

    The input is symmetrized as (C + C^T)/2 first and must be symmetric
    within ``rtol`` relative Frobenius error.  With degenerate singular
    values U is not unique; any unitary U with U diag(sigma) U^T = C is a
    valid answer and the reconstruction is what callers should test.
    """
    m = as_complex_matrix(c, square=True)
    scale = float(np.linalg.norm(m))
    if float(np.linalg.norm(m - m.T)) > rtol * max(scale, np.finfo(float).tiny):
        raise SymmetryViolation("takagi requires a complex symmetric matrix")
    m = (m + m.T) / 2.0
    p, sigma, qh = np.linalg.svd(m)
    s = p.conj().T @ qh.T  # unitary, block diagonal over sigma clusters
    n = m.shape[0]
    u = np.zeros((n, n), dtype=np.complex128)
    smax = sigma[0] if n else 0.0
    start = 0
    for i in range(1, n + 1):
        if i == n or sigma[start] - sigma[i] > _CLUSTER_RTOL * max(smax, 1e-300):
            idx = slice(start, i)
            u[:, idx] = p[:, idx] @ _unitary_sqrt(s[idx, idx])
            start = i
    return TakagiFactorization(u=u, sigma=sigma)


def hermitian_evd(c, rtol: float = TAU_SYM) -> HermitianEVD:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending."""
    m = as_complex_matrix(c, square=True)
    scale = float(np.linalg.norm(m))
    if float(np.linalg.norm(m - m.conj().T)) > rtol * max(scale, np.finfo(float).tiny):
        raise SymmetryViolation("hermitian_evd requires a Hermitian matrix")
    m = (m + m.conj().T) / 2.0
    lam, v = np.linalg.eigh(m)
    order = np.argsort(-lam, kind="stable")
    return HermitianEVD(v=v[:, order], lam=lam[order])


def general_evd(c) -> tuple[GLElement, np.ndarray]:
    """General (non-normal) eigendecomposition C W = W diag(lam).

    Eigenvalues are sorted by descending magnitude, ties broken by
    descending real part then descending imaginary part.  Columns of W have
    unit norm and their largest-magnitude entry made real positive.  A
    numerically defective input (eigenvector matrix condition above the
    global ceiling) is rejected.
    """
    m = as_complex_matrix(c, square=True)
    lam, w = np.linalg.eig(m)
    order = np.lexsort((-lam.imag, -lam.real, -np.abs(lam)))
    lam = lam[order]
    w = w[:, order]
    norms = np.linalg.norm(w, axis=0)
    w = w / norms
    # deterministic column phases
    anchors = np.argmax(np.abs(w), axis=0)
    phases = w[anchors, np.arange(w.shape[1])]
    w = w * (np.abs(phases) / phases)
    if np.linalg.cond(w) > KAPPA_MAX:
        raise DefectiveMatrix(
            "matrix is numerically defective: eigenvector condition exceeds "
            f"{KAPPA_MAX:.0e}"
        )
    return GLElement(w), lam


def principal_inv_sqrt_diag(sigma) -> np.ndarray:
    """diag(1/sqrt(sigma_k)) for a positive sequence, guarding the floor.

    Raises SingularPseudoCovariance naming the first index whose value falls
    below SIGMA_MIN relative to the largest.
    """
    s = np.asarray(sigma, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("sigma must be a non-empty 1-d sequence")
    floor = SIGMA_MIN * float(np.max(s))
    bad = np.nonzero(s <= floor)[0]
    if bad.size:
        k = int(bad[0])
        raise SingularPseudoCovariance(
            f"singular value {k} is below the invertibility floor "
            f"({s[k]:.3e} <= {floor:.3e})",
            index=k,
        )
    return np.diag(1.0 / np.sqrt(s))


def symmetric_orthogonalize(w: GLElement) -> np.ndarray:
    """Complex-orthogonal polar factor V = W (W^T W)^{-1/2}.

    The principal square root of W^T W is taken through its
    eigendecomposition with the root branch arg in (-pi/2, pi/2].  Fails
    when W^T W is numerically singular (columns of W are complex-isotropic)
    or when the result does not satisfy V^T V = I to the module tolerance.
    """
    mat = w.matrix
    m = mat.T @ mat
    svals = np.linalg.svd(m, compute_uv=False)
    if svals[-1] <= SIGMA_MIN * svals[0]:
        raise OrthogonalizationFailure(
            "W^T W is numerically singular; no complex-orthogonal polar part"
        )
    vals, vecs = np.linalg.eig(m)
    if np.linalg.cond(vecs) > KAPPA_MAX:
        raise OrthogonalizationFailure("W^T W has an ill-conditioned eigenbasis")
    inv_root = vecs @ (np.diag(1.0 / np.sqrt(vals.astype(np.complex128))))
    inv_root = inv_root @ np.linalg.inv(vecs)
    v = mat @ inv_root
    n = mat.shape[0]
    err = float(np.linalg.norm(v.T @ v - np.eye(n)))
    if err > 1e-8 * n:
        raise OrthogonalizationFailure(
            f"polar factor failed V^T V = I check: error {err:.3e}"
        )
    return v
