"""Core domain types and congruence operations.

Everything downstream works on square complex matrices that are transformed
either as ``X^H C X`` (Hermitian congruence) or ``X^H C conj(X)`` (transpose
congruence).  This module provides the tagged containers for those matrices,
the permutation-scaling group G(m) of unavoidable demixing ambiguities, the
essential-equivalence test, and the normalized joint-diagonality residual.

All types are immutable after construction (arrays are frozen) and all
operations are pure functions, so everything here is safe to share across
threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    NonFiniteEntries,
    PatternViolation,
    SingularMatrix,
    SymmetryViolation,
)

# Numerical policy (double precision with two factorizations of headroom).
TAU_SYM = 1e-8        # relative symmetry-class tolerance
TAU_REAL = 1e-8       # relative tolerance for "real" spectra
TAU_PATTERN = 1e-6    # relative off-pattern tolerance for G(m) membership
TAU_RHO = 1e-10       # relative tolerance for exact collinearity certification
KAPPA_MAX = 1e8       # condition-number ceiling for certified invertibility
SIGMA_MIN = 1e-12     # relative singular-value floor


def as_complex_matrix(a, *, square: bool = False) -> np.ndarray:
    """Validate and return a dense complex128 matrix (finite entries only)."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got ndim={m.ndim}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise NonFiniteEntries("matrix contains NaN or infinite entries")
    m = m.copy()
    m.flags.writeable = False
    return m


def _fro(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


class CongruenceKind(enum.Enum):
    """Which congruence transform a matrix is diagonalized by."""

    HERMITIAN = "hermitian"   # C -> X^H C X
    TRANSPOSE = "transpose"   # C -> X^H C conj(X)


@dataclass(frozen=True)
class TaggedMatrix:
    """A square complex matrix labeled with its congruence kind.

    Transpose-kind matrices must be complex symmetric, Hermitian-kind
    matrices Hermitian, both within the relative tolerance ``TAU_SYM``.
    """

    matrix: np.ndarray
    kind: CongruenceKind

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, square=True)
        object.__setattr__(self, "matrix", m)
        scale = _fro(m)
        if self.kind is CongruenceKind.TRANSPOSE:
            err = _fro(m - m.T)
        else:
            err = _fro(m - m.conj().T)
        if err > TAU_SYM * max(scale, np.finfo(float).tiny):
            raise SymmetryViolation(
                f"matrix is not {self.kind.value}-symmetric: relative error "
                f"{err / max(scale, np.finfo(float).tiny):.3e} > {TAU_SYM:.0e}"
            )

    @property
    def m(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class TaggedMatrixSet:
    """A non-empty collection of same-size tagged matrices."""

    items: tuple

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise DimensionMismatch("matrix set must be non-empty")
        m = items[0].m
        for t in items:
            if not isinstance(t, TaggedMatrix):
                raise TypeError("matrix set items must be TaggedMatrix")
            if t.m != m:
                raise DimensionMismatch("matrix set items must share one dimension")
        object.__setattr__(self, "items", items)

    @property
    def m(self) -> int:
        return self.items[0].m

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class DiagonalStack:
    """Diagonal spectra of one congruence kind, viewed column-wise.

    ``spectra`` has shape (n, m): row i is the diagonal of the i-th matrix.
    Position vectors ``z_k = spectra[:, k]`` are what collinearity speaks
    about.  An empty stack (n = 0) is allowed and imposes no constraint.
    Hermitian-kind stacks must have real spectra; split a complex-spectrum
    Hermitian-congruence matrix with :func:`hermitian_skew_split` first.
    """

    kind: CongruenceKind
    spectra: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.spectra, dtype=np.complex128)
        if s.ndim != 2:
            raise DimensionMismatch("spectra must be a 2-d (n, m) array")
        if not np.all(np.isfinite(s.real)) or not np.all(np.isfinite(s.imag)):
            raise NonFiniteEntries("spectra contain NaN or infinite entries")
        if s.shape[0] > 0:
            scale = float(np.max(np.abs(s)))
            if scale == 0.0:
                raise SymmetryViolation("at least one spectrum must be nonzero")
            if self.kind is CongruenceKind.HERMITIAN:
                if float(np.max(np.abs(s.imag))) > TAU_REAL * scale:
                    raise SymmetryViolation(
                        "Hermitian-kind stacks need real spectra; "
                        "apply hermitian_skew_split first"
                    )
                s = s.real.astype(np.complex128)
        s = s.copy()
        s.flags.writeable = False
        object.__setattr__(self, "spectra", s)

    @property
    def n(self) -> int:
        return self.spectra.shape[0]

    @property
    def m(self) -> int:
        return self.spectra.shape[1]

    def matrices(self) -> TaggedMatrixSet:
        """Reconstruct the stack as tagged diagonal matrices (mixing = I)."""
        return TaggedMatrixSet(
            tuple(TaggedMatrix(np.diag(row), self.kind) for row in self.spectra)
        )


@dataclass(frozen=True)
class GLElement:
    """An invertible matrix, certified by its singular values at construction."""

    matrix: np.ndarray
    sigma_max: float = field(init=False)
    sigma_min: float = field(init=False)

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, square=True)
        object.__setattr__(self, "matrix", m)
        svals = np.linalg.svd(m, compute_uv=False)
        smax, smin = float(svals[0]), float(svals[-1])
        object.__setattr__(self, "sigma_max", smax)
        object.__setattr__(self, "sigma_min", smin)
        n = m.shape[0]
        floor = max(n * np.finfo(float).eps * smax, smax / KAPPA_MAX)
        if smin <= floor:
            raise SingularMatrix(
                f"matrix not certifiably invertible: sigma_min={smin:.3e}, "
                f"sigma_max={smax:.3e}"
            )

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def cond(self) -> float:
        return self.sigma_max / self.sigma_min


@dataclass(frozen=True)
class GmElement:
    """A member of G(m): a diagonal matrix times a permutation."""

    matrix: np.ndarray

    def __post_init__(self):
        m = as_complex_matrix(self.matrix, square=True)
        object.__setattr__(self, "matrix", m)
        ok, _ = _pattern_test(m, TAU_PATTERN)
        if not ok:
            raise PatternViolation("matrix is not diagonal-times-permutation")

    @property
    def m(self) -> int:
        return self.matrix.shape[0]


def _pattern_test(e: np.ndarray, tol: float):
    """Check the one-dominant-entry-per-row-and-column pattern.

    Returns (ok, cleaned) where cleaned keeps only the dominant pattern.
    """
    a = np.abs(e)
    n = a.shape[0]
    cols = np.argmax(a, axis=1)
    if len(set(cols.tolist())) != n:
        return False, None
    rows_of_col = np.argmax(a, axis=0)
    # column argmaxes must name the same bijection
    for i in range(n):
        if rows_of_col[cols[i]] != i:
            return False, None
    pattern = np.zeros_like(a, dtype=bool)
    pattern[np.arange(n), cols] = True
    scale = _fro(e)
    off = _fro(np.where(pattern, 0.0, e))
    if off > tol * max(scale, np.finfo(float).tiny):
        return False, None
    # per-row dominance: every off-pattern entry small next to the row max
    row_max = a[np.arange(n), cols]
    off_rows = np.where(pattern, 0.0, a)
    if np.any(off_rows.max(axis=1) > np.maximum(tol * row_max, tol * scale)):
        return False, None
    cleaned = np.where(pattern, e, 0.0)
    return True, cleaned


def gm_pattern_distance(x: np.ndarray) -> float:
    """Row-wise Frobenius distance of ``x`` from the G(m) pattern, in [0, 1].

    For each row, everything except the largest-magnitude entry counts as
    off-pattern mass; the total is normalized by ||x||_F.
    """
    a = np.abs(np.asarray(x))
    total = float(np.sum(a**2))
    if total == 0.0:
        return 0.0
    off = total - float(np.sum(np.max(a, axis=1) ** 2))
    return float(np.sqrt(max(off, 0.0) / total))


def hermitian_skew_split(c) -> tuple[np.ndarray, np.ndarray]:
    """Split C into Hermitian parts (H, S) with C = H + i*S.

    H = (C + C^H)/2 and S = (C - C^H)/(2i) are both exactly Hermitian in
    floating point (the symmetrized arithmetic is entrywise conjugate-paired).
    """
    m = as_complex_matrix(c, square=True)
    herm = (m + m.conj().T) / 2.0
    skew = (m - m.conj().T) * (-0.5j)
    return herm, skew


def apply_congruence(x: GLElement, c: TaggedMatrix) -> TaggedMatrix:
    """Transform ``c`` by ``x`` with the congruence its kind prescribes.

    Hermitian kind: X^H C X.  Transpose kind: X^H C conj(X).  The result is
    exactly re-symmetrized, which is legitimate because the transform
    preserves the symmetry class in exact arithmetic.
    """
    if x.m != c.m:
        raise DimensionMismatch(f"dimension mismatch: X is {x.m}, C is {c.m}")
    xh = x.matrix.conj().T
    if c.kind is CongruenceKind.HERMITIAN:
        out = xh @ c.matrix @ x.matrix
        out = (out + out.conj().T) / 2.0
    else:
        out = xh @ c.matrix @ x.matrix.conj()
        out = (out + out.T) / 2.0
    return TaggedMatrix(out, c.kind)


def is_essentially_equivalent(
    x: GLElement, y: GLElement, tol: float = TAU_PATTERN
) -> tuple[bool, Optional[GmElement]]:
    """Test whether X = Y E for some E in G(m), returning E when it exists.

    E = Y^{-1} X is formed by a pivoted LU solve (never an explicit inverse)
    and pattern-tested: exactly one dominant entry per row and column, with
    off-pattern Frobenius mass at most ``tol``·||E||_F.
    """
    if x.m != y.m:
        raise DimensionMismatch("operands must share a dimension")
    if not (0.0 < tol < 1.0):
        raise ValueError("tol must lie in (0, 1)")
    e = np.linalg.solve(y.matrix, x.matrix)
    ok, cleaned = _pattern_test(e, tol)
    if not ok:
        return False, None
    return True, GmElement(cleaned)


def offdiag_residual(s: TaggedMatrixSet | Sequence[TaggedMatrix], x: GLElement) -> float:
    """Normalized joint-diagonality residual of the set under ``x``.

    sqrt( sum_i ||offdiag(X^H C_i X^dag_i)||_F^2 / sum_i ||C_i||_F^2 );
    zero exactly when every transformed matrix is diagonal.
    """
    items = s.items if isinstance(s, TaggedMatrixSet) else tuple(s)
    num = 0.0
    den = 0.0
    for c in items:
        t = apply_congruence(x, c).matrix
        off = t - np.diag(np.diag(t))
        num += float(np.sum(np.abs(off) ** 2))
        den += float(np.sum(np.abs(c.matrix) ** 2))
    if den == 0.0:
        return 0.0
    return float(np.sqrt(num / den))
