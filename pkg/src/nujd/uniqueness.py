"""Identifiability engine: collinearity predicates and non-uniqueness witnesses.

A joint diagonalizer of tagged diagonal spectra is essentially unique (unique
up to diagonal scaling and permutation) or not, and when it is not this module
constructs an explicit counterexample diagonalizer outside G(m).

The predicates reduce to 2x2 linear systems at a diagonal position pair
(k, l).  Writing the embedded block as [[x1, x2], [x3, x4]] (rows k and l of
an identity), the off-diagonal entries of the transformed matrices vanish iff

    transpose kind:  conj(w_ik) * u + conj(w_il) * v = 0,  u = x1*x2, v = x3*x4
    Hermitian kind:  w_jk * p + w_jl * q = 0,  p = conj(x1)*x2, q = conj(x3)*x4

for every matrix in each family.  A nontrivial simultaneous solution exists
iff both coefficient systems have nontrivial kernels whose component-modulus
profiles match (|u| = |p| and |v| = |q| is forced by u, p sharing a row).
Witnesses are built by extracting the kernels, snapping the moduli, and
factoring each (product, conjugate-product) pair back into a row; every
witness is verified against the reconstructed matrix set before it is
returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    CongruenceKind,
    DiagonalStack,
    GLElement,
    TAU_RHO,
    TAU_PATTERN,
    TaggedMatrix,
    is_essentially_equivalent,
    offdiag_residual,
)
from .errors import (
    DimensionMismatch,
    InvalidPrecondition,
    SingularMatrix,
    WitnessVerificationError,
)

RULE_THM1A = "Thm1a"
RULE_THM1B = "Thm1b"
RULE_THM2 = "Thm2"
RULE_THM3 = "Thm3"
RULE_MASTER_I = "Identifiability-i"
RULE_MASTER_II = "Identifiability-ii"
RULE_MASTER_III = "Identifiability-iii"


@dataclass(frozen=True)
class UniquenessReport:
    """Verdict of an identifiability check, with certificate when negative.

    A ``NotUnique`` verdict from the theorem predicates always carries a
    verified witness: an invertible diagonalizer of the reconstructed set
    that is not essentially equivalent to the identity.  The Corollary-2
    style wrapper in the solvers module is sufficiency-only and may report a
    conservative ``NotUnique`` without a witness; see its docstring.
    """

    verdict: str                       # "Unique" | "NotUnique"
    rule_fired: str
    rho_transpose: Optional[float] = None
    rho_hermitian: Optional[float] = None
    violating_pair: Optional[tuple] = None    # 0-based (k, l)
    witness: Optional[GLElement] = None
    witness_residual: Optional[float] = None

    @property
    def unique(self) -> bool:
        return self.verdict == "Unique"


def complex_cosine(v, w) -> complex:
    """Cosine of the complex angle, v^H w / (||v|| ||w||), and 1 for zero input."""
    v = np.asarray(v, dtype=np.complex128).ravel()
    w = np.asarray(w, dtype=np.complex128).ravel()
    if v.shape != w.shape:
        raise DimensionMismatch("vectors must have equal length")
    nv = float(np.linalg.norm(v))
    nw = float(np.linalg.norm(w))
    if nv == 0.0 or nw == 0.0:
        return complex(1.0)
    return complex(np.vdot(v, w) / (nv * nw))


def _cosine_abs_matrix(spectra: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """|cosine| between all position-vector pairs, plus the vector norms.

    Zero position-vectors follow the convention cos = 1 against everything.
    """
    g = spectra.conj().T @ spectra
    norms = np.sqrt(np.clip(np.diag(g).real, 0.0, None))
    denom = np.outer(norms, norms)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.abs(g) / denom
    zero = norms == 0.0
    c[zero, :] = 1.0
    c[:, zero] = 1.0
    return np.minimum(c, 1.0), norms


def collinearity(stack: DiagonalStack) -> float:
    """Largest |cosine| between position-vectors of the stack, in [0, 1]."""
    rho, _ = _collinearity_with_pair(stack)
    return rho


def _collinearity_with_pair(stack: DiagonalStack) -> tuple[float, tuple]:
    if stack.m < 2:
        raise InvalidPrecondition(
            "collinearity needs at least two diagonal positions (m >= 2); "
            "a single source is vacuously ambiguous"
        )
    if stack.n == 0:
        raise InvalidPrecondition("collinearity of an empty stack is undefined")
    c, _ = _cosine_abs_matrix(stack.spectra)
    iu, ju = np.triu_indices(stack.m, k=1)
    vals = c[iu, ju]
    best = int(np.argmax(vals))
    return float(vals[best]), (int(iu[best]), int(ju[best]))


# ---------------------------------------------------------------------------
# witness machinery


def _diag_tagged(spectra: np.ndarray, kind: CongruenceKind) -> list[TaggedMatrix]:
    return [TaggedMatrix(np.diag(row), kind) for row in spectra]


def _pair_kernel(rows: Optional[np.ndarray], scale: float, tol: float):
    """Null direction of an (n, 2) coefficient block, or None when unconstrained."""
    if rows is None or rows.shape[0] == 0:
        return None
    if float(np.max(np.abs(rows))) <= tol * max(scale, np.finfo(float).tiny):
        return None
    _, _, vh = np.linalg.svd(rows)
    vec = vh[-1].conj()
    return vec / np.max(np.abs(vec))


def _row_from_products(prod: complex, cprod: complex) -> tuple[complex, complex]:
    """Factor (x, y) with x*y = prod and conj(x)*y = cprod, |prod| = |cprod|."""
    if abs(prod) == 0.0:
        return 1.0 + 0.0j, 0.0 + 0.0j
    theta = 0.5 * (np.angle(prod) - np.angle(cprod))
    x = np.exp(1j * theta)
    return complex(x), complex(prod / x)


def _pair_witness_block(t_kernel, h_kernel) -> np.ndarray:
    """2x2 diagonalizer block outside G(2) for one position pair.

    ``t_kernel`` is the (u, v) null direction of the transpose-family system,
    ``h_kernel`` the (p, q) direction of the Hermitian-family system; either
    may be None when that family imposes no constraint at the pair.
    """
    if t_kernel is None and h_kernel is None:
        return np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128)
    if t_kernel is not None and h_kernel is not None:
        u, v = t_kernel
        p, q = h_kernel
        # shared rows force |u| = |p| and |v| = |q|; snap to geometric means
        mu1 = np.sqrt(abs(u) * abs(p))
        mu2 = np.sqrt(abs(v) * abs(q))
        u = mu1 * np.exp(1j * np.angle(u)) if mu1 > 0 else 0.0
        p = mu1 * np.exp(1j * np.angle(p)) if mu1 > 0 else 0.0
        v = mu2 * np.exp(1j * np.angle(v)) if mu2 > 0 else 0.0
        q = mu2 * np.exp(1j * np.angle(q)) if mu2 > 0 else 0.0
        row1 = _row_from_products(u, p)
        row2 = _row_from_products(v, q)
    elif t_kernel is not None:
        u, v = t_kernel
        row1 = _row_from_products(u, u)
        row2 = _row_from_products(v, v)
    else:
        p, q = h_kernel
        row1 = _row_from_products(p, p)
        row2 = _row_from_products(q, q)
    block = np.array([row1, row2], dtype=np.complex128)
    det = block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]
    if abs(det) < 1e-6 * max(1.0, float(np.abs(block).max()) ** 2):
        # rescale row 2 keeping both of its products fixed
        block[1, 0] *= 2.0
        block[1, 1] /= 2.0
    return block


def _build_and_verify_witness(
    m: int,
    pair: tuple,
    t_rows: Optional[np.ndarray],
    h_rows: Optional[np.ndarray],
    t_scale: float,
    h_scale: float,
    verify_set: Sequence[TaggedMatrix],
    tol: float,
) -> tuple[GLElement, float]:
    k, l = pair
    t_kernel = _pair_kernel(np.conj(t_rows) if t_rows is not None else None, t_scale, tol)
    h_kernel = _pair_kernel(h_rows.real if h_rows is not None else None, h_scale, tol)
    block = _pair_witness_block(t_kernel, h_kernel)
    x = np.eye(m, dtype=np.complex128)
    x[np.ix_([k, l], [k, l])] = block
    try:
        witness = GLElement(x)
    except SingularMatrix as exc:
        raise WitnessVerificationError(f"witness block is singular: {exc}") from exc
    residual = offdiag_residual(list(verify_set), witness)
    rtol = max(1e-10, tol)
    if residual > rtol:
        raise WitnessVerificationError(
            f"witness fails joint diagonality: residual {residual:.3e} > {rtol:.0e}"
        )
    trivial, _ = is_essentially_equivalent(
        witness, GLElement(np.eye(m)), TAU_PATTERN
    )
    if trivial:
        raise WitnessVerificationError("witness is essentially equivalent to I")
    return witness, residual


def witness_thm1(stack: DiagonalStack, pair: tuple, tol: float = TAU_RHO) -> GLElement:
    """Nontrivial joint diagonalizer for a single-kind stack at a collinear pair.

    Embeds a nontrivial kernel solution of the pair's 2x2 system into an
    identity; raises InvalidPrecondition when the pair is not collinear.
    """
    k, l = pair
    c, _ = _cosine_abs_matrix(stack.spectra)
    if c[k, l] < 1.0 - tol:
        raise InvalidPrecondition(
            f"pair ({k}, {l}) is not collinear: |c| = {c[k, l]:.12f}"
        )
    rows = stack.spectra[:, [k, l]]
    scale = float(np.max(np.abs(stack.spectra)))
    verify = _diag_tagged(stack.spectra, stack.kind)
    if stack.kind is CongruenceKind.TRANSPOSE:
        w, _ = _build_and_verify_witness(
            stack.m, pair, rows, None, scale, 0.0, verify, tol
        )
    else:
        w, _ = _build_and_verify_witness(
            stack.m, pair, None, rows, 0.0, scale, verify, tol
        )
    return w


def witness_thm2(omega1, omega2, pair: tuple, tol: float = TAU_RHO) -> GLElement:
    """Common diagonalizer outside G(m) for one transpose + one Hermitian matrix.

    Requires the modulus products to coincide at the pair,
    |w1_k| |w2_l| = |w1_l| |w2_k|; both the invertible construction (a scaled
    rotation composed with phase halving) and the singular cases come out of
    the same kernel machinery.
    """
    w1 = np.asarray(omega1, dtype=np.complex128).ravel()
    w2 = _require_real_diag(omega2)
    if w1.shape != w2.shape:
        raise DimensionMismatch("omega1 and omega2 must have equal length")
    k, l = pair
    a = abs(w1[k]) * abs(w2[l])
    b = abs(w1[l]) * abs(w2[k])
    if abs(a - b) > tol * max(a, b, np.finfo(float).tiny):
        raise InvalidPrecondition(
            f"pair ({k}, {l}) satisfies the strict modulus inequality; "
            "no witness exists"
        )
    verify = [
        TaggedMatrix(np.diag(w1), CongruenceKind.TRANSPOSE),
        TaggedMatrix(np.diag(w2), CongruenceKind.HERMITIAN),
    ]
    w, _ = _build_and_verify_witness(
        w1.size,
        pair,
        w1[None, [k, l]],
        w2[None, [k, l]],
        float(np.max(np.abs(w1))),
        float(np.max(np.abs(w2))),
        verify,
        tol,
    )
    return w


def witness_thm3(
    sym: DiagonalStack, herm: DiagonalStack, pair: tuple, tol: float = TAU_RHO
) -> GLElement:
    """Common diagonalizer outside G(m) for mixed stacks at a matched pair.

    Requires both families collinear at the pair and matching norm ratios
    (the proportionality constants share one modulus r).  Degenerate
    zero-vector positions fall back to the single-family construction.
    """
    ok, why = _thm3_pair_condition(sym, herm, pair, tol)
    if not ok:
        raise InvalidPrecondition(f"pair {pair} does not match: {why}")
    w, _ = _witness_mixed(sym, herm, pair, tol)
    return w


def _witness_mixed(sym, herm, pair, tol):
    k, l = pair
    verify = _diag_tagged(sym.spectra, CongruenceKind.TRANSPOSE) + _diag_tagged(
        herm.spectra, CongruenceKind.HERMITIAN
    )
    t_rows = sym.spectra[:, [k, l]] if sym.n else None
    h_rows = herm.spectra[:, [k, l]] if herm.n else None
    t_scale = float(np.max(np.abs(sym.spectra))) if sym.n else 0.0
    h_scale = float(np.max(np.abs(herm.spectra))) if herm.n else 0.0
    return _build_and_verify_witness(
        sym.m if sym.n else herm.m, pair, t_rows, h_rows, t_scale, h_scale, verify, tol
    )


def _require_real_diag(omega) -> np.ndarray:
    w = np.asarray(omega, dtype=np.complex128).ravel()
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if scale > 0 and float(np.max(np.abs(w.imag))) > 1e-8 * scale:
        raise InvalidPrecondition(
            "the Hermitian-side diagonal must be real; split the matrix first"
        )
    return w.real


# ---------------------------------------------------------------------------
# predicates


def unique_thm1(stack: DiagonalStack, tol: float = TAU_RHO) -> UniquenessReport:
    """Single-kind uniqueness: essentially unique iff collinearity < 1.

    Covers both the transpose-congruence case with complex spectra and the
    Hermitian-congruence case with real spectra, which share the criterion.
    """
    rho, pair = _collinearity_with_pair(stack)
    rule = RULE_THM1A if stack.kind is CongruenceKind.TRANSPOSE else RULE_THM1B
    rho_t = rho if stack.kind is CongruenceKind.TRANSPOSE else None
    rho_h = rho if stack.kind is CongruenceKind.HERMITIAN else None
    if rho < 1.0 - tol:
        return UniquenessReport(
            verdict="Unique", rule_fired=rule, rho_transpose=rho_t, rho_hermitian=rho_h
        )
    witness = witness_thm1(stack, pair, tol)
    residual = offdiag_residual(_diag_tagged(stack.spectra, stack.kind), witness)
    return UniquenessReport(
        verdict="NotUnique",
        rule_fired=rule,
        rho_transpose=rho_t,
        rho_hermitian=rho_h,
        violating_pair=pair,
        witness=witness,
        witness_residual=residual,
    )


def unique_thm2(omega1, omega2, tol: float = TAU_RHO) -> UniquenessReport:
    """One transpose-kind + one Hermitian-kind matrix: modulus-product test.

    Essentially unique iff |w1_k| |w2_l| != |w1_l| |w2_k| for every pair
    k != l, with a relative margin of ``tol``.
    """
    w1 = np.asarray(omega1, dtype=np.complex128).ravel()
    w2 = _require_real_diag(omega2)
    if w1.shape != w2.shape:
        raise DimensionMismatch("omega1 and omega2 must have equal length")
    m = w1.size
    if m < 2:
        raise InvalidPrecondition("need m >= 2 diagonal positions")
    a1 = np.abs(w1)
    a2 = np.abs(w2)
    for k in range(m):
        for l in range(k + 1, m):
            a = a1[k] * a2[l]
            b = a1[l] * a2[k]
            if abs(a - b) <= tol * max(a, b, np.finfo(float).tiny):
                witness = witness_thm2(w1, w2, (k, l), tol)
                residual = offdiag_residual(
                    [
                        TaggedMatrix(np.diag(w1), CongruenceKind.TRANSPOSE),
                        TaggedMatrix(np.diag(w2), CongruenceKind.HERMITIAN),
                    ],
                    witness,
                )
                return UniquenessReport(
                    verdict="NotUnique",
                    rule_fired=RULE_THM2,
                    violating_pair=(k, l),
                    witness=witness,
                    witness_residual=residual,
                )
    return UniquenessReport(verdict="Unique", rule_fired=RULE_THM2)


def _thm3_pair_condition(sym, herm, pair, tol):
    """Both families collinear at the pair and norm cross-ratios equal.

    The norm condition is the proof's form ||z_k|| ||z'_l|| = ||z_l|| ||z'_k||
    (equal proportionality moduli), which reduces to the two-matrix modulus
    test when each family has one matrix.  Empty families contribute zero
    norms and unit cosines, imposing no constraint.
    """
    k, l = pair
    if sym.n:
        c_s, n_s = _cosine_abs_matrix(sym.spectra)
        cos_s, nk_s, nl_s = c_s[k, l], n_s[k], n_s[l]
    else:
        cos_s, nk_s, nl_s = 1.0, 0.0, 0.0
    if herm.n:
        c_h, n_h = _cosine_abs_matrix(herm.spectra)
        cos_h, nk_h, nl_h = c_h[k, l], n_h[k], n_h[l]
    else:
        cos_h, nk_h, nl_h = 1.0, 0.0, 0.0
    if cos_s < 1.0 - tol:
        return False, f"transpose family not collinear (|c| = {cos_s:.12f})"
    if cos_h < 1.0 - tol:
        return False, f"Hermitian family not collinear (|c| = {cos_h:.12f})"
    a = nk_s * nl_h
    b = nl_s * nk_h
    if abs(a - b) > tol * max(a, b, np.finfo(float).tiny):
        return False, f"norm ratios differ ({a:.6e} vs {b:.6e})"
    return True, ""


def unique_thm3(
    sym: DiagonalStack, herm: DiagonalStack, tol: float = TAU_RHO
) -> UniquenessReport:
    """Mixed-kind residual case: both collinearities must equal one on entry.

    Not essentially unique iff some pair is collinear in both families with
    matching norm ratios; the caller with general inputs should use
    :func:`identifiability_master`, which routes here only when applicable.
    """
    if sym.kind is not CongruenceKind.TRANSPOSE or herm.kind is not CongruenceKind.HERMITIAN:
        raise InvalidPrecondition("unique_thm3 expects (transpose, Hermitian) stacks")
    if sym.n == 0 or herm.n == 0:
        raise InvalidPrecondition("unique_thm3 needs both stacks non-empty")
    if sym.m != herm.m:
        raise DimensionMismatch("stacks must share the dimension m")
    rho_s, _ = _collinearity_with_pair(sym)
    rho_h, _ = _collinearity_with_pair(herm)
    if rho_s < 1.0 - tol or rho_h < 1.0 - tol:
        raise InvalidPrecondition(
            "unique_thm3 requires both collinearities equal to one; "
            "use identifiability_master for the general dispatch"
        )
    return _thm3_scan(sym, herm, rho_s, rho_h, tol, RULE_THM3)


def _thm3_scan(sym, herm, rho_s, rho_h, tol, rule):
    m = sym.m if sym.n else herm.m
    for k in range(m):
        for l in range(k + 1, m):
            ok, _ = _thm3_pair_condition(sym, herm, (k, l), tol)
            if ok:
                witness, residual = _witness_mixed(sym, herm, (k, l), tol)
                return UniquenessReport(
                    verdict="NotUnique",
                    rule_fired=rule,
                    rho_transpose=rho_s,
                    rho_hermitian=rho_h,
                    violating_pair=(k, l),
                    witness=witness,
                    witness_residual=residual,
                )
    return UniquenessReport(
        verdict="Unique", rule_fired=rule, rho_transpose=rho_s, rho_hermitian=rho_h
    )


def identifiability_master(
    sym: Optional[DiagonalStack],
    herm: Optional[DiagonalStack],
    tol: float = TAU_RHO,
) -> UniquenessReport:
    """Unified identifiability decision over mixed congruence kinds.

    Unique iff the transpose family has collinearity < 1, or the Hermitian
    family does, or both equal one and no position pair is simultaneously
    collinear in both families with matching norm ratios.  An empty family
    participates with collinearity one (it imposes no constraint), which
    makes the decision agree with the single-kind predicate when the other
    family is empty.
    """
    sym = _coerce_stack(sym, CongruenceKind.TRANSPOSE, herm)
    herm = _coerce_stack(herm, CongruenceKind.HERMITIAN, sym)
    if sym.n == 0 and herm.n == 0:
        raise InvalidPrecondition("both stacks are empty")
    if sym.m != herm.m:
        raise DimensionMismatch("stacks must share the dimension m")
    rho_s = _collinearity_with_pair(sym)[0] if sym.n else None
    rho_h = _collinearity_with_pair(herm)[0] if herm.n else None
    if rho_s is not None and rho_s < 1.0 - tol:
        return UniquenessReport(
            verdict="Unique",
            rule_fired=RULE_MASTER_I,
            rho_transpose=rho_s,
            rho_hermitian=rho_h,
        )
    if rho_h is not None and rho_h < 1.0 - tol:
        return UniquenessReport(
            verdict="Unique",
            rule_fired=RULE_MASTER_II,
            rho_transpose=rho_s,
            rho_hermitian=rho_h,
        )
    return _thm3_scan(sym, herm, rho_s, rho_h, tol, RULE_MASTER_III)


def _coerce_stack(stack, kind, other):
    if stack is not None:
        if stack.kind is not kind:
            raise InvalidPrecondition(f"expected a {kind.value}-kind stack")
        return stack
    if other is None:
        raise InvalidPrecondition("both stacks are missing")
    return DiagonalStack(kind, np.zeros((0, other.m), dtype=np.complex128))
