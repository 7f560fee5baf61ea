import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nujd.core import (
    CongruenceKind,
    GLElement,
    TaggedMatrix,
    gm_pattern_distance,
    is_essentially_equivalent,
    offdiag_residual,
)
from nujd.errors import DimensionMismatch, InvalidPrecondition
from nujd.uniqueness import (
    collinearity,
    complex_cosine,
    identifiability_master,
    unique_thm1,
    unique_thm2,
    unique_thm3,
    witness_thm1,
    witness_thm2,
    witness_thm3,
)

from conftest import hermitian_stack, transpose_stack


def reconstructed(sym=None, herm=None):
    mats = []
    if sym is not None:
        mats += [TaggedMatrix(np.diag(r), CongruenceKind.TRANSPOSE) for r in sym.spectra]
    if herm is not None:
        mats += [TaggedMatrix(np.diag(r), CongruenceKind.HERMITIAN) for r in herm.spectra]
    return mats


def assert_sound_witness(report, sym=None, herm=None):
    assert report.verdict == "NotUnique"
    w = report.witness
    assert w is not None
    mats = reconstructed(sym, herm)
    assert offdiag_residual(mats, w) <= 1e-10
    same, _ = is_essentially_equivalent(w, GLElement(np.eye(w.m)))
    assert not same
    assert gm_pattern_distance(w.matrix) > 0.1


class TestComplexCosine:
    def test_aligned(self):
        assert complex_cosine([1, 0], [1, 0]) == 1.0

    def test_orthogonal(self):
        assert complex_cosine([1, 0], [0, 1]) == 0.0

    def test_zero_vector_convention(self):
        assert complex_cosine([0, 0], [3, 4j]) == 1.0
        assert complex_cosine([0, 0], [0, 0]) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            complex_cosine([1, 0], [1, 0, 0])

    @settings(max_examples=80, deadline=None)
    @given(
        arrays(np.float64, (2, 4), elements=st.floats(-10, 10, width=32)),
        arrays(np.float64, (2, 4), elements=st.floats(-10, 10, width=32)),
    )
    def test_modulus_bounded(self, a, b):
        v = a[0] + 1j * a[1]
        w = b[0] + 1j * b[1]
        assert abs(complex_cosine(v, w)) <= 1.0 + 1e-12


class TestCollinearity:
    def test_proportional_columns(self):
        assert collinearity(transpose_stack([[1, 2], [2, 4]])) == pytest.approx(1.0)

    def test_orthogonal_positions(self):
        assert collinearity(transpose_stack([[1, 0], [0, 1]])) == pytest.approx(0.0)

    def test_sign_flip_orthogonal(self):
        assert collinearity(transpose_stack([[1, 1], [1, -1]])) == pytest.approx(0.0)

    def test_m1_rejected(self):
        with pytest.raises(InvalidPrecondition):
            collinearity(transpose_stack([[1.0]]))

    def test_invariances(self, rng):
        spectra = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
        base = collinearity(transpose_stack(spectra))
        # reorder matrices in the stack
        assert collinearity(transpose_stack(spectra[::-1])) == pytest.approx(base)
        # scale one matrix by a nonzero unit-modulus scalar (value invariant)
        scaled = spectra.copy()
        scaled[2] *= np.exp(0.7j)
        assert collinearity(transpose_stack(scaled)) == pytest.approx(base)
        # permute diagonal positions simultaneously
        perm = rng.permutation(5)
        assert collinearity(transpose_stack(spectra[:, perm])) == pytest.approx(base)

    def test_scaling_one_matrix_preserves_the_verdict(self, rng):
        # general rescaling of one matrix reweights the cosines, but the
        # collinear locus (rho = 1) and the uniqueness verdict are invariant
        for collinear in (False, True):
            spectra = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
            if collinear:
                spectra[:, 2] = (0.4 + 1.1j) * spectra[:, 1]
            base = unique_thm1(transpose_stack(spectra)).verdict
            scaled = spectra.copy()
            scaled[1] *= 7.0 - 3.0j
            assert unique_thm1(transpose_stack(scaled)).verdict == base


class TestThm1:
    def test_unique_four_fifths(self):
        rep = unique_thm1(transpose_stack([[1, 2], [2, 1]]))
        assert rep.unique and rep.rho_transpose == pytest.approx(0.8)

    def test_single_matrix_equal_entries(self):
        rep = unique_thm1(hermitian_stack([[1, 1]]))
        assert_sound_witness(rep, herm=hermitian_stack([[1, 1]]))

    def test_proportional_complex_spectra(self):
        st_ = transpose_stack([[1 + 1j, 2 + 2j]])
        rep = unique_thm1(st_)
        assert_sound_witness(rep, sym=st_)

    def test_zero_position_vector(self):
        st_ = transpose_stack([[0, 1 + 1j], [0, 2.0]])
        rep = unique_thm1(st_)
        assert_sound_witness(rep, sym=st_)

    def test_witness_requires_collinear_pair(self):
        with pytest.raises(InvalidPrecondition):
            witness_thm1(transpose_stack([[1, 2], [2, 1]]), (0, 1))


class TestThm2:
    def test_distinct_products_unique(self):
        assert unique_thm2([1 + 1j, 2], [1, 1]).unique

    def test_equal_products(self):
        rep = unique_thm2([1, 1], [1, 1])
        assert rep.violating_pair == (0, 1)
        assert_sound_witness(
            rep,
            sym=transpose_stack([[1, 1]]),
            herm=hermitian_stack([[1, 1]]),
        )

    def test_crossed_zeros_unique(self):
        assert unique_thm2([0, 5], [3, 0]).unique

    def test_phase_only_difference(self):
        rep = unique_thm2([np.exp(1j * np.pi / 2), 1], [1, 1])
        assert_sound_witness(
            rep,
            sym=transpose_stack([[np.exp(1j * np.pi / 2), 1]]),
            herm=hermitian_stack([[1, 1]]),
        )

    def test_negative_hermitian_entries(self):
        rep = unique_thm2([1, 1], [1, -1])
        assert_sound_witness(
            rep,
            sym=transpose_stack([[1, 1]]),
            herm=hermitian_stack([[1, -1]]),
        )

    def test_aligned_zeros(self):
        rep = unique_thm2([1, 0], [1, 0])
        assert_sound_witness(
            rep, sym=transpose_stack([[1, 0]]), herm=hermitian_stack([[1, 0]])
        )

    def test_witness_rejects_separated_pair(self):
        with pytest.raises(InvalidPrecondition):
            witness_thm2([1 + 1j, 2], [1, 1], (0, 1))


class TestThm3:
    def _matched(self, ratio_sym=2.0, phase=np.pi / 3, ratio_herm=2.0):
        zk = np.array([1.0, 0.5j])
        zl = ratio_sym * np.exp(1j * phase) * zk
        zpk = np.array([0.3, 0.9])
        zpl = ratio_herm * zpk
        sym = transpose_stack(np.column_stack([zk, zl]))
        herm = hermitian_stack(np.column_stack([zpk, zpl]))
        return sym, herm

    def test_matched_ratios_not_unique(self):
        sym, herm = self._matched()
        rep = unique_thm3(sym, herm)
        assert rep.violating_pair == (0, 1)
        assert_sound_witness(rep, sym=sym, herm=herm)

    def test_mismatched_ratios_unique(self):
        sym, herm = self._matched(ratio_herm=3.0)
        assert unique_thm3(sym, herm).unique

    def test_all_vectors_equal(self):
        sym = transpose_stack([[1, 1]])
        herm = hermitian_stack([[1, 1]])
        rep = unique_thm3(sym, herm)
        assert_sound_witness(rep, sym=sym, herm=herm)

    def test_zero_norm_falls_back_to_single_family(self):
        # position pair dead in the transpose family entirely
        sym = transpose_stack([[0, 0, 1.0]])
        herm = hermitian_stack([[1, 1, 2.0]])
        rep = unique_thm3(sym, herm)
        assert rep.violating_pair == (0, 1)
        assert_sound_witness(rep, sym=sym, herm=herm)

    def test_precondition_enforced(self):
        sym = transpose_stack([[1, 0], [0, 1]])  # rho = 0
        herm = hermitian_stack([[1, 1]])
        with pytest.raises(InvalidPrecondition):
            unique_thm3(sym, herm)

    def test_witness_rejects_unmatched_pair(self):
        sym, herm = self._matched(ratio_herm=3.0)
        with pytest.raises(InvalidPrecondition):
            witness_thm3(sym, herm, (0, 1))


class TestMaster:
    def test_branch_i(self):
        rep = identifiability_master(
            transpose_stack([[0.9, 0.1], [0.1, 0.9]]), hermitian_stack([[1, 2]])
        )
        assert rep.unique and rep.rule_fired == "Identifiability-i"

    def test_branch_ii(self):
        rep = identifiability_master(
            transpose_stack([[1, 2]]), hermitian_stack([[0.9, 0.1], [0.1, 0.9]])
        )
        assert rep.unique and rep.rule_fired == "Identifiability-ii"

    def test_empty_sym_falls_to_branch_iii(self):
        herm = hermitian_stack([[1, 2]])
        rep = identifiability_master(None, herm)
        assert rep.rule_fired == "Identifiability-iii"
        assert_sound_witness(rep, herm=herm)

    def test_branch_iii_unique_via_modulus_margin(self):
        rep = identifiability_master(
            transpose_stack([[1 + 1j, 2]]), hermitian_stack([[1, 1]])
        )
        assert rep.unique and rep.rule_fired == "Identifiability-iii"

    def test_agrees_with_thm1_when_one_stack_empty(self, rng):
        for _ in range(25):
            n = int(rng.integers(1, 4))
            m = int(rng.integers(2, 5))
            spectra = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
            if rng.uniform() < 0.5:  # force some collinear cases
                spectra[:, 1] = (1.5 - 0.5j) * spectra[:, 0]
            stack = transpose_stack(spectra)
            assert (
                identifiability_master(stack, None).verdict
                == unique_thm1(stack).verdict
            )

    def test_agrees_with_thm2_when_single_matrices(self, rng):
        for _ in range(25):
            w1 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            w2 = rng.standard_normal(3)
            if rng.uniform() < 0.5:
                w1[1] = w1[0] * abs(w2[1] / w2[0]) * np.exp(0.3j)
            rep_m = identifiability_master(
                transpose_stack([w1]), hermitian_stack([w2])
            )
            rep_2 = unique_thm2(w1, w2)
            assert rep_m.verdict == rep_2.verdict

    def test_both_empty_rejected(self):
        with pytest.raises(InvalidPrecondition):
            identifiability_master(None, None)


from conftest import random_nonidentifiable_stacks


class TestSoundness:
    def test_witnesses_verify_on_constructed_stacks(self):
        rng = np.random.default_rng(99)
        checked = 0
        for _ in range(1000):
            sym, herm = random_nonidentifiable_stacks(rng)
            rep = identifiability_master(sym, herm)
            if rep.unique:
                # zeroed-out transpose columns can leave the pair unmatched
                continue
            assert_sound_witness(rep, sym=sym, herm=herm)
            checked += 1
        assert checked >= 900

    def test_margin_relaxes_the_predicate(self):
        # nearly collinear (1 - |c| ~ 1e-9): certified Unique at the exact
        # tolerance, flagged NotUnique at a noisy-estimation margin
        st_ = transpose_stack([[1.0, 1.0], [1.0, 1.0 + 1e-4]])
        assert unique_thm1(st_).verdict == "Unique"
        rep = unique_thm1(st_, tol=1e-3)
        assert rep.verdict == "NotUnique"
        # witness residual is only as small as the margin allows
        assert rep.witness_residual <= 1e-3
