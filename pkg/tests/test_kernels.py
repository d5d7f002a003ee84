import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spraycoat.kernels import (
    KernelBank,
    KernelError,
    KernelSpec,
    KernelWeights,
    bank_grams,
    combined_kernel,
    default_bank,
    gaussian,
    gram_matrix,
    kernel_eval,
    linear,
    lp_norm,
    polynomial,
)


class TestKernelSpec:
    def test_polynomial_requires_positive_degree(self):
        with pytest.raises(KernelError):
            KernelSpec("polynomial", degree=0)

    def test_gaussian_requires_positive_sigma2(self):
        with pytest.raises(KernelError):
            KernelSpec("gaussian", sigma2=0.0)
        with pytest.raises(KernelError):
            KernelSpec("gaussian", sigma2=-1.0)

    def test_unknown_kind_rejected(self):
        with pytest.raises(KernelError):
            KernelSpec("sigmoid")

    def test_default_family_flag(self):
        assert polynomial(2).is_default_family
        assert polynomial(3).is_default_family
        assert not polynomial(5).is_default_family
        assert linear().is_default_family

    def test_round_trip_dict(self):
        for spec in default_bank().specs:
            assert KernelSpec.from_dict(spec.to_dict()) == spec


class TestDefaultBank:
    def test_has_ten_kernels(self):
        bank = default_bank()
        assert len(bank) == 10

    def test_composition(self):
        bank = default_bank()
        kinds = [s.kind for s in bank.specs]
        assert kinds.count("linear") == 1
        assert kinds.count("polynomial") == 2
        assert kinds.count("gaussian") == 7
        sigmas = sorted(s.sigma2 for s in bank.specs if s.kind == "gaussian")
        assert sigmas == pytest.approx([0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35])
        degrees = sorted(s.degree for s in bank.specs if s.kind == "polynomial")
        assert degrees == [2, 3]

    def test_duplicate_specs_rejected(self):
        with pytest.raises(KernelError):
            KernelBank(specs=(linear(), linear()))

    def test_empty_bank_rejected(self):
        with pytest.raises(KernelError):
            KernelBank(specs=())


class TestKernelEval:
    def test_linear_unit_vector(self):
        assert kernel_eval(linear(), np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0

    def test_gaussian_zero_distance_is_one(self):
        x = np.array([0.3, -1.2, 4.0])
        for s2 in (0.05, 0.35, 2.0):
            assert kernel_eval(gaussian(s2), x, x) == pytest.approx(1.0)

    def test_polynomial_hand_value(self):
        # (<x,z> + 1)^2 with orthogonal x, z
        x = np.array([1.0, 1.0])
        z = np.array([1.0, -1.0])
        assert kernel_eval(polynomial(2), x, z) == pytest.approx(1.0)

    def test_gaussian_hand_value(self):
        x = np.array([0.0])
        z = np.array([1.0])
        assert kernel_eval(gaussian(0.5), x, z) == pytest.approx(np.exp(-1.0))

    def test_dimension_mismatch(self):
        with pytest.raises(KernelError):
            kernel_eval(linear(), np.zeros(2), np.zeros(3))


class TestGramMatrix:
    def test_single_row_gaussian(self):
        G = gram_matrix(gaussian(0.1), np.array([[1.0, 2.0]]))
        assert G.shape == (1, 1)
        assert G[0, 0] == pytest.approx(1.0)

    def test_linear_identity_rows(self):
        G = gram_matrix(linear(), np.eye(2))
        np.testing.assert_allclose(G, np.eye(2))

    def test_polynomial_hand_matrix(self):
        G = gram_matrix(polynomial(2), np.array([[1.0], [2.0]]))
        np.testing.assert_allclose(G, [[4.0, 9.0], [9.0, 25.0]])

    def test_cross_gram_matches_pointwise(self, rng):
        X = rng.normal(size=(5, 3))
        Z = rng.normal(size=(4, 3))
        for spec in default_bank().specs:
            G = gram_matrix(spec, X, Z)
            assert G.shape == (5, 4)
            for i in range(5):
                for j in range(4):
                    assert G[i, j] == pytest.approx(kernel_eval(spec, X[i], Z[j]), abs=1e-12)

    @settings(deadline=None, max_examples=25)
    @given(
        arrays(np.float64, (6, 3), elements=st.floats(-5, 5)),
    )
    def test_symmetry_and_psd(self, X):
        for spec in (linear(), gaussian(0.2), polynomial(2)):
            G = gram_matrix(spec, X)
            np.testing.assert_allclose(G, G.T, atol=1e-10)
            if spec.kind != "polynomial":
                eigs = np.linalg.eigvalsh(G)
                assert eigs.min() >= -1e-8 * max(1.0, abs(eigs).max())


class TestWeights:
    def test_negative_gamma_rejected(self):
        with pytest.raises(KernelError):
            KernelWeights(gamma=np.array([0.5, -0.1]), p=2.0)

    def test_norm_constraint_enforced(self):
        with pytest.raises(KernelError):
            KernelWeights(gamma=np.array([1.0, 1.0]), p=2.0)

    def test_uniform_is_feasible(self):
        for m in (1, 3, 10):
            for p in (1.0, 2.0, 2.0**10):
                w = KernelWeights.uniform(m, p)
                norm = lp_norm(w.as_array, p)
                assert norm <= 1.0 + 1e-9
                assert norm == pytest.approx(m ** (1.0 / p) / m, rel=1e-9)

    def test_p_below_one_rejected(self):
        with pytest.raises(KernelError):
            KernelWeights(gamma=np.array([1.0]), p=0.5)

    def test_lp_norm_hand_values(self):
        g = np.array([3.0, 4.0])
        assert lp_norm(g, 2.0) == pytest.approx(5.0)
        assert lp_norm(g, 1.0) == pytest.approx(7.0)

    def test_lp_norm_huge_p_approaches_max(self):
        g = np.array([0.2, 0.9, 0.5])
        assert lp_norm(g, 2.0**15) == pytest.approx(0.9, rel=1e-4)
        assert np.isfinite(lp_norm(g, 2.0**15))

    @settings(deadline=None, max_examples=50)
    @given(
        arrays(np.float64, (4,), elements=st.floats(1e-6, 10.0)),
        st.floats(1.0, 64.0),
    )
    def test_lp_norm_scales_homogeneously(self, g, p):
        n = lp_norm(g, p)
        assert lp_norm(2.0 * g, p) == pytest.approx(2.0 * n, rel=1e-9)


class TestCombinedKernel:
    def test_weighted_sum(self, rng):
        X = rng.normal(size=(6, 3))
        bank = KernelBank(specs=(linear(), gaussian(0.2)))
        grams = bank_grams(bank, X)
        w = KernelWeights(gamma=np.array([0.5, 0.25]), p=1.0)
        K = combined_kernel(bank, w, grams)
        np.testing.assert_allclose(K, 0.5 * grams[0] + 0.25 * grams[1])

    def test_length_mismatch_rejected(self, rng):
        X = rng.normal(size=(4, 2))
        bank = default_bank()
        grams = bank_grams(bank, X)
        w = KernelWeights(gamma=np.full(10, 0.09), p=1.0)
        with pytest.raises(KernelError):
            combined_kernel(bank, w, grams[:-1])

    def test_combined_kernel_psd(self, rng):
        X = rng.normal(size=(8, 3))
        bank = default_bank()
        grams = bank_grams(bank, X)
        w = KernelWeights.uniform(len(bank), 2.0)
        K = combined_kernel(bank, w, grams)
        eigs = np.linalg.eigvalsh(K)
        assert eigs.min() >= -1e-8 * abs(eigs).max()
