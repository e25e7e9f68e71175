import numpy as np
import pytest

from charpca.errors import DegenerateSpectrumError, DimensionError, ValidationError
from charpca.pca import (
    clip_spectrum,
    fit_pca,
    fit_pca_gram,
    gram_matrix,
    kernel_eval,
    leading_basis,
    reconstruct,
    select_rank,
)
from charpca.simulate import FactorSpec, RngStream, gen_factor_data
from charpca.transform import char_transform


def scan_rank(lam, gamma):
    total = sum(lam)
    acc = 0.0
    for k, v in enumerate(lam, start=1):
        acc += v
        if acc / total >= gamma - 1e-12:
            return k


class TestSelectRank:
    def test_exact_fraction(self):
        assert select_rank([5, 3, 1, 1], 0.8) == 2

    def test_single(self):
        assert select_rank([1.0], 0.5) == 1

    def test_factor_spectrum(self):
        lam = [50, 26, 10] + [1] * 97
        assert select_rank(lam, 0.8) == scan_rank(lam, 0.8)

    @pytest.mark.parametrize("gamma", [0.1, 0.5, 0.9, 0.99, 1.0])
    def test_random_spectra(self, np_rng, gamma):
        lam = np.sort(np_rng.exponential(size=30))[::-1]
        assert select_rank(lam, gamma) == scan_rank(list(lam), gamma)

    def test_all_zero(self):
        with pytest.raises(DegenerateSpectrumError):
            select_rank([0.0, 0.0], 0.8)

    @pytest.mark.parametrize("gamma", [0.0, 1.5, -0.2])
    def test_bad_gamma(self, gamma):
        with pytest.raises(ValueError):
            select_rank([1.0], gamma)

    def test_clip_roundoff(self):
        np.testing.assert_array_equal(clip_spectrum([2.0, -1e-12]), [2.0, 0.0])
        with pytest.raises(ValidationError):
            clip_spectrum([2.0, -1e-3])


class TestFitPca:
    def test_line(self, np_rng):
        t = np_rng.standard_normal(30)
        X = np.vstack([1 + 2 * t, -3 + 0.5 * t])
        for gamma in (0.2, 0.8, 1.0):
            m = fit_pca(X, gamma)
            assert m.selected_rank == 1
            np.testing.assert_allclose(reconstruct(m, X), X, atol=1e-10)

    def test_duplicated_samples(self, np_rng):
        X = np_rng.standard_normal((4, 25))
        a = fit_pca(X)
        b = fit_pca(np.repeat(X, 2, axis=1))
        np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-12)
        np.testing.assert_allclose(a.basis, b.basis, atol=1e-10)
        np.testing.assert_allclose(a.mean, b.mean, atol=1e-14)

    def test_factor_spectrum(self):
        # one draw is within 20% only ~86% of the time; average ten
        lam = np.mean([fit_pca(gen_factor_data(100, 200, FactorSpec(), RngStream(5, r))[0]).eigenvalues[:3]
                       for r in range(10)], axis=0)
        np.testing.assert_allclose(lam, [50, 26, 10], rtol=0.2)

    def test_model_is_read_only(self, np_rng):
        m = fit_pca(np_rng.standard_normal((3, 10)))
        with pytest.raises(ValueError):
            m.basis[0, 0] = 1.0

    def test_constant_data(self):
        with pytest.raises(DegenerateSpectrumError):
            fit_pca(np.full((3, 5), 2.0))


class TestReconstruct:
    def test_full_rank(self, np_rng):
        X = np_rng.standard_normal((5, 20))
        np.testing.assert_allclose(reconstruct(fit_pca(X, 1.0), X), X, atol=1e-10)

    def test_mean_columns(self, np_rng):
        m = fit_pca(np_rng.standard_normal((5, 20)))
        X = np.tile(m.mean[:, None], (1, 3))
        np.testing.assert_array_equal(reconstruct(m, X), X)

    @pytest.mark.parametrize("gamma", [0.3, 0.6, 0.8, 0.95])
    def test_pythagoras(self, np_rng, gamma):
        X = np_rng.standard_normal((8, 40)) * np.arange(1, 9)[:, None]
        m = fit_pca(X, gamma)
        err = np.sum((X - reconstruct(m, X)) ** 2) / X.shape[1]
        np.testing.assert_allclose(err, m.eigenvalues[m.selected_rank:].sum(), atol=1e-8)

    def test_dimension_mismatch(self, np_rng):
        m = fit_pca(np_rng.standard_normal((3, 10)))
        with pytest.raises(DimensionError):
            reconstruct(m, np.ones((4, 2)))


class TestKernel:
    def test_equal(self, np_rng):
        y = np_rng.standard_normal(7)
        assert kernel_eval(y, y) == pytest.approx(7.0)

    def test_opposite(self):
        assert kernel_eval(np.full(4, np.pi), np.zeros(4)) == pytest.approx(-4.0)

    def test_lifted_dot(self, np_rng):
        a, b = np_rng.standard_normal((2, 9)) * 3
        ra, rb = char_transform(a)[:, 0], char_transform(b)[:, 0]
        assert kernel_eval(a, b) == pytest.approx(ra @ rb, abs=1e-12)

    def test_gram_entries(self, np_rng):
        Y = np_rng.standard_normal((3, 5))
        K = gram_matrix(Y).values
        for i in range(5):
            for j in range(5):
                assert K[i, j] == pytest.approx(kernel_eval(Y[:, i], Y[:, j]), abs=1e-12)

    def test_double_center(self, np_rng):
        Kc = gram_matrix(np_rng.standard_normal((3, 6))).double_center().values
        np.testing.assert_allclose(Kc.sum(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(Kc.sum(axis=1), 0, atol=1e-12)


class TestGramPath:
    def test_tiny(self, np_rng):
        Y = np_rng.standard_normal((4, 3))
        a = fit_pca_gram(Y, 0.9)
        b = fit_pca(char_transform(Y), 0.9)
        np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-8)
        assert a.selected_rank == b.selected_rank

    def test_twins(self, np_rng):
        Y = np_rng.standard_normal((5, 8))
        Y[:, 3] = Y[:, 0]
        K = gram_matrix(Y).double_center().values
        v = np.zeros(8)
        v[0], v[3] = 1, -1
        np.testing.assert_allclose(K @ v, 0, atol=1e-12)
        m = fit_pca_gram(Y, 0.8)
        s = m.scores(char_transform(Y))
        np.testing.assert_allclose(s[:, 0], s[:, 3], atol=1e-12)

    @pytest.mark.parametrize("shape", [(10, 12), (30, 20), (4, 50)])
    def test_paths_agree(self, np_rng, shape):
        Y = np_rng.standard_normal(shape) * 2
        R = char_transform(Y)
        a = fit_pca_gram(Y, 0.8)
        b = fit_pca(R, 0.8)
        assert a.selected_rank == b.selected_rank
        np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-7)
        np.testing.assert_allclose(reconstruct(a, R), reconstruct(b, R), atol=1e-7)
        np.testing.assert_allclose(a.basis.T @ a.basis, np.eye(a.selected_rank), atol=1e-8)


def test_leading_basis(np_rng):
    X = np_rng.standard_normal((6, 30))
    mean, B = leading_basis(X, 2)
    np.testing.assert_allclose(mean, X.mean(axis=1))
    assert B.shape == (6, 2)
    assert leading_basis(X, 0)[1].shape == (6, 0)
    with pytest.raises(DimensionError):
        leading_basis(X, 7)
