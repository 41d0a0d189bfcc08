import logging

import numpy as np
import pytest

from graphs.spectral import (
    default_diffusion_time, heat_kernel, nonzero_eigenvalues, spectral_decomposition,
)
from graphs.weighted_graph import build_graph, laplacian
from utils.errors import AllZeroSpectrum, ConvergenceFailure, NegativeTime, NotSymmetric


class TestSpectralDecomposition:
    def test_p2(self, p2):
        spec = spectral_decomposition(laplacian(p2))
        np.testing.assert_allclose(spec.eigenvalues, [0.0, 2.0], atol=1e-12)
        r = 1 / np.sqrt(2)
        np.testing.assert_allclose(spec.eigenvectors[:, 0], [r, r], atol=1e-12)
        np.testing.assert_allclose(np.abs(spec.eigenvectors[:, 1]), [r, r], atol=1e-12)
        assert spec.eigenvectors[0, 1] == pytest.approx(-spec.eigenvectors[1, 1])
        assert spec.has_simple_spectrum()

    def test_reconstructs_laplacian(self, random_graph):
        L = laplacian(random_graph(15, seed=1))
        spec = spectral_decomposition(L)
        phi, lam = spec.eigenvectors, spec.eigenvalues
        np.testing.assert_allclose(phi @ np.diag(lam) @ phi.T, L, atol=1e-9)
        np.testing.assert_allclose(phi.T @ phi, np.eye(15), atol=1e-9)
        assert np.all(np.diff(lam) >= 0)
        assert abs(lam[0]) < 1e-9

    def test_sign_convention(self, random_graph):
        spec = spectral_decomposition(laplacian(random_graph(10, seed=2)))
        pivots = np.argmax(np.abs(spec.eigenvectors), axis=0)
        assert np.all(spec.eigenvectors[pivots, np.arange(10)] > 0)

    def test_permutation_equivariant_eigenvalues(self, random_graph):
        g = random_graph(10, seed=4)
        perm = np.random.default_rng(0).permutation(10).tolist()
        a = spectral_decomposition(laplacian(g)).eigenvalues
        b = spectral_decomposition(laplacian(g.permuted(perm))).eigenvalues
        np.testing.assert_allclose(a, b, atol=1e-10)

    def test_triangle_is_degenerate(self, triangle, caplog):
        with caplog.at_level(logging.WARNING):
            spec = spectral_decomposition(laplacian(triangle))
        np.testing.assert_allclose(spec.eigenvalues, [0.0, 3.0, 3.0], atol=1e-12)
        assert not spec.has_simple_spectrum()
        assert [c.tolist() for c in spec.clusters()] == [[0], [1, 2]]
        assert any('近重特征值' in r.getMessage() for r in caplog.records)

    def test_rejects_asymmetric(self):
        with pytest.raises(NotSymmetric):
            spectral_decomposition(np.array([[1.0, 2.0], [0.0, 1.0]]))

    @pytest.mark.parametrize("bad", [np.inf, np.nan])
    def test_rejects_non_finite(self, bad):
        L = np.array([[1.0, -1.0], [-1.0, 1.0]])
        L[0, 0] = bad
        with pytest.raises(ConvergenceFailure):
            spectral_decomposition(L)

    def test_empty_matrix(self):
        spec = spectral_decomposition(np.zeros((0, 0)))
        assert spec.n == 0
        assert spec.clusters() == []


class TestHeatKernel:
    def test_p2_closed_form(self, p2):
        spec = spectral_decomposition(laplacian(p2))
        t = 0.7
        k = heat_kernel(spec, t).values
        decay = np.exp(-2 * t)
        expected = 0.5 * np.array([[1 + decay, 1 - decay], [1 - decay, 1 + decay]])
        np.testing.assert_allclose(k, expected, atol=1e-12)

    def test_zero_time_is_identity(self, random_graph):
        spec = spectral_decomposition(laplacian(random_graph(8, seed=5)))
        np.testing.assert_allclose(heat_kernel(spec, 0.0).values, np.eye(8), atol=1e-10)

    def test_rows_sum_to_one_and_symmetric(self, random_graph):
        spec = spectral_decomposition(laplacian(random_graph(9, seed=6)))
        k = heat_kernel(spec, 1.3).values
        np.testing.assert_allclose(k.sum(axis=1), 1.0, atol=1e-10)
        np.testing.assert_array_equal(k, k.T)

    def test_negative_time(self, p2):
        spec = spectral_decomposition(laplacian(p2))
        with pytest.raises(NegativeTime):
            heat_kernel(spec, -0.1)


class TestDiffusionTime:
    def test_p2(self, p2):
        assert default_diffusion_time(spectral_decomposition(laplacian(p2))) == pytest.approx(0.5)

    def test_triangle(self, triangle):
        assert default_diffusion_time(spectral_decomposition(laplacian(triangle))) == pytest.approx(1 / 3)

    def test_edgeless_graph(self):
        spec = spectral_decomposition(laplacian(build_graph(3, [])))
        assert nonzero_eigenvalues(spec).size == 0
        with pytest.raises(AllZeroSpectrum):
            default_diffusion_time(spec)
