import math

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from graphs.weighted_graph import is_connected
from services.synthetic_data import (
    GroundTruth, SyntheticSpec, generate_pair, point_pair, points_to_graph, select_anchors,
    synthetic_point_sequence,
)
from utils.errors import (
    DisconnectedGraph, DuplicatePoints, EmptyAnchorSet, InvalidSpec, TooManyAnchors,
)


class TestGeneratePair:
    def test_deterministic(self):
        spec = SyntheticSpec(12, 2, 3, rho=0.5, sigma=0.1, seed=42)
        first, second = generate_pair(spec), generate_pair(spec)
        assert first[0] == second[0]
        assert first[1] == second[1]
        assert first[2] == second[2]

    def test_noiseless_inliers_are_a_permuted_copy(self):
        g, gp, truth = generate_pair(SyntheticSpec(10, rho=0.6, seed=3))
        perm = [a for _, a in truth.inlier_map]
        assert gp == g.permuted(perm)

    def test_outlier_counts(self):
        g, gp, truth = generate_pair(SyntheticSpec(8, 2, 4, rho=0.7, seed=5))
        assert (g.n, gp.n) == (10, 12)
        assert truth.n_in == 8
        assert truth.outliers == (8, 9)
        assert len(truth.outliers_prime) == 4
        assert not set(truth.outliers_prime) & {a for _, a in truth.inlier_map}
        assert is_connected(g) and is_connected(gp)

    def test_noise_changes_only_weights(self):
        g, gp, truth = generate_pair(SyntheticSpec(10, rho=0.6, sigma=0.3, seed=8))
        mapping = truth.mapping()
        weights = {(i, j): w for i, j, w in g.edges}
        moved = {tuple(sorted((mapping[i], mapping[j]))) for i, j in weights}
        assert moved == {(i, j) for i, j, _ in gp.edges}
        assert all(w >= 1e-6 for _, _, w in gp.edges)

    def test_full_density(self):
        g, _, _ = generate_pair(SyntheticSpec(6, rho=1.0, seed=0))
        assert g.edge_count == 15

    def test_disconnected(self):
        with pytest.raises(DisconnectedGraph):
            generate_pair(SyntheticSpec(20, rho=0.01, seed=0, max_resamples=2))

    @pytest.mark.parametrize("kwargs", [
        {'n_in': 1}, {'n_in': 5, 'rho': 0.0}, {'n_in': 5, 'rho': 1.5},
        {'n_in': 5, 'sigma': -0.1}, {'n_in': 5, 'n_out1': -1},
    ])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(InvalidSpec):
            SyntheticSpec(**kwargs)


class TestSelectAnchors:
    def test_subset_of_inliers(self):
        truth = GroundTruth(inlier_map=tuple((i, 9 - i) for i in range(10)))
        anchors = select_anchors(truth, 4, seed=1)
        assert len(anchors) == 4
        assert set(anchors.pairs) <= set(truth.inlier_map)
        assert anchors == select_anchors(truth, 4, seed=1)

    def test_counts(self):
        truth = GroundTruth(inlier_map=((0, 1), (1, 0)))
        with pytest.raises(TooManyAnchors):
            select_anchors(truth, 3, seed=0)
        with pytest.raises(EmptyAnchorSet):
            select_anchors(truth, 0, seed=0)
        assert len(select_anchors(truth, 2, seed=0)) == 2


class TestPoints:
    def test_two_points(self):
        g = points_to_graph([[0.0, 0.0], [3.0, 4.0]])
        assert g.edges == ((0, 1, 5.0),)

    def test_complete_graph(self):
        points = np.random.default_rng(0).uniform(size=(6, 2))
        g = points_to_graph(points)
        assert g.edge_count == 15
        np.testing.assert_allclose([w for _, _, w in g.edges], pdist(points))

    def test_duplicate_points(self):
        with pytest.raises(DuplicatePoints):
            points_to_graph([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])

    def test_too_few_points(self):
        with pytest.raises(InvalidSpec):
            points_to_graph([[0.0, 0.0]])

    def test_rigid_sequence_preserves_distances(self):
        frames = synthetic_point_sequence(15, 5, math.pi / 3, 0.0, seed=2, translation_range=0.5)
        assert len(frames) == 5
        assert frames[0].shape == (15, 2)
        for frame in frames[1:]:
            np.testing.assert_allclose(pdist(frame), pdist(frames[0]), atol=1e-12)
        assert not np.allclose(frames[-1], frames[0])

    def test_sequence_noise(self):
        clean = synthetic_point_sequence(10, 3, 0.0, 0.0, seed=1)
        noisy = synthetic_point_sequence(10, 3, 0.0, 0.05, seed=1)
        np.testing.assert_allclose(clean[0], clean[2])
        assert not np.allclose(noisy[0], noisy[2])

    def test_point_pair(self):
        g, gp, truth = point_pair(12, 0.0, seed=3)
        mapping = truth.mapping()
        assert truth.n_in == 12
        weights = {(i, j): w for i, j, w in gp.edges}
        for i, j, w in g.edges:
            key = tuple(sorted((mapping[i], mapping[j])))
            assert weights[key] == pytest.approx(w, abs=1e-12)
