import numpy as np
import pytest

from graphs.anchors import AnchorSet
from graphs.weighted_graph import build_graph, is_connected, laplacian
from utils.errors import (
    DuplicateAnchor, DuplicateEdge, EmptyAnchorSet, GraphError, IndexOutOfRange, NonPositiveWeight,
)


class TestBuildGraph:
    def test_edges_are_canonical_and_sorted(self):
        g = build_graph(4, [(3, 1, 0.5), (0, 2, 1.0), (2, 1, 2.0)])
        assert g.edges == ((0, 2, 1.0), (1, 2, 2.0), (1, 3, 0.5))
        assert g.edge_count == 3

    def test_empty_graph(self):
        g = build_graph(0, [])
        assert g.n == 0
        assert laplacian(g).shape == (0, 0)

    @pytest.mark.parametrize("edges, error", [
        ([(0, 1, 1.0), (1, 0, 2.0)], DuplicateEdge),
        ([(0, 3, 1.0)], IndexOutOfRange),
        ([(-1, 1, 1.0)], IndexOutOfRange),
        ([(1, 1, 1.0)], IndexOutOfRange),
        ([(0, 1, 0.0)], NonPositiveWeight),
        ([(0, 1, -2.0)], NonPositiveWeight),
        ([(0, 1, float('inf'))], NonPositiveWeight),
        ([(0, 1, float('nan'))], NonPositiveWeight),
    ])
    def test_invalid_edges(self, edges, error):
        with pytest.raises(error):
            build_graph(3, edges)

    def test_graph_errors_share_base(self):
        with pytest.raises(GraphError):
            build_graph(2, [(0, 1, float('nan'))])

    def test_permuted_relabels_nodes(self, path3):
        g = path3.permuted([2, 0, 1])
        assert g.edges == ((0, 1, 1.0), (0, 2, 1.0))
        with pytest.raises(IndexOutOfRange):
            path3.permuted([0, 0, 1])


class TestLaplacian:
    def test_p2(self, p2):
        np.testing.assert_array_equal(laplacian(p2), [[1.0, -1.0], [-1.0, 1.0]])

    def test_rows_sum_to_zero(self, random_graph):
        L = laplacian(random_graph(12, seed=3))
        np.testing.assert_allclose(L.sum(axis=1), 0.0, atol=1e-12)
        np.testing.assert_array_equal(L, L.T)
        assert np.linalg.eigvalsh(L).min() > -1e-10

    def test_isolated_node_gives_zero_row(self):
        L = laplacian(build_graph(3, [(0, 1, 2.0)]))
        np.testing.assert_array_equal(L[2], 0.0)

    def test_is_connected(self, path3):
        assert is_connected(path3)
        assert not is_connected(build_graph(3, [(0, 1, 1.0)]))
        assert is_connected(build_graph(1, []))


class TestAnchorSet:
    def test_from_pairs(self):
        anchors = AnchorSet.from_pairs([[0, 2], [3, 1]])
        assert len(anchors) == 2
        assert anchors.sources == (0, 3)
        assert anchors.targets == (2, 1)

    def test_rejects_duplicates(self):
        with pytest.raises(DuplicateAnchor):
            AnchorSet.from_pairs([(0, 1), (0, 2)])
        with pytest.raises(DuplicateAnchor):
            AnchorSet.from_pairs([(0, 1), (2, 1)])

    def test_rejects_empty(self):
        with pytest.raises(EmptyAnchorSet):
            AnchorSet.from_pairs([])

    def test_validate_for(self):
        anchors = AnchorSet.from_pairs([(0, 4)])
        anchors.validate_for(1, 5)
        with pytest.raises(IndexOutOfRange):
            anchors.validate_for(1, 4)
