import numpy as np
import pytest

from services.compatibility import CompatibilityMatrix, VariantConfig, build_compatibility
from services.graph_solvers import (
    Assignment, SolverParams, brute_force_solve, discretize, hungarian_discretize,
    rrwm_solve, sinkhorn, solve, spectral_solve,
)
from services.synthetic_data import SyntheticSpec, generate_pair
from utils.errors import InvalidSpec, TooLarge, ValidationError, ZeroMatrix


def wrap(values, p, q):
    return CompatibilityMatrix(p, q, np.asarray(values, dtype=float), tuple(range(p)), tuple(range(q)))


def planted(n, seed):
    """真实置换上的一致对亲和度为 1，其余相容项为较小的随机值"""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    size = n * n
    W = np.triu(rng.uniform(0.0, 0.3, (size, size)), 1)
    W = W + W.T
    for i in range(n):
        for j in range(n):
            if i != j:
                W[i * n + perm[i], j * n + perm[j]] = 1.0
    for i in range(n):
        for a in range(n):
            for j in range(n):
                for b in range(n):
                    if (i == j) != (a == b):
                        W[i * n + a, j * n + b] = 0.0
    np.fill_diagonal(W, 0.0)
    return wrap(W, n, n), tuple((i, int(perm[i])) for i in range(n))


class TestAssignment:
    def test_rejects_many_to_one(self):
        with pytest.raises(ValidationError):
            Assignment(((0, 1), (2, 1)))
        with pytest.raises(ValidationError):
            Assignment(((0, 1), (0, 2)))

    def test_rejects_negative_objective(self):
        with pytest.raises(ValidationError):
            Assignment(((0, 0),), -1.0)

    def test_relabel_and_serialize(self):
        local = Assignment(((0, 1), (1, 0)), 2.5)
        relabelled = local.relabel((3, 7), (2, 5))
        assert relabelled.pairs == ((3, 5), (7, 2))
        assert relabelled.to_dict() == {'pairs': [[3, 5], [7, 2]], 'objective': 2.5}
        assert relabelled.as_dict() == {3: 5, 7: 2}


class TestSolverParams:
    @pytest.mark.parametrize("kwargs", [
        {'alpha': 0.0}, {'alpha': 1.0}, {'beta': 0.0}, {'sinkhorn_iters': 0},
        {'conv_tol': 0.0}, {'affinity_sigma': -1.0}, {'discretization': 'random'},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidSpec):
            SolverParams(**kwargs)


class TestSinkhorn:
    def test_square_is_bistochastic(self):
        scores = np.random.default_rng(0).uniform(0.1, 1.0, (4, 4))
        result = sinkhorn(scores, 200)
        np.testing.assert_allclose(result.sum(axis=0), 1.0, atol=1e-8)
        np.testing.assert_allclose(result.sum(axis=1), 1.0, atol=1e-8)

    def test_rectangular_keeps_shape(self):
        result = sinkhorn(np.ones((2, 3)), 10)
        assert result.shape == (2, 3)
        np.testing.assert_allclose(result, 1 / 3)


class TestRRWM:
    def test_uniform_matrix_is_fixed_point(self):
        x = rrwm_solve(wrap(np.ones((9, 9)), 3, 3))
        np.testing.assert_allclose(x, 1 / 9, atol=1e-12)

    def test_single_pair(self):
        np.testing.assert_allclose(rrwm_solve(wrap([[0.7]], 1, 1)), [1.0])

    def test_zero_matrix(self):
        with pytest.raises(ZeroMatrix):
            rrwm_solve(wrap(np.zeros((4, 4)), 2, 2))

    def test_empty(self):
        assert rrwm_solve(wrap(np.zeros((0, 0)), 0, 0)).size == 0

    @pytest.mark.parametrize("seed", range(5))
    def test_recovers_planted_permutation(self, seed):
        W, truth = planted(5, seed)
        x = rrwm_solve(W)
        assert x.sum() == pytest.approx(1.0)
        assert discretize(x, 5, 5, W).pairs == truth


class TestDiscretize:
    def test_greedy(self):
        x = np.array([0.9, 0.8, 0.85, 0.1])
        assert discretize(x, 2, 2).pairs == ((0, 0), (1, 1))

    def test_greedy_ties_take_lowest_index(self):
        assert discretize(np.ones(6), 2, 3).pairs == ((0, 0), (1, 1))

    def test_hungarian_maximizes_total(self):
        x = np.array([0.9, 0.8, 0.85, 0.1])
        assert hungarian_discretize(x, 2, 2).pairs == ((0, 1), (1, 0))

    def test_one_to_one_and_size(self):
        x = np.random.default_rng(1).uniform(size=20)
        result = discretize(x, 4, 5)
        assert len(result) == 4
        assert len({a for _, a in result.pairs}) == 4

    def test_objective_from_w(self):
        W = np.arange(16, dtype=float).reshape(4, 4)
        W = W + W.T
        result = discretize(np.array([1.0, 0.0, 0.0, 1.0]), 2, 2, W)
        assert result.objective == pytest.approx(W[0, 0] + W[0, 3] + W[3, 0] + W[3, 3])


class TestBruteForce:
    def test_single_pair(self):
        assert brute_force_solve(wrap([[2.5]], 1, 1)).objective == pytest.approx(2.5)

    def test_planted(self):
        W, truth = planted(4, 7)
        assert brute_force_solve(W).pairs == truth

    def test_rectangular(self):
        rng = np.random.default_rng(2)
        M = rng.uniform(size=(6, 6))
        W = wrap(M + M.T, 3, 2)
        result = brute_force_solve(W)
        assert len(result) == 2
        best = max(
            (M + M.T)[np.ix_(idx, idx)].sum()
            for idx in ([i * 2 + 0, j * 2 + 1] for i in range(3) for j in range(3) if i != j)
        )
        assert result.objective == pytest.approx(best)

    def test_too_large(self):
        with pytest.raises(TooLarge):
            brute_force_solve(wrap(np.zeros((81, 81)), 9, 9))


class TestSpectral:
    def test_rank_one(self):
        v = np.array([0.9, 0.1, 0.2, 0.8])
        result = spectral_solve(wrap(np.outer(v, v), 2, 2))
        assert result.pairs == ((0, 0), (1, 1))

    def test_identical_graphs(self, random_graph):
        g = random_graph(4, rho=1.0, seed=3)
        W = build_compatibility(g, g, None, VariantConfig.from_id('ii'))
        assert spectral_solve(W).pairs == ((0, 0), (1, 1), (2, 2), (3, 3))


class TestSolve:
    def test_unknown_solver(self):
        with pytest.raises(InvalidSpec):
            solve(wrap([[1.0]], 1, 1), 'ipfp')

    def test_relabels_to_graph_nodes(self):
        W = CompatibilityMatrix(1, 1, np.array([[1.0]]), (4,), (2,))
        assert solve(W).pairs == ((4, 2),)

    def test_zero_matrix_falls_back(self):
        W = CompatibilityMatrix(1, 1, np.zeros((1, 1)), (3,), (5,))
        assert solve(W, 'rrwm').pairs == ((3, 5),)

    def test_empty_domain(self):
        assert len(solve(CompatibilityMatrix(0, 3, np.zeros((0, 0)), (), (0, 1, 2)))) == 0

    @pytest.mark.parametrize("name", ['rrwm', 'spectral', 'brute-force'])
    def test_all_solvers_agree_on_planted(self, name):
        W, truth = planted(4, 11)
        assert solve(W, name).pairs == truth

    def test_rrwm_near_optimal_against_oracle(self):
        good = 0
        for trial in range(100):
            g, gp, _ = generate_pair(SyntheticSpec(5, sigma=0.1, rho=0.7, seed=trial))
            W = build_compatibility(g, gp, None, VariantConfig.from_id('ii'))
            if not np.any(W.values):
                good += 1
                continue
            exact = brute_force_solve(W).objective
            approx = solve(W, 'rrwm').objective
            if approx >= 0.9 * exact:
                good += 1
        assert good >= 90
