"""
测试公共夹具
"""
import numpy as np
import pytest
from scipy.optimize import minimize

from graphs.weighted_graph import build_graph


@pytest.fixture
def p2():
    """两个节点、一条权重为 1 的边"""
    return build_graph(2, [(0, 1, 1.0)])


@pytest.fixture
def triangle():
    return build_graph(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])


@pytest.fixture
def path3():
    return build_graph(3, [(0, 1, 1.0), (1, 2, 1.0)])


@pytest.fixture
def random_graph():
    """随机连通加权图工厂：先连一条随机生成树，再按密度补边"""
    def make(n, rho=0.5, seed=0):
        rng = np.random.default_rng(seed)
        order = rng.permutation(n)
        edges = {}
        for k in range(1, n):
            u, v = int(order[k]), int(order[rng.integers(0, k)])
            edges[(min(u, v), max(u, v))] = float(rng.uniform(0.1, 1.0))
        for i in range(n):
            for j in range(i + 1, n):
                if (i, j) not in edges and rng.random() < rho:
                    edges[(i, j)] = float(rng.uniform(0.1, 1.0))
        return build_graph(n, [(i, j, w) for (i, j), w in edges.items()])
    return make


def _reference_qp(working_set, c_reg, n_anchors):
    """直接在 (b, ξ) 上求解原问题，返回最优目标值"""
    dim2 = len(working_set[0].psi)

    def objective(z):
        b, xi = z[:dim2], z[dim2:]
        return 0.5 * b @ b + c_reg / n_anchors * xi.sum()

    constraints = [{
        'type': 'ineq',
        'fun': lambda z, c=c: c.psi @ z[:dim2] - 1.0 + z[dim2 + c.anchor_index] / c.loss,
    } for c in working_set]
    bounds = [(None, None)] * dim2 + [(0.0, None)] * n_anchors
    result = minimize(objective, np.zeros(dim2 + n_anchors), method='SLSQP', bounds=bounds,
                      constraints=constraints, options={'ftol': 1e-12, 'maxiter': 2000})
    return result.fun


@pytest.fixture
def reference_qp():
    return _reference_qp
