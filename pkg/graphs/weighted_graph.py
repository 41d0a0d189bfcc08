"""
加权图模块
负责无向加权图的构建、校验和拉普拉斯矩阵计算
"""
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from utils.errors import DuplicateEdge, IndexOutOfRange, NonPositiveWeight

Edge = Tuple[int, int, float]


@dataclass(frozen=True)
class WeightedGraph:
    """无向加权图

    边以 (i, j, w) 形式存储，始终满足 i < j，按 (i, j) 排序。
    构建后不可变，可在线程之间共享。
    """
    n: int
    edges: Tuple[Edge, ...]

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        """返回稠密邻接矩阵 A，A_ij = w(i, j)"""
        adj = np.zeros((self.n, self.n), dtype=float)
        for i, j, w in self.edges:
            adj[i, j] = w
            adj[j, i] = w
        return adj

    def permuted(self, perm: Sequence[int]) -> 'WeightedGraph':
        """按置换重新编号节点

        Args:
            perm: perm[old] = new

        Returns:
            重新编号后的图
        """
        if sorted(perm) != list(range(self.n)):
            raise IndexOutOfRange(f"不是合法的置换: {list(perm)}")
        return build_graph(self.n, [(perm[i], perm[j], w) for i, j, w in self.edges])

    def to_dict(self) -> dict:
        return {'n': self.n, 'edges': [[i, j, w] for i, j, w in self.edges]}


def build_graph(n: int, edges: Iterable[Sequence]) -> WeightedGraph:
    """构建并校验加权图

    Args:
        n: 节点数
        edges: 边列表，每项为 (i, j, w)

    Returns:
        规范化后的 WeightedGraph

    Raises:
        IndexOutOfRange: 节点索引越界或自环
        NonPositiveWeight: 权重非正或非有限
        DuplicateEdge: 同一无序节点对重复
    """
    if n < 0:
        raise IndexOutOfRange(f"节点数不能为负: {n}")

    canonical = {}
    for edge in edges:
        i, j, w = int(edge[0]), int(edge[1]), float(edge[2])
        if not (0 <= i < n and 0 <= j < n):
            raise IndexOutOfRange(f"边 ({i}, {j}) 的节点索引超出范围 [0, {n})")
        if i == j:
            raise IndexOutOfRange(f"不允许自环: ({i}, {j})")
        if not (w > 0 and math.isfinite(w)):
            raise NonPositiveWeight(f"边 ({i}, {j}) 的权重必须是有限正数，实际为 {w}")
        key = (min(i, j), max(i, j))
        if key in canonical:
            raise DuplicateEdge(f"重复的边: {key}")
        canonical[key] = w

    return WeightedGraph(n=n, edges=tuple((i, j, w) for (i, j), w in sorted(canonical.items())))


def laplacian(g: WeightedGraph) -> np.ndarray:
    """计算组合拉普拉斯矩阵 L = D - A

    Args:
        g: 加权图

    Returns:
        n×n 对称矩阵，每行之和为 0
    """
    adj = g.adjacency()
    return np.diag(adj.sum(axis=1)) - adj


def is_connected(g: WeightedGraph) -> bool:
    """判断图是否连通（空图和单节点图视为连通）"""
    if g.n <= 1:
        return True
    n_components, _ = connected_components(csr_matrix(g.adjacency()), directed=False)
    return n_components == 1
