"""
相容矩阵构建模块
由二阶项 d_k（或邻接权重差）与一阶项 d(i,a) 构建 W，并把距离变换为亲和度 exp(-d²/σ²)
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from graphs.anchors import AnchorSet
from graphs.spectral import KernelMatrix
from graphs.weighted_graph import WeightedGraph
from services.graph_solvers import SolverParams
from services.pair_context import PairContext
from services.signature_service import (
    ProximityMatrix, first_order_distance, proximity_distances, wks,
    wks_default_sigma, wks_time_grid,
)
from utils.errors import ConflictingPair, InvalidSpec, MissingAnchors, MissingProximityMatrix

logger = logging.getLogger(__name__)

VARIANTS = ('i', 'ii', 'iii', 'iv', 'v', 'vi')

# 变体 -> (二阶项, 一阶项, c_B, c_ap)
_VARIANT_TABLE = {
    'i': ('adjacency', None, 0.0, 0.0),
    'ii': ('heat', None, 0.0, 0.0),
    'iii': ('heat', 'wks', 0.0, 0.0),
    'iv': ('heat', 'weighted', 0.0, 1.0),
    'v': ('heat', 'weighted', 1.0, 0.0),
    'vi': ('heat', 'weighted', 8.0, 3.0),
}


@dataclass(frozen=True)
class VariantConfig:
    """相容矩阵的构造方式

    i 仅邻接权重；ii 仅热核二阶项；iii 加 WKS；iv 加 d_ap；v 加 d_B；vi 加 c_B·d_B + c_ap·d_ap
    """
    variant_id: str
    second_order: str
    first_order: Optional[str]
    c_b: float
    c_ap: float

    @classmethod
    def from_id(cls, variant_id: str, c_b: Optional[float] = None, c_ap: Optional[float] = None) -> 'VariantConfig':
        """按编号构造；c_b/c_ap 只对加权组合变体 vi 生效"""
        if variant_id not in _VARIANT_TABLE:
            raise InvalidSpec(f"未知的变体: {variant_id}，可选 {VARIANTS}")
        second, first, default_b, default_ap = _VARIANT_TABLE[variant_id]
        if variant_id == 'vi':
            default_b = default_b if c_b is None else float(c_b)
            default_ap = default_ap if c_ap is None else float(c_ap)
            if default_b < 0 or default_ap < 0:
                raise InvalidSpec(f"c_B 与 c_ap 必须非负: ({default_b}, {default_ap})")
        return cls(variant_id, second, first, default_b, default_ap)

    @property
    def needs_B(self) -> bool:
        return self.first_order == 'weighted' and self.c_b > 0

    @property
    def needs_anchors(self) -> bool:
        return self.first_order == 'weighted' and self.c_ap > 0


@dataclass(frozen=True, eq=False)
class CompatibilityMatrix:
    """相容矩阵 W，行号 (i, a) ↦ i·q + a，i、a 为非锚点节点的局部下标"""
    p: int
    q: int
    values: np.ndarray
    source_nodes: Tuple[int, ...]
    target_nodes: Tuple[int, ...]

    def index(self, i: int, a: int) -> int:
        return i * self.q + a


def second_order_distance(k: KernelMatrix, k_prime: KernelMatrix, i: int, j: int, a: int, b: int) -> float:
    """d_k(i,j,a,b) = |k_t(i,j) - k′_t(a,b)|

    Raises:
        ConflictingPair: i == j 或 a == b
    """
    if i == j or a == b:
        raise ConflictingPair(f"二阶项要求 i≠j 且 a≠b，实际为 ({i},{j},{a},{b})")
    return abs(float(k.values[i, j]) - float(k_prime.values[a, b]))


def _median_sigma(distances: np.ndarray) -> float:
    nonzero = distances[distances > 0]
    return float(np.median(nonzero)) if nonzero.size else 1.0


def _affinity(distances: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(-(distances ** 2) / sigma ** 2)


def _first_order(ctx: PairContext, variant: VariantConfig, proximity: Optional[ProximityMatrix],
                 src: np.ndarray, tgt: np.ndarray) -> np.ndarray:
    if variant.first_order == 'wks':
        grid = wks_time_grid([ctx.spec, ctx.spec_prime])
        sigma = wks_default_sigma(grid)
        s = wks(ctx.spec, grid, sigma)[src]
        s_prime = wks(ctx.spec_prime, grid, sigma)[tgt]
        return np.linalg.norm(s[:, None, :] - s_prime[None, :, :], axis=2)

    d_b = 0.0
    if variant.c_b > 0:
        d_b = proximity_distances(proximity, ctx.features.theta, ctx.features_prime.theta)[np.ix_(src, tgt)]
    d_ap_i = d_ap_a = 0.0
    if variant.c_ap > 0:
        d_ap_i = ctx.profile.values[src][:, None]
        d_ap_a = ctx.profile_prime.values[tgt][None, :]
    d = first_order_distance(d_b, d_ap_i, d_ap_a, variant.c_b, variant.c_ap)
    return np.broadcast_to(np.asarray(d, dtype=float), (len(src), len(tgt)))


def build_compatibility(graph: WeightedGraph,
                        graph_prime: WeightedGraph,
                        anchors: Optional[AnchorSet],
                        variant: VariantConfig,
                        proximity: Optional[ProximityMatrix] = None,
                        params: Optional[SolverParams] = None,
                        context: Optional[PairContext] = None) -> CompatibilityMatrix:
    """构建相容矩阵 W

    非锚点节点构成匹配域。二阶项距离与一阶项距离分别用各自的带宽变换为亲和度
    （未指定 affinity_sigma 时取非零距离的中位数）；冲突项（i=j 与 a=b 恰有一个成立）为 0；
    没有一阶项的变体对角线为 0。

    Args:
        graph: 图 G
        graph_prime: 图 G′
        anchors: 锚点，可为 None（此时全部节点参与匹配）
        variant: 变体配置
        proximity: 学习得到的 B（变体 v、vi 需要）
        params: 求解参数，使用其中的 affinity_sigma
        context: 预先计算好的图对上下文

    Returns:
        CompatibilityMatrix

    Raises:
        MissingProximityMatrix: 变体需要 B 但未提供
        MissingAnchors: 变体需要锚点剖面但未提供锚点
    """
    params = params or SolverParams()
    if variant.needs_B and proximity is None:
        raise MissingProximityMatrix(f"变体 {variant.variant_id} 需要邻近矩阵 B")
    if variant.needs_anchors and anchors is None:
        raise MissingAnchors(f"变体 {variant.variant_id} 需要锚点")

    ctx = context
    if ctx is None or (anchors is not None and ctx.profile is None):
        ctx = PairContext.build(graph, graph_prime, anchors)

    anchored = set(anchors.sources) if anchors is not None else set()
    anchored_prime = set(anchors.targets) if anchors is not None else set()
    src = np.array([u for u in range(graph.n) if u not in anchored], dtype=int)
    tgt = np.array([v for v in range(graph_prime.n) if v not in anchored_prime], dtype=int)
    p, q = len(src), len(tgt)
    if p == 0 or q == 0:
        return CompatibilityMatrix(p, q, np.zeros((p * q, p * q)), tuple(src.tolist()), tuple(tgt.tolist()))

    if variant.second_order == 'adjacency':
        left = graph.adjacency()[np.ix_(src, src)]
        right = graph_prime.adjacency()[np.ix_(tgt, tgt)]
    else:
        left = ctx.kernel.values[np.ix_(src, src)]
        right = ctx.kernel_prime.values[np.ix_(tgt, tgt)]
    # (i, a, j, b) 排列
    dist = np.abs(left[:, None, :, None] - right[None, :, None, :])

    same_i = np.eye(p, dtype=bool)[:, None, :, None]
    same_a = np.eye(q, dtype=bool)[None, :, None, :]
    valid = ~(same_i | same_a)
    valid = np.broadcast_to(valid, dist.shape)

    sigma = params.affinity_sigma or _median_sigma(dist[valid])
    W = np.where(valid, _affinity(dist, sigma), 0.0).reshape(p * q, p * q)

    if variant.first_order is not None:
        d1 = _first_order(ctx, variant, proximity, src, tgt)
        sigma1 = params.affinity_sigma or _median_sigma(d1)
        W[np.diag_indices(p * q)] = _affinity(d1, sigma1).ravel()
        logger.debug("变体 %s: σ_二阶 = %.4g, σ_一阶 = %.4g", variant.variant_id, sigma, sigma1)
    else:
        logger.debug("变体 %s: σ_二阶 = %.4g", variant.variant_id, sigma)

    W = 0.5 * (W + W.T)
    return CompatibilityMatrix(p, q, W, tuple(src.tolist()), tuple(tgt.tolist()))
