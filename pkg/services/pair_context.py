"""
图对上下文模块
一次性计算图对的谱、热核、节点特征与锚点剖面，供学习与相容矩阵构建共享
"""
import logging
from dataclasses import dataclass
from typing import Optional

from graphs.anchors import AnchorSet
from graphs.spectral import (
    DEFAULT_TOL, KernelMatrix, SpectralDecomposition, default_diffusion_time,
    heat_kernel, spectral_decomposition,
)
from graphs.weighted_graph import WeightedGraph, laplacian
from services.signature_service import (
    AnchorHeatProfile, NodeFeatures, node_features, profile_from_kernel,
)
from utils.errors import KOutOfRange, NegativeTime

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PairContext:
    """图对 (G, G′) 的全部谱量"""
    graph: WeightedGraph
    graph_prime: WeightedGraph
    spec: SpectralDecomposition
    spec_prime: SpectralDecomposition
    t: float
    kernel: KernelMatrix
    kernel_prime: KernelMatrix
    features: NodeFeatures
    features_prime: NodeFeatures
    anchors: Optional[AnchorSet] = None
    profile: Optional[AnchorHeatProfile] = None
    profile_prime: Optional[AnchorHeatProfile] = None

    @classmethod
    def build(cls,
              graph: WeightedGraph,
              graph_prime: WeightedGraph,
              anchors: Optional[AnchorSet] = None,
              k: Optional[int] = None,
              k_prime: Optional[int] = None,
              t: Optional[float] = None,
              tol: float = DEFAULT_TOL) -> 'PairContext':
        """构建图对上下文

        Args:
            graph: 图 G
            graph_prime: 图 G′
            anchors: 锚点对应（可选）
            k: G 的谱截断数，默认 min(|V|, |V′|)
            k_prime: G′ 的谱截断数，默认与 k 相同
            t: 扩散时间，默认取两图默认扩散时间的平均
            tol: 特征分解容差

        Returns:
            PairContext

        Raises:
            AllZeroSpectrum: 未指定 t 且某个图无边
            KOutOfRange: 截断数越界
        """
        if anchors is not None:
            anchors.validate_for(graph.n, graph_prime.n)

        spec = spectral_decomposition(laplacian(graph), tol)
        spec_prime = spectral_decomposition(laplacian(graph_prime), tol)

        if t is None:
            t = 0.5 * (default_diffusion_time(spec) + default_diffusion_time(spec_prime))
            logger.debug("默认扩散时间 t = %.6g", t)
        elif t < 0:
            raise NegativeTime(f"扩散时间必须非负，实际为 {t}")

        if k is None:
            k = min(graph.n, graph_prime.n)
        if k_prime is None:
            k_prime = k
        if not (1 <= k <= graph.n and 1 <= k_prime <= graph_prime.n):
            raise KOutOfRange(f"截断数 ({k}, {k_prime}) 超出图的节点数 ({graph.n}, {graph_prime.n})")

        kernel = heat_kernel(spec, t)
        kernel_prime = heat_kernel(spec_prime, t)

        profile = profile_prime = None
        if anchors is not None:
            profile = profile_from_kernel(kernel, anchors.sources)
            profile_prime = profile_from_kernel(kernel_prime, anchors.targets)

        return cls(
            graph=graph,
            graph_prime=graph_prime,
            spec=spec,
            spec_prime=spec_prime,
            t=float(t),
            kernel=kernel,
            kernel_prime=kernel_prime,
            features=node_features(spec, k),
            features_prime=node_features(spec_prime, k_prime),
            anchors=anchors,
            profile=profile,
            profile_prime=profile_prime,
        )
