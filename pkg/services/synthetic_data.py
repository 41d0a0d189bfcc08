"""
合成数据模块
随机图对生成（内点共享、外点独立、高斯形变）、锚点抽样、点集建图与合成点序列
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from graphs.anchors import AnchorSet
from graphs.weighted_graph import WeightedGraph, build_graph, is_connected
from utils.errors import DisconnectedGraph, DuplicatePoints, InvalidSpec, TooManyAnchors

logger = logging.getLogger(__name__)

MIN_WEIGHT = 1e-6


@dataclass(frozen=True)
class SyntheticSpec:
    """随机图对参数"""
    n_in: int
    n_out1: int = 0
    n_out2: int = 0
    rho: float = 0.5
    sigma: float = 0.0
    seed: int = 0
    max_resamples: int = 100

    def __post_init__(self):
        if self.n_in < 2:
            raise InvalidSpec(f"n_in 至少为 2，实际为 {self.n_in}")
        if self.n_out1 < 0 or self.n_out2 < 0:
            raise InvalidSpec(f"外点数不能为负: ({self.n_out1}, {self.n_out2})")
        if not 0 < self.rho <= 1:
            raise InvalidSpec(f"rho 必须在 (0, 1] 内，实际为 {self.rho}")
        if not self.sigma >= 0:
            raise InvalidSpec(f"sigma 不能为负，实际为 {self.sigma}")
        if self.max_resamples < 1:
            raise InvalidSpec("max_resamples 至少为 1")


@dataclass(frozen=True)
class GroundTruth:
    """真实对应：inlier_map 中每项 (i, a) 为 G 内点 i 对应 G′ 节点 a"""
    inlier_map: Tuple[Tuple[int, int], ...]
    outliers: Tuple[int, ...] = ()
    outliers_prime: Tuple[int, ...] = ()

    @property
    def n_in(self) -> int:
        return len(self.inlier_map)

    def mapping(self) -> dict:
        return dict(self.inlier_map)


def _random_edges(rng: np.random.Generator, pairs: np.ndarray, rho: float):
    keep = rng.random(len(pairs)) < rho
    weights = np.maximum(rng.uniform(0.0, 1.0, len(pairs)), MIN_WEIGHT)
    return keep, weights


def _outlier_pairs(n_in: int, n_total: int) -> np.ndarray:
    iu = np.triu_indices(n_total, 1)
    pairs = np.column_stack(iu)
    return pairs[pairs[:, 1] >= n_in]


def _draw_pair(spec: SyntheticSpec, rng: np.random.Generator):
    n1 = spec.n_in + spec.n_out1
    n2 = spec.n_in + spec.n_out2
    inlier_pairs = np.column_stack(np.triu_indices(spec.n_in, 1))
    keep, weights = _random_edges(rng, inlier_pairs, spec.rho)
    noise = rng.normal(0.0, spec.sigma, len(inlier_pairs)) if spec.sigma > 0 else np.zeros(len(inlier_pairs))
    weights_prime = np.maximum(weights + noise, MIN_WEIGHT)

    out1 = _outlier_pairs(spec.n_in, n1)
    keep1, w1 = _random_edges(rng, out1, spec.rho)
    out2 = _outlier_pairs(spec.n_in, n2)
    keep2, w2 = _random_edges(rng, out2, spec.rho)

    edges = [(i, j, w) for (i, j), w in zip(inlier_pairs[keep], weights[keep])]
    edges += [(i, j, w) for (i, j), w in zip(out1[keep1], w1[keep1])]
    edges_prime = [(i, j, w) for (i, j), w in zip(inlier_pairs[keep], weights_prime[keep])]
    edges_prime += [(i, j, w) for (i, j), w in zip(out2[keep2], w2[keep2])]

    perm = rng.permutation(n2)
    graph = build_graph(n1, edges)
    graph_prime = build_graph(n2, edges_prime).permuted(perm.tolist())
    truth = GroundTruth(
        inlier_map=tuple((i, int(perm[i])) for i in range(spec.n_in)),
        outliers=tuple(range(spec.n_in, n1)),
        outliers_prime=tuple(sorted(int(perm[v]) for v in range(spec.n_in, n2))),
    )
    return graph, graph_prime, truth


def generate_pair(spec: SyntheticSpec) -> Tuple[WeightedGraph, WeightedGraph, GroundTruth]:
    """生成一对随机加权图

    共享内点子图以密度 rho 连边、权重服从 U[0,1]；G′ 的内点边权加 N(0, σ²) 噪声后
    截断到 1e-6 以上；两图各自以相同规律连接外点；G′ 节点随机重排。
    两图都连通之前重新抽样，最多 max_resamples 次。

    Args:
        spec: 生成参数

    Returns:
        (G, G′, GroundTruth)，给定种子时完全确定

    Raises:
        DisconnectedGraph: 重采样次数用尽仍不连通
    """
    rng = np.random.default_rng(spec.seed)
    for attempt in range(spec.max_resamples):
        graph, graph_prime, truth = _draw_pair(spec, rng)
        if is_connected(graph) and is_connected(graph_prime):
            if attempt:
                logger.debug("第 %d 次抽样得到连通图对", attempt + 1)
            return graph, graph_prime, truth
    raise DisconnectedGraph(f"{spec.max_resamples} 次抽样后仍未得到连通图对 (rho={spec.rho})")


def select_anchors(truth: GroundTruth, count: int, seed: int) -> AnchorSet:
    """从内点对应中均匀随机抽取 count 个锚点

    Raises:
        TooManyAnchors: count 超过内点数
        EmptyAnchorSet: count 为 0
    """
    if count > truth.n_in:
        raise TooManyAnchors(f"锚点数 {count} 超过内点数 {truth.n_in}")
    if count < 0:
        raise InvalidSpec(f"锚点数不能为负: {count}")
    rng = np.random.default_rng(seed)
    chosen = sorted(rng.choice(truth.n_in, size=count, replace=False).tolist())
    return AnchorSet.from_pairs(truth.inlier_map[k] for k in chosen)


def points_to_graph(points: Sequence[Sequence[float]]) -> WeightedGraph:
    """完全图，边权为两点间欧氏距离

    Raises:
        InvalidSpec: 少于 2 个点
        DuplicatePoints: 存在重合的点
    """
    coords = np.asarray(points, dtype=float)
    if coords.ndim != 2 or coords.shape[0] < 2:
        raise InvalidSpec(f"至少需要 2 个点，实际形状为 {coords.shape}")
    dist = pdist(coords)
    if np.any(dist == 0):
        raise DuplicatePoints("点集中存在重合的坐标")
    i, j = np.triu_indices(coords.shape[0], 1)
    return build_graph(coords.shape[0], zip(i.tolist(), j.tolist(), dist.tolist()))


def synthetic_point_sequence(n_points: int,
                             n_frames: int,
                             rotation_range: float,
                             noise_std: float,
                             seed: int,
                             translation_range: float = 0.0) -> List[np.ndarray]:
    """合成点序列：同一随机点云逐帧绕质心旋转、平移并加坐标噪声

    第 f 帧的旋转角为 rotation_range·f/(n_frames-1)，平移沿一个随机方向线性增长；
    帧间对应关系按点的下标。

    Returns:
        每帧一个 n_points×2 数组

    Raises:
        InvalidSpec: n_points < 3、n_frames < 1 或 noise_std < 0
    """
    if n_points < 3:
        raise InvalidSpec(f"n_points 至少为 3，实际为 {n_points}")
    if n_frames < 1:
        raise InvalidSpec(f"n_frames 至少为 1，实际为 {n_frames}")
    if not noise_std >= 0:
        raise InvalidSpec(f"noise_std 不能为负，实际为 {noise_std}")
    rng = np.random.default_rng(seed)
    base = rng.uniform(0.0, 1.0, size=(n_points, 2))
    centroid = base.mean(axis=0)
    heading = rng.uniform(0.0, 2.0 * math.pi)
    direction = np.array([math.cos(heading), math.sin(heading)])

    frames = []
    for f in range(n_frames):
        progress = f / (n_frames - 1) if n_frames > 1 else 0.0
        angle = rotation_range * progress
        rotation = np.array([[math.cos(angle), -math.sin(angle)],
                             [math.sin(angle), math.cos(angle)]])
        moved = (base - centroid) @ rotation.T + centroid + translation_range * progress * direction
        if noise_std > 0:
            moved = moved + rng.normal(0.0, noise_std, size=moved.shape)
        frames.append(moved)
    return frames


def point_pair(n_points: int,
               noise_std: float,
               seed: int,
               rotation_range: float = math.pi / 6) -> Tuple[WeightedGraph, WeightedGraph, GroundTruth]:
    """由两帧合成点集构建图对，G′ 节点随机重排，全部点都是内点"""
    frames = synthetic_point_sequence(n_points, 2, rotation_range, noise_std, seed)
    rng = np.random.default_rng([seed, 1])
    perm = rng.permutation(n_points)
    graph = points_to_graph(frames[0])
    graph_prime = points_to_graph(frames[1]).permuted(perm.tolist())
    truth = GroundTruth(inlier_map=tuple((i, int(perm[i])) for i in range(n_points)))
    return graph, graph_prime, truth
