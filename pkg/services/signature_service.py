"""
节点签名服务模块
负责节点特征 θ_u、节点对特征 w_uv、邻近距离 d_B、
HKS / WKS 基线签名以及锚点热核剖面 d_ap
"""
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from graphs.spectral import KernelMatrix, SpectralDecomposition, heat_kernel
from utils.errors import (
    AllZeroSpectrum, DimensionMismatch, EmptyAnchorSet, KOutOfRange,
    NegativeQuadraticForm, NegativeTime, NonPositiveSigma, NotSymmetric,
)

WKS_EIGEN_FLOOR = 1e-10
WKS_SAMPLES = 20
PSD_TOL = 1e-8
QUAD_FORM_TOL = 1e-10

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True, eq=False)
class NodeFeatures:
    """节点特征 θ_u = (φ_1(u)², …, φ_K(u)²)，theta 的第 u 行为 θ_u"""
    K: int
    theta: np.ndarray

    @property
    def n(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True, eq=False)
class ProximityMatrix:
    """学习得到的半正定邻近矩阵 B

    Raises:
        NotSymmetric: 矩阵不对称
        NegativeQuadraticForm: 最小特征值低于 -1e-8（按矩阵量级缩放）
    """
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DimensionMismatch(f"B 必须是方阵，实际形状为 {values.shape}")
        scale = max(1.0, float(np.abs(values).max())) if values.size else 1.0
        if values.size and np.abs(values - values.T).max() > 1e-9 * scale:
            raise NotSymmetric("邻近矩阵 B 不对称")
        if values.size and np.linalg.eigvalsh(values).min() < -PSD_TOL * scale:
            raise NegativeQuadraticForm("邻近矩阵 B 不是半正定的")
        object.__setattr__(self, 'values', values)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @classmethod
    def zeros(cls, dim: int) -> 'ProximityMatrix':
        return cls(np.zeros((dim, dim)))

    @classmethod
    def block_identity(cls, K: int, K_prime: int) -> 'ProximityMatrix':
        """[[I, -I], [-I, I]]，此时 d_B 退化为 ‖θ_u - θ′_v‖₂"""
        if K != K_prime:
            raise DimensionMismatch(f"块单位矩阵要求 K = K′，实际为 {K} 与 {K_prime}")
        eye = np.eye(K)
        return cls(np.block([[eye, -eye], [-eye, eye]]))

    def to_dict(self) -> dict:
        return {'dim': self.dim, 'values': self.values.ravel().tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> 'ProximityMatrix':
        dim = int(data['dim'])
        values = np.asarray(data['values'], dtype=float)
        if values.size != dim * dim:
            raise DimensionMismatch(f"values 长度 {values.size} 与 dim={dim} 不符")
        return cls(values.reshape(dim, dim))


@dataclass(frozen=True, eq=False)
class AnchorHeatProfile:
    """锚点热核剖面 d_ap^H(v) = Σ_{u∈U} k_t(u, v)"""
    t: float
    values: np.ndarray


def node_features(spec: SpectralDecomposition, K: int) -> NodeFeatures:
    """计算节点特征 θ_u[k] = φ_k(u)²（取最小的 K 个特征值）

    近重特征值组内的 φ_k(u)² 取组内平均，使特征与特征子空间的基选择无关，
    且每列之和仍为 1。

    Args:
        spec: 谱分解
        K: 谱截断数，1 ≤ K ≤ n

    Returns:
        NodeFeatures

    Raises:
        KOutOfRange: K 不在 [1, n] 内
    """
    if not 1 <= K <= spec.n:
        raise KOutOfRange(f"K 必须在 [1, {spec.n}] 内，实际为 {K}")
    squared = spec.eigenvectors ** 2
    for cluster in spec.clusters():
        if len(cluster) > 1:
            squared[:, cluster] = squared[:, cluster].mean(axis=1, keepdims=True)
    return NodeFeatures(K=K, theta=squared[:, :K])


def pair_feature(theta_u: np.ndarray, theta_v: np.ndarray) -> np.ndarray:
    """节点对特征 w_uv = [θ_u; θ′_v]"""
    return np.concatenate([np.asarray(theta_u, dtype=float), np.asarray(theta_v, dtype=float)])


def _check_quadratic(q: np.ndarray, scale: float) -> np.ndarray:
    if np.any(q < -QUAD_FORM_TOL * scale):
        raise NegativeQuadraticForm(f"二次型 wᵀBw = {q.min():.3e} 为负，B 不是半正定的")
    return np.sqrt(np.maximum(q, 0.0))


def proximity_distance(B: ProximityMatrix, w: np.ndarray) -> float:
    """d_B = sqrt(wᵀBw)，微小负值截断为 0

    Raises:
        DimensionMismatch: B 与 w 维度不一致
        NegativeQuadraticForm: 二次型明显为负
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (B.dim,):
        raise DimensionMismatch(f"B 的维度 {B.dim} 与 w 的长度 {w.shape} 不一致")
    scale = max(1.0, float(np.abs(B.values).max()) * float(w @ w))
    return float(_check_quadratic(np.asarray(w @ B.values @ w), scale))


def proximity_distances(B: ProximityMatrix, theta: np.ndarray, theta_prime: np.ndarray) -> np.ndarray:
    """批量计算 d_B(u, v)，返回 |V|×|V′| 矩阵"""
    K, K_prime = theta.shape[1], theta_prime.shape[1]
    if B.dim != K + K_prime:
        raise DimensionMismatch(f"B 的维度 {B.dim} 与 K+K′={K + K_prime} 不一致")
    b11 = B.values[:K, :K]
    b12 = B.values[:K, K:]
    b22 = B.values[K:, K:]
    q = (np.einsum('uk,kl,ul->u', theta, b11, theta)[:, None]
         + 2.0 * theta @ b12 @ theta_prime.T
         + np.einsum('vk,kl,vl->v', theta_prime, b22, theta_prime)[None, :])
    scale = max(1.0, float(np.abs(B.values).max()) * 4.0)
    return _check_quadratic(q, scale)


def hks(spec: SpectralDecomposition, times: Sequence[float]) -> np.ndarray:
    """热核签名 s_u(t) = Σ_k exp(-tλ_k) φ_k(u)²，返回 n×len(times)

    Raises:
        NegativeTime: 存在负的时间
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size == 0:
        raise NegativeTime("时间序列不能为空")
    if np.any(~(times >= 0)):
        raise NegativeTime(f"HKS 时间必须非负: {times.tolist()}")
    return (spec.eigenvectors ** 2) @ np.exp(-np.outer(spec.eigenvalues, times))


def wks(spec: SpectralDecomposition, times: Sequence[float], sigma: float) -> np.ndarray:
    """波核签名 s_u(t) = Σ_{λ_k>ε} exp(-(t - log λ_k)²/(2σ²)) φ_k(u)²

    低于 1e-10 的特征值被跳过（log 奇点）。

    Raises:
        NonPositiveSigma: sigma ≤ 0
    """
    if not sigma > 0:
        raise NonPositiveSigma(f"WKS 的 sigma 必须为正，实际为 {sigma}")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    mask = spec.eigenvalues > WKS_EIGEN_FLOOR
    if not np.any(mask):
        return np.zeros((spec.n, times.size))
    log_lam = np.log(spec.eigenvalues[mask])
    h = np.exp(-(times[None, :] - log_lam[:, None]) ** 2 / (2.0 * sigma ** 2))
    return (spec.eigenvectors[:, mask] ** 2) @ h


def wks_time_grid(spectra: Iterable[SpectralDecomposition], count: int = WKS_SAMPLES) -> np.ndarray:
    """在 [log λ_min⁺, log λ_max] 上均匀取 count 个对数能量采样点，多个谱共享一套网格

    Raises:
        AllZeroSpectrum: 所有谱都没有正特征值
    """
    positive = np.concatenate([s.eigenvalues[s.eigenvalues > WKS_EIGEN_FLOOR] for s in spectra])
    if positive.size == 0:
        raise AllZeroSpectrum("没有正特征值，无法构造 WKS 采样网格")
    return np.linspace(np.log(positive.min()), np.log(positive.max()), count)


def wks_default_sigma(grid: np.ndarray) -> float:
    span = float(grid[-1] - grid[0]) if len(grid) else 0.0
    return 7.0 * span / len(grid) if span > 0 else 1.0


def profile_from_kernel(kernel: KernelMatrix, anchors: Sequence[int]) -> AnchorHeatProfile:
    anchors = list(anchors)
    if not anchors:
        raise EmptyAnchorSet("锚点集合不能为空")
    return AnchorHeatProfile(t=kernel.t, values=kernel.values[anchors].sum(axis=0))


def anchor_heat_profile(spec: SpectralDecomposition, anchors: Sequence[int], t: float) -> AnchorHeatProfile:
    """锚点热核剖面：每个节点从全部锚点接收的热量之和

    Args:
        spec: 谱分解
        anchors: 本图一侧的锚点节点
        t: 扩散时间

    Returns:
        AnchorHeatProfile，所有值之和为 |U|

    Raises:
        EmptyAnchorSet: 锚点为空
        NegativeTime: t < 0
    """
    if not list(anchors):
        raise EmptyAnchorSet("锚点集合不能为空")
    return profile_from_kernel(heat_kernel(spec, t), anchors)


def first_order_distance(d_B: ArrayLike, d_ap_i: ArrayLike, d_ap_a: ArrayLike,
                         c_B: float, c_ap: float) -> ArrayLike:
    """一阶相容距离 d(i,a) = c_B·d_B + c_ap·|d_ap(i) - d′_ap(a)|，支持数组广播"""
    result = c_B * np.asarray(d_B) + c_ap * np.abs(np.asarray(d_ap_i) - np.asarray(d_ap_a))
    return float(result) if np.ndim(result) == 0 else result
