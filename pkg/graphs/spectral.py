"""
谱分解模块
负责拉普拉斯矩阵的对称特征分解、热核计算和默认扩散时间
"""
import logging
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy import linalg

from utils.errors import AllZeroSpectrum, ConvergenceFailure, NegativeTime, NotSymmetric

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
GAP_WARN_RATIO = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """拉普拉斯矩阵的完整特征分解

    eigenvalues 升序排列；eigenvectors 的第 k 列为 φ_k。
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    tol: float = DEFAULT_TOL

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def gaps(self) -> np.ndarray:
        """相邻特征值之差"""
        return np.diff(self.eigenvalues)

    def gap_threshold(self) -> float:
        lam_max = float(self.eigenvalues[-1]) if self.n else 0.0
        return GAP_WARN_RATIO * lam_max if lam_max > 0 else np.inf

    def has_simple_spectrum(self) -> bool:
        return bool(np.all(self.gaps >= self.gap_threshold()))

    def clusters(self) -> List[np.ndarray]:
        """按间隙阈值把特征值分组，返回每组的索引数组"""
        if self.n == 0:
            return []
        threshold = self.gap_threshold()
        breaks = np.flatnonzero(self.gaps >= threshold) + 1
        return np.split(np.arange(self.n), breaks)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """热核矩阵 k_t(u, v)"""
    t: float
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]


def spectral_decomposition(L: np.ndarray, tol: float = DEFAULT_TOL) -> SpectralDecomposition:
    """对称矩阵的完整特征分解

    Args:
        L: 对称矩阵（通常是图拉普拉斯矩阵）
        tol: 残差与正交性的相对容差

    Returns:
        特征值升序排列的 SpectralDecomposition

    Raises:
        NotSymmetric: 输入矩阵不对称
        ConvergenceFailure: 输入含非有限元素、特征分解失败或残差超出容差
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise NotSymmetric(f"需要方阵，实际形状为 {L.shape}")
    n = L.shape[0]
    if n == 0:
        return SpectralDecomposition(np.zeros(0), np.zeros((0, 0)), tol)

    if not np.all(np.isfinite(L)):
        raise ConvergenceFailure("矩阵含有非有限元素，无法做特征分解")
    scale = max(1.0, float(np.abs(L).max()))
    if np.abs(L - L.T).max() > tol * scale:
        raise NotSymmetric("拉普拉斯矩阵不对称")

    try:
        values, vectors = linalg.eigh(L)
    except (linalg.LinAlgError, ValueError) as e:
        raise ConvergenceFailure(f"特征分解未收敛: {e}") from e

    order = np.argsort(values, kind='stable')
    values = values[order]
    vectors = vectors[:, order]

    # 符号规范化：每列绝对值最大的分量取正
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(n)])
    signs[signs == 0] = 1.0
    vectors = vectors * signs

    lam_scale = max(1.0, float(values[-1]))
    residual = np.linalg.norm(L @ vectors - vectors * values, axis=0).max()
    if residual > tol * lam_scale:
        raise ConvergenceFailure(f"特征对残差 {residual:.3e} 超出容差 {tol * lam_scale:.3e}")
    ortho = np.abs(vectors.T @ vectors - np.eye(n)).max()
    if ortho > tol * max(1, n):
        raise ConvergenceFailure(f"特征向量正交性误差 {ortho:.3e} 超出容差")

    if values[0] < -tol * lam_scale:
        logger.warning("最小特征值 %.3e 为负，输入可能不是拉普拉斯矩阵", values[0])

    spec = SpectralDecomposition(values, vectors, tol)
    if n > 1 and not spec.has_simple_spectrum():
        degenerate = int(np.sum(spec.gaps < spec.gap_threshold()))
        logger.warning("谱存在 %d 处近重特征值（间隙 < %.1e·λ_n），φ_k² 将在特征子空间内取平均",
                       degenerate, GAP_WARN_RATIO)
    return spec


def heat_kernel(spec: SpectralDecomposition, t: float) -> KernelMatrix:
    """计算热核 k_t = Φ exp(-tΛ) Φᵀ

    Args:
        spec: 谱分解
        t: 扩散时间，t ≥ 0

    Returns:
        对称的 KernelMatrix，每行之和为 1

    Raises:
        NegativeTime: t < 0
    """
    if not t >= 0:
        raise NegativeTime(f"扩散时间必须非负，实际为 {t}")
    phi = spec.eigenvectors
    values = (phi * np.exp(-t * spec.eigenvalues)) @ phi.T
    return KernelMatrix(t=float(t), values=0.5 * (values + values.T))


def nonzero_eigenvalues(spec: SpectralDecomposition) -> np.ndarray:
    if spec.n == 0:
        return np.zeros(0)
    threshold = spec.tol * max(1.0, float(spec.eigenvalues[-1]))
    return spec.eigenvalues[spec.eigenvalues > threshold]


def default_diffusion_time(spec: SpectralDecomposition) -> float:
    """默认扩散时间 t = 1 / mean(非零特征值)

    Raises:
        AllZeroSpectrum: 没有非零特征值
    """
    nonzero = nonzero_eigenvalues(spec)
    if nonzero.size == 0:
        raise AllZeroSpectrum("谱中没有非零特征值，无法确定扩散时间")
    return float(1.0 / nonzero.mean())
