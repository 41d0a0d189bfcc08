"""
图匹配求解器模块
整数二次规划 max xᵀWx 的近似与精确求解：RRWM、谱方法、穷举，以及离散化
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment

from utils.errors import ConvergenceFailure, InvalidSpec, TooLarge, ValidationError, ZeroMatrix

logger = logging.getLogger(__name__)

DISCRETIZATIONS = ('greedy', 'hungarian')
BRUTE_FORCE_MAX = 8
BRUTE_FORCE_MAX_MAPS = 2_000_000
SPECTRAL_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class SolverParams:
    """RRWM 参数与相容矩阵亲和度带宽"""
    alpha: float = 0.2
    beta: float = 30.0
    sinkhorn_iters: int = 10
    conv_tol: float = 1e-6
    max_iters: int = 300
    affinity_sigma: Optional[float] = None
    discretization: str = 'greedy'

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidSpec(f"alpha 必须在 (0, 1) 内，实际为 {self.alpha}")
        if not self.beta > 0:
            raise InvalidSpec(f"beta 必须为正，实际为 {self.beta}")
        if self.sinkhorn_iters < 1 or self.max_iters < 1:
            raise InvalidSpec("sinkhorn_iters 与 max_iters 至少为 1")
        if not self.conv_tol > 0:
            raise InvalidSpec(f"conv_tol 必须为正，实际为 {self.conv_tol}")
        if self.affinity_sigma is not None and not self.affinity_sigma > 0:
            raise InvalidSpec(f"affinity_sigma 必须为正，实际为 {self.affinity_sigma}")
        if self.discretization not in DISCRETIZATIONS:
            raise InvalidSpec(f"未知的离散化方式: {self.discretization}，可选 {DISCRETIZATIONS}")


@dataclass(frozen=True)
class Assignment:
    """一对一的部分匹配

    pairs 中每项为 (i, a)，两侧节点均不重复；objective 为 xᵀWx。
    """
    pairs: Tuple[Tuple[int, int], ...]
    objective: float = 0.0

    def __post_init__(self):
        sources = [i for i, _ in self.pairs]
        targets = [a for _, a in self.pairs]
        if len(set(sources)) != len(sources) or len(set(targets)) != len(targets):
            raise ValidationError(f"匹配不是一对一的: {self.pairs}")
        if self.objective < 0:
            raise ValidationError(f"目标值不能为负: {self.objective}")

    def __len__(self) -> int:
        return len(self.pairs)

    def as_dict(self) -> Dict[int, int]:
        return dict(self.pairs)

    def relabel(self, source_nodes: Sequence[int], target_nodes: Sequence[int]) -> 'Assignment':
        """把局部下标映射回图中的节点编号"""
        return Assignment(tuple((int(source_nodes[i]), int(target_nodes[a])) for i, a in self.pairs),
                          self.objective)

    def to_dict(self) -> dict:
        return {'pairs': [[i, a] for i, a in self.pairs], 'objective': self.objective}


def _values(W) -> np.ndarray:
    return np.asarray(getattr(W, 'values', W), dtype=float)


def assignment_objective(W, pairs: Sequence[Tuple[int, int]], q: int) -> float:
    """局部下标匹配的 xᵀWx"""
    values = _values(W)
    if not pairs:
        return 0.0
    idx = np.array([i * q + a for i, a in pairs], dtype=int)
    return float(max(values[np.ix_(idx, idx)].sum(), 0.0))


def sinkhorn(scores: np.ndarray, iters: int) -> np.ndarray:
    """交替行列归一化，得到近似双随机矩阵

    非方阵时补齐为方阵，补齐项取现有得分的最小值，计算后去掉。
    """
    p, q = scores.shape
    size = max(p, q)
    padded = np.full((size, size), float(scores.min()))
    padded[:p, :q] = scores
    for _ in range(iters):
        padded = padded / padded.sum(axis=1, keepdims=True)
        padded = padded / padded.sum(axis=0, keepdims=True)
    return padded[:p, :q]


def rrwm_solve(W, params: Optional[SolverParams] = None, p: Optional[int] = None,
               q: Optional[int] = None) -> np.ndarray:
    """重加权随机游走匹配

    P = W / d_max，x 从均匀分布开始，每轮
    x ← α·Pᵀx + (1-α)·Sinkhorn(exp(β·x/max x))，并做 ℓ₁ 归一化，
    直到 ‖Δx‖₁ < conv_tol 或达到 max_iters。

    Args:
        W: 相容矩阵（CompatibilityMatrix 或 pq×pq 数组）
        params: 求解参数
        p: 源侧节点数，W 为 CompatibilityMatrix 时可省略
        q: 目标侧节点数

    Returns:
        连续得分向量 x，长度 p·q

    Raises:
        ZeroMatrix: W 全为零
    """
    params = params or SolverParams()
    values = _values(W)
    p = getattr(W, 'p', p)
    q = getattr(W, 'q', q)
    size = values.shape[0]
    if size == 0:
        return np.zeros(0)
    if p is None or q is None:
        p, q = size, 1
    if not np.any(values):
        raise ZeroMatrix("相容矩阵全为零，无法进行随机游走")

    P = values / values.sum(axis=1).max()
    x = np.full(size, 1.0 / size)
    for iteration in range(params.max_iters):
        walked = P.T @ x
        walked = walked / walked.sum()
        peak = walked.max()
        inflated = np.exp(params.beta * walked / peak) if peak > 0 else np.ones(size)
        y = sinkhorn(inflated.reshape(p, q), params.sinkhorn_iters).ravel()
        y = y / y.sum()
        x_next = params.alpha * walked + (1.0 - params.alpha) * y
        x_next = x_next / x_next.sum()
        delta = float(np.abs(x_next - x).sum())
        x = x_next
        if delta < params.conv_tol:
            logger.debug("RRWM 在第 %d 轮收敛", iteration + 1)
            break
    else:
        logger.debug("RRWM 达到最大迭代次数 %d", params.max_iters)
    return x


def discretize(x: np.ndarray, p: int, q: int, W=None) -> Assignment:
    """贪心离散化：反复选取剩余最大得分，固定该对并删去其行列；并列取线性下标最小者

    Returns:
        局部下标上的 Assignment，大小为 min(p, q)；给定 W 时计算目标值
    """
    scores = np.asarray(x, dtype=float).reshape(p, q).copy()
    pairs = []
    for _ in range(min(p, q)):
        flat = int(np.argmax(scores))
        i, a = divmod(flat, q)
        pairs.append((i, a))
        scores[i, :] = -np.inf
        scores[:, a] = -np.inf
    pairs.sort()
    objective = assignment_objective(W, pairs, q) if W is not None else 0.0
    return Assignment(tuple(pairs), objective)


def hungarian_discretize(x: np.ndarray, p: int, q: int, W=None) -> Assignment:
    """匈牙利算法离散化：最大化所选得分之和"""
    scores = np.asarray(x, dtype=float).reshape(p, q)
    rows, cols = linear_sum_assignment(scores, maximize=True)
    pairs = sorted((int(i), int(a)) for i, a in zip(rows, cols))
    objective = assignment_objective(W, pairs, q) if W is not None else 0.0
    return Assignment(tuple(pairs), objective)


def _discretizer(params: SolverParams) -> Callable:
    return hungarian_discretize if params.discretization == 'hungarian' else discretize


def spectral_solve(W, p: Optional[int] = None, q: Optional[int] = None,
                   params: Optional[SolverParams] = None) -> Assignment:
    """谱方法：取 W 的主特征向量（取绝对值），再离散化

    Raises:
        ConvergenceFailure: 特征向量残差超过 1e-8
    """
    params = params or SolverParams()
    values = _values(W)
    p = getattr(W, 'p', p)
    q = getattr(W, 'q', q)
    if values.shape[0] == 0:
        return Assignment(())
    top = values.shape[0] - 1
    try:
        eigvals, eigvecs = linalg.eigh(values, subset_by_index=[top, top])
    except linalg.LinAlgError as e:
        raise ConvergenceFailure(f"主特征向量计算失败: {e}") from e
    lam = float(eigvals[0])
    v = eigvecs[:, 0]
    residual = float(np.linalg.norm(values @ v - lam * v))
    if residual > SPECTRAL_RESIDUAL_TOL * max(1.0, abs(lam)):
        raise ConvergenceFailure(f"主特征向量残差 {residual:.3e} 过大")
    return _discretizer(params)(np.abs(v), p, q, values)


def brute_force_solve(W, p: Optional[int] = None, q: Optional[int] = None) -> Assignment:
    """穷举全部大小为 min(p, q) 的单射，返回 xᵀWx 最大者（精确解）

    Raises:
        TooLarge: min(p, q) > 8 或单射数目过多
    """
    values = _values(W)
    p = getattr(W, 'p', p)
    q = getattr(W, 'q', q)
    size = min(p, q)
    if size > BRUTE_FORCE_MAX or math.perm(max(p, q), size) > BRUTE_FORCE_MAX_MAPS:
        raise TooLarge(f"穷举规模过大: p={p}, q={q}")
    if size == 0:
        return Assignment(())

    best_pairs, best_value = None, -np.inf
    for choice in itertools.permutations(range(max(p, q)), size):
        if p <= q:
            pairs = list(zip(range(p), choice))
        else:
            pairs = sorted(zip(choice, range(q)))
        idx = np.array([i * q + a for i, a in pairs], dtype=int)
        value = values[np.ix_(idx, idx)].sum()
        if value > best_value:
            best_pairs, best_value = pairs, value
    return Assignment(tuple(best_pairs), float(max(best_value, 0.0)))


def _rrwm(W, params: SolverParams) -> Assignment:
    p, q = W.p, W.q
    x = rrwm_solve(W, params)
    return _discretizer(params)(x, p, q, W)


SOLVERS: Dict[str, Callable] = {
    'rrwm': _rrwm,
    'spectral': lambda W, params: spectral_solve(W, params=params),
    'brute-force': lambda W, params: brute_force_solve(W),
}


def solve(W, name: str = 'rrwm', params: Optional[SolverParams] = None) -> Assignment:
    """统一的求解入口，返回以图节点编号表示的 Assignment

    Args:
        W: CompatibilityMatrix
        name: rrwm、spectral 或 brute-force
        params: 求解参数

    Raises:
        InvalidSpec: 未知的求解器
    """
    if name not in SOLVERS:
        raise InvalidSpec(f"未知的求解器: {name}，可选 {sorted(SOLVERS)}")
    params = params or SolverParams()
    if W.p == 0 or W.q == 0:
        return Assignment(())
    if not np.any(W.values):
        # 所有匹配的目标值都为 0
        logger.warning("相容矩阵全为零 (p=%d, q=%d)，按均匀得分离散化", W.p, W.q)
        local = _discretizer(params)(np.ones(W.p * W.q), W.p, W.q, W)
        return local.relabel(W.source_nodes, W.target_nodes)
    local = SOLVERS[name](W, params)
    return local.relabel(W.source_nodes, W.target_nodes)
