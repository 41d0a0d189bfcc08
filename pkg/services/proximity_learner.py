"""
邻近矩阵学习服务模块
通过松弛重缩放的最大间隔二次规划，从锚点对应中学习半正定邻近矩阵 B。
求解采用列生成：每轮为每个锚点加入违反最严重的约束，求解受限二次规划，
再投影回半正定锥。
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize, nnls
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from graphs.anchors import AnchorSet
from graphs.spectral import KernelMatrix
from graphs.weighted_graph import WeightedGraph
from services.pair_context import PairContext
from services.signature_service import ProximityMatrix, pair_feature
from utils.errors import InvalidSpec, NotSymmetric, QPNumericalFailure, SameNode

logger = logging.getLogger(__name__)

LOSS_MODES = ('heat-distance', 'raw-kernel', 'shortest-path')
WARM_STARTS = ('zero', 'block-identity')
LOSS_EPS = 1e-9
PSD_CUT_TOL = 1e-8

SIDE_TARGET = 'target'  # 竞争者 b ∈ V′ \ {a}
SIDE_SOURCE = 'source'  # 竞争者 j ∈ V \ {i}


@dataclass(frozen=True)
class LearnConfig:
    """学习参数"""
    c_reg: float = 10.0
    cg_tol: float = 1e-4
    max_cg_iters: int = 100
    qp_tol: float = 1e-6
    loss_mode: str = 'heat-distance'
    warm_start: str = 'zero'
    psd_cuts: bool = True

    def __post_init__(self):
        if not self.c_reg > 0:
            raise InvalidSpec(f"c_reg 必须为正，实际为 {self.c_reg}")
        if not (self.cg_tol > 0 and self.qp_tol > 0):
            raise InvalidSpec("cg_tol 与 qp_tol 必须为正")
        if self.max_cg_iters < 0:
            raise InvalidSpec(f"max_cg_iters 不能为负，实际为 {self.max_cg_iters}")
        if self.loss_mode not in LOSS_MODES:
            raise InvalidSpec(f"未知的损失模式: {self.loss_mode}，可选 {LOSS_MODES}")
        if self.warm_start not in WARM_STARTS:
            raise InvalidSpec(f"未知的初始化方式: {self.warm_start}，可选 {WARM_STARTS}")


@dataclass(frozen=True, eq=False)
class MarginConstraint:
    """间隔约束 ψᵀb ≥ 1 - ξ_m / Ω

    psi = vec(w_far w_farᵀ - w_near w_nearᵀ)
    """
    anchor_index: int
    competitor: int
    side: str
    psi: np.ndarray
    loss: float

    @property
    def key(self) -> Tuple[int, str, int]:
        return (self.anchor_index, self.side, self.competitor)


@dataclass(frozen=True, eq=False)
class PsdCut:
    """半正定割平面 ⟨vvᵀ, B⟩ ≥ 0"""
    vector: np.ndarray

    @property
    def psi(self) -> np.ndarray:
        return np.outer(self.vector, self.vector).ravel()


@dataclass(eq=False)
class LearnResult:
    """学习结果"""
    B: ProximityMatrix
    xi: np.ndarray
    active_constraints: List[MarginConstraint]
    converged: bool
    iterations: int
    objective_history: List[float] = field(default_factory=list)
    psd_cuts: List[PsdCut] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class LearningProblem:
    """一个图对上的学习问题

    loss_source[x, y] 为 G 上的 Ω(x, y)，loss_target 为 G′ 上的 Ω′。
    """
    theta: np.ndarray
    theta_prime: np.ndarray
    anchors: AnchorSet
    loss_source: np.ndarray
    loss_target: np.ndarray

    @property
    def dim(self) -> int:
        return self.theta.shape[1] + self.theta_prime.shape[1]

    @property
    def n_anchors(self) -> int:
        return len(self.anchors)

    @classmethod
    def from_context(cls, context: PairContext, anchors: AnchorSet, config: LearnConfig) -> 'LearningProblem':
        anchors.validate_for(context.graph.n, context.graph_prime.n)
        return cls(
            theta=context.features.theta,
            theta_prime=context.features_prime.theta,
            anchors=anchors,
            loss_source=loss_matrix(context.kernel, config.loss_mode, context.graph),
            loss_target=loss_matrix(context.kernel_prime, config.loss_mode, context.graph_prime),
        )


def _graph_distances(graph: WeightedGraph) -> np.ndarray:
    dist = shortest_path(csr_matrix(graph.adjacency()), directed=False)
    # 不可达节点对取一个大于任意最短路的有限值
    cap = sum(w for _, _, w in graph.edges) + 1.0
    return np.where(np.isfinite(dist), dist, cap)


def rescale_loss(kernel: KernelMatrix, x: int, y: int, mode: str = 'heat-distance',
                 graph: Optional[WeightedGraph] = None) -> float:
    """松弛重缩放损失 Ω(x, y)

    Args:
        kernel: 热核矩阵
        x: 节点
        y: 节点，x ≠ y
        mode: heat-distance（远离时大）、raw-kernel（热核原值）或 shortest-path
        graph: shortest-path 模式所需的图

    Returns:
        正的损失值

    Raises:
        SameNode: x == y
    """
    if x == y:
        raise SameNode(f"损失函数的两个节点相同: {x}")
    return float(loss_matrix(kernel, mode, graph)[x, y])


def loss_matrix(kernel: KernelMatrix, mode: str, graph: Optional[WeightedGraph] = None) -> np.ndarray:
    """全部节点对的 Ω 矩阵（对角线无意义）"""
    k = kernel.values
    if mode == 'heat-distance':
        diag = np.diag(k)
        base = np.maximum(diag[:, None] + diag[None, :] - 2.0 * k, 0.0)
    elif mode == 'raw-kernel':
        base = np.maximum(k, 0.0)
    elif mode == 'shortest-path':
        if graph is None:
            raise InvalidSpec("shortest-path 损失需要提供图")
        base = _graph_distances(graph)
    else:
        raise InvalidSpec(f"未知的损失模式: {mode}")
    return base + LOSS_EPS


def _quadratic_forms(rows: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.einsum('ck,kl,cl->c', rows, B, rows)


def _anchor_candidates(problem: LearningProblem, B: np.ndarray, xi_m: float, m: int):
    """返回锚点 m 的全部候选约束: (竞争者, 侧, 违反量, 远特征, 近特征, 损失)"""
    i, a = problem.anchors.pairs[m]
    theta, theta_prime = problem.theta, problem.theta_prime
    near = pair_feature(theta[i], theta_prime[a])
    near_q = float(near @ B @ near)

    b_idx = np.array([b for b in range(theta_prime.shape[0]) if b != a], dtype=int)
    j_idx = np.array([j for j in range(theta.shape[0]) if j != i], dtype=int)

    far_t = np.hstack([np.repeat(theta[i][None, :], len(b_idx), axis=0), theta_prime[b_idx]])
    far_s = np.hstack([theta[j_idx], np.repeat(theta_prime[a][None, :], len(j_idx), axis=0)])
    loss_t = problem.loss_target[b_idx, a]
    loss_s = problem.loss_source[j_idx, i]

    competitors = np.concatenate([b_idx, j_idx])
    sides = np.concatenate([np.zeros(len(b_idx), dtype=int), np.ones(len(j_idx), dtype=int)])
    far = np.vstack([far_t, far_s]) if len(competitors) else np.zeros((0, len(near)))
    losses = np.concatenate([loss_t, loss_s])
    margins = _quadratic_forms(far, B) - near_q
    violations = 1.0 - xi_m / losses - margins
    return competitors, sides, violations, far, near, losses


def enumerate_violations(problem: LearningProblem,
                         B: np.ndarray,
                         xi_m: float,
                         m: int,
                         cg_tol: float) -> Optional[MarginConstraint]:
    """找出锚点 m 违反最严重的间隔约束

    扫描 b ∈ V′ \\ {a_m} 与 j ∈ V \\ {i_m}，违反量为
    1 - ξ_m/Ω - (d_B²(far) - d_B²(near))。并列时取竞争者编号最小者，
    编号相同时 G′ 侧优先。

    Returns:
        违反量超过 cg_tol 的最严重约束，否则 None
    """
    B = np.asarray(getattr(B, 'values', B), dtype=float)
    competitors, sides, violations, far, near, losses = _anchor_candidates(problem, B, xi_m, m)
    if violations.size == 0:
        return None
    best = np.lexsort((sides, competitors, -violations))[0]
    if violations[best] <= cg_tol:
        return None
    w_far = far[best]
    psi = (np.outer(w_far, w_far) - np.outer(near, near)).ravel()
    return MarginConstraint(
        anchor_index=m,
        competitor=int(competitors[best]),
        side=SIDE_TARGET if sides[best] == 0 else SIDE_SOURCE,
        psi=psi,
        loss=float(losses[best]),
    )


def all_violations(problem: LearningProblem, B: np.ndarray, xi: Sequence[float]) -> np.ndarray:
    """穷举全部 O(n(|V|+|V′|)) 约束的违反量"""
    B = np.asarray(getattr(B, 'values', B), dtype=float)
    parts = [_anchor_candidates(problem, B, float(xi[m]), m)[2] for m in range(problem.n_anchors)]
    return np.concatenate(parts) if parts else np.zeros(0)


def recompute_slacks(working_set: Sequence[MarginConstraint], B: np.ndarray, n_anchors: int) -> np.ndarray:
    """ξ_m = max(0, max_c Ω_c·(1 - ψ_cᵀb))，只看工作集中的约束"""
    b = np.asarray(B, dtype=float).ravel()
    xi = np.zeros(n_anchors)
    for c in working_set:
        xi[c.anchor_index] = max(xi[c.anchor_index], c.loss * (1.0 - float(c.psi @ b)))
    return xi


def primal_objective(b: np.ndarray, xi: np.ndarray, c_reg: float) -> float:
    n = max(len(xi), 1)
    return float(0.5 * b @ b + c_reg / n * np.sum(xi))


def _solve_dual(objective, gradient, rows, caps, z0, maxiter):
    """SLSQP 求解 z ≥ 0、row·z ≤ cap 约束下的对偶问题（取负后最小化）"""
    constraints = []
    for row, cap in zip(rows, caps):
        constraints.append({
            'type': 'ineq',
            'fun': lambda z, r=row, c=cap: c - r @ z,
            'jac': lambda z, r=row: -r,
        })
    bounds = [(0.0, None)] * len(z0)
    return minimize(objective, z0, jac=gradient, method='SLSQP', bounds=bounds,
                    constraints=constraints, options={'ftol': 1e-15, 'maxiter': maxiter})


def _hard_margin_dual(psi: np.ndarray, targets: np.ndarray) -> Optional[np.ndarray]:
    """硬间隔问题 min ½‖b‖² s.t. psi·b ≥ targets 的对偶变量 α（b = psiᵀα）

    最小范数问题化为非负最小二乘 min ‖E u - f‖，E = [psiᵀ; targetsᵀ]，f = e_last；
    残差 r 给出 b = -r[:-1] / r[-1]。约束不可行时返回 None。
    """
    E = np.vstack([psi.T, targets[None, :]])
    f = np.zeros(E.shape[0])
    f[-1] = 1.0
    try:
        u, _ = nnls(E, f)
    except RuntimeError as e:
        logger.debug("非负最小二乘未收敛: %s", e)
        return None
    denom = 1.0 - float(targets @ u)
    if not np.isfinite(denom) or denom <= 1e-14:
        return None
    alpha = u / denom
    b = psi.T @ alpha
    slack = psi @ b - targets
    if not np.all(np.isfinite(b)) or slack.min() < -1e-9 * max(1.0, float(np.abs(b).max())):
        return None
    return alpha


def _anchor_budgets(margins: Sequence[MarginConstraint], n_anchors: int, size: int, g: float, weight: float):
    """每个锚点 Σ α_c/Ω_c ≤ C/n，在 z = g·α 下按组内最小 Ω 归一化为 row·z ≤ cap"""
    groups, rows, caps = [], [], []
    for m in range(n_anchors):
        members = [k for k, c in enumerate(margins) if c.anchor_index == m]
        if not members:
            continue
        losses = np.array([margins[k].loss for k in members])
        groups.append((members, losses))
        row = np.zeros(size)
        row[members] = losses.min() / losses
        rows.append(row)
        caps.append(g * weight * losses.min())
    return groups, rows, caps


def _budget_usage(alpha: np.ndarray, groups) -> List[float]:
    return [float(np.sum(alpha[members] / losses)) for members, losses in groups]


def _cap_to_budgets(alpha: np.ndarray, groups, weight: float) -> np.ndarray:
    capped = np.clip(alpha, 0.0, None)
    for (members, _), used in zip(groups, _budget_usage(capped, groups)):
        if used > weight:
            capped[members] *= weight / used
    return capped


def solve_restricted_qp(working_set: Sequence[MarginConstraint],
                        config: LearnConfig,
                        n_anchors: int,
                        dim: Optional[int] = None,
                        cuts: Sequence[PsdCut] = ()) -> Tuple[np.ndarray, np.ndarray]:
    """求解限制在工作集上的松弛二次规划

    原问题: min ½‖b‖² + C/n Σξ_m，s.t. ψ_cᵀb ≥ 1 - ξ_m/Ω_c，ξ ≥ 0，⟨vvᵀ, B⟩ ≥ 0（割平面）。
    先用非负最小二乘求硬间隔解（ξ = 0），若其对偶变量满足每个锚点 Σ α_c/Ω_c ≤ C/n 则即为最优解；
    否则以截断后的硬间隔解为初值，用 SLSQP 求解对偶问题再恢复原变量。
    相对对偶间隙作为 KKT 残差。

    Args:
        working_set: 间隔约束工作集
        config: 学习参数
        n_anchors: 锚点数 n
        dim: B 的维度，工作集为空时用于确定 b 的长度
        cuts: 半正定割平面

    Returns:
        (b, ξ)：b 为 B 的行优先向量形式，ξ 长度为 n_anchors

    Raises:
        QPNumericalFailure: 求解结果非有限或残差远超 qp_tol
    """
    margins = list(working_set)
    cuts = list(cuts)
    if not margins:
        size = (dim or 0) ** 2
        return np.zeros(size), np.zeros(n_anchors)

    psi = np.vstack([c.psi for c in margins] + [c.psi for c in cuts])
    n_margins = len(margins)
    gram = psi @ psi.T
    # 变量 z = g·α，g 为 Gram 矩阵最大对角元，使最优解与 C 的量级无关
    g = float(np.max(np.diag(gram)))
    if g <= 0.0:
        return np.zeros(psi.shape[1]), np.zeros(n_anchors)
    hessian = gram / g
    linear = np.concatenate([np.ones(n_margins), np.zeros(len(cuts))])

    def objective(z):
        return 0.5 * z @ hessian @ z - linear @ z

    def gradient(z):
        return hessian @ z - linear

    weight = config.c_reg / n_anchors
    groups, rows, caps = _anchor_budgets(margins, n_anchors, len(linear), g, weight)

    def recover(z):
        coeff = np.clip(z, 0.0, None) / g
        b = psi.T @ coeff
        xi = recompute_slacks(margins, b, n_anchors)
        primal = primal_objective(b, xi, config.c_reg)
        dual = float(coeff[:n_margins].sum() - 0.5 * b @ b)
        residual = (primal - dual) / max(1.0, abs(primal))
        if cuts:
            cut_gap = max(0.0, -float((psi[n_margins:] @ b).min()))
            residual = max(residual, cut_gap / max(1.0, float(np.abs(b).max())))
        return b, xi, residual

    z0 = np.zeros(len(linear))
    hard = _hard_margin_dual(psi, linear)
    if hard is not None:
        if max(_budget_usage(hard, groups)) <= weight * (1.0 + config.qp_tol):
            # 可行且满足互补松弛，ξ = 0 即为 KKT 点
            b = psi.T @ hard
            return b, recompute_slacks(margins, b, n_anchors)
        z0 = g * _cap_to_budgets(hard, groups, weight)

    result = _solve_dual(objective, gradient, rows, caps, z0, 1000)
    b, xi, residual = recover(result.x)
    if not np.isfinite(residual) or residual > config.qp_tol:
        logger.debug("受限 QP 残差 %.3e，继续精化", residual)
        refined = _solve_dual(objective, gradient, rows, caps, np.clip(result.x, 0, None), 3000)
        b2, xi2, residual2 = recover(refined.x)
        if np.isfinite(residual2) and (not np.isfinite(residual) or residual2 < residual):
            b, xi, residual = b2, xi2, residual2

    if not (np.all(np.isfinite(b)) and np.isfinite(residual)):
        raise QPNumericalFailure("受限二次规划得到非有限解")
    if residual > 1e3 * config.qp_tol:
        raise QPNumericalFailure(f"受限二次规划 KKT 残差 {residual:.3e} 远超容差 {config.qp_tol:.1e}")
    if residual > config.qp_tol:
        logger.warning("受限二次规划 KKT 残差 %.3e 超过容差 %.1e", residual, config.qp_tol)
    return b, xi


def _psd_part(S: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(S)
    projected = (vectors * np.maximum(values, 0.0)) @ vectors.T
    return 0.5 * (projected + projected.T)


def psd_project(M: np.ndarray) -> ProximityMatrix:
    """投影到半正定锥：特征分解后把负特征值截断为 0（Frobenius 意义下最近的半正定矩阵）

    Raises:
        NotSymmetric: 输入不对称
    """
    M = np.asarray(M, dtype=float)
    scale = max(1.0, float(np.abs(M).max())) if M.size else 1.0
    if M.ndim != 2 or M.shape[0] != M.shape[1] or np.abs(M - M.T).max() > 1e-9 * scale:
        raise NotSymmetric("待投影矩阵不对称")
    return ProximityMatrix(_psd_part(0.5 * (M + M.T)))


def solve_projected_qp(working_set: Sequence[MarginConstraint],
                       config: LearnConfig,
                       n_anchors: int,
                       dim: int) -> Tuple[np.ndarray, np.ndarray]:
    """在半正定锥上求解工作集二次规划

    min ½‖B‖² + C/n Σξ_m，s.t. ⟨Ψ_c, B⟩ ≥ 1 - ξ_m/Ω_c，ξ ≥ 0，B ⪰ 0。
    对偶函数 Σα - ½‖Π(Σ α_c Ψ_c)‖² 连续可微（Π 为半正定投影），最优时 B = Π(Σ α_c Ψ_c)，
    即松弛解投影到半正定锥后仍满足间隔。先不带预算约束用 L-BFGS-B 求硬间隔解；
    预算超出或间隔未达到时改用 SLSQP 带每个锚点的预算约束求解。

    Returns:
        (B, ξ)：B 为 dim×dim 半正定矩阵，ξ 由 B 重新计算

    Raises:
        QPNumericalFailure: 求解结果非有限
    """
    margins = list(working_set)
    if not margins:
        return np.zeros((dim, dim)), np.zeros(n_anchors)
    psi = np.vstack([c.psi for c in margins])
    g = float(np.max(np.einsum('ij,ij->i', psi, psi)))
    if g <= 0.0:
        return np.zeros((dim, dim)), np.zeros(n_anchors)
    linear = np.ones(len(margins))
    weight = config.c_reg / n_anchors
    groups, rows, caps = _anchor_budgets(margins, n_anchors, len(margins), g, weight)
    cache = {}

    def project(z):
        key = z.tobytes()
        if key not in cache:
            cache.clear()
            S = (psi.T @ (np.clip(z, 0.0, None) / g)).reshape(dim, dim)
            cache[key] = _psd_part(0.5 * (S + S.T))
        return cache[key]

    def objective(z):
        P = project(z)
        return 0.5 * g * float(np.sum(P * P)) - float(linear @ z)

    def gradient(z):
        return psi @ project(z).ravel() - linear

    def deficit(B):
        return float(np.max(1.0 - psi @ B.ravel()))

    def over_budget(z):
        return max(_budget_usage(np.clip(z, 0.0, None) / g, groups)) > weight * (1.0 + config.qp_tol)

    def stop_over_budget(z):
        if over_budget(z):
            raise StopIteration

    hard = minimize(objective, np.zeros(len(margins)), jac=gradient, method='L-BFGS-B',
                    bounds=[(0.0, None)] * len(margins), callback=stop_over_budget,
                    options={'maxiter': 5000, 'ftol': 0.0, 'gtol': 1e-12})
    alpha = np.clip(hard.x, 0.0, None) / g
    B = project(hard.x)
    if np.all(np.isfinite(B)) and not over_budget(hard.x) and deficit(B) <= config.qp_tol:
        return B, recompute_slacks(margins, B, n_anchors)

    logger.debug("半正定约束下硬间隔不可达 (间隔缺口 %.3e)，带预算约束求解", deficit(B))
    z0 = g * _cap_to_budgets(alpha, groups, weight) if np.all(np.isfinite(alpha)) else np.zeros(len(margins))
    soft = _solve_dual(objective, gradient, rows, caps, z0, 3000)
    B = project(soft.x)
    if not np.all(np.isfinite(B)):
        raise QPNumericalFailure("半正定约束下的受限二次规划得到非有限解")
    xi = recompute_slacks(margins, B, n_anchors)
    primal = primal_objective(B.ravel(), xi, config.c_reg)
    dual = float(np.clip(soft.x, 0.0, None).sum() / g - 0.5 * np.sum(B * B))
    gap = (primal - dual) / max(1.0, abs(primal))
    if gap > config.qp_tol:
        logger.info("半正定约束下的受限二次规划对偶间隙 %.3e 超过容差 %.1e", gap, config.qp_tol)
    return B, xi


def _initial_matrix(problem: LearningProblem, config: LearnConfig) -> np.ndarray:
    K, K_prime = problem.theta.shape[1], problem.theta_prime.shape[1]
    if config.warm_start == 'block-identity':
        if K == K_prime:
            return ProximityMatrix.block_identity(K, K_prime).values
        logger.warning("K ≠ K′，无法使用块单位矩阵初始化，改用零矩阵")
    return np.zeros((problem.dim, problem.dim))


def _psd_cuts(relaxed: np.ndarray) -> List[PsdCut]:
    """松弛解每个显著负特征值对应一条割平面"""
    values, vectors = np.linalg.eigh(relaxed)
    threshold = -PSD_CUT_TOL * max(1.0, float(np.abs(relaxed).max()))
    return [PsdCut(vectors[:, k].copy()) for k in np.flatnonzero(values < threshold)]


def projection_violation(working_set: Sequence[MarginConstraint], qp_xi: np.ndarray, B: np.ndarray) -> float:
    """投影后的 B 在工作集上相对受限 QP 松弛量的最大违反量 1 - ξ_m/Ω - ψᵀb"""
    b = np.asarray(B, dtype=float).ravel()
    return max((1.0 - float(c.psi @ b) - qp_xi[c.anchor_index] / c.loss for c in working_set),
               default=0.0)


def learn_proximity(problem: LearningProblem, config: Optional[LearnConfig] = None) -> LearnResult:
    """列生成学习邻近矩阵 B

    从 B=0（或块单位矩阵）与空工作集开始，每轮：为每个锚点加入违反最严重的约束，
    求解受限 QP，投影到半正定锥，再由投影后的 B 重新计算松弛量。
    松弛解不是半正定时加入割平面。投影使工作集上的间隔比受限 QP 差出 cg_tol 以上时，
    改在半正定锥上直接求解工作集问题，所得 B 仍是某个松弛解的投影。
    没有违反量超过 cg_tol 的约束时收敛；达到 max_cg_iters 或无法继续推进时停止。

    Args:
        problem: 学习问题
        config: 学习参数

    Returns:
        LearnResult，converged 表示是否收敛

    Raises:
        QPNumericalFailure: 受限 QP 求解失败
    """
    config = config or LearnConfig()
    n = problem.n_anchors
    dim = problem.dim
    B = _initial_matrix(problem, config)
    xi = np.zeros(n)
    working: List[MarginConstraint] = []
    keys = set()
    cuts: List[PsdCut] = []
    history: List[float] = []
    converged = False
    iterations = 0

    for _ in range(config.max_cg_iters):
        found = [enumerate_violations(problem, B, xi[m], m, config.cg_tol) for m in range(n)]
        violated = [c for c in found if c is not None]
        if not violated:
            converged = True
            break
        new = [c for c in violated if c.key not in keys]
        if not new:
            logger.warning("列生成停滞：最严重违反约束均已在工作集中 (%d 条)", len(working))
            break

        working.extend(new)
        keys.update(c.key for c in new)
        iterations += 1

        b, qp_xi = solve_restricted_qp(working, config, n, dim, cuts)
        history.append(primal_objective(b, qp_xi, config.c_reg))
        relaxed = b.reshape(dim, dim)
        relaxed = 0.5 * (relaxed + relaxed.T)
        if config.psd_cuts:
            cuts.extend(_psd_cuts(relaxed))

        B = psd_project(relaxed).values
        lost = projection_violation(working, qp_xi, B)
        if lost > config.cg_tol:
            logger.debug("投影使工作集间隔下降 %.3e，在半正定锥上重新求解", lost)
            B, xi = solve_projected_qp(working, config, n, dim)
        else:
            xi = recompute_slacks(working, B, n)
        logger.debug("列生成第 %d 轮: 工作集 %d 条, 割平面 %d 条, 目标 %.6g",
                     iterations, len(working), len(cuts), history[-1])
    else:
        if config.max_cg_iters > 0:
            converged = not any(
                enumerate_violations(problem, B, xi[m], m, config.cg_tol) is not None for m in range(n)
            )

    if not converged:
        logger.info("列生成未收敛，迭代 %d 轮", iterations)
    return LearnResult(
        B=ProximityMatrix(B),
        xi=xi,
        active_constraints=working,
        converged=converged,
        iterations=iterations,
        objective_history=history,
        psd_cuts=cuts,
    )
