"""
匹配服务模块
完整的匹配流水线：谱分解、节点特征、（按需）学习 B、锚点剖面、构建 W、求解与离散化
"""
import logging
import time
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

from graphs.anchors import AnchorSet
from graphs.weighted_graph import WeightedGraph
from services.compatibility import CompatibilityMatrix, VariantConfig, build_compatibility
from services.graph_solvers import Assignment, SolverParams, solve
from services.pair_context import PairContext
from services.proximity_learner import LearnConfig, LearnResult, LearningProblem, learn_proximity
from services.signature_service import ProximityMatrix
from utils.errors import MissingAnchors

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MatchConfig:
    """一次匹配的全部参数"""
    variant: str = 'vi'
    c_b: Optional[float] = None
    c_ap: Optional[float] = None
    solver: str = 'rrwm'
    solver_params: SolverParams = field(default_factory=SolverParams)
    learn_config: LearnConfig = field(default_factory=LearnConfig)
    t: Optional[float] = None
    k: Optional[int] = None
    k_prime: Optional[int] = None

    def variant_config(self) -> VariantConfig:
        return VariantConfig.from_id(self.variant, self.c_b, self.c_ap)


@dataclass(eq=False)
class MatchOutcome:
    """匹配结果及中间量"""
    assignment: Assignment
    compatibility: Optional[CompatibilityMatrix] = None
    learned: Optional[LearnResult] = None
    context: Optional[PairContext] = None
    timings_ms: Dict[str, float] = field(default_factory=dict)


class MatchingService:
    """匹配服务，按配置编排各阶段"""

    def __init__(self, config: Optional[MatchConfig] = None):
        """初始化匹配服务

        Args:
            config: 匹配参数，默认变体 vi + RRWM
        """
        self.config = config or MatchConfig()

    def run(self,
            graph: WeightedGraph,
            graph_prime: WeightedGraph,
            anchors: Optional[AnchorSet],
            proximity: Optional[ProximityMatrix] = None) -> MatchOutcome:
        """执行完整匹配流水线

        锚点不参与匹配；非锚点集合为空时返回空匹配。

        Args:
            graph: 图 G
            graph_prime: 图 G′
            anchors: 锚点对应
            proximity: 已学习的 B，提供时跳过学习

        Returns:
            MatchOutcome

        Raises:
            MissingAnchors: 变体需要锚点（学习 B 或锚点剖面）但未提供
        """
        variant = self.config.variant_config()
        needs_learning = variant.needs_B and proximity is None
        if anchors is None and (needs_learning or variant.needs_anchors):
            raise MissingAnchors(f"变体 {variant.variant_id} 需要锚点")
        timings: Dict[str, float] = {}

        started = time.perf_counter()
        context = PairContext.build(graph, graph_prime, anchors,
                                    k=self.config.k, k_prime=self.config.k_prime, t=self.config.t)
        timings['spectral'] = (time.perf_counter() - started) * 1000.0

        anchored = len(anchors) if anchors is not None else 0
        if graph.n == anchored or graph_prime.n == anchored:
            logger.info("非锚点集合为空，返回空匹配")
            return MatchOutcome(Assignment(()), context=context, timings_ms=timings)

        learned = None
        if needs_learning:
            started = time.perf_counter()
            problem = LearningProblem.from_context(context, anchors, self.config.learn_config)
            learned = learn_proximity(problem, self.config.learn_config)
            timings['learn'] = (time.perf_counter() - started) * 1000.0
            if not learned.converged:
                logger.warning("邻近矩阵学习未收敛（%d 轮），继续使用当前 B", learned.iterations)

        started = time.perf_counter()
        W = build_compatibility(graph, graph_prime, anchors, variant,
                                proximity=learned.B if learned else proximity,
                                params=self.config.solver_params, context=context)
        timings['compatibility'] = (time.perf_counter() - started) * 1000.0

        started = time.perf_counter()
        assignment = solve(W, self.config.solver, self.config.solver_params)
        timings['solve'] = (time.perf_counter() - started) * 1000.0
        logger.debug("变体 %s 匹配完成: %d 对, 目标值 %.6g", variant.variant_id, len(assignment), assignment.objective)

        return MatchOutcome(assignment, W, learned, context, timings)


def match(graph: WeightedGraph,
          graph_prime: WeightedGraph,
          anchors: Optional[AnchorSet],
          variant: str = 'vi',
          config: Optional[MatchConfig] = None) -> Assignment:
    """匹配两个图，返回非锚点节点之间的 Assignment"""
    config = config or MatchConfig()
    if config.variant != variant:
        config = replace(config, variant=variant)
    return MatchingService(config).run(graph, graph_prime, anchors).assignment
