"""
基准实验模块
参数扫描（形变噪声、外点数、边密度、锚点数）、准确率统计与点序列评估
"""
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from multiprocessing import Pool
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from graphs.anchors import AnchorSet
from services.compatibility import VARIANTS
from services.graph_solvers import Assignment, SolverParams
from services.matching_service import MatchConfig, match
from services.proximity_learner import LearnConfig
from services.synthetic_data import (
    GroundTruth, SyntheticSpec, generate_pair, point_pair, points_to_graph, select_anchors,
)
from utils.errors import InvalidSpec

logger = logging.getLogger(__name__)

AXES = ('deformation', 'outliers', 'density', 'anchors')
SOURCES = ('graphs', 'points')
RESULT_COLUMNS = ('variant', 'axis', 'value', 'trial', 'accuracy', 'time_ms', 'seed', 'status')

Unit = Tuple[int, int]


@dataclass(frozen=True)
class SweepSpec:
    """一次参数扫描

    axis 指定被扫描的参数，其余参数取固定值；source 为 None 时，
    anchors 轴使用合成点序列，其余轴使用随机图。
    """
    axis: str
    values: Tuple[float, ...]
    trials: int = 50
    variants: Tuple[str, ...] = VARIANTS
    anchor_count: int = 2
    n_in: int = 20
    n_out: int = 0
    rho: float = 0.5
    sigma: float = 0.0
    seed: int = 0
    source: Optional[str] = None
    rotation_range: float = math.pi / 6
    workers: int = 1
    match_config: MatchConfig = field(default_factory=MatchConfig)

    def __post_init__(self):
        if self.axis not in AXES:
            raise InvalidSpec(f"未知的扫描轴: {self.axis}，可选 {AXES}")
        if not self.values:
            raise InvalidSpec("扫描取值不能为空")
        if self.trials < 1:
            raise InvalidSpec(f"试验次数至少为 1，实际为 {self.trials}")
        if not self.variants or any(v not in VARIANTS for v in self.variants):
            raise InvalidSpec(f"变体必须取自 {VARIANTS}，实际为 {self.variants}")
        if self.source is not None and self.source not in SOURCES:
            raise InvalidSpec(f"未知的数据来源: {self.source}，可选 {SOURCES}")
        if self.workers < 1:
            raise InvalidSpec(f"workers 至少为 1，实际为 {self.workers}")
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))
        object.__setattr__(self, 'variants', tuple(self.variants))

    @property
    def resolved_source(self) -> str:
        if self.source:
            return self.source
        return 'points' if self.axis == 'anchors' else 'graphs'

    def units(self) -> List[Unit]:
        return [(vi, trial) for vi in range(len(self.values)) for trial in range(self.trials)]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> 'SweepSpec':
        data = json.loads(text)
        mc = data.pop('match_config')
        mc['solver_params'] = SolverParams(**mc['solver_params'])
        mc['learn_config'] = LearnConfig(**mc['learn_config'])
        data['values'] = tuple(data['values'])
        data['variants'] = tuple(data['variants'])
        return cls(match_config=MatchConfig(**mc), **data)


@dataclass(frozen=True)
class ResultRecord:
    """一条结果：某个变体在某个取值、某次试验上的准确率与耗时"""
    variant: str
    axis: str
    value: float
    trial: int
    accuracy: float
    time_ms: float
    seed: int
    status: str = 'ok'
    value_index: int = 0

    @property
    def ok(self) -> bool:
        return self.status == 'ok'

    def row(self) -> list:
        return [self.variant, self.axis, self.value, self.trial,
                self.accuracy, self.time_ms, self.seed, self.status]


def accuracy(assignment: Assignment, truth: GroundTruth, anchors: Optional[AnchorSet]) -> float:
    """非锚点内点中匹配到真实对应的比例；外点永远不算正确

    没有非锚点内点时返回 1.0。
    """
    anchored = set(anchors.sources) if anchors is not None else set()
    targets = [(i, a) for i, a in truth.inlier_map if i not in anchored]
    if not targets:
        return 1.0
    assigned = assignment.as_dict()
    correct = sum(1 for i, a in targets if assigned.get(i) == a)
    return correct / len(targets)


def unit_seed(seed: int, value_index: int, trial: int, stream: int = 0) -> int:
    """由全局种子派生单元种子，各单元相互独立"""
    return int(np.random.SeedSequence([seed, value_index, trial, stream]).generate_state(1)[0])


def _unit_pair(spec: SweepSpec, value: float, seed: int):
    sigma, rho, n_out = spec.sigma, spec.rho, spec.n_out
    if spec.axis == 'deformation':
        sigma = value
    elif spec.axis == 'outliers':
        n_out = int(value)
    elif spec.axis == 'density':
        rho = value
    if spec.resolved_source == 'points':
        return point_pair(spec.n_in, sigma, seed, spec.rotation_range)
    return generate_pair(SyntheticSpec(spec.n_in, n_out, n_out, rho, sigma, seed))


def _failed(spec: SweepSpec, vi: int, trial: int, seed: int, error: Exception,
            variants: Iterable[str]) -> List[ResultRecord]:
    return [ResultRecord(v, spec.axis, spec.values[vi], trial, 0.0, 0.0, seed,
                         f"error:{type(error).__name__}", vi) for v in variants]


def run_unit(spec: SweepSpec, unit: Unit) -> List[ResultRecord]:
    """执行一个单元：生成图对、抽取锚点，对每个变体匹配并记录准确率

    同一单元内所有变体使用同一图对和同一组锚点；失败记录为 error 行，不会中断扫描。
    """
    vi, trial = unit
    value = spec.values[vi]
    seed = unit_seed(spec.seed, vi, trial)
    count = int(value) if spec.axis == 'anchors' else spec.anchor_count
    try:
        graph, graph_prime, truth = _unit_pair(spec, value, seed)
        anchors = select_anchors(truth, count, unit_seed(spec.seed, vi, trial, 1))
    except Exception as e:
        logger.warning("单元 (%s=%g, 试验 %d) 生成失败: %s", spec.axis, value, trial, e)
        return _failed(spec, vi, trial, seed, e, spec.variants)

    records = []
    for variant in spec.variants:
        started = time.perf_counter()
        try:
            assignment = match(graph, graph_prime, anchors, variant, spec.match_config)
        except Exception as e:
            logger.warning("单元 (%s=%g, 试验 %d) 变体 %s 失败: %s", spec.axis, value, trial, variant, e)
            records.extend(_failed(spec, vi, trial, seed, e, [variant]))
            continue
        elapsed = (time.perf_counter() - started) * 1000.0
        records.append(ResultRecord(variant, spec.axis, value, trial,
                                    accuracy(assignment, truth, anchors), elapsed, seed, 'ok', vi))
    return records


def _run_unit_packed(args) -> Tuple[Unit, List[ResultRecord]]:
    spec, unit = args
    return unit, run_unit(spec, unit)


def sort_records(spec: SweepSpec, records: Iterable[ResultRecord]) -> List[ResultRecord]:
    """按 (取值下标, 试验, 扫描参数中的变体顺序) 排序"""
    order = {v: k for k, v in enumerate(spec.variants)}
    return sorted(records, key=lambda r: (r.value_index, r.trial, order.get(r.variant, len(order))))


def run_sweep(spec: SweepSpec,
              units: Optional[Sequence[Unit]] = None,
              on_unit_done: Optional[Callable[[Unit, List[ResultRecord]], None]] = None) -> List[ResultRecord]:
    """执行参数扫描

    workers > 1 时用进程池并行；结果按 (取值下标, 试验, 变体) 排序，与调度顺序无关。

    Args:
        spec: 扫描参数
        units: 只执行这些单元（用于恢复任务），默认全部
        on_unit_done: 每个单元完成后的回调，在主进程中调用

    Returns:
        ResultRecord 列表
    """
    units = list(units) if units is not None else spec.units()
    records: List[ResultRecord] = []
    logger.info("扫描 %s: %d 个取值 × %d 次试验 × %d 个变体, 待执行单元 %d",
                spec.axis, len(spec.values), spec.trials, len(spec.variants), len(units))

    def collect(unit, unit_records):
        records.extend(unit_records)
        if on_unit_done is not None:
            on_unit_done(unit, unit_records)

    if spec.workers > 1 and len(units) > 1:
        with Pool(processes=spec.workers) as pool:
            for unit, unit_records in pool.imap_unordered(_run_unit_packed, [(spec, u) for u in units]):
                collect(unit, unit_records)
    else:
        for unit in units:
            collect(unit, run_unit(spec, unit))

    return sort_records(spec, records)


def summarize(records: Sequence[ResultRecord]) -> List[Dict]:
    """按 (变体, 取值) 汇总平均准确率与耗时，失败行不计入均值"""
    groups: Dict[Tuple[int, float, str], List[ResultRecord]] = {}
    for r in records:
        groups.setdefault((r.value_index, r.value, r.variant), []).append(r)

    summary = []
    for (vi, value, variant), rows in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][2])):
        ok = [r for r in rows if r.ok]
        summary.append({
            'variant': variant,
            'value': value,
            'mean_accuracy': float(np.mean([r.accuracy for r in ok])) if ok else float('nan'),
            'mean_time_ms': float(np.mean([r.time_ms for r in ok])) if ok else float('nan'),
            'n_ok': len(ok),
            'n_failed': len(rows) - len(ok),
        })
    return summary


def sequence_accuracy(frames: Sequence[np.ndarray],
                      variant: str = 'vi',
                      config: Optional[MatchConfig] = None,
                      anchor_count: int = 2,
                      seed: int = 0,
                      pairs: Optional[Sequence[Tuple[int, int]]] = None) -> Dict[int, float]:
    """点序列评估：每帧与其余各帧匹配，返回每帧的平均准确率

    对应关系按点的下标；G′ 节点随机重排，锚点从对应中随机抽取。

    Args:
        frames: 每帧一个点集，各帧点数相同
        variant: 变体编号
        config: 匹配参数
        anchor_count: 锚点数
        seed: 随机种子
        pairs: 只评估这些 (帧, 帧) 组合，默认全部有序对

    Returns:
        {帧下标: 平均准确率}，没有参与评估的帧不出现
    """
    config = replace(config or MatchConfig(), variant=variant)
    n_frames = len(frames)
    if pairs is None:
        pairs = [(f, g) for f in range(n_frames) for g in range(n_frames) if f != g]
    graphs = [points_to_graph(points) for points in frames]

    scores: Dict[int, List[float]] = {}
    for f, g in pairs:
        n_points = graphs[g].n
        rng = np.random.default_rng(unit_seed(seed, f, g))
        perm = rng.permutation(n_points)
        truth = GroundTruth(inlier_map=tuple((i, int(perm[i])) for i in range(n_points)))
        anchors = select_anchors(truth, anchor_count, unit_seed(seed, f, g, 1))
        assignment = match(graphs[f], graphs[g].permuted(perm.tolist()), anchors, variant, config)
        score = accuracy(assignment, truth, anchors)
        scores.setdefault(f, []).append(score)
        logger.debug("帧 %d ↔ %d: 准确率 %.3f", f, g, score)
    return {f: float(np.mean(v)) for f, v in sorted(scores.items())}
