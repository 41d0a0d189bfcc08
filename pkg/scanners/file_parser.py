"""
输入文件解析模块
负责读取图 JSON、锚点 JSON、邻近矩阵 JSON 与点集 CSV，并校验内容
"""
import csv
import json
import logging
import os
import re
from typing import Any, Dict

import numpy as np

from graphs.anchors import AnchorSet
from graphs.weighted_graph import WeightedGraph, build_graph
from services.signature_service import ProximityMatrix
from utils.errors import (
    AnchorMatchError, DuplicateAnchor, EmptyAnchorSet, GraphError, InconsistentPointSets,
    ParseError, ValidationError,
)

logger = logging.getLogger(__name__)

POINTS_HEADER = ['frame', 'point', 'x', 'y']
EDGE_PATTERN = re.compile(r"\[\s*-?[\d.]+\s*,\s*-?[\d.]+\s*,")


def check_file_access(path: str) -> None:
    """检查文件是否存在且可读

    Raises:
        FileNotFoundError: 文件不存在
        PermissionError: 无读取权限
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"文件不存在: {path}")
    if not os.access(path, os.R_OK):
        raise PermissionError(f"无法读取文件: {path}")


def _load_json(path: str) -> Any:
    check_file_access(path)
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}:{e.colno}: JSON 格式错误: {e.msg}") from e


def _edge_line(path: str, index: int) -> str:
    """定位第 index 条边所在的行，用于错误提示"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError:
        return path
    for k, found in enumerate(EDGE_PATTERN.finditer(text)):
        if k == index:
            lineno = text.count('\n', 0, found.start()) + 1
            return f"{path}:{lineno}"
    return path


def parse_graph_json(path: str) -> WeightedGraph:
    """读取 {"n": 整数, "edges": [[i, j, w], ...]} 格式的图

    Raises:
        ParseError: 格式错误或缺少字段
        ValidationError: 边不合法（越界、自环、非正权重、重复）
    """
    data = _load_json(path)
    if not isinstance(data, dict) or 'n' not in data:
        raise ParseError(f"{path}: 缺少字段 \"n\"")
    if not isinstance(data['n'], int) or isinstance(data['n'], bool):
        raise ParseError(f"{path}: \"n\" 必须是整数")
    edges = data.get('edges', [])
    if not isinstance(edges, list):
        raise ParseError(f"{path}: \"edges\" 必须是数组")
    for k, edge in enumerate(edges):
        if not (isinstance(edge, list) and len(edge) == 3
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in edge)):
            raise ParseError(f"{_edge_line(path, k)}: edges[{k}] 必须是 [i, j, w]")
        if float(edge[0]) != int(edge[0]) or float(edge[1]) != int(edge[1]):
            raise ParseError(f"{_edge_line(path, k)}: edges[{k}] 的节点编号必须是整数")

    for k, edge in enumerate(edges):
        try:
            build_graph(data['n'], [edge])
        except GraphError as e:
            raise ValidationError(f"{_edge_line(path, k)}: edges[{k}]: {e}") from e
    try:
        return build_graph(data['n'], edges)
    except GraphError as e:
        raise ValidationError(f"{path}: {e}") from e


def parse_anchors_json(path: str) -> AnchorSet:
    """读取 [[i, a], ...] 格式的锚点

    Raises:
        ParseError: 格式错误
        DuplicateAnchor: 某一侧节点重复
        EmptyAnchorSet: 锚点为空
    """
    data = _load_json(path)
    if not isinstance(data, list):
        raise ParseError(f"{path}: 锚点文件必须是 [i, a] 对的数组")
    for k, pair in enumerate(data):
        if not (isinstance(pair, list) and len(pair) == 2
                and all(isinstance(x, int) and not isinstance(x, bool) for x in pair)):
            raise ParseError(f"{path}: 第 {k} 个锚点必须是两个整数 [i, a]")
    try:
        return AnchorSet.from_pairs(data)
    except (DuplicateAnchor, EmptyAnchorSet):
        raise
    except AnchorMatchError as e:
        raise ValidationError(f"{path}: {e}") from e


def parse_proximity_json(path: str) -> ProximityMatrix:
    """读取 learn 子命令输出的 {"dim": d, "values": [...]}

    Raises:
        ParseError: 缺少字段
        ValidationError: 维度不符或矩阵不是对称半正定的
    """
    data = _load_json(path)
    if not isinstance(data, dict) or 'dim' not in data or 'values' not in data:
        raise ParseError(f"{path}: 邻近矩阵文件需要 \"dim\" 与 \"values\" 字段")
    try:
        return ProximityMatrix.from_dict(data)
    except (AnchorMatchError, TypeError, ValueError) as e:
        raise ValidationError(f"{path}: {e}") from e


def parse_points_csv(path: str) -> Dict[int, np.ndarray]:
    """读取表头为 frame,point,x,y 的点集 CSV

    Returns:
        {帧编号: 按点编号排序的 N×2 坐标数组}

    Raises:
        ParseError: 文件为空、表头不符或字段无法解析
        InconsistentPointSets: 各帧的点编号集合不一致
    """
    check_file_access(path)
    with open(path, 'r', encoding='utf-8', newline='') as f:
        rows = [(lineno, row) for lineno, row in enumerate(csv.reader(f), start=1)
                if any(cell.strip() for cell in row)]
    if not rows:
        raise ParseError(f"{path}: 文件为空")
    header_lineno, header_row = rows[0]
    header = [cell.strip() for cell in header_row]
    if header != POINTS_HEADER:
        raise ParseError(f"{path}:{header_lineno}: 表头必须为 {','.join(POINTS_HEADER)}，实际为 {','.join(header)}")

    frames: Dict[int, Dict[int, tuple]] = {}
    for lineno, row in rows[1:]:
        if len(row) != 4:
            raise ParseError(f"{path}:{lineno}: 需要 4 列，实际为 {len(row)} 列")
        try:
            frame, point = int(row[0]), int(row[1])
            x, y = float(row[2]), float(row[3])
        except ValueError as e:
            raise ParseError(f"{path}:{lineno}: 无法解析: {e}") from e
        points = frames.setdefault(frame, {})
        if point in points:
            raise ParseError(f"{path}:{lineno}: 帧 {frame} 中点 {point} 重复")
        points[point] = (x, y)
    if not frames:
        raise ParseError(f"{path}: 没有数据行")

    reference = None
    for frame in sorted(frames):
        ids = set(frames[frame])
        if reference is None:
            reference = ids
        elif ids != reference:
            missing = sorted(reference.symmetric_difference(ids))
            raise InconsistentPointSets(f"{path}: 帧 {frame} 的点编号与其他帧不一致: {missing}")

    logger.debug("读取 %d 帧, 每帧 %d 个点", len(frames), len(reference))
    return {frame: np.array([frames[frame][p] for p in sorted(reference)], dtype=float)
            for frame in sorted(frames)}
