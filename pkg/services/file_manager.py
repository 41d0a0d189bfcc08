"""
文件管理器模块
负责把图、锚点、匹配结果、邻近矩阵与实验结果写成 JSON / CSV
"""
import csv
import json
import logging
import os
import sys
from contextlib import nullcontext
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO

import numpy as np

from graphs.anchors import AnchorSet
from graphs.weighted_graph import WeightedGraph
from services.benchmark_runner import RESULT_COLUMNS, ResultRecord

logger = logging.getLogger(__name__)


def graph_to_dict(graph: WeightedGraph) -> dict:
    return graph.to_dict()


def anchors_to_list(anchors: AnchorSet) -> List[List[int]]:
    return [[i, a] for i, a in anchors.pairs]


class FileManager:
    """文件管理器，封装输出文件的写入

    path 为 None 或 '-' 时写到标准输出。
    """

    def __init__(self, stdout: Optional[TextIO] = None):
        """初始化文件管理器

        Args:
            stdout: 替代标准输出的流，测试时使用
        """
        self.stdout = stdout

    def _open(self, path: Optional[str]):
        if path in (None, '-'):
            return nullcontext(self.stdout or sys.stdout)
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        return open(path, 'w', encoding='utf-8', newline='')

    def write_json(self, data: Any, path: Optional[str] = None) -> None:
        """写 JSON（缩进 2，键保持插入顺序）"""
        with self._open(path) as f:
            json.dump(data, f, ensure_ascii=False, indent=2)
            f.write('\n')
        if path not in (None, '-'):
            logger.info("已写入 %s", path)

    def _write_rows(self, header: Sequence[str], rows: Iterable[Sequence], path: Optional[str]) -> None:
        with self._open(path) as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(header)
            writer.writerows(rows)
        if path not in (None, '-'):
            logger.info("已写入 %s", path)

    def write_results_csv(self, records: Sequence[ResultRecord], path: Optional[str] = None) -> None:
        """列固定为 variant,axis,value,trial,accuracy,time_ms,seed,status"""
        self._write_rows(RESULT_COLUMNS, (r.row() for r in records), path)

    def write_summary_csv(self, summary: Sequence[Dict], path: Optional[str] = None) -> None:
        header = ['variant', 'value', 'mean_accuracy', 'mean_time_ms', 'n_ok', 'n_failed']
        self._write_rows(header, ([row[k] for k in header] for row in summary), path)

    def write_sequence_csv(self, scores: Dict[int, float], path: Optional[str] = None) -> None:
        self._write_rows(['frame', 'mean_accuracy'], sorted(scores.items()), path)

    def write_signatures_csv(self, columns: Dict[str, np.ndarray], path: Optional[str] = None) -> None:
        """每个节点一行；columns 的每项为 n×m 数组，展开成 name_0 … name_{m-1} 列"""
        header = ['node']
        blocks = []
        for name, values in columns.items():
            values = np.atleast_2d(np.asarray(values, dtype=float))
            header.extend(f"{name}_{k}" for k in range(values.shape[1]))
            blocks.append(values)
        table = np.hstack(blocks) if blocks else np.zeros((0, 0))
        self._write_rows(header, ([u] + [repr(float(x)) for x in row] for u, row in enumerate(table)), path)

