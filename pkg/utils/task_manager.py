"""
任务管理器模块
负责创建和管理扫描任务，追踪进度并支持中断后恢复
"""
import json
import logging
from typing import List, Optional, Sequence, Tuple

from sqlalchemy.orm import Session

from database.database_manager import DatabaseManager
from database.models import SweepTask

logger = logging.getLogger(__name__)

Unit = Tuple[int, int]


class SweepTaskManager:
    """扫描任务管理器"""

    def __init__(self, db_manager: DatabaseManager):
        """初始化任务管理器

        Args:
            db_manager: 数据库管理器实例
        """
        self.db_manager = db_manager

    def create_task(self,
                    session: Session,
                    task_id: str,
                    axis: str,
                    spec_json: str,
                    units: Sequence[Unit]) -> SweepTask:
        """创建扫描任务

        Args:
            session: 数据库会话
            task_id: 任务唯一标识
            axis: 扫描轴
            spec_json: 序列化的扫描参数
            units: 待处理单元 (value_index, trial)

        Returns:
            SweepTask 对象

        Raises:
            ValueError: 参数验证失败
        """
        if not task_id:
            raise ValueError("任务ID不能为空")
        if not units:
            raise ValueError("单元列表不能为空")
        return self.db_manager.create_sweep_task(session, task_id, axis, spec_json, units)

    def get_task(self, session: Session, task_id: str) -> Optional[SweepTask]:
        return self.db_manager.get_task_by_id(session, task_id)

    def pending_units(self, task: SweepTask) -> List[Unit]:
        return [tuple(u) for u in json.loads(task.pending_units or '[]')]

    def completed_units(self, task: SweepTask) -> List[Unit]:
        return [tuple(u) for u in json.loads(task.completed_units or '[]')]

    def update_task_progress(self,
                             session: Session,
                             task_id: str,
                             finished: Sequence[Unit]) -> Optional[SweepTask]:
        """把一批单元从待处理移到已完成

        Returns:
            更新后的 SweepTask，任务不存在时返回 None
        """
        task = self.get_task(session, task_id)
        if not task:
            logger.warning("任务不存在: %s", task_id)
            return None
        done = set(finished)
        completed = self.completed_units(task) + [u for u in finished]
        pending = [u for u in self.pending_units(task) if u not in done]
        self.db_manager.update_sweep_task(session, task, [list(u) for u in completed], [list(u) for u in pending])
        return task

    def get_task_progress(self, session: Session, task_id: str) -> Optional[dict]:
        """获取任务进度信息

        Returns:
            进度信息字典，任务不存在时返回 None
        """
        task = self.get_task(session, task_id)
        if not task:
            return None
        return {
            'task_id': task.task_id,
            'axis': task.axis,
            'total_units': task.total_units,
            'processed_units': task.processed_units,
            'pending_units': len(self.pending_units(task)),
            'percentage': task.get_progress_percentage(),
            'is_completed': task.is_completed,
        }

    def resume_task(self, session: Session, task_id: str) -> Optional[SweepTask]:
        """恢复未完成的任务

        Returns:
            可恢复的任务，不存在、已完成或没有待处理单元时返回 None
        """
        task = self.get_task(session, task_id)
        if not task:
            logger.warning("任务不存在: %s", task_id)
            return None
        if task.is_completed or not self.pending_units(task):
            logger.info("任务已完成: %s", task_id)
            return None
        logger.info("恢复任务: %s, 待处理单元数: %d", task_id, len(self.pending_units(task)))
        return task
