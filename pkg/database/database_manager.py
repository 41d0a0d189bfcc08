"""
数据库管理器模块
负责数据库连接、初始化和扫描任务/结果的存取
"""
import json
import logging
from datetime import datetime
from typing import Iterable, List, Optional, Sequence

from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker, Session

from .models import Base, SweepResult, SweepTask

logger = logging.getLogger(__name__)


class DatabaseManager:
    """数据库管理器，封装数据库操作"""

    def __init__(self, db_path: str):
        """初始化数据库管理器

        Args:
            db_path: 数据库文件路径，':memory:' 表示内存数据库
        """
        self.db_path = db_path
        self.engine = create_engine(f'sqlite:///{db_path}')
        self.SessionLocal = sessionmaker(bind=self.engine)

    def get_session(self) -> Session:
        """获取数据库会话

        Returns:
            SQLAlchemy Session 对象
        """
        return self.SessionLocal()

    def init_database(self) -> None:
        """初始化数据库，创建所有表

        Raises:
            Exception: 数据库初始化失败
        """
        try:
            Base.metadata.create_all(self.engine)
            logger.debug("数据库初始化完成: %s", self.db_path)
        except Exception as e:
            logger.error("数据库初始化失败: %s", e)
            raise

    def create_sweep_task(self,
                          session: Session,
                          task_id: str,
                          axis: str,
                          spec_json: str,
                          units: Sequence[Sequence[int]]) -> SweepTask:
        """创建扫描任务

        Args:
            session: 数据库会话
            task_id: 任务唯一标识
            axis: 扫描轴
            spec_json: 序列化的扫描参数
            units: 全部单元 [value_index, trial]

        Returns:
            SweepTask 对象

        Raises:
            Exception: 数据库操作失败
        """
        try:
            task = SweepTask(
                task_id=task_id,
                axis=axis,
                spec_json=spec_json,
                total_units=len(units),
                pending_units=json.dumps([list(u) for u in units]),
                completed_units=json.dumps([])
            )
            session.add(task)
            session.commit()
            return task
        except Exception as e:
            session.rollback()
            logger.error("创建扫描任务失败: %s", e)
            raise

    def update_sweep_task(self,
                          session: Session,
                          task: SweepTask,
                          completed_units: List[List[int]],
                          pending_units: List[List[int]]) -> None:
        """更新扫描任务状态

        Raises:
            Exception: 数据库操作失败
        """
        try:
            task.processed_units = len(completed_units)
            task.completed_units = json.dumps(completed_units)
            task.pending_units = json.dumps(pending_units)
            task.is_completed = len(pending_units) == 0
            task.updated_at = datetime.now()
            session.commit()
        except Exception as e:
            session.rollback()
            logger.error("更新扫描任务失败: %s", e)
            raise

    def add_results(self, session: Session, task_id: str, records: Iterable) -> None:
        """写入一批 ResultRecord

        Raises:
            Exception: 数据库操作失败
        """
        try:
            session.add_all([
                SweepResult(
                    task_id=task_id,
                    variant=r.variant,
                    axis=r.axis,
                    value_index=r.value_index,
                    value=float(r.value),
                    trial=r.trial,
                    accuracy=r.accuracy,
                    time_ms=r.time_ms,
                    seed=r.seed,
                    status=r.status,
                )
                for r in records
            ])
            session.commit()
        except Exception as e:
            session.rollback()
            logger.error("写入扫描结果失败: %s", e)
            raise

    def get_results(self, session: Session, task_id: str) -> List[SweepResult]:
        """查询任务的全部结果，按 (取值下标, 试验, 变体) 排序"""
        return (session.query(SweepResult)
                .filter_by(task_id=task_id)
                .order_by(SweepResult.value_index, SweepResult.trial, SweepResult.variant)
                .all())

    def get_task_by_id(self, session: Session, task_id: str) -> Optional[SweepTask]:
        """根据任务ID查询任务"""
        return session.query(SweepTask).filter_by(task_id=task_id).first()

    def get_all_tasks(self, session: Session) -> List[SweepTask]:
        return session.query(SweepTask).all()

    def get_pending_tasks(self, session: Session) -> List[SweepTask]:
        """获取未完成任务"""
        return session.query(SweepTask).filter_by(is_completed=False).all()
