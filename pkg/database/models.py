"""
数据库模型定义模块
定义基准扫描任务与结果的 ORM 数据模型
"""
from datetime import datetime
from sqlalchemy import Column, Integer, String, DateTime, Boolean, Text, Float
from sqlalchemy.orm import declarative_base

# 创建基类
Base = declarative_base()


class SweepTask(Base):
    """扫描任务记录表

    追踪一次参数扫描的执行进度，单元为 (取值下标, 试验序号)
    """
    __tablename__ = 'sweep_task'

    # 主键ID
    id = Column(Integer, primary_key=True, autoincrement=True)

    # 任务唯一标识
    task_id = Column(String, unique=True, nullable=False,
                     comment='任务唯一标识，格式: sweep_YYYYMMDD_HHMMSS')

    # 扫描轴
    axis = Column(String, nullable=False,
                  comment='deformation / outliers / density / anchors')

    # 扫描参数 (JSON格式)
    spec_json = Column(Text, nullable=False,
                       comment='SweepSpec 序列化结果，恢复任务时据此重建')

    # 总单元数
    total_units = Column(Integer, nullable=False,
                         comment='取值数 × 试验次数')

    # 已处理单元数
    processed_units = Column(Integer, default=0,
                             comment='已经完成的单元数')

    # 已完成单元列表 (JSON格式)
    completed_units = Column(Text,
                             comment='已完成单元 [value_index, trial] 列表，JSON格式存储')

    # 待处理单元列表 (JSON格式)
    pending_units = Column(Text,
                           comment='待处理单元 [value_index, trial] 列表，JSON格式存储')

    # 完成标记
    is_completed = Column(Boolean, default=False, nullable=False,
                          comment='任务是否完成标记')

    created_at = Column(DateTime, default=datetime.now,
                        comment='任务创建时间')

    updated_at = Column(DateTime, default=datetime.now, onupdate=datetime.now,
                        comment='任务状态最后更新时间')

    def __repr__(self):
        return (f"<SweepTask(task_id='{self.task_id}', axis='{self.axis}', "
                f"progress={self.processed_units}/{self.total_units}, "
                f"completed={self.is_completed})>")

    def get_progress_percentage(self) -> float:
        """获取任务进度百分比

        Returns:
            进度百分比 (0-100)
        """
        if self.total_units == 0:
            return 0.0
        return (self.processed_units / self.total_units) * 100


class SweepResult(Base):
    """扫描结果表，每行对应一条 ResultRecord"""
    __tablename__ = 'sweep_result'

    id = Column(Integer, primary_key=True, autoincrement=True)

    task_id = Column(String, nullable=False, index=True,
                     comment='所属扫描任务')

    variant = Column(String, nullable=False)
    axis = Column(String, nullable=False)
    value_index = Column(Integer, nullable=False)
    value = Column(Float, nullable=False)
    trial = Column(Integer, nullable=False)
    accuracy = Column(Float, nullable=False)
    time_ms = Column(Float, nullable=False)
    seed = Column(Integer, nullable=False,
                  comment='该单元派生种子的第一个 32 位字')
    status = Column(String, nullable=False, default='ok',
                    comment='ok 或 error:<异常类型>')

    def __repr__(self):
        return (f"<SweepResult(task_id='{self.task_id}', variant='{self.variant}', "
                f"value={self.value}, trial={self.trial}, accuracy={self.accuracy})>")
