"""
配置管理器模块
负责加载和管理应用程序配置，并转换为各服务的参数对象
"""
import copy
import logging
import os
from typing import Any, Dict, List, Optional

import yaml

from services.graph_solvers import SolverParams
from services.matching_service import MatchConfig
from services.proximity_learner import LearnConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG: Dict[str, Any] = {
    'spectral': {'tol': 1e-9, 'k': None},
    'heat': {'t': None},
    'weights': {'c_b': 8.0, 'c_ap': 3.0},
    'learning': {
        'c_reg': 10.0,
        'cg_tol': 1e-4,
        'max_cg_iters': 100,
        'qp_tol': 1e-6,
        'loss_mode': 'heat-distance',
        'warm_start': 'zero',
        'psd_cuts': True,
    },
    'solver': {
        'name': 'rrwm',
        'alpha': 0.2,
        'beta': 30.0,
        'sinkhorn_iters': 10,
        'conv_tol': 1e-6,
        'max_iters': 300,
        'affinity_sigma': None,
        'discretization': 'greedy',
    },
    'bench': {
        'n_in': 20,
        'n_out': 0,
        'trials': 50,
        'rho': 0.5,
        'sigma': 0.0,
        'anchor_count': 2,
        'workers': 1,
        'variants': ['i', 'ii', 'iii', 'iv', 'v', 'vi'],
        'grids': {
            'deformation': [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5],
            'outliers': [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
            'density': [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            'anchors': [2, 5, 10],
        },
        # 各轴固定的噪声：density 轴取较大的形变噪声，anchors 轴为点坐标噪声
        'axis_sigma': {'density': 0.5, 'anchors': 0.02},
    },
    'logging': {'level': 'WARNING'},
    'database': {'path': 'anchor_match.db'},
}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class ConfigManager:
    """配置管理器，负责加载和管理应用程序配置"""

    def __init__(self, config_path: Optional[str] = 'config.yaml'):
        """初始化配置管理器

        Args:
            config_path: 配置文件路径，默认为 'config.yaml'；None 表示只用内置默认值
        """
        self.config_path = config_path
        self._config: Dict[str, Any] = {}
        self.load_config()

    def load_config(self) -> None:
        """加载配置文件，缺失或格式错误时回退到默认配置"""
        if self.config_path is None:
            self._config = self._get_default_config()
            return
        try:
            with open(self.config_path, 'r', encoding='utf-8') as f:
                loaded = yaml.safe_load(f) or {}
            if not isinstance(loaded, dict):
                raise yaml.YAMLError("顶层必须是映射")
            self._config = _merge(self._get_default_config(), loaded)
            logger.debug("配置文件加载成功: %s", self.config_path)
        except FileNotFoundError:
            logger.info("找不到配置文件 %s，使用默认配置", self.config_path)
            self._config = self._get_default_config()
        except yaml.YAMLError as e:
            logger.warning("配置文件格式错误: %s，使用默认配置", e)
            self._config = self._get_default_config()

    def _get_default_config(self) -> Dict[str, Any]:
        """获取默认配置

        Returns:
            默认配置字典
        """
        return copy.deepcopy(DEFAULT_CONFIG)

    def get(self, key: str, default: Any = None) -> Any:
        """获取配置项

        Args:
            key: 配置项键名，支持点号分隔的嵌套键 (如 'learning.c_reg')
            default: 默认值

        Returns:
            配置项值
        """
        if '.' in key:
            keys = key.split('.')
            value = self._config
            for k in keys:
                if isinstance(value, dict) and k in value:
                    value = value[k]
                else:
                    return default
            return value
        return self._config.get(key, default)

    def get_spectral_tol(self) -> float:
        return float(self.get('spectral.tol', 1e-9))

    def get_log_level(self) -> str:
        """获取日志级别

        Returns:
            日志级别名称，环境变量 ANCHOR_MATCH_LOG_LEVEL 优先
        """
        level = os.getenv('ANCHOR_MATCH_LOG_LEVEL')
        if level:
            return level.upper()
        return str(self.get('logging.level', 'WARNING')).upper()

    def get_database_path(self) -> str:
        return self.get('database.path', 'anchor_match.db')

    def get_learn_config(self, **overrides) -> LearnConfig:
        """获取学习参数

        Args:
            **overrides: 覆盖配置的值（None 表示不覆盖）

        Returns:
            LearnConfig
        """
        values = dict(self.get('learning', {}))
        values.update({k: v for k, v in overrides.items() if v is not None})
        return LearnConfig(
            c_reg=float(values['c_reg']),
            cg_tol=float(values['cg_tol']),
            max_cg_iters=int(values['max_cg_iters']),
            qp_tol=float(values['qp_tol']),
            loss_mode=str(values['loss_mode']),
            warm_start=str(values['warm_start']),
            psd_cuts=bool(values['psd_cuts']),
        )

    def get_solver_params(self, **overrides) -> SolverParams:
        """获取求解参数"""
        values = dict(self.get('solver', {}))
        values.update({k: v for k, v in overrides.items() if v is not None})
        sigma = values.get('affinity_sigma')
        return SolverParams(
            alpha=float(values['alpha']),
            beta=float(values['beta']),
            sinkhorn_iters=int(values['sinkhorn_iters']),
            conv_tol=float(values['conv_tol']),
            max_iters=int(values['max_iters']),
            affinity_sigma=float(sigma) if sigma is not None else None,
            discretization=str(values['discretization']),
        )

    def get_solver_name(self) -> str:
        return self.get('solver.name', 'rrwm')

    def get_match_config(self, variant: str = 'vi', **overrides) -> MatchConfig:
        """组合出一次匹配所需的全部参数

        Args:
            variant: 变体编号
            **overrides: c_b、c_ap、solver、t、k、c_reg 等命令行覆盖值

        Returns:
            MatchConfig
        """
        def pick(name, key):
            value = overrides.get(name)
            return value if value is not None else self.get(key)

        return MatchConfig(
            variant=variant,
            c_b=float(pick('c_b', 'weights.c_b')),
            c_ap=float(pick('c_ap', 'weights.c_ap')),
            solver=pick('solver', 'solver.name'),
            solver_params=self.get_solver_params(),
            learn_config=self.get_learn_config(c_reg=overrides.get('c_reg')),
            t=pick('t', 'heat.t'),
            k=pick('k', 'spectral.k'),
        )

    def get_sweep_defaults(self) -> Dict[str, Any]:
        """获取基准实验默认参数"""
        return copy.deepcopy(self.get('bench', {}))

    def get_axis_grid(self, axis: str) -> List[float]:
        return list(self.get(f'bench.grids.{axis}', []))

    def get_axis_sigma(self, axis: str) -> float:
        return float(self.get(f'bench.axis_sigma.{axis}', self.get('bench.sigma', 0.0)))
