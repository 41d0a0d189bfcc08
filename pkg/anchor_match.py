"""
Anchor Match 主程序
基于锚点学习邻近矩阵的图匹配工具：主控制器和命令行入口
"""
import argparse
import logging
import sys
from datetime import datetime
from typing import Dict, List, Optional, Sequence

import numpy as np

from config.config_manager import ConfigManager
from database.database_manager import DatabaseManager
from graphs.spectral import default_diffusion_time, spectral_decomposition
from graphs.weighted_graph import laplacian
from scanners.file_parser import (
    parse_anchors_json, parse_graph_json, parse_points_csv, parse_proximity_json,
)
from services.benchmark_runner import (
    AXES, ResultRecord, SweepSpec, run_sweep, sequence_accuracy, sort_records, summarize,
)
from services.compatibility import VARIANTS
from services.file_manager import FileManager
from services.graph_solvers import SOLVERS
from services.matching_service import MatchingService
from services.pair_context import PairContext
from services.proximity_learner import LearningProblem, learn_proximity
from services.signature_service import hks, node_features, wks, wks_default_sigma, wks_time_grid
from services.synthetic_data import points_to_graph
from utils.errors import AnchorMatchError, UsageError
from utils.task_manager import SweepTaskManager

logger = logging.getLogger('anchor_match')


class MatchController:
    """Anchor Match 主控制器

    负责协调各个组件，执行各子命令
    """

    def __init__(self,
                 config_manager: ConfigManager,
                 file_manager: FileManager,
                 database_manager: Optional[DatabaseManager] = None,
                 task_manager: Optional[SweepTaskManager] = None,
                 progress=None):
        """初始化主控制器

        Args:
            config_manager: 配置管理器
            file_manager: 输出文件管理器
            database_manager: 数据库管理器（bench --db / --resume 时需要）
            task_manager: 扫描任务管理器
            progress: 进度信息输出流，默认标准错误
        """
        self.config_manager = config_manager
        self.file_manager = file_manager
        self.database_manager = database_manager
        self.task_manager = task_manager
        self.progress = progress or sys.stderr

    def _say(self, message: str) -> None:
        print(message, file=self.progress)

    def dispatch(self, args: argparse.Namespace) -> None:
        handlers = {
            'match': self.run_match,
            'learn': self.run_learn,
            'bench': self.run_bench,
            'signatures': self.run_signatures,
            'sequence': self.run_sequence,
        }
        handlers[args.command](args)

    def _match_config(self, args: argparse.Namespace):
        return self.config_manager.get_match_config(
            args.variant or 'vi',
            c_b=args.c_b, c_ap=args.c_ap, solver=args.solver, t=args.t, k=args.k, c_reg=args.c_reg,
        )

    def _load_pair(self, args: argparse.Namespace):
        if args.points:
            if args.graphs or not args.frames:
                raise UsageError("--points 需要配合 --frames F1 F2 使用，且不能同时给出图文件")
            frames = parse_points_csv(args.points)
            missing = [f for f in args.frames if f not in frames]
            if missing:
                raise UsageError(f"点集文件中没有帧: {missing}")
            return points_to_graph(frames[args.frames[0]]), points_to_graph(frames[args.frames[1]])
        if len(args.graphs) != 2:
            raise UsageError("需要两个图文件，或 --points 与 --frames")
        return parse_graph_json(args.graphs[0]), parse_graph_json(args.graphs[1])

    def run_match(self, args: argparse.Namespace) -> None:
        """match 子命令：输出匹配结果 JSON"""
        graph, graph_prime = self._load_pair(args)
        anchors = parse_anchors_json(args.anchors) if args.anchors else None
        proximity = parse_proximity_json(args.proximity) if args.proximity else None
        service = MatchingService(self._match_config(args))
        outcome = service.run(graph, graph_prime, anchors, proximity)
        logger.info("匹配完成: %d 对, 目标值 %.6g, 耗时 %s", len(outcome.assignment),
                    outcome.assignment.objective,
                    {k: round(v, 1) for k, v in outcome.timings_ms.items()})
        self.file_manager.write_json(outcome.assignment.to_dict(), args.out)

    def run_learn(self, args: argparse.Namespace) -> None:
        """learn 子命令：输出学习得到的 B"""
        if not args.anchors:
            raise UsageError("learn 需要 --anchors")
        graph, graph_prime = self._load_pair(args)
        anchors = parse_anchors_json(args.anchors)
        config = self._match_config(args)
        context = PairContext.build(graph, graph_prime, anchors, k=config.k, t=config.t,
                                    tol=self.config_manager.get_spectral_tol())
        result = learn_proximity(LearningProblem.from_context(context, anchors, config.learn_config),
                                 config.learn_config)
        if not result.converged:
            logger.warning("学习未收敛: 迭代 %d 轮, 工作集 %d 条", result.iterations, len(result.active_constraints))
        self.file_manager.write_json(result.B.to_dict(), args.out)

    def run_signatures(self, args: argparse.Namespace) -> None:
        """signatures 子命令：每个节点的 θ、HKS 与 WKS"""
        graph = parse_graph_json(args.graph)
        spec = spectral_decomposition(laplacian(graph), self.config_manager.get_spectral_tol())
        K = graph.n if args.k is None else args.k
        columns: Dict[str, np.ndarray] = {'theta': node_features(spec, K).theta}
        if graph.edge_count:
            times = args.times or (default_diffusion_time(spec) * np.array([0.25, 0.5, 1.0, 2.0, 4.0])).tolist()
            grid = wks_time_grid([spec])
            columns['hks'] = hks(spec, times)
            columns['wks'] = wks(spec, grid, wks_default_sigma(grid))
        elif args.times:
            columns['hks'] = hks(spec, args.times)
        self.file_manager.write_signatures_csv(columns, args.out)

    def run_sequence(self, args: argparse.Namespace) -> None:
        """sequence 子命令：点序列上每帧与其余帧匹配的平均准确率"""
        frames = parse_points_csv(args.points)
        frame_ids = sorted(frames) if not args.frames else list(args.frames)
        missing = [f for f in frame_ids if f not in frames]
        if missing:
            raise UsageError(f"点集文件中没有帧: {missing}")
        anchor_count = _given(args.anchor_count, self.config_manager.get('bench.anchor_count', 2))
        scores = sequence_accuracy([frames[f] for f in frame_ids], args.variant or 'vi',
                                   self._match_config(args), anchor_count, _given(args.seed, 0))
        self.file_manager.write_sequence_csv({frame_ids[k]: v for k, v in scores.items()}, args.out)

    def _sweep_spec(self, args: argparse.Namespace) -> SweepSpec:
        if not args.axis:
            raise UsageError("bench 需要 --axis")
        defaults = self.config_manager.get_sweep_defaults()
        values = args.values or self.config_manager.get_axis_grid(args.axis)
        sigma = args.sigma if args.sigma is not None else self.config_manager.get_axis_sigma(args.axis)
        return SweepSpec(
            axis=args.axis,
            values=tuple(values),
            trials=_given(args.trials, defaults['trials']),
            variants=tuple(args.variants or defaults['variants']),
            anchor_count=_given(args.anchor_count, defaults['anchor_count']),
            n_in=_given(args.n_in, defaults['n_in']),
            n_out=_given(args.n_out, defaults['n_out']),
            rho=_given(args.rho, defaults['rho']),
            sigma=sigma,
            seed=_given(args.seed, 0),
            source=args.source,
            workers=_given(args.workers, defaults['workers']),
            match_config=self._match_config(args),
        )

    def run_bench(self, args: argparse.Namespace) -> None:
        """bench 子命令：参数扫描，输出结果 CSV"""
        self._say("=" * 60)
        self._say("🚀 Anchor Match 基准实验")
        self._say("=" * 60)

        if args.resume:
            spec, task_id, units = self._resume(args.resume)
        else:
            spec = self._sweep_spec(args)
            task_id, units = None, spec.units()
            if self.database_manager is not None:
                task_id = self._create_task(spec)

        self._say(f"1️⃣ 扫描轴: {spec.axis}, 取值: {list(spec.values)}")
        self._say(f"   变体: {', '.join(spec.variants)}, 试验次数: {spec.trials}, 并行进程: {spec.workers}")
        self._say(f"2️⃣ 执行 {len(units)} 个单元...")

        done = {'count': 0}

        def on_unit_done(unit, records):
            done['count'] += 1
            if task_id is not None:
                session = self.database_manager.get_session()
                try:
                    self.database_manager.add_results(session, task_id, records)
                    self.task_manager.update_task_progress(session, task_id, [unit])
                finally:
                    session.close()
            if done['count'] % max(1, len(units) // 10) == 0 or done['count'] == len(units):
                self._say(f"   进度: {done['count']}/{len(units)}")

        records = run_sweep(spec, units, on_unit_done)
        if task_id is not None:
            records = sort_records(spec, self._stored_records(task_id))

        failed = sum(1 for r in records if not r.ok)
        self._say(f"✓ 完成，共 {len(records)} 条记录" + (f"，失败 {failed} 条" if failed else ""))
        for row in summarize(records):
            self._say(f"   {row['variant']:>3} @ {row['value']:<6g} 平均准确率 {row['mean_accuracy']:.3f}")

        self.file_manager.write_results_csv(records, args.out)
        if args.summary:
            self.file_manager.write_summary_csv(summarize(records), args.summary)

    def _create_task(self, spec: SweepSpec) -> str:
        task_id = f"sweep_{datetime.now().strftime('%Y%m%d_%H%M%S')}"
        session = self.database_manager.get_session()
        try:
            self.task_manager.create_task(session, task_id, spec.axis, spec.to_json(), spec.units())
        finally:
            session.close()
        self._say(f"✓ 创建扫描任务 {task_id}")
        return task_id

    def _resume(self, task_id: str):
        if self.database_manager is None:
            raise UsageError("--resume 需要数据库")
        session = self.database_manager.get_session()
        try:
            task = self.task_manager.resume_task(session, task_id)
            if task is None:
                raise UsageError(f"任务 {task_id} 不存在或已完成")
            spec = SweepSpec.from_json(task.spec_json)
            units = self.task_manager.pending_units(task)
            progress = self.task_manager.get_task_progress(session, task_id)
        finally:
            session.close()
        self._say(f"✓ 恢复扫描任务 {task_id}，已完成 {progress['percentage']:.1f}%，待处理单元 {len(units)}")
        return spec, task_id, units

    def _stored_records(self, task_id: str) -> List[ResultRecord]:
        session = self.database_manager.get_session()
        try:
            rows = self.database_manager.get_results(session, task_id)
            return [ResultRecord(r.variant, r.axis, r.value, r.trial, r.accuracy, r.time_ms,
                                 r.seed, r.status, r.value_index) for r in rows]
        finally:
            session.close()


class ArgumentParser(argparse.ArgumentParser):
    """参数错误时抛出 UsageError，而不是直接退出"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _given(value, default):
    return default if value is None else value


def _positive(cast):
    def parse(text: str):
        try:
            value = cast(text)
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"无法解析 {text!r}: {e}") from e
        if not value > 0:
            raise argparse.ArgumentTypeError(f"必须大于 0，实际为 {text}")
        return value
    return parse


def _csv_list(cast):
    def parse(text: str):
        try:
            return [cast(x) for x in text.split(',') if x.strip()]
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"无法解析列表 {text!r}: {e}") from e
    return parse


def build_parser() -> ArgumentParser:
    """构建命令行解析器

    公共参数由父解析器提供，写在子命令之后。
    """
    common = ArgumentParser(add_help=False)
    common.add_argument('--config', default='config.yaml', help='配置文件路径 (默认: config.yaml)')
    common.add_argument('--log-level', default=None, help='日志级别，覆盖配置文件')
    common.add_argument('--seed', type=int, default=None, help='随机种子，所有随机性都由它派生')
    common.add_argument('--t', type=float, default=None, help='扩散时间，默认两图 1/mean(非零特征值) 的平均')
    common.add_argument('--k', type=_positive(int), default=None, help='谱截断数 K')
    common.add_argument('--c-b', dest='c_b', type=float, default=None, help='变体 vi 的 c_B (默认 8)')
    common.add_argument('--c-ap', dest='c_ap', type=float, default=None, help='变体 vi 的 c_ap (默认 3)')
    common.add_argument('--c-reg', dest='c_reg', type=float, default=None, help='学习的正则常数 C')
    common.add_argument('--variant', choices=VARIANTS, default=None, help='相容矩阵变体 (默认 vi)')
    common.add_argument('--solver', choices=sorted(SOLVERS), default=None, help='匹配求解器')
    common.add_argument('--trials', type=_positive(int), default=None, help='每个取值的试验次数')
    common.add_argument('--out', default=None, help='输出文件，默认标准输出')

    parser = ArgumentParser(
        prog='anchor_match',
        description='基于锚点学习邻近矩阵的图匹配',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例用法:
  %(prog)s match g1.json g2.json --anchors a.json --variant vi
  %(prog)s learn g1.json g2.json --anchors a.json --out B.json
  %(prog)s bench --axis deformation --trials 5 --seed 7 --out results.csv
  %(prog)s signatures g1.json
  %(prog)s sequence hotel.csv --variant vi --anchor-count 2
        """
    )
    sub = parser.add_subparsers(dest='command', required=True)

    for name, help_text in (('match', '匹配两个图'), ('learn', '学习邻近矩阵 B')):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument('graphs', nargs='*', help='两个图 JSON 文件')
        p.add_argument('--anchors', default=None, help='锚点 JSON 文件')
        p.add_argument('--points', default=None, help='点集 CSV（代替图文件）')
        p.add_argument('--frames', type=int, nargs=2, default=None, metavar=('F1', 'F2'), help='点集中的两帧')
        if name == 'match':
            p.add_argument('--proximity', default=None, help='learn 输出的 B，提供时跳过学习')

    p = sub.add_parser('bench', parents=[common], help='参数扫描实验')
    p.add_argument('--axis', choices=AXES, default=None, help='扫描轴')
    p.add_argument('--values', type=_csv_list(float), default=None, help='逗号分隔的取值，默认用配置中的网格')
    p.add_argument('--variants', type=_csv_list(str), default=None, help='逗号分隔的变体，默认全部')
    p.add_argument('--anchor-count', dest='anchor_count', type=_positive(int), default=None, help='锚点数 (默认 2)')
    p.add_argument('--n-in', dest='n_in', type=_positive(int), default=None, help='内点数')
    p.add_argument('--n-out', dest='n_out', type=int, default=None, help='每个图的外点数')
    p.add_argument('--rho', type=_positive(float), default=None, help='边密度')
    p.add_argument('--sigma', type=float, default=None, help='形变噪声标准差')
    p.add_argument('--source', choices=('graphs', 'points'), default=None, help='数据来源')
    p.add_argument('--workers', type=_positive(int), default=None, help='并行进程数')
    p.add_argument('--db', nargs='?', const='', default=None, help='把进度与结果存入 SQLite，可省略路径')
    p.add_argument('--resume', default=None, metavar='TASK_ID', help='恢复中断的扫描任务')
    p.add_argument('--summary', default=None, help='另外输出汇总 CSV')

    p = sub.add_parser('signatures', parents=[common], help='输出节点签名 CSV')
    p.add_argument('graph', help='图 JSON 文件')
    p.add_argument('--times', type=_csv_list(float), default=None, help='HKS 时间，逗号分隔')

    p = sub.add_parser('sequence', parents=[common], help='点序列逐帧评估')
    p.add_argument('points', help='点集 CSV')
    p.add_argument('--frames', type=_csv_list(int), default=None, help='只评估这些帧，逗号分隔')
    p.add_argument('--anchor-count', dest='anchor_count', type=_positive(int), default=None, help='锚点数 (默认 2)')
    return parser


def create_components(config_manager: ConfigManager, args: argparse.Namespace, stdout=None) -> Dict:
    """创建系统组件

    Args:
        config_manager: 配置管理器
        args: 命令行参数
        stdout: 主输出流，默认标准输出

    Returns:
        包含所有组件的字典
    """
    database_manager = task_manager = None
    db_path = getattr(args, 'db', None)
    if db_path is not None or getattr(args, 'resume', None):
        database_manager = DatabaseManager(db_path or config_manager.get_database_path())
        database_manager.init_database()
        task_manager = SweepTaskManager(database_manager)
    return {
        'file_manager': FileManager(stdout),
        'database_manager': database_manager,
        'task_manager': task_manager,
    }


def cli_main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    """命令行入口

    Returns:
        退出码：0 成功，1 用法错误，2 运行错误
    """
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(parser.format_usage().rstrip(), file=stderr)
        print(f"错误: {e}", file=stderr)
        return 1
    except SystemExit as e:
        return int(e.code or 0)

    config_manager = ConfigManager(args.config)
    level = (args.log_level or config_manager.get_log_level()).upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=stderr,
                        format='%(levelname)s %(name)s: %(message)s')

    try:
        components = create_components(config_manager, args, stdout)
        controller = MatchController(
            config_manager=config_manager,
            file_manager=components['file_manager'],
            database_manager=components['database_manager'],
            task_manager=components['task_manager'],
            progress=stderr,
        )
        controller.dispatch(args)
        return 0
    except UsageError as e:
        print(f"错误: {e}", file=stderr)
        return 1
    except (AnchorMatchError, OSError) as e:
        print(f"❌ {type(e).__name__}: {e}", file=stderr)
        return 2
    except KeyboardInterrupt:
        print("\n⚠️  用户中断，程序退出", file=stderr)
        return 1


def main():
    """主程序入口"""
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
