import csv
import io
import json

import pytest

from anchor_match import cli_main
from database.database_manager import DatabaseManager
from services.benchmark_runner import SweepSpec
from services.file_manager import FileManager
from services.synthetic_data import SyntheticSpec, generate_pair, select_anchors, synthetic_point_sequence
from utils.task_manager import SweepTaskManager


@pytest.fixture
def workspace(tmp_path):
    g, gp, truth = generate_pair(SyntheticSpec(8, rho=0.6, seed=2))
    anchors = select_anchors(truth, 2, seed=2)
    files = FileManager()
    files.write_json(g.to_dict(), str(tmp_path / 'g1.json'))
    files.write_json(gp.to_dict(), str(tmp_path / 'g2.json'))
    files.write_json([list(p) for p in anchors.pairs], str(tmp_path / 'anchors.json'))
    return tmp_path, truth, anchors


def run(argv, tmp_path):
    out, err = io.StringIO(), io.StringIO()
    code = cli_main(argv + ['--config', str(tmp_path / 'absent.yaml')], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


class TestMatchCommand:
    def test_match(self, workspace):
        tmp_path, truth, anchors = workspace
        code, out, _ = run(['match', str(tmp_path / 'g1.json'), str(tmp_path / 'g2.json'),
                            '--anchors', str(tmp_path / 'anchors.json'), '--variant', 'iv'], tmp_path)
        assert code == 0
        result = json.loads(out)
        assert len(result['pairs']) == 6
        assert result['objective'] >= 0
        mapping = truth.mapping()
        assert all(mapping[i] == a for i, a in result['pairs'])

    def test_learn_then_match_with_proximity(self, workspace):
        tmp_path, _, _ = workspace
        graphs = [str(tmp_path / 'g1.json'), str(tmp_path / 'g2.json')]
        code, _, _ = run(['learn', *graphs, '--anchors', str(tmp_path / 'anchors.json'),
                          '--out', str(tmp_path / 'B.json')], tmp_path)
        assert code == 0
        learned = json.loads((tmp_path / 'B.json').read_text(encoding='utf-8'))
        assert learned['dim'] == 16
        assert len(learned['values']) == 256

        code, out, _ = run(['match', *graphs, '--anchors', str(tmp_path / 'anchors.json'),
                            '--variant', 'v', '--proximity', str(tmp_path / 'B.json')], tmp_path)
        assert code == 0
        assert len(json.loads(out)['pairs']) == 6

    def test_match_on_point_frames(self, tmp_path):
        frames = synthetic_point_sequence(6, 2, 0.3, 0.0, seed=1)
        lines = ['frame,point,x,y'] + [f"{f},{p},{float(x)!r},{float(y)!r}" for f, pts in enumerate(frames)
                                       for p, (x, y) in enumerate(pts)]
        (tmp_path / 'points.csv').write_text('\n'.join(lines) + '\n', encoding='utf-8')
        code, out, _ = run(['match', '--points', str(tmp_path / 'points.csv'), '--frames', '0', '1',
                            '--variant', 'ii'], tmp_path)
        assert code == 0
        assert json.loads(out)['pairs'] == [[k, k] for k in range(6)]

    def test_missing_file_is_a_runtime_error(self, workspace):
        tmp_path, _, _ = workspace
        code, _, err = run(['match', str(tmp_path / 'g1.json'), str(tmp_path / 'nope.json'),
                            '--variant', 'ii'], tmp_path)
        assert code == 2
        assert 'FileNotFoundError' in err

    def test_missing_anchors_is_a_runtime_error(self, workspace):
        tmp_path, _, _ = workspace
        code, _, err = run(['match', str(tmp_path / 'g1.json'), str(tmp_path / 'g2.json'),
                            '--variant', 'vi'], tmp_path)
        assert code == 2
        assert 'MissingAnchors' in err


class TestUsage:
    @pytest.mark.parametrize("argv", [
        [],
        ['frobnicate'],
        ['match', 'only_one.json'],
        ['match', 'a.json', 'b.json', '--variant', 'x'],
        ['bench', '--trials', 'many'],
        ['bench'],
        ['learn', 'a.json', 'b.json'],
        ['bench', '--axis', 'deformation', '--trials', '0'],
        ['bench', '--axis', 'deformation', '--workers', '0'],
        ['bench', '--axis', 'deformation', '--n-in', '0'],
        ['bench', '--axis', 'deformation', '--anchor-count', '0'],
        ['bench', '--axis', 'deformation', '--rho', '0'],
        ['signatures', 'g.json', '--k', '0'],
        ['sequence', 'p.csv', '--anchor-count', '0'],
    ])
    def test_usage_errors(self, tmp_path, argv):
        code, _, err = run(argv, tmp_path)
        assert code == 1
        assert err

    def test_help(self, tmp_path, capsys):
        assert cli_main(['--help']) == 0
        assert 'anchor_match' in capsys.readouterr().out


class TestOtherCommands:
    def test_signatures(self, workspace):
        tmp_path, _, _ = workspace
        code, out, _ = run(['signatures', str(tmp_path / 'g1.json'), '--times', '0.5,1'], tmp_path)
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0][:3] == ['node', 'theta_0', 'theta_1']
        assert 'hks_1' in rows[0] and 'wks_19' in rows[0]
        assert len(rows) == 9

    def test_bench_and_database(self, tmp_path):
        db_path = str(tmp_path / 'bench.db')
        code, out, err = run(['bench', '--axis', 'deformation', '--values', '0,0.1', '--trials', '2',
                              '--variants', 'ii,iv', '--n-in', '6', '--seed', '3', '--db', db_path,
                              '--summary', str(tmp_path / 'summary.csv')], tmp_path)
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 8
        assert [r['variant'] for r in rows[:2]] == ['ii', 'iv']
        assert {r['status'] for r in rows} == {'ok'}
        assert '基准实验' in err
        assert (tmp_path / 'summary.csv').read_text(encoding='utf-8').startswith('variant,value,mean_accuracy')

        db = DatabaseManager(db_path)
        session = db.get_session()
        try:
            (task,) = db.get_all_tasks(session)
            assert task.is_completed
            assert len(db.get_results(session, task.task_id)) == 8
            task_id = task.task_id
        finally:
            session.close()

        code, _, err = run(['bench', '--resume', task_id, '--db', db_path], tmp_path)
        assert code == 1
        assert task_id in err

    def test_bench_is_reproducible(self, tmp_path):
        argv = ['bench', '--axis', 'outliers', '--values', '1', '--trials', '2', '--variants', 'ii',
                '--n-in', '6', '--seed', '4']
        first = list(csv.DictReader(io.StringIO(run(argv, tmp_path)[1])))
        second = list(csv.DictReader(io.StringIO(run(argv, tmp_path)[1])))
        assert [(r['accuracy'], r['seed']) for r in first] == [(r['accuracy'], r['seed']) for r in second]

    def test_sequence(self, tmp_path):
        frames = synthetic_point_sequence(8, 3, 0.4, 0.0, seed=6)
        lines = ['frame,point,x,y'] + [f"{f},{p},{float(x)!r},{float(y)!r}" for f, pts in enumerate(frames)
                                       for p, (x, y) in enumerate(pts)]
        (tmp_path / 'seq.csv').write_text('\n'.join(lines) + '\n', encoding='utf-8')
        code, out, _ = run(['sequence', str(tmp_path / 'seq.csv'), '--variant', 'ii'], tmp_path)
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ['frame', 'mean_accuracy']
        assert [r[0] for r in rows[1:]] == ['0', '1', '2']

    def test_signatures_with_explicit_k(self, workspace):
        tmp_path, _, _ = workspace
        code, out, _ = run(['signatures', str(tmp_path / 'g1.json'), '--k', '3'], tmp_path)
        assert code == 0
        header = next(csv.reader(io.StringIO(out)))
        assert [c for c in header if c.startswith('theta_')] == ['theta_0', 'theta_1', 'theta_2']

    def test_bench_keeps_explicit_seed_zero(self, tmp_path):
        argv = ['bench', '--axis', 'outliers', '--values', '1', '--trials', '1', '--variants', 'ii',
                '--n-in', '6']
        implicit = list(csv.DictReader(io.StringIO(run(argv, tmp_path)[1])))
        explicit = list(csv.DictReader(io.StringIO(run(argv + ['--seed', '0'], tmp_path)[1])))
        assert [r['seed'] for r in implicit] == [r['seed'] for r in explicit]

    def test_infinite_weight_is_a_runtime_error(self, tmp_path):
        (tmp_path / 'inf.json').write_text('{"n": 2, "edges": [[0, 1, 1e309]]}', encoding='utf-8')
        code, out, err = run(['signatures', str(tmp_path / 'inf.json')], tmp_path)
        assert code == 2
        assert out == ''
        assert 'ValidationError' in err

    def test_resume_reports_progress(self, tmp_path):
        db_path = str(tmp_path / 'resume.db')
        spec = SweepSpec('outliers', (1.0,), trials=2, variants=('ii',), n_in=6, seed=4)
        db = DatabaseManager(db_path)
        db.init_database()
        session = db.get_session()
        try:
            tasks = SweepTaskManager(db)
            tasks.create_task(session, 'sweep_half', spec.axis, spec.to_json(), spec.units())
            tasks.update_task_progress(session, 'sweep_half', spec.units()[:1])
        finally:
            session.close()

        code, out, err = run(['bench', '--resume', 'sweep_half', '--db', db_path], tmp_path)
        assert code == 0
        assert '已完成 50.0%' in err
        assert len(list(csv.DictReader(io.StringIO(out)))) == 1
