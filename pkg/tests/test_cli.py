import os

import numpy as np
import pandas as pd
import pytest

from src.data.model_io import load_model
from src.ui.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, FRONT_SUFFIX, TRACE_SUFFIX, run


def _write(path, lines):
    with open(path, 'w', encoding='utf-8') as f:
        f.write('\n'.join(lines) + '\n')


@pytest.fixture(scope='module')
def pipeline(tmp_path_factory):
    """synth -> train-global -> train-local on a small problem, shared by the tests below"""
    root = tmp_path_factory.mktemp('pipeline')
    data = os.path.join(root, 'data')
    assert run(['synth', '--classes', '30', '--per-class', '6', '--dim', '3', '--epsilon', '2,1,0.5',
                '--family', 't5', '--seed', '4', '--enroll-per-class', '2', '--out', data]) == EXIT_OK
    global_path = os.path.join(root, 'model.gplda')
    assert run(['train-global', '--vectors', os.path.join(data, 'vectors.txt'), '--iters', '5',
                '--out', global_path]) == EXIT_OK
    local_path = os.path.join(root, 'model.lplda')
    assert run(['train-local', '--vectors', os.path.join(data, 'vectors.txt'), '--global', global_path,
                '--monitor-trials', os.path.join(data, 'trials.txt'),
                '--monitor-enroll', os.path.join(data, 'enroll.map'),
                '--lr', '1e-2', '--max-epochs', '3', '--patience', '3', '--out', local_path]) == EXIT_OK
    return root, data, global_path, local_path


def _score_args(data, global_path, out, *extra):
    return ['score', '--global', global_path,
            '--enroll-map', os.path.join(data, 'enroll.map'),
            '--enroll-vectors', os.path.join(data, 'vectors.txt'),
            '--test-vectors', os.path.join(data, 'test_vectors.txt'),
            '--trials', os.path.join(data, 'trials.txt'),
            '--out', out, *extra]


class TestEer:

    def test_one_third(self, tmp_path, capsys):
        scores, trials = tmp_path / 'scores.txt', tmp_path / 'trials.txt'
        _write(scores, ['m t1 0.9', 'm t2 0.8', 'm t3 0.3', 'm n1 0.7', 'm n2 0.2', 'm n3 0.1'])
        _write(trials, ['m t1 target', 'm t2 target', 'm t3 target',
                        'm n1 nontarget', 'm n2 nontarget', 'm n3 nontarget'])
        assert run(['eer', '--scores', str(scores), '--trials', str(trials)]) == EXIT_OK
        assert capsys.readouterr().out.strip() == 'EER 33.333'

    def test_roc_csv(self, tmp_path):
        scores, trials, roc = tmp_path / 'scores.txt', tmp_path / 'trials.txt', tmp_path / 'roc.csv'
        _write(scores, ['m a 1.0', 'm b 0.0'])
        _write(trials, ['m a target', 'm b nontarget'])
        assert run(['eer', '--scores', str(scores), '--trials', str(trials), '--roc', str(roc)]) == EXIT_OK
        assert list(pd.read_csv(roc).columns) == ['threshold', 'false_alarm', 'miss']

    def test_unlabeled_trials(self, tmp_path, capsys):
        scores, trials = tmp_path / 'scores.txt', tmp_path / 'trials.txt'
        _write(scores, ['m a 1.0'])
        _write(trials, ['m a'])
        assert run(['eer', '--scores', str(scores), '--trials', str(trials)]) == EXIT_DATA
        assert capsys.readouterr().err.startswith('error:')


class TestExitCodes:

    def test_missing_subcommand(self, capsys):
        assert run([]) == EXIT_USAGE
        assert 'error:' in capsys.readouterr().err

    def test_bad_option(self):
        assert run(['eer', '--bogus']) == EXIT_USAGE

    def test_bad_family(self, tmp_path):
        assert run(['synth', '--classes', '2', '--per-class', '2', '--dim', '1',
                    '--family', 'laplace', '--out', str(tmp_path)]) == EXIT_USAGE

    def test_help(self, capsys):
        assert run(['--help']) == EXIT_OK
        assert 'train-global' in capsys.readouterr().out

    def test_missing_file(self, tmp_path):
        assert run(['train-global', '--vectors', str(tmp_path / 'absent.txt'),
                    '--out', str(tmp_path / 'model.gplda')]) == EXIT_DATA

    def test_malformed_vectors(self, tmp_path, capsys):
        vectors = tmp_path / 'vectors.txt'
        _write(vectors, ['a s1 1.0 2.0', 'b s2 1.0'])
        assert run(['train-global', '--vectors', str(vectors), '--out', str(tmp_path / 'm')]) == EXIT_DATA
        assert 'vectors.txt:2:' in capsys.readouterr().err

    def test_partial_ln_without_local(self, pipeline, tmp_path):
        _, data, global_path, _ = pipeline
        out = str(tmp_path / 'scores.txt')
        assert run(_score_args(data, global_path, out, '--ln', 'partial')) == EXIT_USAGE
        assert not os.path.exists(out)

    def test_wrong_model_kind(self, pipeline, tmp_path):
        _, data, _, local_path = pipeline
        assert run(_score_args(data, local_path, str(tmp_path / 'scores.txt'))) == EXIT_DATA


class TestPipeline:

    def test_training_outputs(self, pipeline):
        _, _, global_path, local_path = pipeline
        assert os.path.exists(global_path + FRONT_SUFFIX)
        trace = pd.read_csv(global_path + TRACE_SUFFIX)
        assert len(trace) == 5
        assert os.path.exists(local_path)

    def test_synth_deterministic(self, pipeline, tmp_path):
        _, data, _, _ = pipeline
        again = str(tmp_path / 'again')
        assert run(['synth', '--classes', '30', '--per-class', '6', '--dim', '3', '--epsilon', '2,1,0.5',
                    '--family', 't5', '--seed', '4', '--enroll-per-class', '2', '--out', again]) == EXIT_OK
        for name in ('vectors.txt', 'enroll.map', 'test_vectors.txt', 'trials.txt'):
            with open(os.path.join(data, name), 'rb') as a, open(os.path.join(again, name), 'rb') as b:
                assert a.read() == b.read()

    @pytest.mark.parametrize('variant', ['plda', 'deplda'])
    def test_score_and_eer(self, pipeline, tmp_path, capsys, variant):
        _, data, global_path, local_path = pipeline
        extra = ['--local', local_path] if variant == 'deplda' else []
        first, second = str(tmp_path / 'first.txt'), str(tmp_path / 'second.txt')
        assert run(_score_args(data, global_path, first, *extra)) == EXIT_OK
        assert run(_score_args(data, global_path, second, *extra)) == EXIT_OK
        with open(first, 'rb') as a, open(second, 'rb') as b:
            assert a.read() == b.read()

        capsys.readouterr()
        assert run(['eer', '--scores', first, '--trials', os.path.join(data, 'trials.txt')]) == EXIT_OK
        eer = float(capsys.readouterr().out.split()[1])
        assert 0.0 <= eer < 50.0

    @pytest.mark.parametrize('ln', ['full', 'partial'])
    def test_score_with_ln(self, pipeline, tmp_path, ln):
        _, data, global_path, local_path = pipeline
        out = str(tmp_path / 'scores.txt')
        assert run(_score_args(data, global_path, out, '--local', local_path, '--ln', ln)) == EXIT_OK
        with open(os.path.join(data, 'trials.txt')) as trials, open(out) as scores:
            assert len(scores.readlines()) == len(trials.readlines())

    def test_history(self, pipeline, tmp_path, capsys):
        _, _, _, local_path = pipeline
        csv = str(tmp_path / 'history.csv')
        plot = str(tmp_path / 'history.png')
        assert run(['history', '--model', local_path, '--csv', csv, '--plot', plot]) == EXIT_OK
        assert 'best epoch' in capsys.readouterr().out
        frame = pd.read_csv(csv)
        assert frame['epoch'].tolist()[0] == 0
        assert os.path.getsize(plot) > 0

    def test_roc_plot(self, pipeline, tmp_path):
        _, data, global_path, _ = pipeline
        scores = str(tmp_path / 'scores.txt')
        plot = str(tmp_path / 'roc.png')
        assert run(_score_args(data, global_path, scores)) == EXIT_OK
        assert run(['eer', '--scores', scores, '--trials', os.path.join(data, 'trials.txt'),
                    '--roc-plot', plot]) == EXIT_OK
        assert os.path.getsize(plot) > 0

    def test_whitened_front(self, pipeline, tmp_path):
        _, data, _, _ = pipeline
        model = str(tmp_path / 'white.gplda')
        assert run(['train-global', '--vectors', os.path.join(data, 'vectors.txt'), '--iters', '3',
                    '--whiten', '--ln', 'full', '--out', model]) == EXIT_OK
        front = load_model(model + FRONT_SUFFIX)
        assert not np.allclose(front.projection, np.eye(3))
        out = str(tmp_path / 'scores.txt')
        assert run(_score_args(data, model, out, '--ln', 'full')) == EXIT_OK
