import json
import os

import numpy as np
import pytest

from MelGAN.CustomApp.App import EXIT_INVALID, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from MelGAN.IO.IOUtil import save_config
from MelGAN.IO.read_wav import AudioClip, read_wav, write_wav
from MelGAN.Simulate import Simulator

GOLDEN = os.path.join(os.path.dirname(__file__), 'golden')


def golden(name):
    with open(os.path.join(GOLDEN, name), 'r', encoding='utf-8') as f:
        return f.read()


def assert_same_json(actual, expected):
    if isinstance(expected, dict):
        assert list(actual) == list(expected)
        for key in expected:
            assert_same_json(actual[key], expected[key])
    elif isinstance(expected, list):
        assert len(actual) == len(expected)
        for a, e in zip(actual, expected):
            assert_same_json(a, e)
    elif isinstance(expected, float):
        assert actual == pytest.approx(expected, abs=1e-6)
    else:
        assert actual == expected


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_arch_default_passes(capsys):
    code, out, _ = run(capsys, 'validate-arch', '--json')
    assert code == EXIT_OK
    assert out == golden('validate_arch.json')
    code, out, _ = run(capsys, 'validate-arch')
    assert out.splitlines()[0] == 'PASS'


def test_validate_arch_reports_mutations(capsys):
    code, out, err = run(capsys, 'validate-arch', '--json', '--kernels', '16,12,4,4', '--dilations', '1,2,4')
    assert code == EXIT_INVALID
    report = json.loads(out)
    assert report['status'] == 'FAIL'
    assert sorted(v['rule'] for v in report['violations']) == ['dilation not power of kernel',
                                                               'kernel not multiple of stride']
    assert err.startswith('error: ValidationFailure: ')
    assert len(err.strip().splitlines()) == 1


def test_count_params(capsys):
    code, out, _ = run(capsys, 'count-params', '--json')
    assert code == EXIT_OK
    assert out == golden('count_params.json')
    _, out, _ = run(capsys, 'count-params')
    assert '4,266,050 (4.27M)' in out


def test_mos_ci(capsys):
    code, out, _ = run(capsys, 'mos-ci', '--json', '--scores', os.path.join(GOLDEN, 'scores.csv'))
    assert code == EXIT_OK
    assert_same_json(json.loads(out), json.loads(golden('mos_ci.json')))
    _, out, _ = run(capsys, 'mos-ci', '--scores', os.path.join(GOLDEN, 'scores.csv'))
    assert out.splitlines()[0] == 'a  3.00 ±1.39  (n=5)'


def test_usage_errors(capsys):
    code, _, err = run(capsys, 'count-params', '--bogus')
    assert code == EXIT_USAGE
    assert err.startswith('error: UsageError: ')
    assert run(capsys)[0] == EXIT_USAGE
    assert run(capsys, 'validate-arch', '--ratios', 'eight')[0] == EXIT_USAGE


def test_io_errors(tmp_path, capsys):
    out = str(tmp_path / 'out.wav')
    code, _, err = run(capsys, 'synth', '--ckpt', str(tmp_path / 'absent.mgk'), '--mel', 'x.npz', '--out', out)
    assert code == EXIT_IO
    assert err.startswith('error: DataError: ')
    assert not os.path.exists(out)
    assert run(capsys, 'mos-ci', '--scores', str(tmp_path / 'absent.csv'))[0] == EXIT_IO
    assert run(capsys, 'mel', '--wav', str(tmp_path / 'absent.wav'), '--out', str(tmp_path / 'm.npz'))[0] == EXIT_IO


def test_config_errors_exit_three(tmp_path, capsys):
    cfg = tmp_path / 'gen.cfg'
    cfg.write_text('base_width=wide\n')
    code, _, err = run(capsys, 'count-params', '--generator-config', str(cfg))
    assert code == EXIT_INVALID
    assert err.startswith('error: ConfigError: ')


@pytest.fixture
def run_dir(tmp_path, small_generator_config, small_discriminator_config, small_mel_config):
    Simulator(seed=4).write(str(tmp_path / 'data'), 2, 0.2)
    save_config(small_mel_config, str(tmp_path / 'mel.cfg'))
    save_config(small_generator_config, str(tmp_path / 'gen.cfg'))
    save_config(small_discriminator_config, str(tmp_path / 'disc.cfg'))
    return tmp_path


def train_args(run_dir, out, steps):
    return ['train', '--data', str(run_dir / 'data'), '--out', str(run_dir / out), '--steps', str(steps),
            '--batch', '2', '--window', '1024', '--checkpoint-every', '2', '--seed', '5', '--quiet',
            '--mel-config', str(run_dir / 'mel.cfg'), '--generator-config', str(run_dir / 'gen.cfg'),
            '--discriminator-config', str(run_dir / 'disc.cfg')]


def test_train_then_synthesize(run_dir, capsys):
    code, out, _ = run(capsys, *train_args(run_dir, 'run', 3))
    assert code == EXIT_OK
    assert out.splitlines()[0].startswith('run: lr=0.0001 beta1=0.5 beta2=0.9 batch=2 lambda_fm=10.0')
    with open(run_dir / 'run' / 'metrics.csv') as f:
        assert len(f.read().strip().splitlines()) == 4
    ckpt = str(run_dir / 'run' / 'latest.mgk')

    source = str(run_dir / 'one_second.wav')
    write_wav(source, AudioClip(0.3 * np.sin(np.arange(22050) * 0.05), 22050))
    copy = str(run_dir / 'copy.wav')
    code, out, _ = run(capsys, 'synth', '--json', '--ckpt', ckpt, '--wav', source, '--out', copy)
    assert code == EXIT_OK
    assert json.loads(out)['samples'] == 22050
    assert len(read_wav(copy)) == 22050

    mel = str(run_dir / 'one_second.mel.npz')
    code, out, _ = run(capsys, 'mel', '--json', '--wav', source, '--out', mel, '--mel-config',
                       str(run_dir / 'mel.cfg'))
    assert code == EXIT_OK
    assert json.loads(out) == {'frames': 87, 'n_mels': 16, 'out': mel}
    code, out, _ = run(capsys, 'synth', '--json', '--ckpt', ckpt, '--mel', mel, '--out', copy)
    assert json.loads(out)['samples'] == 87 * 256

    default_mel = str(run_dir / 'default.mel.npz')
    run(capsys, 'mel', '--wav', source, '--out', default_mel)
    code, _, err = run(capsys, 'synth', '--ckpt', ckpt, '--mel', default_mel, '--out', copy)
    assert code == EXIT_INVALID
    assert err.startswith('error: ConfigError: ')


def test_train_twice_gives_identical_metrics(run_dir, capsys):
    for out in ('a', 'b'):
        assert run(capsys, *train_args(run_dir, out, 2))[0] == EXIT_OK
    losses = []
    for out in ('a', 'b'):
        with open(run_dir / out / 'metrics.csv') as f:
            losses.append([line.split(',')[:4] for line in f.read().splitlines()])
    assert losses[0] == losses[1]


def test_train_resume(run_dir, capsys):
    assert run(capsys, *train_args(run_dir, 'run', 2))[0] == EXIT_OK
    args = train_args(run_dir, 'run', 3) + ['--resume', str(run_dir / 'run' / 'latest.mgk'), '--json']
    code, out, _ = run(capsys, *args)
    assert code == EXIT_OK
    assert json.loads(out)['steps'] == 3


def test_train_without_data(tmp_path, capsys):
    code, _, err = run(capsys, 'train', '--data', str(tmp_path / 'none'), '--out', str(tmp_path / 'run'),
                       '--steps', '1', '--quiet')
    assert code == EXIT_IO


def test_bench_json_schema(run_dir, capsys):
    code, out, _ = run(capsys, 'bench', '--json', '--generator-config', str(run_dir / 'gen.cfg'), '--frames', '4',
                       '--repeats', '3')
    assert code == EXIT_OK
    report = json.loads(out)
    assert list(report) == json.loads(golden('bench_keys.json'))
    assert report['reference_khz'] == 51.9
    assert report['samples_generated'] == 1024
    _, out, _ = run(capsys, 'bench', '--generator-config', str(run_dir / 'gen.cfg'), '--frames', '4',
                    '--repeats', '3')
    assert 'kHz on one CPU core' in out
    assert 'real-time factor' in out
