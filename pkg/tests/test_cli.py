"""Command line front end: subcommands, output lines and error codes."""

import csv

import pytest
from loguru import logger

from py_lstm_returns.main import CliConfig, build_parser, main
from py_lstm_returns.model import Model, ModelConfig
from py_lstm_returns.train import Checkpoint, save_checkpoint
from py_lstm_returns.utils import ContractError, SevereError

QUICK_FLAGS = ['--max-length', '4', '--final-epochs', '2']


@pytest.fixture(autouse=True)
def drop_log_sinks():
    yield
    logger.remove()


def _error_code(stderr: str) -> str:
    line = [l for l in stderr.splitlines() if l.startswith('error code=')][-1]
    return line.split()[1].split('=', 1)[1]


def _values(stdout: str) -> dict:
    pairs = {}
    for line in stdout.splitlines():
        for token in line.split():
            key, _, value = token.partition('=')
            pairs[key] = value
    return pairs


def _zero_checkpoint(path, config: ModelConfig) -> str:
    save_checkpoint(Checkpoint.from_model(Model.zeros(config), seed=0), str(path))
    return str(path)


class TestTrain:

    def test_writes_checkpoint_and_history(self, make_sine_csv, write_csv, tmp_path, capsys):
        data = write_csv(make_sine_csv(400))
        out = tmp_path / 'models' / 'm.ckpt'
        code = main(['train', '--data', data, '--hidden', '3', '--out', str(out)] + QUICK_FLAGS)
        stdout = capsys.readouterr().out
        assert code == 0
        assert out.exists()
        with open(f"{out}.history.csv", newline='') as f:
            rows = list(csv.DictReader(f))
        assert [row['stage'] for row in rows] == ['2', '4', '4']
        values = _values(stdout)
        assert values['epochs'] == '3'
        assert values['checkpoint'] == str(out)
        assert 'stage=2' in stdout and 'stage=4' in stdout

    def test_repeat_run_is_bitwise_identical(self, make_sine_csv, write_csv, tmp_path):
        data = write_csv(make_sine_csv(400))
        paths = [tmp_path / 'a.ckpt', tmp_path / 'b.ckpt']
        for path in paths:
            assert main(['train', '--data', data, '--hidden', '2', '--seed', '7',
                         '--out', str(path)] + QUICK_FLAGS) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_missing_data_file(self, tmp_path, capsys):
        code = main(['train', '--data', str(tmp_path / 'absent.csv'), '--out', str(tmp_path / 'm.ckpt')])
        assert code == 1
        assert _error_code(capsys.readouterr().err) == 'DATA_NOT_FOUND'

    def test_bad_max_length(self, make_sine_csv, write_csv, tmp_path, capsys):
        data = write_csv(make_sine_csv(400))
        code = main(['train', '--data', data, '--out', str(tmp_path / 'm.ckpt'), '--max-length', '3'])
        assert code == 1
        assert _error_code(capsys.readouterr().err) == 'CONFIG_INVALID'


class TestEval:

    def test_zero_model_scores_baseline(self, make_sine_csv, write_csv, tmp_path, capsys):
        data = write_csv(make_sine_csv(400))
        ckpt = _zero_checkpoint(tmp_path / 'zero.ckpt', ModelConfig(1, 4))
        assert main(['eval', '--data', data, '--checkpoint', ckpt]) == 0
        values = _values(capsys.readouterr().out)
        assert values['rmse'] == values['baseline']
        assert float(values['rmse']) > 0

    def test_trained_checkpoint(self, make_sine_csv, write_csv, tmp_path, capsys):
        data = write_csv(make_sine_csv(400))
        out = str(tmp_path / 'm.ckpt')
        assert main(['train', '--data', data, '--hidden', '2', '--out', out] + QUICK_FLAGS) == 0
        capsys.readouterr()
        assert main(['eval', '--data', data, '--checkpoint', out, '--warmup', '8']) == 0
        values = _values(capsys.readouterr().out)
        assert float(values['rmse']) > 0 and float(values['baseline']) > 0

    def test_truncated_checkpoint(self, make_sine_csv, write_csv, tmp_path, capsys):
        data = write_csv(make_sine_csv(400))
        path = tmp_path / 'zero.ckpt'
        _zero_checkpoint(path, ModelConfig(1, 4))
        text = path.read_text(encoding='utf-8')
        path.write_text(text[:len(text) // 2], encoding='utf-8')
        assert main(['eval', '--data', data, '--checkpoint', str(path)]) == 1
        assert _error_code(capsys.readouterr().err) == 'CKPT_CORRUPT'

    def test_missing_checkpoint(self, make_sine_csv, write_csv, tmp_path, capsys):
        data = write_csv(make_sine_csv(400))
        assert main(['eval', '--data', data, '--checkpoint', str(tmp_path / 'none.ckpt')]) == 1
        assert _error_code(capsys.readouterr().err) == 'CKPT_NOT_FOUND'

    def test_input_width_mismatch(self, make_sine_csv, write_csv, tmp_path, capsys):
        data = write_csv(make_sine_csv(400))
        ckpt = _zero_checkpoint(tmp_path / 'narrow.ckpt', ModelConfig(1, 4, input_dim=3))
        assert main(['eval', '--data', data, '--checkpoint', ckpt]) == 1
        assert _error_code(capsys.readouterr().err) == 'CONFIG_MISMATCH'


class TestGrid:

    def test_writes_csv_and_table(self, make_sine_csv, write_csv, tmp_path, capsys):
        data = write_csv(make_sine_csv(400))
        out, table = tmp_path / 'grid.csv', tmp_path / 'grid.txt'
        code = main(['grid', '--data', data, '--layers', '1', '--sizes', '2', '3',
                     '--out', str(out), '--table', str(table)] + QUICK_FLAGS)
        assert code == 0
        values = _values(capsys.readouterr().out)
        assert values['cells'] == '2' and values['failed'] == '0'
        with open(out, newline='') as f:
            rows = list(csv.DictReader(f))
        assert sorted((row['layers'], row['size']) for row in rows) == [('1', '2'), ('1', '3')]
        assert 'Hidden Layer Size' in table.read_text(encoding='utf-8')


class TestBaseline:

    def test_constant_prices(self, make_growth_csv, write_csv, capsys):
        data = write_csv(make_growth_csv(400, rate=0.0))
        assert main(['baseline', '--data', data]) == 0
        assert capsys.readouterr().out.strip() == 'baseline_rmse=0'

    def test_empty_test_range(self, make_sine_csv, write_csv, capsys):
        data = write_csv(make_sine_csv(400))
        code = main(['baseline', '--data', data, '--test-start', '2030-01-01', '--test-end', '2030-12-31'])
        assert code == 1
        assert _error_code(capsys.readouterr().err) == 'EMPTY_SPLIT'


class TestCliConfig:

    def _args(self, *argv):
        return build_parser().parse_args(list(argv))

    def test_grid_defaults(self):
        cfg = CliConfig.from_args(self._args('grid', '--data', 'x.csv'))
        assert cfg.layers == (1, 2, 3)
        assert cfg.sizes == (50, 100, 250, 500)
        assert cfg.max_length == 256 and cfg.final_epochs == 100 and cfg.batch_size == 20

    def test_train_config_schedule(self):
        cfg = CliConfig.from_args(self._args('train', '--data', 'x.csv', '--out', 'm', '--max-length', '8',
                                             '--final-epochs', '3', '--layers', '2', '--hidden', '7'))
        train_cfg = cfg.train_config(cfg.layers[0], cfg.sizes[0])
        assert train_cfg.model == ModelConfig(2, 7)
        assert [(s.window_length, s.epochs) for s in train_cfg.schedule.stages] == [(2, 1), (4, 1), (8, 3)]

    def test_overlapping_ranges(self):
        with pytest.raises(ContractError) as info:
            CliConfig.from_args(self._args('baseline', '--data', 'x.csv', '--train-end', '2015-06-30'))
        assert info.value.code == 'CONFIG_INVALID'

    def test_bad_date_is_usage_error(self):
        with pytest.raises(SevereError) as info:
            self._args('baseline', '--data', 'x.csv', '--test-start', '01/01/2015')
        assert info.value.code == 'USAGE'

    @pytest.mark.parametrize('argv', [
        ('eval', '--data', 'x.csv', '--checkpoint', 'm.ckpt', '--warmup', '4'),
        ('baseline', '--data', 'x.csv'),
    ])
    def test_commands_without_architecture_flags(self, argv):
        cfg = CliConfig.from_args(self._args(*argv))
        assert cfg.command == argv[0]
        assert cfg.layers == (1,) and cfg.sizes == (50,)


class TestUsageErrors:

    @pytest.mark.parametrize('argv', [
        ['baseline', '--data', 'x.csv', '--test-start', '2015-13-01'],
        ['train', '--data', 'x.csv'],
        ['grid', '--data', 'x.csv', '--sizes', 'fifty'],
        [],
    ])
    def test_single_line_usage_error(self, argv, capsys):
        assert main(argv) == 1
        captured = capsys.readouterr()
        assert captured.out == ''
        assert len(captured.err.strip().splitlines()) == 1
        assert _error_code(captured.err) == 'USAGE'
