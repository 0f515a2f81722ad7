#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
LSTM Returns Main Entry Point
"""

import os
import sys
import argparse
import datetime as dt
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from loguru import logger

from .data import TEST_RANGE, TRAIN_RANGE, read_csv_file, select_range, split_by_date, to_returns
from .evaluate import GRID_LAYERS, GRID_SIZES, evaluate_model, naive_baseline_rmse, run_grid
from .model import INPUT_DIM, OUTPUT_DIM, ModelConfig
from .train import (
    DEFAULT_BATCH_SIZE, FINAL_STAGE_EPOCHS, MAX_WINDOW_LENGTH,
    TrainConfig, load_checkpoint, train_full, truncated_schedule,
)
from .utils import ConfigMismatchError, ContractError, SevereError, configure_logging, fmt_machine


@dataclass(frozen=True)
class CliConfig:
    """Everything a command needs, validated once"""
    command: str
    data: str
    train_range: Tuple[dt.date, dt.date] = TRAIN_RANGE
    test_range: Tuple[dt.date, dt.date] = TEST_RANGE
    layers: Tuple[int, ...] = (1,)
    sizes: Tuple[int, ...] = (50,)
    seed: int = 42
    batch_size: int = DEFAULT_BATCH_SIZE
    max_length: int = MAX_WINDOW_LENGTH
    final_epochs: int = FINAL_STAGE_EPOCHS
    reset_adam_per_stage: bool = False
    checkpoint: Optional[str] = None
    out: Optional[str] = None
    history: Optional[str] = None
    table: Optional[str] = None
    warmup: int = 0
    jobs: int = 1
    debug: bool = False

    def __post_init__(self):
        def require(condition: bool, message: str) -> None:
            if not condition:
                raise ContractError(message, code='CONFIG_INVALID')

        for name, (start, end) in (('train', self.train_range), ('test', self.test_range)):
            require(start <= end, f"{name} range {start}..{end} is reversed")
        require(self.train_range[1] < self.test_range[0] or self.test_range[1] < self.train_range[0],
                "Train and test date ranges overlap")
        require(all(n >= 1 for n in self.layers), f"Layer counts must be positive: {self.layers}")
        require(all(n >= 1 for n in self.sizes), f"Hidden sizes must be positive: {self.sizes}")
        require(self.batch_size >= 1, f"Batch size must be positive, got {self.batch_size}")
        require(self.final_epochs >= 1, f"Final stage epochs must be positive, got {self.final_epochs}")
        require(2 <= self.max_length <= MAX_WINDOW_LENGTH and self.max_length & (self.max_length - 1) == 0,
                f"--max-length must be a power of two in [2, {MAX_WINDOW_LENGTH}], got {self.max_length}")
        require(0 <= self.seed < 2 ** 64, f"Seed must be a 64-bit unsigned integer, got {self.seed}")
        require(self.warmup >= 0, f"Warmup must be non-negative, got {self.warmup}")
        require(self.jobs >= 1, f"Jobs must be positive, got {self.jobs}")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> 'CliConfig':
        # eval and baseline take no architecture flags
        layers = getattr(args, 'layers', 1)
        layers = layers if isinstance(layers, list) else [layers]
        sizes = getattr(args, 'sizes', None) or [getattr(args, 'hidden', 50)]
        return cls(
            command=args.command,
            data=args.data,
            train_range=(args.train_start, args.train_end),
            test_range=(args.test_start, args.test_end),
            layers=tuple(layers),
            sizes=tuple(sizes),
            seed=getattr(args, 'seed', 42),
            batch_size=getattr(args, 'batch_size', DEFAULT_BATCH_SIZE),
            max_length=getattr(args, 'max_length', MAX_WINDOW_LENGTH),
            final_epochs=getattr(args, 'final_epochs', FINAL_STAGE_EPOCHS),
            reset_adam_per_stage=getattr(args, 'reset_adam_per_stage', False),
            checkpoint=getattr(args, 'checkpoint', None),
            out=getattr(args, 'out', None),
            history=getattr(args, 'history', None),
            table=getattr(args, 'table', None),
            warmup=getattr(args, 'warmup', 0),
            jobs=getattr(args, 'jobs', 1),
            debug=args.debug,
        )

    def train_config(self, n_layers: int, hidden: int, checkpoint_path: Optional[str] = None) -> TrainConfig:
        return TrainConfig(
            model=ModelConfig(n_layers, hidden),
            seed=self.seed,
            batch_size=self.batch_size,
            schedule=truncated_schedule(self.max_length, self.final_epochs),
            train_range=self.train_range,
            test_range=self.test_range,
            reset_adam_per_stage=self.reset_adam_per_stage,
            checkpoint_path=checkpoint_path,
        )


class ArgumentParser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as a SevereError"""

    def error(self, message: str):
        raise SevereError(f"{self.prog}: {message}", code='USAGE')


def _iso_date(text: str) -> dt.date:
    """Parse a YYYY-MM-DD flag value"""
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date (YYYY-MM-DD): {text}")


def build_parser() -> argparse.ArgumentParser:
    """
    Command line layout: one subcommand per workflow
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--data', required=True, help='Daily OHLCV CSV in Yahoo export layout')
    common.add_argument('--train-start', type=_iso_date, default=TRAIN_RANGE[0])
    common.add_argument('--train-end', type=_iso_date, default=TRAIN_RANGE[1])
    common.add_argument('--test-start', type=_iso_date, default=TEST_RANGE[0])
    common.add_argument('--test-end', type=_iso_date, default=TEST_RANGE[1])
    common.add_argument('-d', '--debug', action='store_true', help='Enable debug output')

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument('--seed', type=int, default=42)
    training.add_argument('--batch-size', type=int, default=DEFAULT_BATCH_SIZE)
    training.add_argument('--max-length', type=int, default=MAX_WINDOW_LENGTH,
                          help='Longest curriculum window (power of two)')
    training.add_argument('--final-epochs', type=int, default=FINAL_STAGE_EPOCHS,
                          help='Epochs of the last curriculum stage')
    training.add_argument('--reset-adam-per-stage', action='store_true',
                          help='Zero the ADAM moments at every curriculum stage')

    parser = ArgumentParser(
        prog='lstm-returns',
        description='LSTM stock-return predictor - train, evaluate and reproduce the experiment grid'
    )
    commands = parser.add_subparsers(dest='command', required=True)

    train = commands.add_parser('train', parents=[common, training], help='Train one model')
    train.add_argument('--layers', type=int, default=1)
    train.add_argument('--hidden', type=int, default=50)
    train.add_argument('--out', required=True, help='Checkpoint output path')
    train.add_argument('--history', help='Loss history CSV (default: <out>.history.csv)')

    evaluate = commands.add_parser('eval', parents=[common], help='Score a checkpoint on the test range')
    evaluate.add_argument('--checkpoint', required=True)
    evaluate.add_argument('--warmup', type=int, default=0,
                          help='Training rows run before the test year to warm the state')

    grid = commands.add_parser('grid', parents=[common, training], help='Train and score the layers x size grid')
    grid.add_argument('--layers', type=int, nargs='+', default=list(GRID_LAYERS))
    grid.add_argument('--sizes', type=int, nargs='+', default=list(GRID_SIZES))
    grid.add_argument('--warmup', type=int, default=0)
    grid.add_argument('--out', default='grid.csv', help='Grid CSV output path')
    grid.add_argument('--table', default='grid.txt', help='Aligned text table output path')
    grid.add_argument('--jobs', type=int, default=1, help='Grid cells trained in parallel')

    commands.add_parser('baseline', parents=[common], help='No-change baseline RMSE of the test range')
    return parser


def ensure_parent_directory(path: str) -> None:
    """Create the directory an output file will be written to"""
    parent = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(parent, exist_ok=True)
    except OSError as e:
        raise SevereError(f"Error creating output directory: {e}", code='OUTPUT_FAILED')


def cmd_train(cfg: CliConfig) -> int:
    """Train one model, write its checkpoint and loss history"""
    ensure_parent_directory(cfg.out)
    train_cfg = cfg.train_config(cfg.layers[0], cfg.sizes[0], checkpoint_path=cfg.out)
    _, _, history = train_full(cfg.data, train_cfg)
    history_path = cfg.history or f"{cfg.out}.history.csv"
    history.to_csv(history_path)
    for length, loss in history.stage_means():
        print(f"stage={length} mean_loss={fmt_machine(loss)}")
    print(f"epochs={len(history.epochs)} steps={history.total_steps()}")
    print(f"checkpoint={cfg.out} history={history_path}")
    return 0


def cmd_eval(cfg: CliConfig) -> int:
    """Score a checkpoint on the test range"""
    ckpt = load_checkpoint(cfg.checkpoint)
    if ckpt.config.input_dim != INPUT_DIM or ckpt.config.output_dim != OUTPUT_DIM:
        raise ConfigMismatchError(
            f"Checkpoint maps {ckpt.config.input_dim} inputs to {ckpt.config.output_dim} outputs; "
            f"the data has {INPUT_DIM} features and {OUTPUT_DIM} targets")
    model = ckpt.to_model()
    series = to_returns(read_csv_file(cfg.data))
    train, test = split_by_date(series, cfg.train_range[0], cfg.train_range[1],
                                cfg.test_range[0], cfg.test_range[1])
    report = evaluate_model(model, test, cfg.warmup, train)
    logger.info(f"Scored {report.num_scored_steps} steps of a "
                f"{report.config.num_lstm_layers}x{report.config.hidden_dim} model")
    print(f"rmse={fmt_machine(report.rmse)} baseline={fmt_machine(report.baseline_rmse)}")
    return 0


def cmd_grid(cfg: CliConfig) -> int:
    """Train and score every layers x size cell"""
    ensure_parent_directory(cfg.out)
    ensure_parent_directory(cfg.table)
    result = run_grid(cfg.data, cfg.layers, cfg.sizes, cfg.train_config(cfg.layers[0], cfg.sizes[0]),
                      warmup=cfg.warmup, jobs=cfg.jobs)
    result.to_csv(cfg.out)
    with open(cfg.table, 'w', encoding='utf-8') as f:
        f.write(result.to_table())
    print(f"baseline_rmse={fmt_machine(result.baseline_rmse)}")
    print(f"cells={len(result.cells)} failed={len(result.failures())} csv={cfg.out} table={cfg.table}")
    if len(result.failures()) == len(result.cells):
        raise SevereError("Every grid cell failed", code='GRID_FAILED')
    return 0


def cmd_baseline(cfg: CliConfig) -> int:
    """Print the no-change baseline RMSE of the test range"""
    series = to_returns(read_csv_file(cfg.data))
    test = select_range(series, cfg.test_range[0], cfg.test_range[1], 'test')
    print(f"baseline_rmse={fmt_machine(naive_baseline_rmse(test))}")
    return 0


COMMANDS = {
    'train': cmd_train,
    'eval': cmd_eval,
    'grid': cmd_grid,
    'baseline': cmd_baseline,
}


def _report_error(code: str, message: str) -> None:
    """Single-line machine-parsable error on stderr"""
    print(f"error code={code} message={' '.join(message.split())}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main function
    """
    try:
        args = build_parser().parse_args(argv)
    except SevereError as e:
        _report_error(e.code, e.message)
        return 1
    configure_logging(args.debug)
    try:
        cfg = CliConfig.from_args(args)
        return COMMANDS[cfg.command](cfg)
    except SevereError as e:
        _report_error(e.code, e.message)
        return 1
    except KeyboardInterrupt:
        _report_error('INTERRUPTED', 'Interrupted by user')
        return 1
    except Exception as e:
        _report_error('UNEXPECTED', f"{type(e).__name__}: {e}")
        return 1


if __name__ == '__main__':
    sys.exit(main())
