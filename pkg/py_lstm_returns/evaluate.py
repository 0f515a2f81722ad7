#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
LSTM Returns Evaluation

Returns RMSE, the no-change baseline, and the layers x hidden-size grid.
"""

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from .data import ReturnsSeries, read_csv_file, split_by_date, to_returns, window_count
from .model import Model, ModelConfig, model_forward
from .train import TrainConfig, train_on_series
from .utils import ContractError, DataError, assert_, fmt_table, shape_str


GRID_LAYERS = (1, 2, 3)
GRID_SIZES = (50, 100, 250, 500)
GRID_COLUMNS = ['layers', 'size', 'rmse', 'baseline_rmse', 'seed', 'train_rmse', 'parameters', 'status']

# Published returns RMSE per (layers, hidden size); reference context only
PUBLISHED_RMSE: Dict[Tuple[int, int], float] = {
    (1, 50): 0.0154, (1, 100): 0.0236, (1, 250): 0.0139, (1, 500): 0.0135,
    (2, 50): 0.0152, (2, 100): 0.0166, (2, 250): 0.0141, (2, 500): 0.0152,
    (3, 50): 0.0141, (3, 100): 0.0134, (3, 250): 0.0105, (3, 500): 0.0130,
}
PUBLISHED_BASELINE = 0.0265


def rmse(preds: np.ndarray, targets: np.ndarray) -> float:
    """Root of the mean squared componentwise error"""
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.shape != targets.shape:
        raise ContractError(f"rmse shape mismatch: {shape_str(preds)} vs {shape_str(targets)}")
    assert_(preds.size >= 1, "rmse needs at least one value")
    diff = preds - targets
    return float(np.sqrt(np.mean(diff * diff)))


def no_change_rmse(targets: np.ndarray) -> float:
    """RMSE of predicting a zero return for every target"""
    targets = np.asarray(targets, dtype=np.float64)
    return rmse(np.zeros_like(targets), targets)


def naive_baseline_rmse(test: ReturnsSeries) -> float:
    """No-change baseline over the next-day O,H,L,C targets of a test series"""
    if len(test) < 2:
        raise DataError(f"Baseline needs at least 2 test returns, got {len(test)}", code='EMPTY_SPLIT')
    return no_change_rmse(test.next_day_targets())


@dataclass
class EvalReport:
    rmse: float
    num_scored_steps: int
    config: ModelConfig
    baseline_rmse: float


def evaluate_model(model: Model, test: ReturnsSeries, warmup: int = 0,
                   train: Optional[ReturnsSeries] = None) -> EvalReport:
    """
    Score a model over a whole test series in one pass

    State carries across the year. With warmup > 0 the last `warmup`
    training rows run first to settle the state and are not scored. The
    prediction at step t is compared with the O,H,L,C returns of step t+1.
    """
    n = len(test)
    assert_(warmup >= 0, f"Warmup must be non-negative, got {warmup}")
    if n <= warmup + 1:
        raise DataError(f"Test series of {n} returns is too short for warmup {warmup}",
                        code='SERIES_TOO_SHORT')
    if warmup > 0:
        assert_(train is not None and len(train) >= warmup,
                f"Warmup of {warmup} rows needs a training series at least that long")
        sequence = np.vstack([train.inputs[-warmup:], test.inputs])
    else:
        sequence = test.inputs

    preds = model_forward(model, sequence).preds
    scored = preds[warmup:warmup + n - 1]
    targets = test.next_day_targets()
    return EvalReport(rmse(scored, targets), n - 1, model.config, naive_baseline_rmse(test))


@dataclass
class GridCell:
    layers: int
    size: int
    report: Optional[EvalReport] = None
    train_rmse: Optional[float] = None
    parameters: int = 0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.report is not None


@dataclass
class GridResult:
    cells: Dict[Tuple[int, int], GridCell]
    layers: Tuple[int, ...]
    sizes: Tuple[int, ...]
    baseline_rmse: float
    train_windows: int
    seed: int

    def failures(self) -> List[GridCell]:
        return [cell for cell in self.cells.values() if not cell.ok]

    def to_csv(self, path: str) -> None:
        """One row per cell; failed cells leave the numeric columns empty"""
        cells = [self.cells[key] for key in sorted(self.cells)]
        frame = pd.DataFrame({
            'layers': [cell.layers for cell in cells],
            'size': [cell.size for cell in cells],
            'rmse': [cell.report.rmse if cell.ok else np.nan for cell in cells],
            'baseline_rmse': [self.baseline_rmse] * len(cells),
            'seed': [self.seed] * len(cells),
            'train_rmse': [cell.train_rmse if cell.train_rmse is not None else np.nan for cell in cells],
            'parameters': [cell.parameters for cell in cells],
            'status': ['ok' if cell.ok else f"error: {cell.error}" for cell in cells],
        }, columns=GRID_COLUMNS)
        frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')

    def to_table(self) -> str:
        """Aligned text table in the published layout, with reference values beside it"""
        width = 10
        head = f"{'Hidden Layers':<14}" + ''.join(f"{s:>{width}}" for s in self.sizes)
        lines = ['Test returns RMSE by network shape',
                 f"{'':<14}{'Hidden Layer Size':>{width * len(self.sizes)}}", head]
        for n_layers in self.layers:
            row = f"{n_layers:<14}"
            for size in self.sizes:
                cell = self.cells[(n_layers, size)]
                row += f"{fmt_table(cell.report.rmse) if cell.ok else 'failed':>{width}}"
            lines.append(row)
        lines.append(f"No-change baseline: {fmt_table(self.baseline_rmse)}")
        lines.append('')
        lines.append('Published reference (context only)')
        lines.append(head)
        for n_layers in self.layers:
            row = f"{n_layers:<14}"
            for size in self.sizes:
                value = PUBLISHED_RMSE.get((n_layers, size))
                row += f"{fmt_table(value) if value is not None else '-':>{width}}"
            lines.append(row)
        lines.append(f"No-change baseline: {fmt_table(PUBLISHED_BASELINE)}")
        lines.append('')
        lines.append(f"Unique training windows at the final stage: {self.train_windows}")
        for key in sorted(self.cells):
            cell = self.cells[key]
            detail = (f"train rmse {fmt_table(cell.train_rmse)}" if cell.train_rmse is not None
                      else f"error: {cell.error}")
            lines.append(f"  {key[0]}x{key[1]}: {cell.parameters} parameters, {detail}")
        return '\n'.join(lines) + '\n'


def _run_cell(train: ReturnsSeries, test: ReturnsSeries, cfg: TrainConfig,
              n_layers: int, size: int, warmup: int) -> GridCell:
    cell = GridCell(n_layers, size)
    try:
        cell_cfg = dataclasses.replace(
            cfg, model=ModelConfig(n_layers, size, cfg.model.input_dim, cfg.model.output_dim),
            checkpoint_path=None)
        model, _, _ = train_on_series(train, cell_cfg)
        cell.parameters = model.parameter_count()
        cell.report = evaluate_model(model, test, warmup, train)
        cell.train_rmse = evaluate_model(model, train).rmse
        logger.info(f"Grid cell {n_layers}x{size}: rmse {cell.report.rmse:.4f}")
    except Exception as e:
        cell.error = str(e) or type(e).__name__
        logger.error(f"Grid cell {n_layers}x{size} failed: {cell.error}")
    return cell


def run_grid(data_csv: str, layers_set: Sequence[int] = GRID_LAYERS,
             sizes_set: Sequence[int] = GRID_SIZES, cfg: Optional[TrainConfig] = None,
             warmup: int = 0, jobs: int = 1) -> GridResult:
    """
    Train and score every (layers, size) combination

    Each cell owns its rng, model and optimiser, all derived from cfg.seed,
    so cells give the same result whether they run serially or in parallel.
    A failing cell keeps its error and the others still run.
    """
    assert_(cfg is not None, "run_grid needs a TrainConfig")
    assert_(len(layers_set) >= 1 and len(sizes_set) >= 1, "Grid needs at least one layer count and size")
    series = to_returns(read_csv_file(data_csv))
    train, test = split_by_date(series, cfg.train_range[0], cfg.train_range[1],
                                cfg.test_range[0], cfg.test_range[1])
    baseline = naive_baseline_rmse(test)
    keys = [(n_layers, size) for n_layers in layers_set for size in sizes_set]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {key: pool.submit(_run_cell, train, test, cfg, key[0], key[1], warmup) for key in keys}
            cells = {key: future.result() for key, future in futures.items()}
    else:
        cells = {key: _run_cell(train, test, cfg, key[0], key[1], warmup) for key in keys}

    fitting = [s.window_length for s in cfg.schedule.stages if window_count(len(train), s.window_length) > 0]
    train_windows = window_count(len(train), fitting[-1]) if fitting else 0
    return GridResult(cells, tuple(layers_set), tuple(sizes_set), baseline, train_windows, cfg.seed)
