#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
LSTM Returns Training

Curriculum over window lengths 2, 4, ..., 256 with one shared ADAM state,
plus checkpoint persistence.
"""

import copy
import json
import math
import datetime as dt
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from .data import (
    TEST_RANGE, TRAIN_RANGE, ReturnsSeries,
    make_batches, make_windows, read_csv_file, split_by_date, to_returns, window_count,
)
from .init import build_model
from .model import Model, ModelConfig, model_gradients
from .ndmath import RngState
from .optim import AdamState, adam_step
from .utils import CheckpointError, ContractError, NumericalError, SevereError, TrainingError, assert_, check_finite


DEFAULT_BATCH_SIZE = 20
MAX_WINDOW_LENGTH = 256
FINAL_STAGE_EPOCHS = 100

CHECKPOINT_MAGIC = 'LSTM-RETURNS-CHECKPOINT'
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Stage:
    window_length: int
    epochs: int


@dataclass(frozen=True)
class CurriculumSchedule:
    """Window lengths doubling from 2, each with its epoch count"""
    stages: Tuple[Stage, ...]

    def __post_init__(self):
        assert_(len(self.stages) >= 1, "A curriculum needs at least one stage")
        assert_(self.stages[0].window_length == 2,
                f"Curriculum must start at length 2, got {self.stages[0].window_length}")
        for prev, cur in zip(self.stages, self.stages[1:]):
            assert_(cur.window_length == 2 * prev.window_length,
                    f"Curriculum lengths must double: {prev.window_length} -> {cur.window_length}")
        for stage in self.stages:
            assert_(stage.epochs >= 1, f"Stage {stage.window_length} needs at least one epoch")

    @property
    def max_length(self) -> int:
        return self.stages[-1].window_length

    def total_epochs(self) -> int:
        return sum(stage.epochs for stage in self.stages)


def truncated_schedule(max_length: int, final_epochs: int = FINAL_STAGE_EPOCHS) -> CurriculumSchedule:
    """Doubling stages 2..max_length, one epoch each, `final_epochs` on the last"""
    assert_(2 <= max_length <= MAX_WINDOW_LENGTH and max_length & (max_length - 1) == 0,
            f"max_length must be a power of two in [2, {MAX_WINDOW_LENGTH}], got {max_length}")
    lengths = [2 ** k for k in range(1, int(math.log2(max_length)) + 1)]
    stages = [Stage(length, 1) for length in lengths[:-1]]
    stages.append(Stage(lengths[-1], final_epochs))
    return CurriculumSchedule(tuple(stages))


def default_schedule() -> CurriculumSchedule:
    """(2,1), (4,1), ..., (128,1), (256,100)"""
    return truncated_schedule(MAX_WINDOW_LENGTH, FINAL_STAGE_EPOCHS)


@dataclass(frozen=True)
class TrainConfig:
    model: ModelConfig
    seed: int = 0
    batch_size: int = DEFAULT_BATCH_SIZE
    schedule: CurriculumSchedule = field(default_factory=default_schedule)
    train_range: Tuple[dt.date, dt.date] = TRAIN_RANGE
    test_range: Tuple[dt.date, dt.date] = TEST_RANGE
    reset_adam_per_stage: bool = False
    checkpoint_path: Optional[str] = None

    def __post_init__(self):
        assert_(self.batch_size >= 1, f"Batch size must be positive, got {self.batch_size}")
        assert_(0 <= self.seed < 2 ** 64, f"Seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass
class EpochRecord:
    window_length: int
    epoch: int
    mean_loss: float
    steps: int


@dataclass
class TrainingHistory:
    epochs: List[EpochRecord] = field(default_factory=list)
    skipped: List[int] = field(default_factory=list)

    def stage_lengths(self) -> List[int]:
        lengths: List[int] = []
        for record in self.epochs:
            if not lengths or lengths[-1] != record.window_length:
                lengths.append(record.window_length)
        return lengths

    def stage_means(self) -> List[Tuple[int, float]]:
        """(window length, mean of that stage's epoch losses)"""
        return [(length, float(np.mean([r.mean_loss for r in self.epochs if r.window_length == length])))
                for length in self.stage_lengths()]

    def total_steps(self) -> int:
        return sum(r.steps for r in self.epochs)

    def to_csv(self, path: str) -> None:
        """One row per epoch; `stage` is the window length"""
        frame = pd.DataFrame({
            'stage': [r.window_length for r in self.epochs],
            'epoch': [r.epoch for r in self.epochs],
            'mean_loss': [r.mean_loss for r in self.epochs],
        }, columns=['stage', 'epoch', 'mean_loss'])
        frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'stages': [{'window_length': length, 'mean_loss': loss} for length, loss in self.stage_means()],
            'epochs': [[r.window_length, r.epoch, r.mean_loss, r.steps] for r in self.epochs],
            'skipped': list(self.skipped),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> 'TrainingHistory':
        epochs = [EpochRecord(int(w), int(e), float(loss), int(s)) for w, e, loss, s in payload.get('epochs', [])]
        return cls(epochs, [int(x) for x in payload.get('skipped', [])])


def train_stage(model: Model, series: ReturnsSeries, stage: Stage, cfg: TrainConfig,
                adam: AdamState, rng: RngState,
                history: Optional[TrainingHistory] = None) -> List[float]:
    """
    Train one curriculum stage

    Every epoch reshuffles the stage's windows, and each batch contributes
    one ADAM step on its mean gradient. Each window starts from zero state.

    Returns:
        Mean training loss of every epoch (weighted by window)
    """
    windows = make_windows(series, stage.window_length, stride=1)
    params = dict(model.named_tensors())
    losses: List[float] = []
    for epoch in range(1, stage.epochs + 1):
        total, steps = 0.0, 0
        for batch in make_batches(windows, cfg.batch_size, rng):
            loss, grads = model_gradients(model, batch.inputs(), batch.targets())
            if not math.isfinite(loss):
                raise TrainingError(f"Non-finite loss at stage L={stage.window_length}, "
                                    f"epoch {epoch}, step {steps + 1}", history)
            adam_step(adam, params, grads.as_dict())
            total += loss * len(batch)
            steps += 1
        mean_loss = total / len(windows)
        losses.append(mean_loss)
        if history is not None:
            history.epochs.append(EpochRecord(stage.window_length, epoch, mean_loss, steps))
        logger.debug(f"L={stage.window_length} epoch {epoch}/{stage.epochs}: "
                     f"loss {mean_loss:.6g} over {steps} steps")
    return losses


@dataclass
class Checkpoint:
    """Model config, every parameter tensor, optional ADAM state and history"""
    config: ModelConfig
    seed: int
    tensors: Dict[str, np.ndarray]
    adam: Optional[AdamState] = None
    history: TrainingHistory = field(default_factory=TrainingHistory)
    version: int = CHECKPOINT_VERSION

    @classmethod
    def from_model(cls, model: Model, seed: int, adam: Optional[AdamState] = None,
                   history: Optional[TrainingHistory] = None) -> 'Checkpoint':
        return cls(model.config, seed, {name: value.copy() for name, value in model.named_tensors()},
                   copy.deepcopy(adam), history or TrainingHistory())

    def to_model(self) -> Model:
        """Rebuild the model; tensors are checked against the stored config"""
        template = Model.zeros(self.config)
        for name, value in template.named_tensors():
            if name not in self.tensors:
                raise CheckpointError(f"Checkpoint is missing tensor {name}")
            stored = self.tensors[name]
            if stored.shape != value.shape:
                raise CheckpointError(f"Tensor {name} has shape {stored.shape}, config implies {value.shape}")
            _require_finite(stored, f"tensor {name}")
            value[...] = stored
        extra = set(self.tensors) - {name for name, _ in template.named_tensors()}
        if extra:
            raise CheckpointError(f"Checkpoint has unexpected tensor {sorted(extra)[0]}")
        return template


def train_on_series(series: ReturnsSeries, cfg: TrainConfig) -> Tuple[Model, Checkpoint, TrainingHistory]:
    """
    Build a model from the seed and run every stage that fits the series

    Stages whose windows need more rows than the series has are skipped
    with a warning.
    """
    rng = RngState(cfg.seed)
    model = build_model(cfg.model, rng)
    adam = AdamState.for_params(model.named_tensors())
    history = TrainingHistory()

    for index, stage in enumerate(cfg.schedule.stages):
        if window_count(len(series), stage.window_length) == 0:
            logger.warning(f"Skipping stage L={stage.window_length}: "
                           f"{len(series)} training returns, {stage.window_length + 1} needed")
            history.skipped.append(stage.window_length)
            continue
        if cfg.reset_adam_per_stage and index > 0:
            adam.reset()
        try:
            losses = train_stage(model, series, stage, cfg, adam, rng, history)
        except TrainingError:
            raise
        except SevereError as e:
            raise TrainingError(f"Stage L={stage.window_length} failed: {e}", history) from e
        logger.info(f"Stage L={stage.window_length}: {stage.epochs} epochs, final loss {losses[-1]:.6g}")

    if not history.epochs:
        raise TrainingError(f"No curriculum stage fits {len(series)} training returns", history)
    return model, Checkpoint.from_model(model, cfg.seed, adam, history), history


def train_full(data_csv: str, cfg: TrainConfig) -> Tuple[Model, Checkpoint, TrainingHistory]:
    """Load a CSV, take the training range, train, and write the checkpoint if a path is set"""
    series = to_returns(read_csv_file(data_csv))
    train, _ = split_by_date(series, cfg.train_range[0], cfg.train_range[1],
                             cfg.test_range[0], cfg.test_range[1])
    model, checkpoint, history = train_on_series(train, cfg)
    if cfg.checkpoint_path:
        save_checkpoint(checkpoint, cfg.checkpoint_path)
    return model, checkpoint, history


# Checkpoint encoding: every float64 as its big-endian IEEE-754 bit pattern in hex

def _encode_tensor(name: str, value: np.ndarray) -> Dict[str, Any]:
    return {'name': name, 'shape': list(value.shape),
            'data': np.ascontiguousarray(value, dtype='>f8').tobytes().hex()}


def _decode_tensor(entry: Dict[str, Any]) -> Tuple[str, np.ndarray]:
    try:
        name = str(entry['name'])
        shape = tuple(int(d) for d in entry['shape'])
        data = str(entry['data'])
    except (KeyError, TypeError, ValueError):
        raise CheckpointError(f"Malformed tensor entry {entry!r:.80}")
    expected = 16 * int(np.prod(shape, dtype=np.int64))
    if len(data) != expected:
        raise CheckpointError(f"Tensor {name} payload has {len(data)} hex digits, shape {shape} needs {expected}")
    try:
        raw = bytes.fromhex(data)
    except ValueError:
        raise CheckpointError(f"Tensor {name} payload is not hexadecimal")
    return name, np.frombuffer(raw, dtype='>f8').astype(np.float64).reshape(shape)


def _decode_tensors(entries: Any, what: str) -> Dict[str, np.ndarray]:
    if not isinstance(entries, list):
        raise CheckpointError(f"Field {what} must be a list of tensors")
    tensors: Dict[str, np.ndarray] = {}
    for entry in entries:
        name, value = _decode_tensor(entry)
        if name in tensors:
            raise CheckpointError(f"Tensor {name} appears twice in {what}")
        tensors[name] = value
    return tensors


def _require_finite(value: np.ndarray, what: str) -> None:
    try:
        check_finite(value, what)
    except NumericalError as e:
        raise CheckpointError(f"Checkpoint {what} holds NaN or Inf") from e


def checkpoint_to_text(ckpt: Checkpoint) -> str:
    body: Dict[str, Any] = {
        'config': ckpt.config.to_dict(),
        'seed': int(ckpt.seed),
        'tensors': [_encode_tensor(name, value) for name, value in ckpt.tensors.items()],
        'history': ckpt.history.to_dict(),
        'adam': None,
    }
    if ckpt.adam is not None:
        body['adam'] = {
            'step': ckpt.adam.t,
            'hyperparameters': ckpt.adam.hyperparameters(),
            'm': [_encode_tensor(name, value) for name, value in ckpt.adam.m.items()],
            'v': [_encode_tensor(name, value) for name, value in ckpt.adam.v.items()],
        }
    return f"{CHECKPOINT_MAGIC}\nversion {ckpt.version}\n{json.dumps(body, indent=1, sort_keys=True)}\n"


def checkpoint_from_text(text: str) -> Checkpoint:
    lines = text.split('\n', 2)
    if len(lines) < 3 or lines[0].strip() != CHECKPOINT_MAGIC:
        raise CheckpointError("Missing checkpoint magic line")
    version_line = lines[1].strip().split()
    if len(version_line) != 2 or version_line[0] != 'version' or not version_line[1].isdigit():
        raise CheckpointError(f"Malformed version line {lines[1]!r}")
    if int(version_line[1]) != CHECKPOINT_VERSION:
        raise CheckpointError(f"Checkpoint version {version_line[1]} is not supported "
                              f"(expected {CHECKPOINT_VERSION})")
    try:
        body = json.loads(lines[2])
    except json.JSONDecodeError as e:
        raise CheckpointError(f"Checkpoint body is truncated or malformed: {e.msg} at char {e.pos}")
    if not isinstance(body, dict):
        raise CheckpointError("Checkpoint body must be an object")

    for key in ('config', 'seed', 'tensors'):
        if key not in body:
            raise CheckpointError(f"Checkpoint is missing field {key}")
    try:
        config = ModelConfig(**{k: int(v) for k, v in body['config'].items()})
    except (AttributeError, TypeError, ValueError, ContractError) as e:
        raise CheckpointError(f"Field config is invalid: {e}")

    adam = None
    if body.get('adam') is not None:
        payload = body['adam']
        try:
            adam = AdamState(**{k: float(v) for k, v in payload['hyperparameters'].items()},
                             t=int(payload['step']))
        except (KeyError, TypeError, ValueError) as e:
            raise CheckpointError(f"Field adam is invalid: {e}")
        adam.m = _decode_tensors(payload.get('m'), 'adam.m')
        adam.v = _decode_tensors(payload.get('v'), 'adam.v')

    try:
        seed = int(body['seed'])
    except (TypeError, ValueError) as e:
        raise CheckpointError(f"Field seed is invalid: {e}")
    try:
        history = TrainingHistory.from_dict(body.get('history') or {})
    except (AttributeError, TypeError, ValueError) as e:
        raise CheckpointError(f"Field history is invalid: {e}")

    ckpt = Checkpoint(config, seed, _decode_tensors(body['tensors'], 'tensors'), adam, history)
    # Validates every tensor against the config
    ckpt.to_model()
    if adam is not None:
        for name, value in ckpt.tensors.items():
            for moment in ('m', 'v'):
                stored = getattr(adam, moment).get(name)
                if stored is None or stored.shape != value.shape:
                    raise CheckpointError(f"ADAM moment {moment} for tensor {name} is missing or mis-shaped")
                _require_finite(stored, f"ADAM moment {moment} of tensor {name}")
    return ckpt


def save_checkpoint(ckpt: Checkpoint, path: str) -> None:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(checkpoint_to_text(ckpt))
    logger.info(f"Checkpoint written to {path}")


def load_checkpoint(path: str) -> Checkpoint:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except FileNotFoundError:
        raise CheckpointError(f"Checkpoint not found: {path}", code='CKPT_NOT_FOUND')
    except (OSError, UnicodeDecodeError) as e:
        raise CheckpointError(f"Error reading checkpoint {path}: {e}")
    return checkpoint_from_text(text)
