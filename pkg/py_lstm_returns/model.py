#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
LSTM Returns Model

Stacked LSTM layers feed one dense layer that is shared across timesteps.
"""

from dataclasses import dataclass, asdict
from typing import Dict, Iterator, List, NamedTuple, Tuple

import numpy as np

from .layers import (
    DenseGrads, DenseParams, LstmGrads, LstmParams, LstmTrace,
    dense_backward, dense_forward, lstm_backward, lstm_forward,
)
from .utils import ContractError, assert_, shape_str


INPUT_DIM = 5    # open, high, low, close, volume returns
OUTPUT_DIM = 4   # next-day open, high, low, close returns


@dataclass(frozen=True)
class ModelConfig:
    """Architecture of a stacked model"""
    num_lstm_layers: int
    hidden_dim: int
    input_dim: int = INPUT_DIM
    output_dim: int = OUTPUT_DIM

    def __post_init__(self):
        for name in ('num_lstm_layers', 'hidden_dim', 'input_dim', 'output_dim'):
            value = getattr(self, name)
            assert_(isinstance(value, (int, np.integer)) and value >= 1,
                    f"ModelConfig.{name} must be a positive integer, got {value!r}")

    def layer_input_dim(self, k: int) -> int:
        return self.input_dim if k == 0 else self.hidden_dim

    def to_dict(self) -> Dict[str, int]:
        return {key: int(value) for key, value in asdict(self).items()}


def expected_parameter_count(config: ModelConfig) -> int:
    """4·(h·d + h·h + h) per LSTM layer plus out·h + out for the dense layer"""
    h = config.hidden_dim
    total = 0
    for k in range(config.num_lstm_layers):
        d = config.layer_input_dim(k)
        total += 4 * (h * d + h * h + h)
    return total + config.output_dim * h + config.output_dim


@dataclass
class Model:
    """Stacked LSTM layers plus the shared dense output layer"""
    config: ModelConfig
    lstm_layers: List[LstmParams]
    dense: DenseParams

    def __post_init__(self):
        cfg = self.config
        assert_(len(self.lstm_layers) == cfg.num_lstm_layers,
                f"Model has {len(self.lstm_layers)} LSTM layers, config says {cfg.num_lstm_layers}")
        for k, layer in enumerate(self.lstm_layers):
            assert_(layer.input_dim == cfg.layer_input_dim(k) and layer.hidden_dim == cfg.hidden_dim,
                    f"LSTM layer {k} is {layer.input_dim}->{layer.hidden_dim}, "
                    f"config expects {cfg.layer_input_dim(k)}->{cfg.hidden_dim}")
        assert_(self.dense.in_dim == cfg.hidden_dim and self.dense.out_dim == cfg.output_dim,
                f"Dense layer is {self.dense.in_dim}->{self.dense.out_dim}, "
                f"config expects {cfg.hidden_dim}->{cfg.output_dim}")

    @classmethod
    def zeros(cls, config: ModelConfig) -> 'Model':
        """All-zero parameters; predicts exactly zero returns"""
        layers = [LstmParams.zeros(config.layer_input_dim(k), config.hidden_dim)
                  for k in range(config.num_lstm_layers)]
        return cls(config, layers, DenseParams.zeros(config.hidden_dim, config.output_dim))

    def named_tensors(self) -> Iterator[Tuple[str, np.ndarray]]:
        """Every learnable tensor, by reference, in the pinned order"""
        for k, layer in enumerate(self.lstm_layers):
            for name, value in layer.named_tensors():
                yield f'lstm.{k}.{name}', value
        for name, value in self.dense.named_tensors():
            yield f'dense.{name}', value

    def parameter_count(self) -> int:
        return sum(value.size for _, value in self.named_tensors())

    def copy(self) -> 'Model':
        layers = [LstmParams(**{name: value.copy() for name, value in layer.named_tensors()})
                  for layer in self.lstm_layers]
        return Model(self.config, layers, DenseParams(self.dense.W.copy(), self.dense.b.copy()))


@dataclass
class ModelGrads:
    """Per-parameter gradients, congruent with Model.named_tensors()"""
    lstm: List[LstmGrads]
    dense: DenseGrads

    def named_tensors(self) -> Iterator[Tuple[str, np.ndarray]]:
        for k, layer in enumerate(self.lstm):
            for name, value in layer.named_tensors():
                yield f'lstm.{k}.{name}', value
        for name, value in self.dense.named_tensors():
            yield f'dense.{name}', value

    def as_dict(self) -> Dict[str, np.ndarray]:
        return dict(self.named_tensors())


class ForwardResult(NamedTuple):
    preds: np.ndarray
    traces: List[LstmTrace]
    hidden: np.ndarray


def model_forward(m: Model, x: np.ndarray) -> ForwardResult:
    """
    Forward pass of the whole stack

    Args:
        m: model
        x: (T, input_dim) or (T, B, input_dim) returns

    Returns:
        ForwardResult of predictions (T[, B], output_dim), the per-layer
        traces and the top-layer outputs
    """
    x = np.asarray(x, dtype=np.float64)
    assert_(x.ndim in (2, 3) and x.shape[-1] == m.config.input_dim,
            f"Model input has shape {shape_str(x)}, expected width {m.config.input_dim}")
    traces = []
    h = x
    for layer in m.lstm_layers:
        h, trace = lstm_forward(layer, h)
        traces.append(trace)
    flat = h.reshape(-1, m.config.hidden_dim)
    preds = dense_forward(m.dense, flat).reshape(h.shape[:-1] + (m.config.output_dim,))
    return ForwardResult(preds, traces, h)


def mse_loss(preds: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean of squared errors over every timestep and component, with its gradient"""
    preds = np.asarray(preds, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if preds.shape != targets.shape:
        raise ContractError(f"mse_loss shape mismatch: {shape_str(preds)} vs {shape_str(targets)}")
    assert_(preds.size >= 1 and preds.shape[0] >= 1, "mse_loss needs at least one timestep")
    diff = preds - targets
    loss = float(np.mean(diff * diff))
    return loss, 2.0 * diff / diff.size


def model_gradients(m: Model, x: np.ndarray, targets: np.ndarray) -> Tuple[float, ModelGrads]:
    """
    Loss and exact gradient of mse_loss∘model_forward

    For a batched input the loss is the mean over all sequences, so the
    gradient is the mean of the per-sequence gradients.
    """
    result = model_forward(m, x)
    loss, dpreds = mse_loss(result.preds, targets)

    hidden = m.config.hidden_dim
    flat_h = result.hidden.reshape(-1, hidden)
    dense_grads, dflat = dense_backward(m.dense, flat_h, dpreds.reshape(-1, m.config.output_dim))
    dy = dflat.reshape(result.hidden.shape)

    lstm_grads: List[LstmGrads] = [None] * len(m.lstm_layers)
    for k in reversed(range(len(m.lstm_layers))):
        lstm_grads[k], dy = lstm_backward(m.lstm_layers[k], result.traces[k], dy)
    return loss, ModelGrads(lstm_grads, dense_grads)
