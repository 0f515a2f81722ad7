#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
LSTM Returns Package
"""

from .ndmath import RngState, matmul, hadamard, gaussian_fill, uniform_fill, svd, svd_orthonormal_factor
from .layers import (
    LstmParams, LstmGrads, LstmTrace, DenseParams, DenseGrads,
    hard_sigmoid, lstm_forward, lstm_backward, dense_forward, dense_backward,
)
from .model import (
    ModelConfig, Model, ModelGrads, model_forward, model_gradients, mse_loss, expected_parameter_count,
)
from .init import glorot_uniform, orthogonal_recurrent, build_model
from .data import (
    OhlcvRecord, ReturnsSeries, WindowSample, Batch,
    parse_csv, read_csv_file, format_csv, to_returns, returns_to_prices,
    select_range, split_by_date, window_count, make_windows, make_batches,
)
from .optim import AdamState, adam_step
from .train import (
    Stage, CurriculumSchedule, TrainConfig, TrainingHistory, Checkpoint,
    default_schedule, truncated_schedule, train_stage, train_on_series, train_full,
    checkpoint_to_text, checkpoint_from_text, save_checkpoint, load_checkpoint,
)
from .evaluate import EvalReport, GridResult, rmse, naive_baseline_rmse, evaluate_model, run_grid
from .gradcheck import numerical_gradient, check_model_gradients
from .utils import (
    SevereError, ContractError, NumericalError, DataError, CheckpointError,
    ConfigMismatchError, TrainingError, assert_, configure_logging,
)

__version__ = '1.0.0'
__all__ = [
    # Numerics
    'RngState', 'matmul', 'hadamard', 'gaussian_fill', 'uniform_fill', 'svd', 'svd_orthonormal_factor',
    # Layers
    'LstmParams', 'LstmGrads', 'LstmTrace', 'DenseParams', 'DenseGrads',
    'hard_sigmoid', 'lstm_forward', 'lstm_backward', 'dense_forward', 'dense_backward',
    # Model
    'ModelConfig', 'Model', 'ModelGrads', 'model_forward', 'model_gradients', 'mse_loss',
    'expected_parameter_count',
    # Init
    'glorot_uniform', 'orthogonal_recurrent', 'build_model',
    # Data
    'OhlcvRecord', 'ReturnsSeries', 'WindowSample', 'Batch',
    'parse_csv', 'read_csv_file', 'format_csv', 'to_returns', 'returns_to_prices',
    'select_range', 'split_by_date', 'window_count', 'make_windows', 'make_batches',
    # Optimiser
    'AdamState', 'adam_step',
    # Training
    'Stage', 'CurriculumSchedule', 'TrainConfig', 'TrainingHistory', 'Checkpoint',
    'default_schedule', 'truncated_schedule', 'train_stage', 'train_on_series', 'train_full',
    'checkpoint_to_text', 'checkpoint_from_text', 'save_checkpoint', 'load_checkpoint',
    # Evaluation
    'EvalReport', 'GridResult', 'rmse', 'naive_baseline_rmse', 'evaluate_model', 'run_grid',
    # Gradient checking
    'numerical_gradient', 'check_model_gradients',
    # Utils
    'SevereError', 'ContractError', 'NumericalError', 'DataError', 'CheckpointError',
    'ConfigMismatchError', 'TrainingError', 'assert_', 'configure_logging',
]
