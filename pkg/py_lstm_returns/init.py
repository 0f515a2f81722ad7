#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
LSTM Returns Weight Initialisation

Feedforward matrices: Glorot uniform. Recurrent matrices: left singular
factor of a standard Gaussian matrix. Forget bias 1, all other biases 0.
"""

import math

import numpy as np
from loguru import logger

from .layers import DenseParams, LstmParams
from .model import Model, ModelConfig
from .ndmath import Matrix, RngState, gaussian_fill, svd_orthonormal_factor, uniform_fill
from .utils import assert_


def glorot_bound(n_in: int, n_out: int) -> float:
    return math.sqrt(6.0 / (n_in + n_out))


def glorot_uniform(rng: RngState, n_in: int, n_out: int) -> Matrix:
    """n_out x n_in matrix, uniform on ±√(6/(n_in+n_out))"""
    assert_(n_in >= 1 and n_out >= 1, f"Glorot fan sizes must be positive, got {n_in}, {n_out}")
    bound = glorot_bound(n_in, n_out)
    return uniform_fill(rng, n_out, n_in, -bound, bound)


def orthogonal_recurrent(rng: RngState, n: int) -> Matrix:
    """n x n orthonormal matrix from the SVD of a fresh Gaussian draw"""
    assert_(n >= 1, f"Recurrent size must be positive, got {n}")
    return svd_orthonormal_factor(gaussian_fill(rng, n, n))


def build_lstm_layer(rng: RngState, input_dim: int, hidden_dim: int) -> LstmParams:
    # Draw order: W_cx, W_ix, W_fx, W_ox, then W_cy, W_iy, W_fy, W_oy
    feedforward = {f'W_{gate}x': glorot_uniform(rng, input_dim, hidden_dim) for gate in 'cifo'}
    recurrent = {f'W_{gate}y': orthogonal_recurrent(rng, hidden_dim) for gate in 'cifo'}
    return LstmParams(
        **feedforward, **recurrent,
        b_c=np.zeros(hidden_dim),
        b_i=np.zeros(hidden_dim),
        b_f=np.ones(hidden_dim),
        b_o=np.zeros(hidden_dim),
    )


def build_model(config: ModelConfig, rng: RngState) -> Model:
    """
    Initialise every tensor of a model

    RNG consumption is pinned: layer by layer, then the dense layer, so a
    seed fully determines the model.
    """
    logger.debug(f"Initialising {config.num_lstm_layers}x{config.hidden_dim} model (seed {rng.seed})")
    layers = [build_lstm_layer(rng, config.layer_input_dim(k), config.hidden_dim)
              for k in range(config.num_lstm_layers)]
    dense = DenseParams(glorot_uniform(rng, config.hidden_dim, config.output_dim),
                        np.zeros(config.output_dim))
    return Model(config, layers, dense)
