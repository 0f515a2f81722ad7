#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
LSTM Returns Gradient Checking

Central finite differences over model parameters, compared against the
analytic BPTT gradients.
"""

from typing import Callable, Dict

import numpy as np

from .model import Model, model_forward, model_gradients, mse_loss


FD_STEP = 1e-5
REL_ERROR_FLOOR = 1e-8


def numerical_gradient(loss_fn: Callable[[], float], param: np.ndarray,
                       step: float = FD_STEP) -> np.ndarray:
    """(f(θ+h) - f(θ-h)) / 2h for every entry of `param`, perturbed in place"""
    grad = np.zeros_like(param)
    for idx in np.ndindex(param.shape):
        original = param[idx]
        param[idx] = original + step
        plus = loss_fn()
        param[idx] = original - step
        minus = loss_fn()
        param[idx] = original
        grad[idx] = (plus - minus) / (2.0 * step)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = REL_ERROR_FLOOR) -> np.ndarray:
    """|a - b| / max(|a|, |b|, floor), elementwise"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def max_relative_error(a: np.ndarray, b: np.ndarray, floor: float = REL_ERROR_FLOOR) -> float:
    return float(np.max(relative_error(a, b, floor)))


def check_model_gradients(model: Model, x: np.ndarray, targets: np.ndarray,
                          step: float = FD_STEP) -> Dict[str, float]:
    """
    Max relative error between analytic and numerical gradients

    Returns:
        Dict of tensor name -> max relative error
    """
    _, grads = model_gradients(model, x, targets)
    analytic = grads.as_dict()

    def loss_fn() -> float:
        return mse_loss(model_forward(model, x).preds, targets)[0]

    return {name: max_relative_error(analytic[name], numerical_gradient(loss_fn, value, step))
            for name, value in model.named_tensors()}
