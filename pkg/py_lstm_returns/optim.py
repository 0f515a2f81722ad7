#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
LSTM Returns ADAM Optimiser
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Tuple

import numpy as np

from .utils import assert_, check_finite, shape_str


ADAM_DEFAULTS = {'alpha': 0.001, 'beta1': 0.9, 'beta2': 0.999, 'eps': 1e-8}


@dataclass
class AdamState:
    """Step count, moment estimates and hyperparameters"""
    alpha: float = ADAM_DEFAULTS['alpha']
    beta1: float = ADAM_DEFAULTS['beta1']
    beta2: float = ADAM_DEFAULTS['beta2']
    eps: float = ADAM_DEFAULTS['eps']
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: Iterable[Tuple[str, np.ndarray]], **hyper) -> 'AdamState':
        """Fresh state with zero moments congruent with every parameter"""
        state = cls(**hyper)
        for name, value in params:
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        return state

    def reset(self) -> None:
        """Zero the moments and the step count, keeping the hyperparameters"""
        self.t = 0
        for name in self.m:
            self.m[name] = np.zeros_like(self.m[name])
            self.v[name] = np.zeros_like(self.v[name])

    def hyperparameters(self) -> Dict[str, float]:
        return {'alpha': self.alpha, 'beta1': self.beta1, 'beta2': self.beta2, 'eps': self.eps}


def adam_step(state: AdamState, params: Mapping[str, np.ndarray],
              grads: Mapping[str, np.ndarray]) -> AdamState:
    """
    One bias-corrected ADAM update, applied to `params` in place

    Args:
        state: optimiser state, advanced by one step
        params: name -> parameter array (updated in place)
        grads: name -> gradient array of the same shape

    Returns:
        The advanced state
    """
    assert_(set(params) == set(grads), "Parameters and gradients name different tensors")
    for name, grad in grads.items():
        assert_(params[name].shape == grad.shape,
                f"Gradient for {name} has shape {shape_str(grad)}, parameter is {shape_str(params[name])}")
        check_finite(grad, f"gradient for parameter tensor {name}")
        if name not in state.m:
            state.m[name] = np.zeros_like(params[name])
            state.v[name] = np.zeros_like(params[name])

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    for name, grad in grads.items():
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * grad
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * (grad * grad)
        state.m[name], state.v[name] = m, v
        m_hat = m / correction1
        v_hat = v / correction2
        params[name] -= state.alpha * m_hat / (np.sqrt(v_hat) + state.eps)
    return state
