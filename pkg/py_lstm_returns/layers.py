#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
LSTM Returns Layers

One LSTM layer iterates, for t = 1..T,

    c_t = g(W_cx x_t + W_cy y_{t-1} + b_c)
    i_t = σ(W_ix x_t + W_iy y_{t-1} + b_i)
    f_t = σ(W_fx x_t + W_fy y_{t-1} + b_f)
    o_t = σ(W_ox x_t + W_oy y_{t-1} + b_o)
    S_t = i_t ⊙ c_t + f_t ⊙ S_{t-1}
    y_t = o_t ⊙ φ(S_t)

with σ the hard sigmoid and g = φ = tanh. Sequences are time-major: an
unbatched sequence is (T, d), a batched one (T, B, d).
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from .ndmath import hadamard, matmul
from .utils import ContractError, assert_, shape_str


GATES = ('c', 'i', 'f', 'o')


def hard_sigmoid(x):
    """0 for x ≤ -2.5, 0.2x + 0.5 in between, 1 for x ≥ 2.5"""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x <= -2.5, 0.0, np.where(x >= 2.5, 1.0, 0.2 * x + 0.5))


def hard_sigmoid_deriv(x):
    """0.2 strictly inside (-2.5, 2.5); 0 on the saturated sides and at the kinks"""
    x = np.asarray(x, dtype=np.float64)
    return np.where((x > -2.5) & (x < 2.5), 0.2, 0.0)


def g(x: np.ndarray) -> np.ndarray:
    """Candidate nonlinearity"""
    return np.tanh(x)


def phi(x: np.ndarray) -> np.ndarray:
    """Output nonlinearity"""
    return np.tanh(x)


@dataclass
class LstmParams:
    """Learnable tensors of one LSTM layer"""
    W_cx: np.ndarray
    W_ix: np.ndarray
    W_fx: np.ndarray
    W_ox: np.ndarray
    W_cy: np.ndarray
    W_iy: np.ndarray
    W_fy: np.ndarray
    W_oy: np.ndarray
    b_c: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray

    # Pinned order, shared by initialisation, checkpoints and the optimiser
    TENSOR_NAMES = ('W_cx', 'W_ix', 'W_fx', 'W_ox',
                    'W_cy', 'W_iy', 'W_fy', 'W_oy',
                    'b_c', 'b_i', 'b_f', 'b_o')

    def __post_init__(self):
        assert_(np.ndim(self.W_cx) == 2, f"LSTM tensor W_cx must be 2-D, got {shape_str(self.W_cx)}")
        h, d = np.shape(self.W_cx)
        for name in self.TENSOR_NAMES:
            value = np.array(getattr(self, name), dtype=np.float64)
            setattr(self, name, value)
            if name.startswith('b_'):
                expected: Tuple[int, ...] = (h,)
            elif name.endswith('x'):
                expected = (h, d)
            else:
                expected = (h, h)
            assert_(value.shape == expected,
                    f"LSTM tensor {name} has shape {shape_str(value)}, expected {'x'.join(map(str, expected))}")
            assert_(bool(np.all(np.isfinite(value))), f"LSTM tensor {name} has non-finite entries")

    @property
    def input_dim(self) -> int:
        return self.W_cx.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.W_cx.shape[0]

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int) -> 'LstmParams':
        tensors = {}
        for name in cls.TENSOR_NAMES:
            if name.startswith('b_'):
                tensors[name] = np.zeros(hidden_dim)
            elif name.endswith('x'):
                tensors[name] = np.zeros((hidden_dim, input_dim))
            else:
                tensors[name] = np.zeros((hidden_dim, hidden_dim))
        return cls(**tensors)

    def named_tensors(self) -> Iterator[Tuple[str, np.ndarray]]:
        for name in self.TENSOR_NAMES:
            yield name, getattr(self, name)


@dataclass
class LstmGrads:
    """Gradients congruent with LstmParams"""
    tensors: Dict[str, np.ndarray]

    @classmethod
    def zeros_like(cls, p: LstmParams) -> 'LstmGrads':
        return cls({name: np.zeros_like(value) for name, value in p.named_tensors()})

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def named_tensors(self) -> Iterator[Tuple[str, np.ndarray]]:
        for name in LstmParams.TENSOR_NAMES:
            yield name, self.tensors[name]


@dataclass
class LstmTrace:
    """
    Everything lstm_forward computed, stored time-major as (T, B, h)

    x is a private copy of the input so the backward pass never depends on
    the caller's buffers.
    """
    x: np.ndarray
    y0: np.ndarray
    S0: np.ndarray
    pre: Dict[str, np.ndarray]      # gate -> pre-activation
    act: Dict[str, np.ndarray]      # gate -> c_t / i_t / f_t / o_t
    S: np.ndarray
    phi_S: np.ndarray
    y: np.ndarray
    batched: bool = field(default=True)

    @property
    def steps(self) -> int:
        return self.x.shape[0]

    def y_prev(self, t: int) -> np.ndarray:
        return self.y0 if t == 0 else self.y[t - 1]

    def S_prev(self, t: int) -> np.ndarray:
        return self.S0 if t == 0 else self.S[t - 1]


def _as_batched(x: np.ndarray, width: int, what: str) -> Tuple[np.ndarray, bool]:
    """View an unbatched (T, d) sequence as (T, 1, d)"""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x, batched = x[:, None, :], False
    elif x.ndim == 3:
        batched = True
    else:
        raise ContractError(f"{what} must be (T, d) or (T, B, d), got {shape_str(x)}")
    assert_(x.shape[0] >= 1, f"{what} must have at least one timestep")
    assert_(x.shape[2] == width, f"{what} width {x.shape[2]} does not match expected {width}")
    return x, batched


def _initial_state(value: Optional[np.ndarray], batch: int, hidden: int, what: str) -> np.ndarray:
    if value is None:
        return np.zeros((batch, hidden))
    value = np.asarray(value, dtype=np.float64)
    if value.ndim == 1:
        value = np.broadcast_to(value, (batch, value.shape[0]))
    assert_(value.shape == (batch, hidden),
            f"{what} has shape {shape_str(value)}, expected {batch}x{hidden}")
    return np.array(value)


def lstm_forward(p: LstmParams, x: np.ndarray,
                 y0: Optional[np.ndarray] = None,
                 S0: Optional[np.ndarray] = None) -> Tuple[np.ndarray, LstmTrace]:
    """
    Run the LSTM recurrence over a sequence

    Args:
        p: layer parameters
        x: (T, input_dim) or (T, B, input_dim)
        y0, S0: initial output and state, zeros when omitted

    Returns:
        Tuple of (y, trace); y has the batching of x
    """
    xb, batched = _as_batched(x, p.input_dim, 'LSTM input')
    steps, batch, _ = xb.shape
    h = p.hidden_dim
    y_prev = _initial_state(y0, batch, h, 'y0')
    S_prev = _initial_state(S0, batch, h, 'S0')
    trace = LstmTrace(
        x=xb.copy(), y0=y_prev.copy(), S0=S_prev.copy(),
        pre={gate: np.empty((steps, batch, h)) for gate in GATES},
        act={gate: np.empty((steps, batch, h)) for gate in GATES},
        S=np.empty((steps, batch, h)), phi_S=np.empty((steps, batch, h)),
        y=np.empty((steps, batch, h)), batched=batched,
    )

    for t in range(steps):
        x_t = trace.x[t]
        for gate in GATES:
            W_x = getattr(p, f'W_{gate}x')
            W_y = getattr(p, f'W_{gate}y')
            b = getattr(p, f'b_{gate}')
            trace.pre[gate][t] = matmul(x_t, W_x.T) + matmul(y_prev, W_y.T) + b
        c_t = g(trace.pre['c'][t])
        i_t = hard_sigmoid(trace.pre['i'][t])
        f_t = hard_sigmoid(trace.pre['f'][t])
        o_t = hard_sigmoid(trace.pre['o'][t])
        S_t = hadamard(i_t, c_t) + hadamard(f_t, S_prev)
        phi_t = phi(S_t)
        y_t = hadamard(o_t, phi_t)

        trace.act['c'][t], trace.act['i'][t] = c_t, i_t
        trace.act['f'][t], trace.act['o'][t] = f_t, o_t
        trace.S[t], trace.phi_S[t], trace.y[t] = S_t, phi_t, y_t
        y_prev, S_prev = y_t, S_t

    y = trace.y if batched else trace.y[:, 0, :]
    return y.copy(), trace


def lstm_backward(p: LstmParams, trace: LstmTrace,
                  dy: np.ndarray) -> Tuple[LstmGrads, np.ndarray]:
    """
    Backpropagation through time over a full trace

    dy is the upstream gradient of every y_t. Gradients reach y_{t-1} both
    through the recurrent weights and through S_{t-1}.

    Returns:
        Tuple of (grads, dx); dx has the batching of the forward input
    """
    dyb = np.asarray(dy, dtype=np.float64)
    if not trace.batched:
        assert_(dyb.ndim == 2, f"dy must be (T, h) for an unbatched trace, got {shape_str(dyb)}")
        dyb = dyb[:, None, :]
    assert_(dyb.shape == trace.y.shape,
            f"dy shape {shape_str(dyb)} does not match outputs {shape_str(trace.y)}")
    assert_(p.hidden_dim == trace.y.shape[2] and p.input_dim == trace.x.shape[2],
            "Trace was not produced by these parameters")

    grads = LstmGrads.zeros_like(p)
    dx = np.zeros_like(trace.x)
    dy_rec = np.zeros_like(trace.y0)
    dS_next = np.zeros_like(trace.S0)

    for t in reversed(range(trace.steps)):
        dy_t = dyb[t] + dy_rec
        o_t, c_t = trace.act['o'][t], trace.act['c'][t]
        i_t, f_t = trace.act['i'][t], trace.act['f'][t]
        phi_t = trace.phi_S[t]

        dS = hadamard(hadamard(dy_t, o_t), 1.0 - phi_t * phi_t) + dS_next
        dpre = {
            'c': hadamard(hadamard(dS, i_t), 1.0 - c_t * c_t),
            'i': hadamard(hadamard(dS, c_t), hard_sigmoid_deriv(trace.pre['i'][t])),
            'f': hadamard(hadamard(dS, trace.S_prev(t)), hard_sigmoid_deriv(trace.pre['f'][t])),
            'o': hadamard(hadamard(dy_t, phi_t), hard_sigmoid_deriv(trace.pre['o'][t])),
        }
        dS_next = hadamard(dS, f_t)

        x_t, y_prev = trace.x[t], trace.y_prev(t)
        dy_rec = np.zeros_like(dy_rec)
        for gate in GATES:
            d = dpre[gate]
            grads.tensors[f'W_{gate}x'] += matmul(d.T, x_t)
            grads.tensors[f'W_{gate}y'] += matmul(d.T, y_prev)
            grads.tensors[f'b_{gate}'] += d.sum(axis=0)
            dx[t] += matmul(d, getattr(p, f'W_{gate}x'))
            dy_rec += matmul(d, getattr(p, f'W_{gate}y'))

    return grads, (dx if trace.batched else dx[:, 0, :])


@dataclass
class DenseParams:
    """Per-timestep output layer, W: out_dim x in_dim"""
    W: np.ndarray
    b: np.ndarray

    TENSOR_NAMES = ('W', 'b')

    def __post_init__(self):
        self.W = np.array(self.W, dtype=np.float64)
        self.b = np.array(self.b, dtype=np.float64)
        assert_(self.W.ndim == 2, f"Dense W must be 2-D, got {shape_str(self.W)}")
        assert_(self.b.shape == (self.W.shape[0],),
                f"Dense b has shape {shape_str(self.b)}, expected {self.W.shape[0]}")
        assert_(bool(np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))),
                "Dense tensors have non-finite entries")

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    @classmethod
    def zeros(cls, in_dim: int, out_dim: int) -> 'DenseParams':
        return cls(np.zeros((out_dim, in_dim)), np.zeros(out_dim))

    def named_tensors(self) -> Iterator[Tuple[str, np.ndarray]]:
        yield 'W', self.W
        yield 'b', self.b


@dataclass
class DenseGrads:
    W: np.ndarray
    b: np.ndarray

    def named_tensors(self) -> Iterator[Tuple[str, np.ndarray]]:
        yield 'W', self.W
        yield 'b', self.b


def _as_rows(h: np.ndarray, width: int, what: str) -> Tuple[np.ndarray, bool]:
    h = np.asarray(h, dtype=np.float64)
    single = h.ndim == 1
    rows = h[None, :] if single else h
    assert_(rows.ndim == 2 and rows.shape[1] == width,
            f"{what} has shape {shape_str(h)}, expected width {width}")
    return rows, single


def dense_forward(p: DenseParams, h: np.ndarray) -> np.ndarray:
    """Linear map W·h + b; h may be one vector or a stack of row vectors"""
    rows, single = _as_rows(h, p.in_dim, 'Dense input')
    out = matmul(rows, p.W.T) + p.b
    return out[0] if single else out


def dense_backward(p: DenseParams, h: np.ndarray,
                   dout: np.ndarray) -> Tuple[DenseGrads, np.ndarray]:
    """dW = Σ dout·hᵀ, db = Σ dout, dh = Wᵀ·dout (sums run over stacked rows)"""
    rows, single = _as_rows(h, p.in_dim, 'Dense input')
    drows, _ = _as_rows(dout, p.out_dim, 'Dense upstream gradient')
    assert_(drows.shape[0] == rows.shape[0],
            f"Dense upstream gradient rows {drows.shape[0]} do not match inputs {rows.shape[0]}")
    grads = DenseGrads(W=matmul(drows.T, rows), b=drows.sum(axis=0))
    dh = matmul(drows, p.W)
    return grads, (dh[0] if single else dh)
