#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
LSTM Returns Dense Linear Algebra

Matrices are 2-D float64 numpy arrays. Sampling goes through RngState, a
thin owner of a PCG64 bit generator so every stream is replayable from its
seed.
"""

from typing import Any, Dict, List, Tuple

import numpy as np

from .utils import ContractError, NumericalError, assert_, shape_str


Matrix = np.ndarray  # 2-D, dtype float64

# One-sided Jacobi settings
SVD_TOLERANCE = 1e-12
SVD_MAX_SWEEPS = 100


def as_matrix(values: Any) -> Matrix:
    """Convert nested sequences or arrays to a finite float64 matrix"""
    m = np.array(values, dtype=np.float64)
    assert_(m.ndim == 2, f"Expected a 2-D matrix, got shape {shape_str(m)}")
    assert_(m.shape[0] >= 1 and m.shape[1] >= 1, f"Matrix must be non-empty, got {shape_str(m)}")
    assert_(bool(np.all(np.isfinite(m))), "Matrix entries must be finite")
    return m


class RngState:
    """Seeded, single-owner random stream (PCG64)"""

    def __init__(self, seed: int):
        assert_(0 <= int(seed) < 2 ** 64, f"Seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def snapshot(self) -> Dict[str, Any]:
        """Capture the bit generator state"""
        return self.generator.bit_generator.state

    def restore(self, state: Dict[str, Any]) -> None:
        """Rewind to a state taken with snapshot()"""
        self.generator.bit_generator.state = state

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)


def _check_size(rows: int, cols: int) -> None:
    assert_(rows >= 1 and cols >= 1, f"Matrix size must be positive, got {rows}x{cols}")


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Standard matrix product a·b"""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ContractError(f"matmul dimension mismatch: {shape_str(a)} · {shape_str(b)}")
    return a @ b


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product of two arrays of identical shape"""
    if a.shape != b.shape:
        raise ContractError(f"hadamard shape mismatch: {shape_str(a)} vs {shape_str(b)}")
    return a * b


def gaussian_fill(rng: RngState, rows: int, cols: int) -> Matrix:
    """i.i.d. standard normal entries (ziggurat transform)"""
    _check_size(rows, cols)
    return rng.generator.standard_normal((rows, cols))


def uniform_fill(rng: RngState, rows: int, cols: int, lo: float, hi: float) -> Matrix:
    """i.i.d. uniform entries on [lo, hi)"""
    _check_size(rows, cols)
    assert_(lo < hi, f"uniform_fill needs lo < hi, got lo={lo} hi={hi}")
    samples = rng.generator.uniform(lo, hi, (rows, cols))
    # lo + (hi - lo) * u can round up to hi
    return np.minimum(samples, np.nextafter(hi, lo))


def _round_robin(n: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Pair schedule covering every (p, q) once per sweep, n/2 disjoint pairs per round"""
    size = n + (n % 2)
    players = list(range(size))
    rounds = []
    for _ in range(size - 1):
        p_idx, q_idx = [], []
        for k in range(size // 2):
            p, q = players[k], players[size - 1 - k]
            if p < n and q < n:
                p_idx.append(min(p, q))
                q_idx.append(max(p, q))
        rounds.append((np.array(p_idx, dtype=np.intp), np.array(q_idx, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _complete_basis(u: Matrix, good: np.ndarray) -> Matrix:
    """Replace the columns of u flagged bad by an orthonormal completion"""
    n = u.shape[0]
    k = int(good.sum())
    q, r = np.linalg.qr(np.hstack([u[:, good], np.eye(n)]))
    # QR may flip the sign of the columns it was given
    signs = np.where(np.diag(r)[:k] < 0, -1.0, 1.0)
    q[:, :k] *= signs
    completed = u.copy()
    completed[:, ~good] = q[:, k:n]
    completed[:, good] = q[:, :k]
    return completed


def svd(g: Matrix, compute_v: bool = True) -> Tuple[Matrix, np.ndarray, Matrix]:
    """
    Full SVD g = U·diag(s)·Vᵀ of a square matrix by one-sided Jacobi

    Columns of a working copy are rotated pairwise until every pair is
    orthogonal to SVD_TOLERANCE (relative to the column norms). Singular
    values come back in descending order.

    Returns:
        Tuple of (U, s, V); V is None when compute_v is False
    """
    assert_(g.ndim == 2 and g.shape[0] == g.shape[1],
            f"svd needs a square matrix, got {shape_str(g)}")
    assert_(bool(np.all(np.isfinite(g))), "svd input must be finite")
    n = g.shape[0]

    # Rows of `work` are the columns of g, so pair gathers stay contiguous
    work = np.array(g, dtype=np.float64).T.copy()
    v_rows = np.eye(n) if compute_v else None
    schedule = _round_robin(n)

    converged = n == 1
    sweeps = 0
    while not converged:
        if sweeps == SVD_MAX_SWEEPS:
            raise NumericalError(f"Jacobi SVD did not converge within {SVD_MAX_SWEEPS} sweeps")
        sweeps += 1
        rotated = False
        for p, q in schedule:
            ap, aq = work[p], work[q]
            alpha = np.einsum('ij,ij->i', ap, ap)
            beta = np.einsum('ij,ij->i', aq, aq)
            gamma = np.einsum('ij,ij->i', ap, aq)
            active = np.abs(gamma) > SVD_TOLERANCE * np.sqrt(alpha * beta)
            if not active.any():
                continue
            rotated = True
            p, q = p[active], q[active]
            ap, aq = ap[active], aq[active]
            zeta = (beta[active] - alpha[active]) / (2.0 * gamma[active])
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            c, s = c[:, None], s[:, None]
            work[p] = c * ap - s * aq
            work[q] = s * ap + c * aq
            if v_rows is not None:
                vp, vq = v_rows[p], v_rows[q]
                v_rows[p] = c * vp - s * vq
                v_rows[q] = s * vp + c * vq
        converged = not rotated

    sigma = np.sqrt(np.einsum('ij,ij->i', work, work))
    order = np.argsort(-sigma, kind='stable')
    sigma = sigma[order]
    work = work[order]

    good = sigma > n * np.finfo(np.float64).eps * max(sigma[0], np.finfo(np.float64).tiny)
    u = np.zeros((n, n))
    u[:, good] = (work[good] / sigma[good, None]).T
    if not good.all():
        u = _complete_basis(u, good)

    v = v_rows[order].T if v_rows is not None else None
    return u, sigma, v


def svd_orthonormal_factor(g: Matrix) -> Matrix:
    """Left singular factor U of g, orthonormal"""
    u, _, _ = svd(g, compute_v=False)
    return u
