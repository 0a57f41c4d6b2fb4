"""Dense float64 matrix primitives.

Matrices are 2-D ``numpy.ndarray`` of dtype float64, one sample per row;
vectors are 1-D float64 arrays. Every function returns a fresh array and
never writes to its arguments.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Operand shapes do not conform."""


class EmptyBatchError(ValueError):
    """An operation that needs at least one row got none."""


def as_matrix(a) -> np.ndarray:
    m = np.array(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def as_vector(v) -> np.ndarray:
    out = np.array(v, dtype=np.float64)
    if out.ndim != 1:
        raise ShapeError(f"expected a 1-D vector, got shape {out.shape}")
    return out


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def add_row_broadcast(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    m, v = np.asarray(m, dtype=np.float64), np.asarray(v, dtype=np.float64)
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ShapeError(f"cannot add vector of shape {v.shape} to rows of {m.shape}")
    return m + v


def relu(m: np.ndarray) -> np.ndarray:
    return np.maximum(np.asarray(m, dtype=np.float64), 0.0)


def row_sq_norms(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    return np.einsum("ij,ij->i", m, m)


def col_means(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    if m.shape[0] == 0:
        raise EmptyBatchError("column means of an empty batch")
    return m.mean(axis=0)
