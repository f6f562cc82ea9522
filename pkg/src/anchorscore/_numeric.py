"""Deterministic numeric kernels.

Every reduction here runs through np.einsum with a fixed chunk size, never
through BLAS matmul. Reductions over a row are independent of the other rows
in the chunk, so results are bitwise identical whether a row is processed
alone, inside a batch, or split across worker threads.
"""
from __future__ import annotations

import numpy as np

# Fixed chunk size for row-wise kernels. Must never depend on thread count.
CHUNK_ROWS = 8192


def as_matrix_f64(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise ValueError(f"expected a vector or matrix, got ndim={a.ndim}")
    return a


def as_vector_f64(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got ndim={a.ndim}")
    return a


def row_dots(X: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Dot product of every row of X with vector c, chunked."""
    out = np.empty(X.shape[0], dtype=np.float64)
    for lo in range(0, X.shape[0], CHUNK_ROWS):
        hi = min(lo + CHUNK_ROWS, X.shape[0])
        out[lo:hi] = np.einsum("ij,j->i", X[lo:hi], c)
    return out


def row_norms(X: np.ndarray) -> np.ndarray:
    """Euclidean norm of every row of X, chunked."""
    out = np.empty(X.shape[0], dtype=np.float64)
    for lo in range(0, X.shape[0], CHUNK_ROWS):
        hi = min(lo + CHUNK_ROWS, X.shape[0])
        out[lo:hi] = np.sqrt(np.einsum("ij,ij->i", X[lo:hi], X[lo:hi]))
    return out


def sqdist_to_centers(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance from every row of X to every center.

    Uses explicit differences rather than the dot-product expansion so that
    identical points yield an exact 0.0 and no distance is ever negative.
    """
    n, k = X.shape[0], centers.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    for lo in range(0, n, CHUNK_ROWS):
        hi = min(lo + CHUNK_ROWS, n)
        chunk = X[lo:hi]
        for j in range(k):
            diff = chunk - centers[j]
            out[lo:hi, j] = np.einsum("ij,ij->i", diff, diff)
    return out


def freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a
