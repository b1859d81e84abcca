"""Matrix Market coordinate-format IO (real and complex)."""

from __future__ import annotations

import numpy as np
import scipy.io
import scipy.sparse

from .linalg import as_matrix


def read_matrix(path) -> np.ndarray:
    """Read a Matrix Market file as a dense complex array."""
    m = scipy.io.mmread(str(path))
    if scipy.sparse.issparse(m):
        m = m.toarray()
    return as_matrix(m, f"matrix from {path}")


def write_matrix(path, a) -> None:
    """Write a dense matrix in Matrix Market coordinate format."""
    m = as_matrix(a)
    if np.allclose(m.imag, 0.0):
        m = m.real
    scipy.io.mmwrite(str(path), scipy.sparse.coo_matrix(m))


def read_vector(path) -> np.ndarray:
    """Read an M x 1 (or 1 x N) Matrix Market file as a flat vector."""
    m = read_matrix(path)
    if 1 not in m.shape:
        raise ValueError(f"expected a vector-shaped matrix, got {m.shape}")
    return m.reshape(-1)


def write_vector(path, v) -> None:
    write_matrix(path, np.asarray(v, dtype=complex).reshape(-1, 1))
