"""Reference numpy implementation of the solver hot kernels."""

from __future__ import annotations

import numpy as np


def gram_conjugated(a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Gram matrix G[k, l] = <A_k, W A_l W> for a stack of symmetric A_k."""
    m = a.shape[0]
    t = w @ a @ w
    return a.reshape(m, -1) @ t.reshape(m, -1).T


def weighted_sum(a: np.ndarray, y: np.ndarray) -> np.ndarray:
    """sum_k y[k] * A_k over a stack of matrices."""
    return np.tensordot(y, a, axes=1)


def inner_products(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Vector of Frobenius inner products <A_k, X>."""
    return a.reshape(a.shape[0], -1) @ x.ravel()
