"""Fixed baselines and diagnostics for learned dictionaries."""

from __future__ import annotations

import numpy as np

from ..fasttransform import FactoredGeneral, FactoredOrthogonal, densify
from ..sparsecode import SparseCodeMatrix
from .scores import score_table_r


def dct_matrix(size: int) -> np.ndarray:
    """Orthonormal 1-D DCT-II basis with the frequency-``k`` atom in column ``k``."""
    if size < 1:
        raise ValueError("size must be >= 1")
    x = np.arange(size)[:, None]
    k = np.arange(size)[None, :]
    basis = np.cos(np.pi * (2 * x + 1) * k / (2 * size))
    basis *= np.sqrt(2.0 / size)
    basis[:, 0] = np.sqrt(1.0 / size)
    return basis


def dct_dictionary(patch_side: int) -> np.ndarray:
    """Separable 2-D orthonormal DCT-II dictionary for column-major patches."""
    c = dct_matrix(patch_side)
    return np.kron(c, c)


def local_min_residual(d, y, x) -> float:
    """Largest R-score of ``Z = Y X^T D^T``, ``W = D X X^T D^T``.

    Zero is necessary for ``d`` to be a local minimizer with ``x`` fixed: no
    single 2x2 general transform applied to the left of ``d`` can reduce the
    error.  Returns ``-inf`` if every pair is singular.
    """
    if isinstance(d, (FactoredGeneral, FactoredOrthogonal)):
        d = densify(d)
    if isinstance(x, SparseCodeMatrix):
        x = x.dense
    d, y, x = (np.asarray(a, dtype=float) for a in (d, y, x))
    dx = d @ x
    table = score_table_r(y @ dx.T, dx @ dx.T, allow_degenerate=True)
    return table.best_gain
