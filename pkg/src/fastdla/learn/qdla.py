"""Unstructured orthogonal dictionary learning (Procrustes / thresholding)."""

from __future__ import annotations

import numpy as np

from ..matcore import full_svd_square
from ..sparsecode import SparseCodeMatrix, threshold_dense
from .config import TrainConfig, TrainReport, as_data, sq_error, svd_init


def procrustes(a: np.ndarray) -> np.ndarray:
    """Orthogonal ``Q`` maximizing ``tr(Q^T a)``, i.e. ``U V^T`` from the SVD of ``a``."""
    u, _, v = full_svd_square(a)
    return u @ v.T


def train_qdla(y, cfg: TrainConfig):
    """Alternate ``Q = procrustes(Y X^T)`` and ``X = T_s(Q^T Y)`` from the SVD start.

    ``cfg.m`` is ignored.

    Returns
    -------
    (ndarray, SparseCodeMatrix, TrainReport)
    """
    y = as_data(y)
    cfg.validate(y.shape[0])
    report = TrainReport(float(np.sum(y * y)))
    state, x = svd_init(y, cfg.s)
    q = state.u0
    obj = sq_error(y, q @ x)
    report.step(obj)
    report.end_iteration(obj)
    for _ in range(cfg.iters):
        q = procrustes(y @ x.T)
        report.step(sq_error(y, q @ x))
        x = threshold_dense(q.T @ y, cfg.s)
        obj = sq_error(y, q @ x)
        report.step(obj)
        report.end_iteration(obj)
    report.best_objective = report.objective[-1]
    return q, SparseCodeMatrix.from_dense(x), report.finish()
