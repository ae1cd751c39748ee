"""Learning orthogonal dictionaries factored into G-transforms.

The dictionary is ``U = G[m-1] ... G[0]``.  With the codes fixed, every
factor update is solved exactly: pick the pair with the largest G-score on
``Z_k = Y_k X_k^T`` and set the block to the 2x2 Procrustes solution.
``Y_k`` and ``X_k`` are the data and codes pushed through the factors
above and below ``k``; ``Z_k`` is carried from one factor to the next with
two row/column updates instead of being rebuilt.
"""

from __future__ import annotations

import numpy as np

from ..fasttransform import (REFLECTION, ROTATION, FactoredOrthogonal, GFactor,
                             apply_factor, apply_transpose)
from ..matcore import procrustes2_params
from ..sparsecode import SparseCodeMatrix, threshold_dense
from .config import (InitState, StepCallback, StepInfo, TrainConfig, TrainReport,
                     as_data, svd_init)
from .scores import score_table_g


def _right_apply_t(z: np.ndarray, f: GFactor) -> None:
    """``z <- z @ F.T`` in place (columns i, j)."""
    apply_factor(f, z.T, "left")


def best_g_factor(z: np.ndarray, min_gain: float = 0.0) -> tuple[GFactor, float]:
    """Optimal single G-factor for the cross matrix ``z = Y X^T`` and its score."""
    i, j, gain = score_table_g(z).best
    if gain < min_gain:
        return GFactor.identity(i, j), 0.0
    c, d, refl = procrustes2_params(z[np.ix_([i, j], [i, j])])
    return GFactor(i, j, c, d, REFLECTION if refl else ROTATION), gain


def fit_single_g(y, x) -> tuple[GFactor, float]:
    """Best one-factor orthogonal dictionary for fixed codes; returns (factor, objective)."""
    y, x = as_data(y), as_data(x)
    f, gain = best_g_factor(y @ x.T)
    obj = (float(np.sum(y * y)) + float(np.sum(x * x))
           - 2.0 * float(np.einsum("ij,ij->", y, x)) - 2.0 * gain)
    return f, obj


def _count_used(factors) -> int:
    return sum(not f.is_identity() for f in factors)


def gdla_init(y, cfg: TrainConfig, x=None, report: TrainReport | None = None,
              callback: StepCallback | None = None):
    """SVD initialization followed by greedy construction of ``cfg.m`` factors.

    Factors above ``k`` are the identity while factor ``k`` is chosen, so
    ``Z_k = Y X_k^T`` and ``Z_{k+1} = Z_k G_k^T``.

    Returns
    -------
    (FactoredOrthogonal, SparseCodeMatrix, InitState)
    """
    y = as_data(y)
    n = y.shape[0]
    cfg.validate(n)
    state, x0 = svd_init(y, cfg.s)
    x = x0 if x is None else as_data(x)
    if report is None:
        report = TrainReport(float(np.sum(y * y)))
    base = report.y_energy + float(np.sum(x * x))
    z = y @ x.T
    obj = base - 2.0 * float(np.trace(z))
    report.step(obj)
    factors = []
    for k in range(cfg.m):
        f, gain = best_g_factor(z, cfg.min_gain)
        _right_apply_t(z, f)
        obj = base - 2.0 * float(np.trace(z))
        report.step(obj)
        factors.append(f)
        if callback is not None:
            callback(StepInfo("init", k, (f.i, f.j), gain, obj, z))
    report.end_iteration(obj)
    report.factors_used = _count_used(factors)
    return FactoredOrthogonal(n, factors), SparseCodeMatrix.from_dense(x), state


def _z_from_scratch(m0: np.ndarray, factors: list[GFactor], k: int) -> np.ndarray:
    """``Z_k = (G[k+1]^T ... G[m-1]^T) M (G[k-1] ... G[0])^T`` with ``M = Y X^T``."""
    left = m0.copy()
    for f in reversed(factors[k + 1:]):
        apply_factor(f, left, "left-transpose")
    right = left.T.copy()
    for f in factors[:k]:
        apply_factor(f, right, "left")
    return right.T.copy()


def gdla_iterate(y, t: FactoredOrthogonal, x, cfg: TrainConfig,
                 report: TrainReport | None = None,
                 callback: StepCallback | None = None):
    """``cfg.iters`` outer iterations: re-fit every factor, then re-threshold.

    Returns
    -------
    (FactoredOrthogonal, SparseCodeMatrix, TrainReport)
    """
    y = as_data(y)
    x = as_data(x.dense if isinstance(x, SparseCodeMatrix) else x)
    n = y.shape[0]
    cfg.validate(n)
    if report is None:
        report = TrainReport(float(np.sum(y * y)))
    rng = np.random.default_rng(cfg.seed)
    factors = list(t.factors)
    m = len(factors)
    uty = apply_transpose(t, y)
    for _ in range(cfg.iters):
        base = report.y_energy + float(np.sum(x * x))
        if cfg.order == "sequential":
            z = uty @ x.T
            if m:
                apply_factor(factors[0], z, "left")
            for k in range(m):
                f, gain = best_g_factor(z, cfg.min_gain)
                factors[k] = f
                _right_apply_t(z, f)
                obj = base - 2.0 * float(np.trace(z))
                report.step(obj)
                if callback is not None:
                    callback(StepInfo("iterate", k, (f.i, f.j), gain, obj, z))
                if k + 1 < m:
                    apply_factor(factors[k + 1], z, "left")
        else:
            m0 = y @ x.T
            for k in rng.permutation(m):
                z = _z_from_scratch(m0, factors, int(k))
                f, gain = best_g_factor(z, cfg.min_gain)
                factors[k] = f
                _right_apply_t(z, f)
                obj = base - 2.0 * float(np.trace(z))
                report.step(obj)
                if callback is not None:
                    callback(StepInfo("iterate", int(k), (f.i, f.j), gain, obj, z))
        t = FactoredOrthogonal(n, factors)
        uty = apply_transpose(t, y)
        x = threshold_dense(uty, cfg.s)
        obj = report.y_energy + float(np.sum(x * x)) - 2.0 * float(np.einsum("ij,ij->", uty, x))
        report.step(obj)
        report.end_iteration(obj)
    report.factors_used = _count_used(factors)
    return FactoredOrthogonal(n, factors), SparseCodeMatrix.from_dense(x), report


def train_gdla(y, cfg: TrainConfig, callback: StepCallback | None = None):
    """Full orthogonal learner: initialization plus ``cfg.iters`` iterations.

    Returns
    -------
    (FactoredOrthogonal, SparseCodeMatrix, TrainReport)
    """
    y = as_data(y)
    report = TrainReport(float(np.sum(y * y)))
    t, codes, _ = gdla_init(y, cfg, report=report, callback=callback)
    t, codes, report = gdla_iterate(y, t, codes, cfg, report=report, callback=callback)
    report.best_objective = report.objective[-1]
    return t, codes, report.finish()
