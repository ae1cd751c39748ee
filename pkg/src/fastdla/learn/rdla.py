"""Learning general square dictionaries factored into R-transforms.

The dictionary is ``D = R[m-1] ... R[0] diag(delta)`` with ``delta`` chosen
so every column has unit norm.  Training runs in two phases.  Phase one
rebuilds all factors greedily (pair by R-score, block by 2x2 least squares)
from the current codes on every iteration.  Phase two keeps the pairs and
re-solves each 2x2 block against the full chain by a 4-variable least
squares problem.  Both phases re-code with Batch-OMP and keep the best
(dictionary, codes) pair seen, since normalization and OMP can increase
the objective.
"""

from __future__ import annotations

import numpy as np

from ..fasttransform import (FactoredGeneral, RFactor, apply, apply_factor,
                             apply_general, normalize_delta)
from ..matcore import ls2x2, solve_spd4
from ..sparsecode import SparseCodeMatrix, omp
from .config import (StepCallback, StepInfo, TrainConfig, TrainReport, as_data,
                     sq_error, svd_init)
from .scores import score_table_r


def _right_apply_t(z: np.ndarray, f: RFactor) -> None:
    """``z <- z @ R.T`` in place."""
    apply_factor(f, z.T, "left")


def _sandwich(w: np.ndarray, f: RFactor) -> None:
    """``w <- R @ w @ R.T`` in place."""
    apply_factor(f, w, "left")
    apply_factor(f, w.T, "left")


def best_r_factor(z: np.ndarray, w: np.ndarray, min_gain: float = 0.0) -> tuple[RFactor, float]:
    """Optimal single R-factor for ``Z = Y X^T``, ``W = X X^T`` and its score."""
    i, j, gain = score_table_r(z, w).best
    if gain < min_gain:
        return RFactor(i, j, 1.0, 0.0, 0.0, 1.0), 0.0
    idx = np.ix_([i, j], [i, j])
    return RFactor.from_block(i, j, ls2x2(z[idx], w[idx])), gain


def fit_single_r(y, x) -> tuple[RFactor, float]:
    """Best one-factor general dictionary (no normalization) for fixed codes."""
    y, x = as_data(y), as_data(x)
    f, gain = best_r_factor(y @ x.T, x @ x.T)
    obj = (float(np.sum(y * y)) + float(np.sum(x * x))
           - 2.0 * float(np.einsum("ij,ij->", y, x)) - gain)
    return f, obj


def _greedy_factors(y, x, cfg: TrainConfig, report: TrainReport,
                    callback: StepCallback | None) -> list[RFactor]:
    z = y @ x.T
    w = x @ x.T
    yy = report.y_energy
    factors = []
    for k in range(cfg.m):
        f, gain = best_r_factor(z, w, cfg.min_gain)
        _right_apply_t(z, f)
        _sandwich(w, f)
        obj = yy + float(np.trace(w)) - 2.0 * float(np.trace(z))
        report.step(obj)
        factors.append(f)
        if callback is not None:
            callback(StepInfo("phase1", k, (f.i, f.j), gain, obj, z))
    return factors


class _Best:
    def __init__(self):
        self.obj = np.inf
        self.d = None
        self.x = None

    def offer(self, obj: float, d: FactoredGeneral, x: np.ndarray) -> None:
        if obj < self.obj:
            self.obj, self.d, self.x = float(obj), d, x.copy()


def _recode(y, d: FactoredGeneral, xr: np.ndarray, cfg: TrainConfig,
            report: TrainReport, best: _Best) -> np.ndarray:
    """Offer the normalized pre-OMP pair, re-code by OMP, offer the result."""
    x_pre = xr / d.delta[:, None]
    best.offer(report.objective[-1], d, x_pre)
    x = omp(d, y, cfg.s).dense
    obj = sq_error(y, apply_general(d, x))
    report.step(obj)
    report.end_iteration(obj)
    best.offer(obj, d, x)
    return x


def _identity_result(y, cfg, report, best):
    n = y.shape[0]
    d = FactoredGeneral(n, ())
    x = omp(d, y, cfg.s).dense
    obj = sq_error(y, x)
    report.step(obj)
    report.end_iteration(obj)
    best.offer(obj, d, x)


def _used(d: FactoredGeneral) -> int:
    return sum(1 for f in d.factors if not (f.p == 1.0 and f.t == 1.0 and f.q == 0.0 and f.r == 0.0))


def rdla_phase1(y, x, cfg: TrainConfig, report: TrainReport | None = None,
                callback: StepCallback | None = None, best: _Best | None = None):
    """Greedy factor construction from the current codes, ``cfg.iters`` times.

    Returns
    -------
    (FactoredGeneral, SparseCodeMatrix, TrainReport)
        The best pair over all iterations (the identity dictionary with OMP
        codes when ``cfg.iters == 0``).
    """
    y = as_data(y)
    x = as_data(x.dense if isinstance(x, SparseCodeMatrix) else x)
    n = y.shape[0]
    cfg.validate(n)
    if report is None:
        report = TrainReport(float(np.sum(y * y)))
    best = _Best() if best is None else best
    for _ in range(cfg.iters):
        report.step(sq_error(y, x))
        factors = _greedy_factors(y, x, cfg, report, callback)
        d = normalize_delta(factors, n)
        x = _recode(y, d, x, cfg, report, best)
    if best.d is None:
        _identity_result(y, cfg, report, best)
    report.best_objective = best.obj
    report.factors_used = _used(best.d)
    return best.d, SparseCodeMatrix.from_dense(best.x), report


def _suffix_products(factors: list[RFactor], n: int) -> np.ndarray:
    """``B[k] = R[m-1] ... R[k+1]`` for every ``k`` (``B[m-1] = I``)."""
    m = len(factors)
    out = np.empty((m, n, n))
    b = np.eye(n)
    for k in range(m - 1, -1, -1):
        out[k] = b
        # b <- b @ R[k]
        apply_factor(factors[k], b.T, "left-transpose")
    return out


def _refine_block(f: RFactor, b: np.ndarray, z: np.ndarray, w: np.ndarray) -> RFactor:
    """Re-solve the block of ``f`` minimizing ``||Y - B R X_k||_F^2``.

    ``z = Y X_k^T`` and ``w = X_k X_k^T``.  The 4x4 normal matrix of the
    vectorized problem is ``(S S^T) kron (P^T P)`` with ``P = B[:, (i, j)]``
    and ``S = X_k[(i, j), :]``; the right-hand side is ``vec(P^T E S^T)``
    where ``E = Y - B X_k + P S`` is the target with the block removed.
    Both are assembled from 2x2 and n x 2 slices, never from the
    ``nN x 4`` design matrix.  The solve is for the correction to the
    current block, so a ridge only damps directions the data leaves free.
    """
    ij = [f.i, f.j]
    p = b[:, ij]
    ptp = p.T @ p
    sst = w[np.ix_(ij, ij)]
    rhs = p.T @ z[:, ij] - (p.T @ b) @ w[:, ij] + ptp @ sst
    normal = np.kron(sst, ptp)
    cur = f.block
    resid = (rhs - ptp @ cur @ sst).reshape(-1, order="F")
    step = solve_spd4(normal, resid).reshape(2, 2, order="F")
    return RFactor.from_block(f.i, f.j, cur + step)


def refine_r_factor(y, factors, k: int, x) -> RFactor:
    """Least-squares re-fit of the block of ``factors[k]`` with its pair and all
    other factors fixed; ``x`` are codes for the undiagonalized chain."""
    y = as_data(y)
    x = as_data(x.dense if isinstance(x, SparseCodeMatrix) else x)
    n = y.shape[0]
    factors = list(factors)
    xk = apply(FactoredGeneral(n, factors[:k]), x)
    b = apply(FactoredGeneral(n, factors[k + 1:]), np.eye(n))
    return _refine_block(factors[k], b, y @ xk.T, xk @ xk.T)


def _refine_sweep(y, factors: list[RFactor], xr: np.ndarray, report: TrainReport,
                  callback: StepCallback | None) -> None:
    n = y.shape[0]
    bs = _suffix_products(factors, n)
    z = y @ xr.T
    w = xr @ xr.T
    yy = report.y_energy
    for k, f in enumerate(factors):
        b = bs[k]
        f = _refine_block(f, b, z, w)
        factors[k] = f
        _right_apply_t(z, f)
        _sandwich(w, f)
        obj = yy - 2.0 * float(np.einsum("ij,ij->", b, z)) + float(np.einsum("ij,ij->", b.T @ b, w))
        report.step(obj)
        if callback is not None:
            callback(StepInfo("phase2", k, (f.i, f.j), 0.0, obj, None))


def rdla_phase2(y, d: FactoredGeneral, x, cfg: TrainConfig, report: TrainReport | None = None,
                callback: StepCallback | None = None, best: _Best | None = None):
    """Block refinement with fixed pairs, ``cfg.iters`` times.

    Returns
    -------
    (FactoredGeneral, SparseCodeMatrix, TrainReport)
        The best pair seen, including the starting pair.
    """
    y = as_data(y)
    x = as_data(x.dense if isinstance(x, SparseCodeMatrix) else x)
    n = y.shape[0]
    cfg.validate(n)
    if report is None:
        report = TrainReport(float(np.sum(y * y)))
    if best is None:
        best = _Best()
        best.offer(sq_error(y, apply_general(d, x)), d, x)
    for _ in range(cfg.iters):
        factors = list(d.factors)
        xr = d.delta[:, None] * x
        report.step(sq_error(y, apply(d, xr)))
        _refine_sweep(y, factors, xr, report, callback)
        d = normalize_delta(factors, n)
        x = _recode(y, d, xr, cfg, report, best)
    report.best_objective = best.obj
    report.factors_used = _used(best.d)
    return best.d, SparseCodeMatrix.from_dense(best.x), report


def train_rdla(y, cfg: TrainConfig, callback: StepCallback | None = None):
    """SVD-initialized codes, phase one, then phase two from phase one's best pair.

    Returns
    -------
    (FactoredGeneral, SparseCodeMatrix, TrainReport)
        The best pair over both phases.
    """
    y = as_data(y)
    cfg.validate(y.shape[0])
    report = TrainReport(float(np.sum(y * y)))
    _, x0 = svd_init(y, cfg.s)
    best = _Best()
    d, codes, report = rdla_phase1(y, x0, cfg, report, callback, best)
    d, codes, report = rdla_phase2(y, d, codes, cfg, report, callback, best)
    return d, codes, report.finish()
