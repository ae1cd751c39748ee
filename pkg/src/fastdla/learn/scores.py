"""Pair score tables for choosing where the next 2x2 factor goes.

For a G-factor the score of pair ``(i, j)`` is the nuclear-norm/trace gap of
the 2x2 block of ``Z = Y X^T``; for an R-factor it is the least-squares error
reduction relative to the identity, a closed-form expression in the 2x2
blocks of ``Z`` and ``W = X X^T``.  Either way the objective drops by the
score (twice the score for G), so the best pair is the argmax.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..matcore import nuclear_trace_gap_batch


class DatasetDegenerateError(ValueError):
    """Every pair has a singular 2x2 normal matrix."""


@dataclass
class ScoreTable:
    n: int
    values: np.ndarray            # (n, n); upper triangle filled, NaN elsewhere
    best: tuple[int, int, float]

    @property
    def best_pair(self) -> tuple[int, int]:
        return self.best[0], self.best[1]

    @property
    def best_gain(self) -> float:
        return self.best[2]


_TRIU: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _triu(n: int):
    if n not in _TRIU:
        _TRIU[n] = np.triu_indices(n, 1)
    return _TRIU[n]


def _table(n: int, scores: np.ndarray) -> ScoreTable:
    iu, ju = _triu(n)
    values = np.full((n, n), np.nan)
    values[iu, ju] = scores
    # triu_indices is row-major, so argmax resolves ties to the smallest (i, j)
    k = int(np.argmax(scores))
    return ScoreTable(n, values, (int(iu[k]), int(ju[k]), float(scores[k])))


def g_scores(z: np.ndarray) -> np.ndarray:
    n = z.shape[0]
    iu, ju = _triu(n)
    return nuclear_trace_gap_batch(z[iu, iu], z[ju, iu], z[iu, ju], z[ju, ju])


def score_table_g(z) -> ScoreTable:
    """G-scores ``C_ij = ||Z_{ij}||_* - tr(Z_{ij})`` for all ``j > i``."""
    z = np.asarray(z, dtype=float)
    n = z.shape[0]
    if n < 2:
        raise ValueError("need n >= 2 to place a 2x2 factor")
    return _table(n, g_scores(z))


def r_scores(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    n = z.shape[0]
    iu, ju = _triu(n)
    zii, zjj, zij, zji = z[iu, iu], z[ju, ju], z[iu, ju], z[ju, iu]
    wii, wjj, wij, wji = w[iu, iu], w[ju, ju], w[iu, ju], w[ju, iu]
    det = wii * wjj - wij * wji
    ok = np.abs(det) > 1e-14 * (wii * wii + wjj * wjj + wij * wij + wji * wji)
    safe = np.where(ok, det, 1.0)
    c = (wii + wjj - 2.0 * (zii + zjj)
         + (wii * (zij * zij + zjj * zjj) + wjj * (zii * zii + zji * zji)
            - (zii * zij + zji * zjj) * (wij + wji)) / safe)
    return np.where(ok, c, -np.inf)


def score_table_r(z, w, allow_degenerate: bool = False) -> ScoreTable:
    """R-scores for all ``j > i``; singular pairs score ``-inf``.

    Raises
    ------
    DatasetDegenerateError
        If every pair is singular (unless ``allow_degenerate``).
    """
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    n = z.shape[0]
    if n < 2:
        raise ValueError("need n >= 2 to place a 2x2 factor")
    if w.shape != (n, n) or z.shape != (n, n):
        raise ValueError("Z and W must both be n x n")
    scores = r_scores(z, w)
    if not allow_degenerate and not np.any(np.isfinite(scores)):
        raise DatasetDegenerateError("dataset degenerate: every pair is singular")
    return _table(n, scores)
