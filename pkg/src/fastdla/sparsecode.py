"""Sparse coding: hard thresholding and Batch-OMP.

Both coders work column by column; Batch-OMP is vectorized across columns,
running the greedy selection and progressive Cholesky updates for every
still-active column at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import opcount
from .fasttransform import FactoredGeneral, apply_general_adjoint, densify


@dataclass
class SparseCodeMatrix:
    """Dense codes plus per-column supports (row indices of the nonzeros)."""

    dense: np.ndarray
    supports: list[np.ndarray]

    @classmethod
    def from_dense(cls, x: np.ndarray) -> "SparseCodeMatrix":
        x = np.asarray(x, dtype=float)
        return cls(x, [np.flatnonzero(x[:, k]) for k in range(x.shape[1])])

    @property
    def shape(self) -> tuple[int, int]:
        return self.dense.shape

    def max_nnz(self) -> int:
        return max((len(s) for s in self.supports), default=0)


def threshold_dense(m: np.ndarray, s: int) -> np.ndarray:
    """Keep the ``s`` largest-magnitude entries of every column (lowest row wins ties)."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if not 0 <= s <= n:
        raise ValueError(f"sparsity must be in [0, {n}], got {s}")
    out = np.zeros_like(m)
    if s == 0:
        return out
    if s == n:
        out[:] = m
        return out
    keep = np.argsort(-np.abs(m), axis=0, kind="stable")[:s]
    cols = np.arange(m.shape[1])
    out[keep, cols] = m[keep, cols]
    return out


def hard_threshold(m, s: int) -> SparseCodeMatrix:
    """Hard-thresholding operator returning a :class:`SparseCodeMatrix`."""
    m = np.asarray(m, dtype=float)
    return SparseCodeMatrix.from_dense(threshold_dense(m, s))


def gram(d: FactoredGeneral) -> np.ndarray:
    """``D.T @ D`` by pushing the densified dictionary back through the factors."""
    g = apply_general_adjoint(d, densify(d))
    return 0.5 * (g + g.T)


def _as_dictionary(d):
    """(adjoint-apply callable, Gram matrix, n) for a factored or dense dictionary."""
    if isinstance(d, FactoredGeneral):
        g = gram(d)
        if np.max(np.abs(np.diag(g) - 1.0)) > 1e-8:
            raise ValueError("dictionary columns must have unit norm")
        return (lambda y: apply_general_adjoint(d, y)), g, d.n
    dd = np.asarray(d, dtype=float)
    if dd.ndim != 2 or dd.shape[0] != dd.shape[1]:
        raise ValueError("dense dictionary must be square")
    norms = np.linalg.norm(dd, axis=0)
    if np.max(np.abs(norms - 1.0)) > 1e-8:
        raise ValueError("dictionary columns must have unit norm")
    n = dd.shape[0]

    def adjoint(y):
        if opcount.enabled():
            opcount.record(mul=n * n * y.shape[1], add=n * (n - 1) * y.shape[1])
        return dd.T @ y

    g = dd.T @ dd
    if opcount.enabled():
        opcount.record(mul=n * n * (n + 1) // 2, add=n * (n - 1) * (n + 1) // 2)
    return adjoint, 0.5 * (g + g.T), n


def omp(d, y, s: int, tol: float = 1e-12) -> SparseCodeMatrix:
    """Batch-OMP sparse coding of every column of ``y`` in dictionary ``d``.

    Parameters
    ----------
    d : FactoredGeneral or ndarray
        Square dictionary with unit-norm columns.
    y : ndarray
        Signals in columns.
    s : int
        Maximum number of atoms per column.
    tol : float
        A column stops early once its squared residual drops below
        ``tol * ||y_col||^2``.

    Notes
    -----
    Atom selection uses the largest ``|D^T r|`` (lowest index on ties),
    computed from the precomputed ``D^T y`` and Gram matrix.  A column also
    stops when the progressive Cholesky factor breaks down, which happens
    for numerically dependent atoms.
    """
    y = np.asarray(y, dtype=float)
    if s < 1:
        raise ValueError("OMP needs s >= 1")
    adjoint, g, n = _as_dictionary(d)
    if y.shape[0] != n:
        raise ValueError(f"signals have {y.shape[0]} rows, dictionary has {n}")
    s = min(s, n)
    ncols = y.shape[1]
    alpha = adjoint(y).T                        # (N, n) correlations D^T y
    energy = np.einsum("ij,ij->j", y, y)        # ||y||^2 per column
    support = np.zeros((ncols, s), dtype=int)
    chol = np.zeros((ncols, s, s))
    coef = np.zeros((ncols, s))
    size = np.zeros(ncols, dtype=int)
    active = energy > 0
    corr = alpha.copy()
    taken = np.zeros((ncols, n), dtype=bool)
    rows = np.arange(ncols)

    for t in range(s):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        score = np.abs(corr[idx])
        score[taken[idx]] = -1.0
        atom = np.argmax(score, axis=1)
        if opcount.enabled():
            opcount.record(other=n * idx.size)

        # progressive Cholesky: L_new = [[L, 0], [w^T, sqrt(1 - w^T w)]]
        if t == 0:
            ok = np.ones(idx.size, dtype=bool)
            diag = np.ones(idx.size)
        else:
            gv = g[support[idx, :t], atom[:, None]]          # (k, t)
            w = _forward_batch(chol[idx, :t, :t], gv)
            rem = 1.0 - np.einsum("ij,ij->i", w, w)
            ok = rem > 1e-10
            diag = np.sqrt(np.where(ok, rem, 1.0))
            if opcount.enabled():
                opcount.record(mul=idx.size * t * (t + 1), add=idx.size * t * t)
        stop = idx[~ok]
        active[stop] = False
        idx, atom, diag = idx[ok], atom[ok], diag[ok]
        if t > 0:
            chol[idx, t, :t] = w[ok]
        chol[idx, t, t] = diag
        support[idx, t] = atom
        taken[idx, atom] = True
        size[idx] = t + 1

        # coefficients from L L^T x = alpha_S
        a_s = alpha[idx[:, None], support[idx, :t + 1]]
        lo = chol[idx, :t + 1, :t + 1]
        z = _forward_batch(lo, a_s)
        x = _backward_batch(np.swapaxes(lo, 1, 2), z)
        coef[idx, :t + 1] = x
        # correlation update corr = alpha - G_S x
        gs = g[:, support[idx, :t + 1]]                      # (n, k, t+1)
        corr[idx] = alpha[idx] - np.einsum("nkt,kt->kn", gs, x)
        resid = energy[idx] - np.einsum("kt,kt->k", x, a_s)
        if opcount.enabled():
            k, tt = idx.size, t + 1
            opcount.record(mul=k * (2 * tt * tt + n * tt + tt),
                           add=k * (2 * tt * tt + n * tt + n))
        done = resid < tol * energy[idx]
        active[idx[done]] = False

    x = np.zeros((n, ncols))
    supports = []
    for k in range(ncols):
        sk = support[k, :size[k]]
        x[sk, k] = coef[k, :size[k]]
        supports.append(np.sort(sk))
    return SparseCodeMatrix(x, supports)


def _forward_batch(lo: np.ndarray, b: np.ndarray) -> np.ndarray:
    t = b.shape[1]
    x = np.zeros_like(b)
    for i in range(t):
        x[:, i] = (b[:, i] - np.einsum("kj,kj->k", lo[:, i, :i], x[:, :i])) / lo[:, i, i]
    return x


def _backward_batch(up: np.ndarray, b: np.ndarray) -> np.ndarray:
    t = b.shape[1]
    x = np.zeros_like(b)
    for i in range(t - 1, -1, -1):
        x[:, i] = (b[:, i] - np.einsum("kj,kj->k", up[:, i, i + 1:], x[:, i + 1:])) / up[:, i, i]
    return x
