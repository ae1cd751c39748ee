"""Small dense linear algebra used by the learners.

Dense matrices are plain ``numpy.ndarray`` objects of dtype float64.  2x2
blocks are handled in closed form; the n x n eigen/SVD routines are built on
a cyclic Jacobi eigensolver, which is accurate and fast enough for n <= 256.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np


class DegeneratePairError(ValueError):
    """A 2x2 normal matrix is singular at working precision."""


class Svd2(NamedTuple):
    u: np.ndarray
    sigma: tuple[float, float]
    v: np.ndarray


def as_mat2(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (2, 2):
        raise ValueError(f"expected a 2x2 block, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("2x2 block has non-finite entries")
    return z


def _rot(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s], [s, c]])


def _split(z: np.ndarray):
    # z = E*I + H*J + F*K + G*L with J a quarter turn, K = diag(1,-1), L = swap.
    # Q = |rotation part|, R = |reflection part|; sigma = (Q + R, |Q - R|).
    p, r = z[0, 0], z[0, 1]
    q, t = z[1, 0], z[1, 1]
    e, f = 0.5 * (p + t), 0.5 * (p - t)
    g, h = 0.5 * (q + r), 0.5 * (q - r)
    return e, f, g, h


def svd2x2(z) -> Svd2:
    """Closed-form SVD of a 2x2 matrix, ``z = u @ diag(sigma) @ v.T``."""
    z = as_mat2(z)
    e, f, g, h = _split(z)
    a_rot = math.atan2(h, e)
    a_ref = math.atan2(g, f)
    phi = 0.5 * (a_ref + a_rot)
    theta = 0.5 * (a_ref - a_rot)
    u = _rot(phi)
    v = _rot(theta)
    if math.hypot(e, h) < math.hypot(f, g):
        v[:, 1] = -v[:, 1]

    fro2 = float(np.sum(z * z))
    det = float(z[0, 0] * z[1, 1] - z[0, 1] * z[1, 0])
    disc = max(0.0, fro2 * fro2 - 4.0 * det * det)
    s1 = math.sqrt(0.5 * (fro2 + math.sqrt(disc)))
    # the minus branch of the closed form cancels badly; |det| / s1 does not
    s2 = abs(det) / s1 if s1 > 0.0 else 0.0
    s2 = min(s2, s1)
    return Svd2(u, (s1, s2), v)


def nuclear_trace_gap(z) -> float:
    """``||z||_* - tr(z)`` for a 2x2 block; never negative in exact arithmetic."""
    z = as_mat2(z)
    e, f, g, h = _split(z)
    return 2.0 * max(math.hypot(e, h), math.hypot(f, g)) - 2.0 * e


def nuclear_trace_gap_batch(p, q, r, t) -> np.ndarray:
    """Vectorized :func:`nuclear_trace_gap` over blocks ``[[p, r], [q, t]]``."""
    e = 0.5 * (p + t)
    f = 0.5 * (p - t)
    g = 0.5 * (q + r)
    h = 0.5 * (q - r)
    return 2.0 * np.maximum(np.hypot(e, h), np.hypot(f, g)) - 2.0 * e


def procrustes2_params(z) -> tuple[float, float, bool]:
    """Optimal orthogonal 2x2 block for ``max tr(G.T @ z)`` as ``(c, d, is_reflection)``.

    The rotation block is ``[[c, d], [-d, c]]`` and the reflection block is
    ``[[c, d], [d, -c]]``.  Ties between the two shapes go to the rotation,
    so ``z = 0`` gives the identity.
    """
    z = as_mat2(z)
    e, f, g, h = _split(z)
    if math.hypot(e, h) >= math.hypot(f, g):
        nrm = math.hypot(e, h)
        if nrm == 0.0:
            return 1.0, 0.0, False
        return e / nrm, -h / nrm, False
    nrm = math.hypot(f, g)
    return f / nrm, g / nrm, True


def procrustes2(z) -> np.ndarray:
    """Orthogonal 2x2 ``G`` maximizing ``tr(G.T @ z)`` (equal to ``U V^T``)."""
    c, d, refl = procrustes2_params(z)
    if refl:
        return np.array([[c, d], [d, -c]])
    return np.array([[c, d], [-d, c]])


def ls2x2(z, w) -> np.ndarray:
    """``z @ inv(w)`` for 2x2 blocks.

    Raises
    ------
    DegeneratePairError
        If ``|det(w)| <= 1e-14 * ||w||_F^2``.
    """
    z = as_mat2(z)
    w = as_mat2(w)
    det = w[0, 0] * w[1, 1] - w[0, 1] * w[1, 0]
    if not abs(det) > 1e-14 * float(np.sum(w * w)):
        raise DegeneratePairError("degenerate pair: 2x2 normal matrix is singular")
    winv = np.array([[w[1, 1], -w[0, 1]], [-w[1, 0], w[0, 0]]]) / det
    return z @ winv


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule covering every pair once with disjoint rounds."""
    players = list(range(n + (n % 2)))
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for k in range(m // 2):
            a, b = players[k], players[m - 1 - k]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=int), np.array(qs, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _canonical_signs(q: np.ndarray) -> np.ndarray:
    q = q.copy()
    for k in range(q.shape[1]):
        nz = np.flatnonzero(np.abs(q[:, k]) > 1e-14)
        if nz.size and q[nz[0], k] < 0:
            q[:, k] = -q[:, k]
    return q


def symm_eig(a, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Disjoint rotation pairs are processed together (round-robin ordering), so
    each sweep costs ``n - 1`` vectorized rounds.

    Returns
    -------
    q : ndarray
        Orthogonal eigenvectors in columns; each column's first nonzero entry
        is positive.
    lam : ndarray
        Eigenvalues sorted in descending order.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"symm_eig needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    scale = float(np.linalg.norm(a))
    if float(np.linalg.norm(a - a.T)) > 1e-10 * scale:
        raise ValueError("symm_eig needs a symmetric matrix")
    a = 0.5 * (a + a.T)
    q = np.eye(n)
    if n <= 1 or scale == 0.0:
        return q, np.diag(a).copy()
    tol = 1e-12 * scale
    rounds = _round_robin(n)
    off = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        if np.max(np.abs(a[off])) < tol:
            break
        for ps, qs in rounds:
            apq = a[ps, qs]
            active = np.abs(apq) > 0.1 * tol
            if not np.any(active):
                continue
            ps, qs, apq = ps[active], qs[active], apq[active]
            theta = (a[qs, qs] - a[ps, ps]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rp, rq = a[ps, :].copy(), a[qs, :].copy()
            a[ps, :] = c[:, None] * rp - s[:, None] * rq
            a[qs, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, ps].copy(), a[:, qs].copy()
            a[:, ps] = cp * c - cq * s
            a[:, qs] = cp * s + cq * c
            vp, vq = q[:, ps].copy(), q[:, qs].copy()
            q[:, ps] = vp * c - vq * s
            q[:, qs] = vp * s + vq * c
    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    return _canonical_signs(q[:, order]), lam[order]


def left_singular(y) -> tuple[np.ndarray, np.ndarray]:
    """Left singular vectors and singular values of a wide matrix ``y`` (n x N)."""
    y = np.asarray(y, dtype=float)
    u, lam = symm_eig(y @ y.T)
    return u, np.sqrt(np.maximum(lam, 0.0))


def _orthonormal_completion(basis: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns ``basis`` (n x k) to an n x n orthogonal matrix."""
    n = basis.shape[0]
    out = [basis[:, k] for k in range(basis.shape[1])]
    for cand in np.eye(n):
        if len(out) == n:
            break
        v = cand.copy()
        for _ in range(2):
            for b in out:
                v -= (b @ v) * b
        nrm = np.linalg.norm(v)
        if nrm > 1e-8:
            out.append(v / nrm)
    return np.column_stack(out)


def full_svd_square(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD of a square matrix from the eigendecomposition of ``a.T @ a``.

    ``u[:, k] = a @ v[:, k] / sigma_k`` for the numerically nonzero singular
    values; the remaining left vectors complete an orthonormal basis.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"full_svd_square needs a square matrix, got {a.shape}")
    n = a.shape[0]
    if not np.any(a):
        return np.eye(n), np.zeros(n), np.eye(n)
    v, _ = symm_eig(a.T @ a)
    av = a @ v
    sigma = np.linalg.norm(av, axis=0)
    order = np.argsort(-sigma, kind="stable")
    v, av, sigma = v[:, order], av[:, order], sigma[order]
    keep = int(np.sum(sigma > 1e-12 * sigma[0]))
    u = np.zeros((n, n))
    u[:, :keep] = av[:, :keep] / sigma[:keep]
    # Gram-Schmidt in descending-sigma order keeps the dominant columns exact
    # and repairs orthogonality lost on small singular values
    for k in range(1, keep):
        for _ in range(2):
            u[:, k] -= u[:, :k] @ (u[:, :k].T @ u[:, k])
        u[:, k] /= np.linalg.norm(u[:, k])
    if keep < n:
        u = _orthonormal_completion(u[:, :keep])
        sigma[keep:] = 0.0
    return u, sigma, v


def solve_spd4(a, b) -> np.ndarray:
    """Solve a small SPD system by Cholesky, adding a ridge when near-singular.

    A ridge of ``1e-10 * trace(a)`` is added if the smallest pivot falls
    below ``1e-12 * trace(a)``.
    """
    a = np.array(a, dtype=float)
    b = np.asarray(b, dtype=float)
    tr = float(np.trace(a))
    chol = _cholesky(a)
    if chol is None or np.min(np.diag(chol)) ** 2 < 1e-12 * tr:
        a = a + 1e-10 * max(tr, np.finfo(float).tiny) * np.eye(a.shape[0])
        chol = _cholesky(a)
        if chol is None:
            raise np.linalg.LinAlgError("matrix is not positive definite")
    y = _forward(chol, b)
    return _backward(chol.T, y)


def _cholesky(a: np.ndarray):
    n = a.shape[0]
    lo = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - lo[j, :j] @ lo[j, :j]
        if not d > 0.0:
            return None
        lo[j, j] = math.sqrt(d)
        for i in range(j + 1, n):
            lo[i, j] = (a[i, j] - lo[i, :j] @ lo[j, :j]) / lo[j, j]
    return lo


def _forward(lo: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = np.zeros_like(b)
    for i in range(len(b)):
        x[i] = (b[i] - lo[i, :i] @ x[:i]) / lo[i, i]
    return x


def _backward(up: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = len(b)
    x = np.zeros_like(b)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - up[i, i + 1:] @ x[i + 1:]) / up[i, i]
    return x
