import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fastdla.matcore import (DegeneratePairError, full_svd_square, left_singular, ls2x2,
                             nuclear_trace_gap, nuclear_trace_gap_batch, procrustes2,
                             procrustes2_params, solve_spd4, svd2x2, symm_eig)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
blocks = arrays(np.float64, (2, 2), elements=finite)


@given(blocks)
def test_svd2x2_reconstructs(z):
    u, (s1, s2), v = svd2x2(z)
    scale = max(1.0, np.linalg.norm(z))
    assert np.allclose(u @ u.T, np.eye(2), atol=1e-12)
    assert np.allclose(v @ v.T, np.eye(2), atol=1e-12)
    assert s1 >= s2 >= 0
    assert np.allclose(u @ np.diag([s1, s2]) @ v.T, z, atol=1e-9 * scale)


@given(blocks)
def test_svd2x2_values_match_numpy(z):
    s = np.linalg.svd(z, compute_uv=False)
    assert np.allclose(svd2x2(z).sigma, s, atol=1e-12 * max(1.0, s[0]))


def test_svd2x2_small_singular_value_keeps_relative_accuracy():
    z = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-9]])
    s2 = svd2x2(z).sigma[1]
    # det = 1e-9, sigma1 ~ 2, so sigma2 ~ 5e-10
    assert s2 == pytest.approx(1e-9 / svd2x2(z).sigma[0], rel=1e-6)


@given(blocks)
def test_gap_equals_nuclear_minus_trace(z):
    want = np.linalg.svd(z, compute_uv=False).sum() - np.trace(z)
    assert nuclear_trace_gap(z) == pytest.approx(want, abs=1e-9 * max(1.0, np.abs(z).max()))
    assert nuclear_trace_gap(z) >= -1e-12 * max(1.0, np.linalg.norm(z))


def test_gap_batch_matches_scalar(rng):
    z = rng.standard_normal((100, 2, 2))
    batch = nuclear_trace_gap_batch(z[:, 0, 0], z[:, 1, 0], z[:, 0, 1], z[:, 1, 1])
    assert np.allclose(batch, [nuclear_trace_gap(b) for b in z], atol=1e-14)


def test_gap_zero_for_psd_symmetric(rng):
    a = rng.standard_normal((2, 2))
    assert abs(nuclear_trace_gap(a @ a.T)) < 1e-12


@given(blocks)
@settings(max_examples=200)
def test_procrustes2_is_optimal(z):
    g = procrustes2(z)
    assert np.allclose(g @ g.T, np.eye(2), atol=1e-12)
    best = np.trace(g.T @ z)
    # nuclear norm is the maximum of tr(O^T z) over orthogonal O
    assert best == pytest.approx(np.linalg.svd(z, compute_uv=False).sum(),
                                 abs=1e-9 * max(1.0, np.abs(z).max()))


def test_procrustes2_shapes_and_ties():
    assert procrustes2_params(np.zeros((2, 2))) == (1.0, 0.0, False)
    c, d, refl = procrustes2_params(np.diag([1.0, -1.0]))
    assert refl and (c, d) == (1.0, 0.0)
    c, d, refl = procrustes2_params(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert not refl and np.allclose(procrustes2(np.array([[0.0, 1.0], [-1.0, 0.0]])),
                                    [[0.0, 1.0], [-1.0, 0.0]])


def test_ls2x2_and_degenerate(rng):
    z = rng.standard_normal((2, 2))
    w = rng.standard_normal((2, 2))
    w = w @ w.T + 0.1 * np.eye(2)
    assert np.allclose(ls2x2(z, w) @ w, z)
    with pytest.raises(DegeneratePairError):
        ls2x2(z, np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(ValueError):
        ls2x2(np.zeros(3), w)


@pytest.mark.parametrize("n", [1, 2, 5, 16, 33])
def test_symm_eig_against_numpy(rng, n):
    a = rng.standard_normal((n, n))
    a = a + a.T
    q, lam = symm_eig(a)
    assert np.allclose(lam, np.sort(np.linalg.eigvalsh(a))[::-1], atol=1e-10)
    assert np.allclose(q.T @ q, np.eye(n), atol=1e-10)
    assert np.allclose(q @ np.diag(lam) @ q.T, a, atol=1e-9)
    for k in range(n):
        first = q[np.flatnonzero(np.abs(q[:, k]) > 1e-14)[0], k]
        assert first > 0


def test_symm_eig_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        symm_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_symm_eig_repeated_eigenvalues():
    q, lam = symm_eig(np.eye(4) * 3.0)
    assert np.allclose(lam, 3.0) and np.allclose(q, np.eye(4))


def test_left_singular(rng):
    y = rng.standard_normal((6, 40))
    u, s = left_singular(y)
    assert np.allclose(s, np.linalg.svd(y, compute_uv=False), atol=1e-10)
    assert np.allclose(np.abs(u.T @ np.linalg.svd(y)[0]), np.eye(6), atol=1e-7)


@pytest.mark.parametrize("rank", [0, 1, 3, 8])
def test_full_svd_square_rank_deficient(rng, rank):
    n = 8
    a = rng.standard_normal((n, rank)) @ rng.standard_normal((rank, n))
    u, s, v = full_svd_square(a)
    assert np.allclose(u.T @ u, np.eye(n), atol=1e-10)
    assert np.allclose(v.T @ v, np.eye(n), atol=1e-10)
    assert np.allclose(u @ np.diag(s) @ v.T, a, atol=1e-9 * max(1.0, np.linalg.norm(a)))
    assert np.allclose(s, np.linalg.svd(a, compute_uv=False), atol=1e-8 * max(1.0, s.max()))


def test_solve_spd4(rng):
    a = rng.standard_normal((4, 4))
    a = a @ a.T + np.eye(4)
    b = rng.standard_normal(4)
    assert np.allclose(solve_spd4(a, b), np.linalg.solve(a, b))


def test_solve_spd4_singular_gets_ridge():
    v = np.array([1.0, 2.0, 0.0, 0.0])
    a = np.outer(v, v)
    x = solve_spd4(a, v)
    assert np.all(np.isfinite(x))
    assert np.allclose(a @ x, v, atol=1e-6)
    assert math.isclose(float(x[2]), 0.0, abs_tol=1e-12)
