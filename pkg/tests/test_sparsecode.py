import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fastdla import opcount
from fastdla.fasttransform import FactoredGeneral, RFactor, densify, normalize_delta
from fastdla.sparsecode import SparseCodeMatrix, gram, hard_threshold, omp, threshold_dense


def reference_omp(d, y, s):
    """Plain OMP, one column at a time, with a fresh least-squares solve per step."""
    n, N = d.shape[1], y.shape[1]
    x = np.zeros((n, N))
    for col in range(N):
        r = y[:, col].copy()
        sup = []
        for _ in range(s):
            corr = np.abs(d.T @ r)
            corr[sup] = -1
            sup.append(int(np.argmax(corr)))
            coef, *_ = np.linalg.lstsq(d[:, sup], y[:, col], rcond=None)
            r = y[:, col] - d[:, sup] @ coef
        x[sup, col] = coef
    return x


def unit_columns(rng, n):
    d = rng.standard_normal((n, n))
    return d / np.linalg.norm(d, axis=0)


@settings(max_examples=100)
@given(arrays(np.float64, (6, 4), elements=st.floats(-100, 100)), st.integers(0, 6))
def test_threshold_keeps_largest(m, s):
    out = threshold_dense(m, s)
    assert np.all(np.count_nonzero(out, axis=0) <= s)
    assert np.all((out == 0) | (out == m))
    for col in range(4):
        mags = np.abs(m[:, col])
        if 0 < s < 6:
            # every dropped magnitude is at most the s-th largest
            thr = np.sort(mags)[::-1][s - 1]
            assert np.all(mags[out[:, col] == 0] <= thr)
        # the kept entries carry the s largest magnitudes in total
        assert np.abs(out[:, col]).sum() == pytest.approx(np.sort(mags)[::-1][:s].sum())


def test_threshold_ties_go_to_lowest_index():
    m = np.array([[1.0], [-1.0], [1.0], [0.5]])
    assert np.array_equal(threshold_dense(m, 2)[:, 0], [1.0, -1.0, 0.0, 0.0])


def test_threshold_bounds():
    with pytest.raises(ValueError):
        threshold_dense(np.zeros((3, 2)), 4)
    assert np.array_equal(threshold_dense(np.ones((3, 2)), 0), np.zeros((3, 2)))


def test_hard_threshold_supports():
    codes = hard_threshold(np.array([[3.0, 0.0], [1.0, 2.0], [-5.0, 1.0]]), 1)
    assert isinstance(codes, SparseCodeMatrix)
    assert [list(s) for s in codes.supports] == [[2], [1]]
    assert codes.max_nnz() == 1


@pytest.mark.parametrize("s", [1, 2, 4, 7])
def test_omp_matches_reference(rng, s):
    n = 10
    d = unit_columns(rng, n)
    y = rng.standard_normal((n, 30))
    got = omp(d, y, s).dense
    want = reference_omp(d, y, s)
    assert np.allclose(got, want, atol=1e-9)


def test_omp_on_factored_dictionary(rng):
    n = 8
    fs = [RFactor.from_block(*sorted(map(int, rng.choice(n, 2, replace=False))),
                             np.eye(2) + 0.5 * rng.standard_normal((2, 2))) for _ in range(20)]
    d = normalize_delta(fs, n)
    y = rng.standard_normal((n, 25))
    assert np.allclose(omp(d, y, 3).dense, reference_omp(densify(d), y, 3), atol=1e-9)
    assert np.allclose(gram(d), densify(d).T @ densify(d))


def test_omp_exact_recovery_and_early_stop(rng):
    n = 12
    d = unit_columns(rng, n)
    x = np.zeros((n, 5))
    x[[1, 7], :] = rng.standard_normal((2, 5))
    codes = omp(d, d @ x, 6)
    assert np.allclose(codes.dense, x, atol=1e-9)
    assert all(len(sup) == 2 for sup in codes.supports)


def test_omp_zero_column_and_duplicate_atoms(rng):
    d = np.eye(4)
    d[:, 3] = d[:, 2]
    y = np.zeros((4, 2))
    y[:, 1] = [0.0, 0.0, 1.0, 0.0]
    codes = omp(d, y, 3)
    assert np.array_equal(codes.dense[:, 0], np.zeros(4))
    assert np.allclose(d @ codes.dense[:, 1], y[:, 1])


def test_omp_validation(rng):
    with pytest.raises(ValueError):
        omp(np.eye(3) * 2.0, np.ones((3, 1)), 1)
    with pytest.raises(ValueError):
        omp(np.eye(3), np.ones((4, 1)), 1)
    with pytest.raises(ValueError):
        omp(np.eye(3), np.ones((3, 1)), 0)
    with pytest.raises(ValueError):
        omp(FactoredGeneral(3, [RFactor(0, 1, 2.0, 0.0, 0.0, 1.0)]), np.ones((3, 1)), 1)


def test_omp_counts_operations(rng):
    d = unit_columns(rng, 8)
    with opcount.counting() as ops:
        omp(d, rng.standard_normal((8, 10)), 3)
    assert ops.total > 0
