import numpy as np
import pytest

from fastdla.fasttransform import (FactoredGeneral, FactoredOrthogonal, RFactor, apply,
                                   apply_general, densify)
from fastdla.learn import (DatasetDegenerateError, TrainConfig, best_g_factor, best_r_factor,
                           dct_dictionary, dct_matrix, gdla_init, gdla_iterate,
                           local_min_residual, procrustes, rdla_phase1, refine_r_factor,
                           score_table_g, score_table_r, svd_init, train_gdla, train_qdla,
                           train_rdla)
from fastdla.matcore import procrustes2


def sq(a):
    return float(np.sum(np.asarray(a) ** 2))


def orth(rng, n):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return q


def sparse_data(rng, n, N, s, noise=0.05):
    x = np.zeros((n, N))
    for col in range(N):
        x[rng.choice(n, s, replace=False), col] = rng.standard_normal(s)
    return orth(rng, n) @ x + noise * rng.standard_normal((n, N))


# -- configuration ----------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(m=0), dict(s=0), dict(iters=-1), dict(order="zigzag"),
                                dict(min_gain=-1.0), dict(s=9)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        TrainConfig(**kw).validate(8)


def test_svd_init_codes(rng):
    y = rng.standard_normal((6, 50))
    state, x = svd_init(y, 2)
    assert np.all(np.count_nonzero(x, axis=0) <= 2)
    assert state.error_bound(2) == pytest.approx(np.sum(np.linalg.svd(y, compute_uv=False)[2:] ** 2))


# -- scores -------------------------------------------------------------------

def test_g_scores_against_svd(rng):
    z = rng.standard_normal((6, 6))
    table = score_table_g(z)
    for i in range(6):
        for j in range(i + 1, 6):
            blk = z[np.ix_([i, j], [i, j])]
            want = np.linalg.svd(blk, compute_uv=False).sum() - np.trace(blk)
            assert table.values[i, j] == pytest.approx(want, abs=1e-12)
    assert table.best_gain == np.nanmax(table.values)


def test_r_scores_equal_least_squares_drop(rng):
    y = rng.standard_normal((5, 30))
    x = rng.standard_normal((5, 30))
    table = score_table_r(y @ x.T, x @ x.T)
    for i in range(5):
        for j in range(i + 1, 5):
            rows = [i, j]
            sol, *_ = np.linalg.lstsq(x[rows].T, y[rows].T, rcond=None)
            drop = sq(y[rows] - x[rows]) - sq(y[rows] - sol.T @ x[rows])
            assert table.values[i, j] == pytest.approx(drop, rel=1e-9, abs=1e-9)


def test_score_ties_pick_smallest_pair():
    assert score_table_g(np.zeros((4, 4))).best_pair == (0, 1)


def test_r_scores_degenerate():
    x = np.zeros((3, 10))
    x[0] = 1.0
    z, w = np.ones((3, 3)), x @ x.T
    with pytest.raises(DatasetDegenerateError):
        score_table_r(z, w)
    assert score_table_r(z, w, allow_degenerate=True).best_gain == -np.inf


def test_best_factors_with_min_gain(rng):
    z = rng.standard_normal((4, 4))
    f, gain = best_g_factor(z, min_gain=1e9)
    assert f.is_identity() and gain == 0.0
    w = np.eye(4)
    f, gain = best_r_factor(z, w, min_gain=1e9)
    assert np.array_equal(f.block, np.eye(2)) and gain == 0.0


# -- orthogonal learner -----------------------------------------------------

def naive_sequential_sweep(y, factors, x):
    """One pass of factor updates, every cross matrix rebuilt from scratch."""
    n = y.shape[0]
    factors = list(factors)
    for k in range(len(factors)):
        above = densify(FactoredOrthogonal(n, factors[k + 1:]))
        below = densify(FactoredOrthogonal(n, factors[:k]))
        factors[k], _ = best_g_factor(above.T @ y @ (below @ x).T)
    return factors


@pytest.mark.parametrize("order", ["sequential", "random"])
def test_gdla_sweep_matches_naive_rebuild(rng, order):
    y = sparse_data(rng, 8, 200, 2)
    cfg = TrainConfig(m=12, s=2, iters=1, order=order, seed=3)
    t0, codes, _ = gdla_init(y, cfg)
    t1, _, _ = gdla_iterate(y, t0, codes, cfg)
    if order == "sequential":
        want = naive_sequential_sweep(y, t0.factors, codes.dense)
        for a, b in zip(t1.factors, want):
            assert (a.i, a.j, a.kind) == (b.i, b.j, b.kind)
            assert a.c == pytest.approx(b.c, abs=1e-9) and a.d == pytest.approx(b.d, abs=1e-9)
    else:
        assert t1.m == 12


def test_gdla_init_greedy_matches_naive(rng):
    y = rng.standard_normal((6, 80))
    cfg = TrainConfig(m=5, s=2, iters=0)
    t, codes, _ = gdla_init(y, cfg)
    x = codes.dense
    for k, f in enumerate(t.factors):
        below = densify(FactoredOrthogonal(6, t.factors[:k]))
        want, _ = best_g_factor(y @ (below @ x).T)
        assert (f.i, f.j) == (want.i, want.j)
        assert np.allclose(f.block, procrustes2(
            (y @ (below @ x).T)[np.ix_([f.i, f.j], [f.i, f.j])]))


def test_gdla_report_matches_direct_error(rng):
    y = sparse_data(rng, 10, 300, 3)
    t, codes, report = train_gdla(y, TrainConfig(m=20, s=3, iters=5))
    direct = sq(y - apply(t, codes.dense))
    assert report.objective[-1] == pytest.approx(direct, rel=1e-10)
    assert report.final_rel_error == pytest.approx(direct / sq(y), rel=1e-10)
    assert len(report.rel_error) == 6
    assert np.all(np.count_nonzero(codes.dense, axis=0) <= 3)


def test_gdla_callback_count_and_min_gain(rng):
    y = rng.standard_normal((6, 60))
    calls = []
    train_gdla(y, TrainConfig(m=4, s=2, iters=3), callback=calls.append)
    assert len(calls) == 4 * 4
    _, _, report = train_gdla(y, TrainConfig(m=4, s=2, iters=2, min_gain=1e12))
    assert report.factors_used == 0


def test_gdla_reaches_near_procrustes_with_many_factors(rng):
    y = sparse_data(rng, 6, 400, 2, noise=0.01)
    _, _, g = train_gdla(y, TrainConfig(m=60, s=2, iters=20))
    _, _, q = train_qdla(y, TrainConfig(s=2, iters=20))
    assert g.final_rel_error <= q.final_rel_error + 0.02


# -- general learner ----------------------------------------------------------

def test_rdla_returns_normalized_best_pair(rng):
    y = sparse_data(rng, 8, 300, 2)
    d, codes, report = train_rdla(y, TrainConfig(m=12, s=2, iters=4))
    assert np.allclose(np.linalg.norm(densify(d), axis=0), 1.0)
    direct = sq(y - apply_general(d, codes.dense))
    assert report.final_rel_error == pytest.approx(direct / sq(y), rel=1e-9)
    assert report.final_rel_error <= min(report.rel_error) + 1e-12


def test_rdla_phase1_greedy_objective_trace(rng):
    y = rng.standard_normal((6, 100))
    _, x = svd_init(y, 2)
    steps = []
    rdla_phase1(y, x, TrainConfig(m=5, s=2, iters=1), callback=steps.append)
    assert len(steps) == 5
    objs = [s.objective for s in steps]
    assert all(b <= a + 1e-9 * sq(y) for a, b in zip(objs, objs[1:]))
    assert objs[0] <= sq(y - x) + 1e-9


def test_rdla_zero_iterations_gives_identity(rng):
    y = rng.standard_normal((5, 40))
    d, codes, report = train_rdla(y, TrainConfig(m=3, s=2, iters=0))
    assert d.m == 0 and np.allclose(densify(d), np.eye(5))
    assert np.all(np.count_nonzero(codes.dense, axis=0) <= 2)


def test_refine_never_increases_error(rng):
    n, N = 6, 50
    y, x = rng.standard_normal((n, N)), rng.standard_normal((n, N))
    fs = [RFactor.from_block(*sorted(map(int, rng.choice(n, 2, replace=False))),
                             np.eye(2) + 0.3 * rng.standard_normal((2, 2))) for _ in range(4)]
    for k in range(4):
        before = sq(y - apply(FactoredGeneral(n, fs), x))
        fs[k] = refine_r_factor(y, fs, k, x)
        after = sq(y - apply(FactoredGeneral(n, fs), x))
        assert after <= before + 1e-10


def test_refine_with_unused_coordinate_keeps_block_finite(rng):
    # codes vanish on coordinate 1, so part of the block is unconstrained
    n, N = 4, 30
    x = rng.standard_normal((n, N))
    x[1] = 0.0
    y = rng.standard_normal((n, N))
    fs = [RFactor(0, 1, 1.0, 0.0, 0.0, 1.0)]
    new = refine_r_factor(y, fs, 0, x)
    assert np.all(np.isfinite(new.block))
    assert new.r == pytest.approx(0.0, abs=1e-6) and new.t == pytest.approx(1.0, abs=1e-6)


# -- unstructured orthogonal learner and baselines -----------------------------

def test_procrustes_against_numpy(rng):
    a = rng.standard_normal((7, 7))
    u, _, vt = np.linalg.svd(a)
    assert np.allclose(procrustes(a), u @ vt, atol=1e-9)


def test_qdla_monotone_and_orthogonal(rng):
    y = sparse_data(rng, 8, 300, 3)
    q, _, report = train_qdla(y, TrainConfig(s=3, iters=10))
    assert np.allclose(q.T @ q, np.eye(8), atol=1e-10)
    assert np.max(np.diff(report.objective)) <= 1e-9 * sq(y)


def test_dct_matches_scipy():
    fft = pytest.importorskip("scipy.fft")
    for size in (1, 2, 5, 8):
        want = fft.dct(np.eye(size), type=2, norm="ortho", axis=0).T
        assert np.allclose(dct_matrix(size), want, atol=1e-12)


def test_dct_dictionary_properties():
    d = dct_dictionary(8)
    assert d.shape == (64, 64)
    assert np.allclose(d.T @ d, np.eye(64), atol=1e-12)
    assert np.allclose(d[:, 0], 1.0 / 8)


def test_local_min_residual(rng):
    x = rng.standard_normal((5, 60))
    assert local_min_residual(np.eye(5), x, x) <= 1e-9
    assert local_min_residual(np.eye(5), rng.standard_normal((5, 60)), x) > 0
