"""Operation-count model for sparse coding with learned dictionaries.

All counts are exact integer evaluations of the closed-form models for a
dataset of ``N`` signals of dimension ``n`` coded at sparsity ``s``:

* ``ops_general`` - dense square dictionary, Batch-OMP coding
* ``ops_ortho`` - dense orthogonal dictionary, thresholding
* ``ops_gfact`` - ``m`` G-transforms, thresholding
* ``ops_rfact`` - ``m`` R-transforms plus diagonal, Batch-OMP

The parity helpers give the factor counts at which two options cost about
the same.
"""

from __future__ import annotations

from dataclasses import dataclass

HOUSEHOLDER_P = (1, 2, 3, 4, 6, 8, 16)


@dataclass(frozen=True)
class CostInputs:
    n: int
    N: int
    s: int
    m: int = 0

    def __post_init__(self):
        for name in ("n", "N", "s"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.m < 0:
            raise ValueError("m must be non-negative")
        if self.s > self.n:
            raise ValueError("s must not exceed n")


def _check(**kw) -> None:
    for name, v in kw.items():
        if int(v) != v or v < 0:
            raise ValueError(f"{name} must be a non-negative integer, got {v!r}")


def omp_per_signal(n: int, s: int) -> int:
    return s * s * n + 3 * s * n + s ** 3


def ops_general(n: int, N: int, s: int) -> int:
    _check(n=n, N=N, s=s)
    return (2 * n * n + omp_per_signal(n, s)) * N + n ** 3


def ops_ortho(n: int, N: int, s: int) -> int:
    _check(n=n, N=N, s=s)
    return (2 * n * n + n * s) * N


def ops_gfact(m: int, n: int, N: int, s: int) -> int:
    _check(m=m, n=n, N=N, s=s)
    return (6 * m + n * s) * N


def ops_rfact(m: int, n: int, N: int, s: int) -> int:
    _check(m=m, n=n, N=N, s=s)
    return (6 * m + n + omp_per_signal(n, s)) * N + 6 * m * n


def parity_m1(n: int) -> int:
    """G-factor count matching a dense orthogonal dictionary."""
    _check(n=n)
    return n * n // 3


def parity_m2(n: int, N: int, s: int) -> int:
    """R-factor count matching a dense general dictionary (both with Batch-OMP)."""
    _check(n=n, N=N, s=s)
    return ops_general(n, N, s) // (6 * (N + n))


def parity_g_of_r(m2: int, n: int, s: int) -> int:
    """G-factor count of the same cost as ``m2`` R-factors for large datasets."""
    _check(m2=m2, n=n, s=s)
    return m2 + (s * s + 3 * s + 1) * n // 6


def parity_householder(n: int, p: int) -> int:
    """G-factor count matching ``p`` Householder reflectors (``4n`` vs 6 ops each)."""
    _check(n=n, p=p)
    return 2 * n * p // 3


def parity_table(n: int) -> list[tuple[int, int]]:
    return [(p, parity_householder(n, p)) for p in HOUSEHOLDER_P]
