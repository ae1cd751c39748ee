"""Learner configuration, reports and the SVD initialization."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from ..matcore import left_singular
from ..sparsecode import threshold_dense

ORDERS = ("sequential", "random")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by the learners.

    ``order="random"`` visits the factors in a seeded random permutation on
    every outer iteration.  ``min_gain`` > 0 turns factors whose best score
    falls below it into identities.
    """

    m: int = 64
    s: int = 4
    iters: int = 150
    seed: int = 0
    order: str = "sequential"
    min_gain: float = 0.0

    def validate(self, n: int | None = None) -> "TrainConfig":
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.s < 1 or (n is not None and self.s > n):
            raise ValueError(f"s must be in [1, {n}], got {self.s}")
        if self.iters < 0:
            raise ValueError(f"iters must be >= 0, got {self.iters}")
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}, got {self.order!r}")
        if not self.min_gain >= 0:
            raise ValueError("min_gain must be >= 0")
        return self


@dataclass
class TrainReport:
    """Objective trace of a training run.

    ``objective`` holds ``||Y - D X||_F^2`` after every recorded update step;
    ``rel_error`` holds the relative error (a fraction, not percent) at the
    end of the initialization and of every outer iteration.
    """

    y_energy: float
    objective: list[float] = field(default_factory=list)
    rel_error: list[float] = field(default_factory=list)
    wall_time: float = 0.0
    factors_used: int = 0
    best_objective: Optional[float] = None
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def step(self, obj: float) -> None:
        self.objective.append(float(obj))

    def end_iteration(self, obj: float) -> None:
        self.rel_error.append(float(obj) / self.y_energy if self.y_energy > 0 else 0.0)

    def finish(self) -> "TrainReport":
        self.wall_time = time.perf_counter() - self._t0
        return self

    @property
    def rel_error_pct(self) -> list[float]:
        return [100.0 * o / self.y_energy if self.y_energy > 0 else 0.0 for o in self.objective]

    @property
    def final_rel_error(self) -> float:
        if self.best_objective is not None:
            return self.best_objective / self.y_energy if self.y_energy > 0 else 0.0
        return self.rel_error[-1] if self.rel_error else float("nan")


class StepInfo(NamedTuple):
    """Passed to learner callbacks after every factor update."""

    phase: str
    k: int
    pair: tuple[int, int]
    gain: float
    objective: float
    z: Optional[np.ndarray]


StepCallback = Callable[[StepInfo], None]


class InitState(NamedTuple):
    u0: np.ndarray
    sigma: np.ndarray

    def error_bound(self, s: int) -> float:
        """Squared error of the best rank-``s`` approximation of the data."""
        return float(np.sum(self.sigma[s:] ** 2))


def svd_init(y: np.ndarray, s: int) -> tuple[InitState, np.ndarray]:
    """Left singular basis of ``y`` and the codes ``T_s(U0^T y)``."""
    u0, sigma = left_singular(y)
    return InitState(u0, sigma), threshold_dense(u0.T @ y, s)


def as_data(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise ValueError("data must be a 2-D array with signals in columns")
    if not np.all(np.isfinite(y)):
        raise ValueError("data contains non-finite values")
    return y


def sq_error(y: np.ndarray, approx: np.ndarray) -> float:
    r = y - approx
    return float(np.einsum("ij,ij->", r, r))
