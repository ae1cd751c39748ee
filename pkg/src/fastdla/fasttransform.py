"""Elementary 2-coordinate transforms and dictionaries factored into them.

A G-factor is the identity except for an orthogonal 2x2 block on rows/columns
``(i, j)``; an R-factor carries an arbitrary 2x2 block.  Factor lists are
stored in application order: ``factors[0]`` is the rightmost factor, so a
factored orthogonal transform is ``U = G[m-1] ... G[1] G[0]`` and a factored
general dictionary is ``D = R[m-1] ... R[0] diag(delta)``.

Applying one factor to an ``n x N`` matrix touches two rows and costs
``4N`` multiplications plus ``2N`` additions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import opcount

ROTATION = "rotation"
REFLECTION = "reflection"

_FORMAT_VERSION = 1


class NonInvertibleError(ValueError):
    """A factored dictionary cannot be inverted."""


class RankDeficientError(ValueError):
    """A product of factors maps a basis vector to zero."""


class FormatError(ValueError):
    """Malformed factored-dictionary text."""


@dataclass(frozen=True)
class GFactor:
    i: int
    j: int
    c: float
    d: float
    kind: str = ROTATION

    def __post_init__(self):
        if not (0 <= self.i < self.j):
            raise ValueError(f"need 0 <= i < j, got ({self.i}, {self.j})")
        if self.kind not in (ROTATION, REFLECTION):
            raise ValueError(f"unknown G-factor kind {self.kind!r}")
        if abs(self.c * self.c + self.d * self.d - 1.0) > 1e-12:
            raise ValueError("G-factor needs c^2 + d^2 = 1")

    @property
    def block(self) -> np.ndarray:
        c, d = self.c, self.d
        if self.kind == ROTATION:
            return np.array([[c, d], [-d, c]])
        return np.array([[c, d], [d, -c]])

    @classmethod
    def identity(cls, i: int, j: int) -> "GFactor":
        return cls(i, j, 1.0, 0.0, ROTATION)

    def is_identity(self) -> bool:
        return self.kind == ROTATION and self.c == 1.0 and self.d == 0.0


@dataclass(frozen=True)
class RFactor:
    i: int
    j: int
    p: float
    q: float
    r: float
    t: float

    def __post_init__(self):
        if not (0 <= self.i < self.j):
            raise ValueError(f"need 0 <= i < j, got ({self.i}, {self.j})")
        if not all(math.isfinite(v) for v in (self.p, self.q, self.r, self.t)):
            raise ValueError("R-factor block must be finite")

    @property
    def block(self) -> np.ndarray:
        return np.array([[self.p, self.r], [self.q, self.t]])

    @classmethod
    def from_block(cls, i: int, j: int, block) -> "RFactor":
        b = np.asarray(block, dtype=float)
        return cls(i, j, float(b[0, 0]), float(b[1, 0]), float(b[0, 1]), float(b[1, 1]))

    @classmethod
    def from_g(cls, g: GFactor) -> "RFactor":
        return cls.from_block(g.i, g.j, g.block)


Factor = Union[GFactor, RFactor]


@dataclass(frozen=True)
class FactoredOrthogonal:
    n: int
    factors: tuple[GFactor, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        _check_indices(self.n, self.factors)

    @property
    def m(self) -> int:
        return len(self.factors)


@dataclass(frozen=True)
class FactoredGeneral:
    n: int
    factors: tuple[RFactor, ...] = ()
    delta: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        _check_indices(self.n, self.factors)
        delta = np.ones(self.n) if self.delta is None else np.array(self.delta, dtype=float)
        if delta.shape != (self.n,):
            raise ValueError(f"delta must have length {self.n}")
        if not np.all(delta > 0) or not np.all(np.isfinite(delta)):
            raise ValueError("delta entries must be positive and finite")
        delta.setflags(write=False)
        object.__setattr__(self, "delta", delta)

    @property
    def m(self) -> int:
        return len(self.factors)

    def __eq__(self, other):
        if not isinstance(other, FactoredGeneral):
            return NotImplemented
        return (self.n == other.n and self.factors == other.factors
                and np.array_equal(self.delta, other.delta))


def _check_indices(n: int, factors) -> None:
    for f in factors:
        if f.j >= n:
            raise IndexError(f"factor pair ({f.i}, {f.j}) out of range for n={n}")


def _block_of(f: Factor) -> tuple[float, float, float, float]:
    if isinstance(f, GFactor):
        c, d = f.c, f.d
        if f.kind == ROTATION:
            return c, -d, d, c
        return c, d, d, -c
    return f.p, f.q, f.r, f.t


def apply_block(m: np.ndarray, i: int, j: int, p: float, q: float, r: float,
                t: float, transpose: bool = False) -> None:
    """In-place ``m[[i, j]] <- B @ m[[i, j]]`` with ``B = [[p, r], [q, t]]`` (or ``B.T``)."""
    if transpose:
        q, r = r, q
    xi = m[i].copy()
    xj = m[j]
    m[i] = p * xi + r * xj
    m[j] = q * xi + t * xj
    if opcount.enabled():
        ncols = xi.size
        opcount.record(mul=4 * ncols, add=2 * ncols)


def apply_factor(f: Factor, m: np.ndarray, side: str = "left") -> np.ndarray:
    """Apply one factor in place on the left of ``m``; returns ``m``.

    ``side`` is ``"left"`` for ``F @ m`` or ``"left-transpose"`` for ``F.T @ m``.
    """
    if side not in ("left", "left-transpose"):
        raise ValueError(f"unknown side {side!r}")
    if f.j >= m.shape[0]:
        raise IndexError(f"factor pair ({f.i}, {f.j}) out of range for {m.shape[0]} rows")
    apply_block(m, f.i, f.j, *_block_of(f), transpose=(side == "left-transpose"))
    return m


def _work_copy(m, n: int) -> np.ndarray:
    out = np.array(m, dtype=float, copy=True)
    if out.shape[0] != n:
        raise ValueError(f"operand has {out.shape[0]} rows, transform acts on {n}")
    return out


def apply(t: FactoredOrthogonal | FactoredGeneral, m) -> np.ndarray:
    """``F[m-1] ... F[0] @ m`` (no diagonal scaling)."""
    out = _work_copy(m, t.n)
    for f in t.factors:
        apply_factor(f, out, "left")
    return out


def apply_transpose(t: FactoredOrthogonal | FactoredGeneral, m) -> np.ndarray:
    """``F[0].T ... F[m-1].T @ m``."""
    out = _work_copy(m, t.n)
    for f in reversed(t.factors):
        apply_factor(f, out, "left-transpose")
    return out


def _scale_rows(out: np.ndarray, s: np.ndarray) -> np.ndarray:
    out *= s.reshape((-1,) + (1,) * (out.ndim - 1))
    if opcount.enabled():
        opcount.record(mul=out.size)
    return out


def apply_general(d: FactoredGeneral, m) -> np.ndarray:
    """``D @ m = R[m-1] ... R[0] diag(delta) @ m``."""
    out = _scale_rows(_work_copy(m, d.n), d.delta)
    for f in d.factors:
        apply_factor(f, out, "left")
    return out


def apply_general_adjoint(d: FactoredGeneral, m) -> np.ndarray:
    """``D.T @ m = diag(delta) R[0].T ... R[m-1].T @ m``."""
    out = apply_transpose(d, m)
    return _scale_rows(out, d.delta)


def apply_general_inverse(d: FactoredGeneral, m) -> np.ndarray:
    """Solve ``D @ x = m`` by 2x2 solves factor by factor, then undo ``delta``."""
    out = _work_copy(m, d.n)
    for f in reversed(d.factors):
        p, q, r, t = _block_of(f)
        det = p * t - q * r
        if not abs(det) > 1e-14 * (p * p + q * q + r * r + t * t):
            raise NonInvertibleError(
                f"non-invertible dictionary: singular block at ({f.i}, {f.j})")
        apply_block(out, f.i, f.j, t / det, -q / det, -r / det, p / det)
    return _scale_rows(out, 1.0 / d.delta)


def densify(t: FactoredOrthogonal | FactoredGeneral) -> np.ndarray:
    """The dense ``n x n`` matrix of a factored transform (tests, Gram matrices)."""
    eye = np.eye(t.n)
    if isinstance(t, FactoredGeneral):
        return apply_general(t, eye)
    return apply(t, eye)


def normalize_delta(factors: Sequence[RFactor], n: int) -> FactoredGeneral:
    """Attach the diagonal that gives ``R[m-1] ... R[0] diag(delta)`` unit columns."""
    raw = apply(FactoredGeneral(n, factors), np.eye(n))
    norms = np.linalg.norm(raw, axis=0)
    if not np.all(norms > 0) or not np.all(np.isfinite(norms)):
        raise RankDeficientError("rank-deficient factor product: a column vanished")
    return FactoredGeneral(n, factors, 1.0 / norms)


# -- text serialization ---------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def serialize(t: FactoredOrthogonal | FactoredGeneral) -> bytes:
    """Line-based ``FDLT`` text encoding (UTF-8)."""
    lines = []
    if isinstance(t, FactoredOrthogonal):
        lines.append(f"FDLT {_FORMAT_VERSION} G {t.n} {t.m}")
        for f in t.factors:
            kind = 1 if f.kind == REFLECTION else 0
            lines.append(f"{f.i} {f.j} {_fmt(f.c)} {_fmt(f.d)} {kind}")
    elif isinstance(t, FactoredGeneral):
        lines.append(f"FDLT {_FORMAT_VERSION} R {t.n} {t.m}")
        for f in t.factors:
            lines.append(" ".join([str(f.i), str(f.j)] + [_fmt(v) for v in (f.p, f.q, f.r, f.t)]))
        lines.append("DIAG")
        lines.append(" ".join(_fmt(v) for v in t.delta))
    else:
        raise TypeError(f"cannot serialize {type(t).__name__}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def deserialize(data: bytes | str) -> FactoredOrthogonal | FactoredGeneral:
    """Inverse of :func:`serialize`; raises :class:`FormatError` on bad input."""
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty input")
    head = lines[0].split()
    if len(head) != 5 or head[0] != "FDLT":
        raise FormatError(f"malformed header {lines[0]!r}")
    try:
        version, kind, n, m = int(head[1]), head[2], int(head[3]), int(head[4])
    except ValueError as exc:
        raise FormatError(f"malformed header {lines[0]!r}") from exc
    if version != _FORMAT_VERSION or kind not in ("G", "R") or n < 1 or m < 0:
        raise FormatError(f"unsupported header {lines[0]!r}")
    body = lines[1:]
    expected = m + (2 if kind == "R" else 0)
    if len(body) != expected:
        raise FormatError(f"expected {expected} lines after header, found {len(body)}")
    factors = []
    try:
        for ln in body[:m]:
            tok = ln.split()
            i, j = int(tok[0]), int(tok[1])
            if not (0 <= i < j < n):
                raise FormatError(f"index pair ({i}, {j}) out of range for n={n}")
            if kind == "G":
                if len(tok) != 5 or tok[4] not in ("0", "1"):
                    raise FormatError(f"bad G-factor line {ln!r}")
                c, d = float(tok[2]), float(tok[3])
                if abs(c * c + d * d - 1.0) > 1e-12:
                    raise FormatError(f"non-unit c^2 + d^2 in line {ln!r}")
                factors.append(GFactor(i, j, c, d, REFLECTION if tok[4] == "1" else ROTATION))
            else:
                if len(tok) != 6:
                    raise FormatError(f"bad R-factor line {ln!r}")
                factors.append(RFactor(i, j, *(float(v) for v in tok[2:])))
        if kind == "G":
            return FactoredOrthogonal(n, factors)
        if body[m].strip() != "DIAG":
            raise FormatError("missing DIAG marker")
        delta = [float(v) for v in body[m + 1].split()]
        if len(delta) != n:
            raise FormatError(f"DIAG line has {len(delta)} values, expected {n}")
        return FactoredGeneral(n, factors, np.array(delta))
    except FormatError:
        raise
    except (ValueError, IndexError) as exc:
        raise FormatError(str(exc)) from exc
