"""Opt-in arithmetic accounting for the fast-transform and OMP kernels.

Counting is off by default.  Wrap code in :func:`counting` to collect the
number of scalar multiplications and additions the kernels perform::

    with counting() as ops:
        apply(t, y)
    ops.total
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass


@dataclass
class OpCounter:
    mul: int = 0
    add: int = 0
    other: int = 0

    @property
    def total(self) -> int:
        return self.mul + self.add + self.other


_active: list[OpCounter] = []


def record(mul: int = 0, add: int = 0, other: int = 0) -> None:
    for c in _active:
        c.mul += int(mul)
        c.add += int(add)
        c.other += int(other)


def enabled() -> bool:
    return bool(_active)


@contextlib.contextmanager
def counting():
    c = OpCounter()
    _active.append(c)
    try:
        yield c
    finally:
        _active.remove(c)
