"""Separate Doerfler marking for the three indicators."""
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class MarkingResult:
    M1: frozenset
    M2: frozenset
    M3: frozenset

    @property
    def M(self):
        return self.M1 | self.M2 | self.M3


def dorfler_mark(values, theta):
    """Smallest set of elements carrying a ``theta`` fraction of the total.

    Elements are taken in decreasing order of value, ties by lower id, so the
    largest indicator is always included.
    """
    if not 0 < theta <= 1:
        raise ConfigError(f"theta must lie in (0, 1], got {theta}")
    values = np.asarray(values, dtype=float)
    if np.any(values < 0):
        raise ValueError("indicator values must be nonnegative")
    total = values.sum()
    if total <= 0:
        return frozenset()
    order = np.lexsort((np.arange(values.size), -values))
    csum = np.cumsum(values[order])
    # relative slack absorbs summation-order roundoff
    k = int(np.searchsorted(csum, theta * total * (1 - 1e-13), side="left")) + 1
    k = min(k, int(np.count_nonzero(values)))
    return frozenset(order[:k].tolist())


def mark_all(table, theta):
    return MarkingResult(
        dorfler_mark(table.eta1_sq, theta),
        dorfler_mark(table.eta2_sq, theta),
        dorfler_mark(table.eta3_q, theta),
    )
