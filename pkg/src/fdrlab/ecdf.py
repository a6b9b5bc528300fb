"""Order statistics, the empirical cdf and the counting processes R(t), V(t)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True, eq=False)
class OrderedSample:
    """Sorted p-values plus the stable permutation back to original indices.

    ``perm[j]`` is the (0-based) original index of ``sorted_p[j]``; ties keep
    their original relative order.
    """

    sorted_p: np.ndarray
    perm: np.ndarray

    @property
    def n(self) -> int:
        return int(self.sorted_p.size)


def order(sample) -> OrderedSample:
    p = np.asarray(sample, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DomainError("order() needs a non-empty 1-d array")
    if np.any(~((p >= 0.0) & (p <= 1.0))):
        raise DomainError("p-values must lie in [0, 1]")
    perm = np.argsort(p, kind="stable")
    return OrderedSample(p[perm], perm)


def _check_t(t) -> np.ndarray:
    ta = np.asarray(t, dtype=float)
    if np.any(~((ta >= 0.0) & (ta <= 1.0))):
        raise DomainError("threshold t must lie in [0, 1]")
    return ta


class Ecdf:
    """Right-continuous empirical cdf ``F_n(t) = #{p_i <= t} / n``.

    Counts are exact integers obtained by binary search on the sorted values,
    with no tolerance: a p-value equal to ``t`` is counted.
    """

    __slots__ = ("ordered",)

    def __init__(self, ordered: OrderedSample):
        self.ordered = ordered

    @classmethod
    def from_pvalues(cls, p) -> "Ecdf":
        return cls(order(p))

    @property
    def n(self) -> int:
        return self.ordered.n

    def count(self, t):
        """R(t) without domain checks; ``t`` may be a scalar or an array."""
        return np.searchsorted(self.ordered.sorted_p, t, side="right")

    def count_leq(self, t):
        _check_t(t)
        out = self.count(t)
        return int(out) if np.ndim(t) == 0 else out

    def __call__(self, t):
        _check_t(t)
        out = self.count(t) / self.n
        return float(out) if np.ndim(t) == 0 else out


def ecdf_eval(e: Ecdf, t):
    return e(t)


def count_leq(e: Ecdf, t):
    """R(t): the number of p-values less than or equal to ``t``."""
    return e.count_leq(t)


def count_true_leq(sample, t) -> int:
    """V(t): the number of true-null p-values less than or equal to ``t``."""
    ta = _check_t(t)
    if sample.h is None:
        raise DomainError("V(t) needs truth indicators")
    true_p = sample.p[sample.h == 0]
    out = np.count_nonzero(true_p[:, None] <= np.atleast_1d(ta)[None, :], axis=0)
    return int(out[0]) if np.ndim(t) == 0 else out
