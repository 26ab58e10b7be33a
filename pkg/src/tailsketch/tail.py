"""Tail dependence: exact oracles over raw pairs, summary-based estimates, bounds.

The empirical copula on the diagonal drives both coefficients:

    lambda_L(i/n) = C(i/n, i/n) / (i/n)
    lambda_U(i/n) = (1 - 2i/n + C(i/n, i/n)) / (1 - i/n)

Oracles work on full storage (:class:`RawPairs`) and are exact; estimators
replace ``C`` with a :class:`~tailsketch.copula.CopulaSummary` query.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .copula import CopulaSummary
from .quantile import EmptySummaryError, ErrorMode, _check_unit, target_rank


class Side(str, Enum):
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class TailDependenceEstimate:
    side: Side
    tail_index: int  # i for the lower tail, offset n - i for the upper tail
    n: int
    lambda_: float
    bound: float


class Bounds(NamedTuple):
    copula_bound: float
    tail_bound_lower: float
    tail_bound_upper: float


class RawPairs:
    """Fully stored paired sample; the ground truth every summary is checked against."""

    def __init__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if x1.ndim != 1 or x1.shape != x2.shape:
            raise ValueError("x1 and x2 must be 1-d arrays of equal length")
        self.x1 = x1
        self.x2 = x2
        self._sorted: tuple[np.ndarray, np.ndarray] | None = None

    @classmethod
    def from_pairs(cls, pairs) -> "RawPairs":
        arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @property
    def n(self) -> int:
        return int(self.x1.shape[0])

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return zip(self.x1.tolist(), self.x2.tolist())

    def prefix(self, m: int) -> "RawPairs":
        return RawPairs(self.x1[:m], self.x2[:m])

    def order_statistic(self, k: int, rank: int) -> float:
        """``rank``-th smallest value (1-based) of marginal ``k`` in {1, 2}."""
        if self._sorted is None:
            self._sorted = (np.sort(self.x1, kind="stable"), np.sort(self.x2, kind="stable"))
        return float(self._sorted[k - 1][rank - 1])

    def first_marginal_set(self, u1: float) -> np.ndarray:
        """Boolean mask of the index set ``I``: pairs with ``x1`` at most the
        ``ceil(u1 n)``-th order statistic."""
        q1 = self.order_statistic(1, target_rank(u1, self.n))
        return self.x1 <= q1


def _require(data: RawPairs):
    if data.n == 0:
        raise EmptySummaryError("oracle on empty data")


def oracle_copula(data: RawPairs, u1: float, u2: float, form: str = "indicator") -> float:
    """Exact empirical copula ``C(u1, u2)``.

    ``form="indicator"`` averages the product of the two marginal indicators;
    ``form="restricted"`` scales the second-marginal empirical CDF over the index
    set ``I`` by ``n1 / n``.  The two agree exactly (rational arithmetic).
    """
    _require(data)
    u1 = _check_unit(u1)
    u2 = _check_unit(u2)
    n = data.n
    q2 = data.order_statistic(2, target_rank(u2, n))
    if form == "indicator":
        q1 = data.order_statistic(1, target_rank(u1, n))
        count = int(np.count_nonzero((data.x1 <= q1) & (data.x2 <= q2)))
        return float(Fraction(count, n))
    if form == "restricted":
        mask = data.first_marginal_set(u1)
        n1 = int(mask.sum())
        second = np.sort(data.x2[mask])
        ecdf = Fraction(int(np.searchsorted(second, q2, side="right")), n1)
        return float(Fraction(n1, n) * ecdf)
    raise ValueError(f"unknown form {form!r}")


def _diagonal_count(data: RawPairs, i: int) -> int:
    q1 = data.order_statistic(1, i)
    q2 = data.order_statistic(2, i)
    return int(np.count_nonzero((data.x1 <= q1) & (data.x2 <= q2)))


def oracle_lambda_lower(data: RawPairs, i: int) -> float:
    """Exact ``C(i/n, i/n) / (i/n)``."""
    _require(data)
    n = data.n
    if not 1 <= i <= n:
        raise ValueError(f"tail index i={i} outside [1, {n}]")
    return _diagonal_count(data, i) / i


def oracle_lambda_upper(data: RawPairs, i: int) -> float:
    """Exact ``(1 - 2i/n + C(i/n, i/n)) / (1 - i/n)``."""
    _require(data)
    n = data.n
    if not 1 <= i < n:
        raise ValueError(f"tail index i={i} outside [1, {n - 1}]")
    return (n - 2 * i + _diagonal_count(data, i)) / (n - i)


def bound_values(mode: ErrorMode, i: int, n: int) -> Bounds:
    """Theoretical errors at diagonal rank ``i`` of an ``n``-element stream.

    Biased mode gives a copula bound shrinking in the tails and tail-coefficient
    bounds ``eps (8 + 9 eps)`` independent of ``n``; uniform mode gives ``5 eps``
    for the copula, hence ``5 eps n / i`` and ``5 eps n / (n - i)``.
    """
    if not 1 <= i <= n:
        raise ValueError(f"tail index i={i} outside [1, {n}]")
    eps = mode.epsilon
    if mode.is_biased:
        c = eps * (8.0 + 9.0 * eps)
        return Bounds(c * min(i, n - i) / n, c, c)
    upper = 5.0 * eps * n / (n - i) if i < n else math.inf
    return Bounds(5.0 * eps, 5.0 * eps * n / i, upper)


def _require_summary(cs: CopulaSummary):
    if cs.n == 0:
        raise EmptySummaryError("estimate on an empty copula summary")


def estimate_lambda_lower(cs: CopulaSummary, i: int) -> TailDependenceEstimate:
    _require_summary(cs)
    n = cs.n
    if not 1 <= i <= math.ceil(n / 2):
        raise ValueError(f"lower tail index i={i} outside [1, ceil(n/2)={math.ceil(n / 2)}]")
    c = cs.query(i / n, i / n).value
    return TailDependenceEstimate(
        Side.LOWER, i, n, c * n / i, bound_values(cs.mode, i, n).tail_bound_lower
    )


def estimate_lambda_upper(cs: CopulaSummary, i: int) -> TailDependenceEstimate:
    """Upper tail estimate at ``i`` with ``ceil(n/2) < i < n``; ``tail_index`` holds ``n - i``."""
    _require_summary(cs)
    n = cs.n
    if not math.ceil(n / 2) < i < n:
        raise ValueError(f"upper tail index i={i} outside (ceil(n/2), n) for n={n}")
    c = cs.query(i / n, i / n).value
    lam = (1.0 - 2.0 * i / n + c) / (1.0 - i / n)
    return TailDependenceEstimate(
        Side.UPPER, n - i, n, lam, bound_values(cs.mode, i, n).tail_bound_upper
    )
