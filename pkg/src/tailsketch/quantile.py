"""Univariate quantile summaries with uniform or relative (biased) rank error.

A summary is an ordered list of ``(value, g, delta)`` tuples in the
Greenwald-Khanna layout: ``r_min(v_i) = g_1 + ... + g_i`` and
``r_max(v_i) = r_min(v_i) + delta_i``.  Two error modes share the plumbing:

* ``uniform``: adjacent tuples may span ``2 * eps * n`` ranks, giving
  quantile answers within ``eps * n`` ranks everywhere.
* ``biased``: adjacent tuples may span
  ``2 * eps * min(r_min(v_i), n - r_max(v_{i+1}))`` ranks, giving answers
  within ``eps * min(u, 1 - u) * n`` ranks, i.e. exact-ish in both tails.

The first and last tuples always hold the exact stream minimum and maximum.
"""
from __future__ import annotations

import math
from itertools import accumulate
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

import numpy as np


# below this many tuples plain-Python loops beat numpy call overhead
_NUMPY_CUTOFF = 256


class EmptySummaryError(ValueError):
    """Raised when querying a summary that has seen no elements."""


class ModeMismatchError(ValueError):
    """Raised when combining summaries built with different error modes."""


class ErrorKind(str, Enum):
    UNIFORM = "uniform"
    BIASED = "biased"


@dataclass(frozen=True)
class ErrorMode:
    """Error model of a summary: kind of rank invariant and its accuracy ``epsilon``."""

    kind: ErrorKind
    epsilon: float

    def __post_init__(self):
        kind = ErrorKind(self.kind)
        object.__setattr__(self, "kind", kind)
        eps = float(self.epsilon)
        if not (math.isfinite(eps) and 0.0 < eps <= 0.5):
            raise ValueError(f"epsilon must lie in (0, 0.5], got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)

    @classmethod
    def biased(cls, epsilon: float) -> "ErrorMode":
        return cls(ErrorKind.BIASED, epsilon)

    @classmethod
    def uniform(cls, epsilon: float) -> "ErrorMode":
        return cls(ErrorKind.UNIFORM, epsilon)

    @property
    def is_biased(self) -> bool:
        return self.kind is ErrorKind.BIASED

    @property
    def compress_period(self) -> int:
        """Number of insertions between scheduled compressions."""
        return max(1, math.floor(1.0 / (2.0 * self.epsilon)))

    def allowed_gap(self, r_min_left: int, r_max_right: int, n: int) -> float:
        """Largest ``r_max(v_{i+1}) - r_min(v_i)`` the invariant permits."""
        if self.kind is ErrorKind.UNIFORM:
            return 2.0 * self.epsilon * n
        return 2.0 * self.epsilon * min(r_min_left, n - r_max_right)

    def rank_tolerance(self, rank: int, n: int) -> float:
        """Rank slack a quantile answer is allowed around ``rank``."""
        if self.kind is ErrorKind.UNIFORM:
            return self.epsilon * n
        return self.epsilon * min(rank, n - rank)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "epsilon": self.epsilon}

    @classmethod
    def from_dict(cls, d: dict) -> "ErrorMode":
        return cls(ErrorKind(d["kind"]), d["epsilon"])


class SummaryTuple(NamedTuple):
    value: float
    g: int
    delta: int


def target_rank(u: float, n: int) -> int:
    """``ceil(u * n)`` clamped to ``[1, n]``, robust to ``u = i / n`` round-off."""
    x = u * n
    nearest = round(x)
    if abs(x - nearest) <= 1e-9 * max(1.0, abs(x)):
        r = int(nearest)
    else:
        r = math.ceil(x)
    return min(max(r, 1), n)


def _check_finite(x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"stream values must be finite, got {x!r}")
    return x


def _check_unit(u) -> float:
    u = float(u)
    if not (0.0 < u <= 1.0):
        raise ValueError(f"quantile argument must lie in (0, 1], got {u!r}")
    return u


class QuantileSummary:
    """Streaming quantile summary over a single stream of reals.

    ``insert`` and ``compress`` are the raw operations; ``add`` inserts and
    compresses on the schedule given by ``mode.compress_period``.
    """

    __slots__ = ("mode", "n", "values", "g", "delta")

    def __init__(self, mode: ErrorMode):
        self.mode = mode
        self.n = 0
        self.values: list[float] = []
        self.g: list[int] = []
        self.delta: list[int] = []

    # ------------------------------------------------------------------ build
    @classmethod
    def from_tuples(cls, mode: ErrorMode, tuples: Iterable[Sequence]) -> "QuantileSummary":
        """Build a summary from explicit ``(value, g, delta)`` triples (no validation)."""
        qs = cls(mode)
        for v, g, d in tuples:
            qs.values.append(float(v))
            qs.g.append(int(g))
            qs.delta.append(int(d))
        qs.n = sum(qs.g)
        return qs

    @classmethod
    def singleton(cls, mode: ErrorMode, x: float) -> "QuantileSummary":
        qs = cls(mode)
        qs.values.append(_check_finite(x))
        qs.g.append(1)
        qs.delta.append(0)
        qs.n = 1
        return qs

    def copy(self) -> "QuantileSummary":
        qs = QuantileSummary(self.mode)
        qs.n = self.n
        qs.values = self.values.copy()
        qs.g = self.g.copy()
        qs.delta = self.delta.copy()
        return qs

    # ------------------------------------------------------------ accessors
    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        return f"QuantileSummary({self.mode.kind.value}, eps={self.mode.epsilon}, n={self.n}, tuples={len(self)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantileSummary):
            return NotImplemented
        return (
            self.mode == other.mode
            and self.n == other.n
            and self.values == other.values
            and self.g == other.g
            and self.delta == other.delta
        )

    @property
    def tuples(self) -> list[SummaryTuple]:
        return [SummaryTuple(v, g, d) for v, g, d in zip(self.values, self.g, self.delta)]

    def rank_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Arrays of ``r_min`` and ``r_max`` for every stored tuple."""
        rmin = np.cumsum(np.asarray(self.g, dtype=np.int64))
        return rmin, rmin + np.asarray(self.delta, dtype=np.int64)

    # ------------------------------------------------------------ mutation
    def insert(self, x: float) -> int:
        """Insert one stream element and return the position of its new tuple.

        The new tuple gets ``g = 1``.  Extremes are stored exactly (``delta = 0``);
        an interior element inherits the rank uncertainty of the gap it lands in,
        ``g_{i+1} + delta_{i+1} - 1``.
        """
        x = _check_finite(x)
        pos = bisect_right(self.values, x)
        if pos == 0 or pos == len(self.values):
            d = 0
        else:
            d = self.g[pos] + self.delta[pos] - 1
        self.values.insert(pos, x)
        self.g.insert(pos, 1)
        self.delta.insert(pos, d)
        self.n += 1
        return pos

    def add(self, x: float) -> int:
        pos = self.insert(x)
        if self.n % self.mode.compress_period == 0:
            self.compress()
        return pos

    def extend(self, xs: Iterable[float]) -> "QuantileSummary":
        for x in xs:
            self.add(x)
        return self

    def compress_plan(self) -> np.ndarray | list[bool] | None:
        """Decide which tuples survive a compression pass.

        Interior tuple ``i`` absorbs the run of surviving predecessors back to the
        earliest ``j >= 2`` with
        ``sum(g_j..g_i) + delta_i <= allowed_gap(r_min(v_{j-1}), r_max(v_i))``,
        scanning ``i`` left to right.  Returns a boolean survivor mask, or ``None``
        when nothing can be combined.  Short summaries get a plain list.
        """
        L = len(self.values)
        if L <= 3:
            return None
        if L < _NUMPY_CUTOFF:
            return self._compress_plan_small()
        rmin, rmax = self.rank_bounds()
        n = self.n
        two_eps = 2.0 * self.mode.epsilon
        biased = self.mode.is_biased

        # tuple i can only absorb anything if it could absorb its direct
        # predecessor with the original neighbours; the condition is monotone in j
        idx = np.arange(2, L - 1)
        left = rmin[idx - 2]
        right = rmax[idx]
        if biased:
            allowed = two_eps * np.minimum(left, n - right)
        else:
            allowed = np.full(idx.shape, two_eps * n)
        candidates = idx[(right - left) <= allowed]
        if candidates.size == 0:
            return None

        rmin_l = rmin.tolist()
        rmax_l = rmax.tolist()
        prev = list(range(-1, L - 1))
        alive = np.ones(L, dtype=bool)
        uniform_gap = two_eps * n
        for i in candidates.tolist():
            top = i - 1
            r_i = rmax_l[i]
            while top >= 1:
                p = prev[top]
                rp = rmin_l[p]
                lim = two_eps * min(rp, n - r_i) if biased else uniform_gap
                if r_i - rp > lim:
                    break
                alive[top] = False
                top = p
            prev[i] = top
        if alive.all():
            return None
        return alive

    def _compress_plan_small(self):
        # same scan as compress_plan without numpy, for short summaries
        n = self.n
        L = len(self.values)
        two_eps = 2.0 * self.mode.epsilon
        biased = self.mode.is_biased
        rmin = list(accumulate(self.g))
        rmax = [r + d for r, d in zip(rmin, self.delta)]
        prev = list(range(-1, L - 1))
        alive = [True] * L
        changed = False
        for i in range(2, L - 1):
            r_i = rmax[i]
            top = i - 1
            while top >= 1:
                rp = rmin[prev[top]]
                lim = two_eps * min(rp, n - r_i) if biased else two_eps * n
                if r_i - rp > lim:
                    break
                alive[top] = False
                changed = True
                top = prev[top]
            prev[i] = top
        return alive if changed else None

    def apply_plan(self, alive) -> None:
        if isinstance(alive, list):
            keep = [i for i, a in enumerate(alive) if a]
            rmin = list(accumulate(self.g))
            vals, deltas = self.values, self.delta
            self.values = [vals[i] for i in keep]
            self.delta = [deltas[i] for i in keep]
            kept = [rmin[i] for i in keep]
            self.g = [b - a for a, b in zip([0] + kept, kept)]
            return
        rmin = np.cumsum(np.asarray(self.g, dtype=np.int64))[alive]
        self.values = np.asarray(self.values)[alive].tolist()
        self.g = np.diff(rmin, prepend=0).tolist()
        self.delta = np.asarray(self.delta, dtype=np.int64)[alive].tolist()

    def compress(self) -> bool:
        """Combine redundant tuples in place; returns whether anything changed."""
        alive = self.compress_plan()
        if alive is None:
            return False
        self.apply_plan(alive)
        return True

    # ------------------------------------------------------------- queries
    def query_index(self, u: float) -> int:
        """Position of the tuple answering the ``u``-quantile query.

        With ``r = ceil(u * n)`` and ``t`` the mode's rank tolerance at ``r``,
        take the smallest ``i`` with ``r_max(v_i) > r + t`` and answer ``v_{i-1}``
        (the last tuple when no such ``i`` exists).  The returned element's true
        rank lies in ``[r - t, r + t]``.
        """
        if self.n == 0:
            raise EmptySummaryError("query on an empty summary")
        u = _check_unit(u)
        r = target_rank(u, self.n)
        threshold = r + self.mode.rank_tolerance(r, self.n)
        _, rmax = self.rank_bounds()
        over = rmax > threshold
        if not over.any():
            return len(self.values) - 1
        return max(int(np.argmax(over)) - 1, 0)

    def query(self, u: float) -> float:
        return self.values[self.query_index(u)]

    def inverse_query(self, x: float) -> float:
        """Estimate the empirical CDF at ``x`` as ``(r_min + r_max) / 2n`` of the
        last stored value ``<= x`` (0 below the minimum)."""
        if self.n == 0:
            raise EmptySummaryError("inverse query on an empty summary")
        x = float(x)
        if math.isnan(x):
            raise ValueError("inverse query at NaN")
        pos = bisect_right(self.values, x) - 1
        if pos < 0:
            return 0.0
        r_min = sum(self.g[: pos + 1])
        return (2 * r_min + self.delta[pos]) / (2 * self.n)

    # ---------------------------------------------------------- invariant
    def check_invariant(self) -> bool:
        return check_invariant(self)

    # ------------------------------------------------------- serialization
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "tuples": [[v, g, d] for v, g, d in zip(self.values, self.g, self.delta)],
        }

    @classmethod
    def from_dict(cls, mode: ErrorMode, d: dict) -> "QuantileSummary":
        qs = cls.from_tuples(mode, d["tuples"])
        if qs.n != d["n"]:
            raise ValueError(f"serialized n={d['n']} disagrees with sum of g={qs.n}")
        return qs


def check_invariant(qs: QuantileSummary) -> bool:
    """True iff ``qs`` is a well-formed summary for its error mode.

    Checks: non-decreasing values, ``g >= 1``, ``delta >= 0``, ``sum(g) == n``,
    exact extremes, and every adjacent gap ``r_max(v_{i+1}) - r_min(v_i)`` within
    ``max(allowed_gap, 1)``.  A gap of 1 means both neighbours are exact relative
    to each other, which is always admissible even where the relative-error
    allowance drops below one rank.
    """
    L = len(qs.values)
    if not (len(qs.g) == L == len(qs.delta)):
        return False
    if L == 0:
        return qs.n == 0
    if any(b < a for a, b in zip(qs.values, qs.values[1:])):
        return False
    if min(qs.g) < 1 or min(qs.delta) < 0:
        return False
    if sum(qs.g) != qs.n:
        return False
    n = qs.n
    if qs.g[0] != 1 or qs.delta[0] != 0 or qs.delta[-1] != 0:
        return False
    rmin, rmax = qs.rank_bounds()
    if rmax.max() > n:
        return False
    for i in range(L - 1):
        gap = int(rmax[i + 1] - rmin[i])
        allowed = qs.mode.allowed_gap(int(rmin[i]), int(rmax[i + 1]), n)
        if gap > max(allowed, 1.0) + 1e-9:
            return False
    return True


def merge(a: QuantileSummary, b: QuantileSummary) -> QuantileSummary:
    """Merge two summaries with the pairwise rank-combination rule.

    For an element ``z`` of one summary, ``w1``/``w2`` are its predecessor and
    successor in the other summary, and

    * ``r_min(z) = r_min_own(z) + r_min_other(w1)`` (``+ 0`` without ``w1``)
    * ``r_max(z) = r_max_own(z) + r_max_other(w2) - 1``, or
      ``r_max_own(z) + n_other`` without ``w2``.

    On equal values elements of ``a`` precede those of ``b``.  Inputs are not
    mutated.
    """
    if a.mode != b.mode:
        raise ModeMismatchError(f"cannot merge {a.mode} with {b.mode}")
    if b.n == 0:
        return a.copy()
    if a.n == 0:
        return b.copy()

    def ranks(q):
        rmin, rmax = q.rank_bounds()
        return rmin.tolist(), rmax.tolist()

    a_min, a_max = ranks(a)
    b_min, b_max = ranks(b)

    merged = []  # (value, source, position, r_min, r_max)
    for k, z in enumerate(a.values):
        w1 = bisect_left(b.values, z) - 1  # largest b-value < z
        w2 = w1 + 1                        # smallest b-value >= z
        lo = a_min[k] + (b_min[w1] if w1 >= 0 else 0)
        hi = a_max[k] + (b_max[w2] - 1 if w2 < len(b) else b.n)
        merged.append((z, 0, k, lo, hi))
    for k, z in enumerate(b.values):
        w2 = bisect_right(a.values, z)     # smallest a-value > z
        w1 = w2 - 1                        # largest a-value <= z
        lo = b_min[k] + (a_min[w1] if w1 >= 0 else 0)
        hi = b_max[k] + (a_max[w2] - 1 if w2 < len(a) else a.n)
        merged.append((z, 1, k, lo, hi))
    merged.sort(key=lambda t: (t[0], t[1], t[2]))

    out = QuantileSummary(a.mode)
    prev = 0
    for z, _, _, lo, hi in merged:
        out.values.append(z)
        out.g.append(lo - prev)
        out.delta.append(hi - lo)
        prev = lo
    out.n = a.n + b.n
    return out


def merge_all(summaries: Sequence[QuantileSummary]) -> QuantileSummary:
    """Merge any number of summaries at once.

    Produces exactly the summary of the left fold ``merge(merge(s1, s2), s3)...``
    in a single sort: merged ``r_min`` is the running sum of ``g`` in merged
    order, and merged ``r_max`` adds, for every other summary, the ``r_max`` of
    its next element minus one (or its full count when it has none).
    """
    if not summaries:
        raise ValueError("merge_all needs at least one summary")
    mode = summaries[0].mode
    for s in summaries[1:]:
        if s.mode != mode:
            raise ModeMismatchError(f"cannot merge {mode} with {s.mode}")
    parts = [s for s in summaries if s.n > 0]
    if not parts:
        return QuantileSummary(mode)
    if len(parts) == 1:
        return parts[0].copy()
    big = [k for k, s in enumerate(parts) if s.n > 1]
    if len(big) <= 1:
        return _merge_into(mode, parts, big[0] if big else 0)
    if sum(len(s) for s in parts) < _NUMPY_CUTOFF:
        return _merge_all_small(mode, parts)

    sizes = np.array([len(s) for s in parts])
    counts = np.array([s.n for s in parts], dtype=np.int64)
    values = np.concatenate([np.asarray(s.values, dtype=float) for s in parts])
    g = np.concatenate([np.asarray(s.g, dtype=np.int64) for s in parts])
    delta = np.concatenate([np.asarray(s.delta, dtype=np.int64) for s in parts])
    block_end = np.cumsum(sizes)
    block_start = block_end - sizes

    # per-summary ranks
    csum = np.cumsum(g)
    offset = np.repeat(csum[block_start] - g[block_start], sizes)
    own_min = csum - offset
    own_max = own_min + delta
    # own successor term: r_max(next) - 1, or own count for the block's last tuple
    own_next = np.empty_like(own_max)
    own_next[:-1] = own_max[1:] - 1
    own_next[block_end - 1] = counts

    order = np.argsort(values, kind="stable")
    g_s = g[order]
    max_s = own_max[order]
    next_s = own_next[order]
    new_min = np.cumsum(g_s)
    step = (max_s - 1) - next_s
    after = counts.sum() + (np.cumsum(step[::-1])[::-1] - step)
    new_max = max_s + after - next_s

    out = QuantileSummary(mode)
    out.values = values[order].tolist()
    out.g = np.diff(new_min, prepend=0).tolist()
    out.delta = (new_max - new_min).tolist()
    out.n = int(counts.sum())
    return out


def _merge_all_small(mode: ErrorMode, parts: Sequence[QuantileSummary]) -> QuantileSummary:
    items = []
    nxt = []
    for src, q in enumerate(parts):
        r = 0
        for k, (v, g, d) in enumerate(zip(q.values, q.g, q.delta)):
            r += g
            items.append((v, src, k, g, r + d))
        nxt.append(q.n)
    items.sort()
    total = sum(nxt)
    rmax = [0] * len(items)
    for pos in range(len(items) - 1, -1, -1):
        _, src, _, _, own_max = items[pos]
        own_next = nxt[src]
        rmax[pos] = own_max + total - own_next
        total += own_max - 1 - own_next
        nxt[src] = own_max - 1

    out = QuantileSummary(mode)
    r = 0
    for (v, _, _, g, _), hi in zip(items, rmax):
        r += g
        out.values.append(v)
        out.g.append(g)
        out.delta.append(hi - r)
    out.n = r
    return out


def _merge_into(mode: ErrorMode, parts: Sequence[QuantileSummary], base: int) -> QuantileSummary:
    # every part but ``base`` holds one element: merging a single element is an
    # insertion, placed before equal values when its part comes earlier
    out = parts[base].copy()
    earlier = [q.values[0] for q in reversed(parts[:base])]
    later = [q.values[0] for q in parts[base + 1 :]]
    for x, place in ((earlier, bisect_left), (later, bisect_right)):
        for v in x:
            pos = place(out.values, v)
            if pos == 0 or pos == len(out.values):
                d = 0
            else:
                d = out.g[pos] + out.delta[pos] - 1
            out.values.insert(pos, v)
            out.g.insert(pos, 1)
            out.delta.insert(pos, d)
    out.n = sum(q.n for q in parts)
    return out
