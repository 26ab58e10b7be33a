"""Bivariate copula summary built from nested quantile summaries.

The first marginal is tracked by a quantile summary ``S1``; every tuple of
``S1`` owns a subsummary over the second-marginal values of the pairs it
covers, so ``sub.n == g`` for every entry.  Combining ``S1`` tuples merges their
subsummaries.  A copula query finds ``n_hat1`` (elements covered by the first
``E`` entries) from ``S1``, the ``u2``-quantile of the second marginal from the
merge of all subsummaries, and then the CDF at that value from the merge of the
first ``E`` subsummaries.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .quantile import (
    EmptySummaryError,
    ErrorMode,
    QuantileSummary,
    SummaryTuple,
    _check_finite,
    _check_unit,
    check_invariant,
    merge_all,
    target_rank,
)

SNAPSHOT_FORMAT = "tailsketch.copula-summary"
SNAPSHOT_VERSION = 1

# one stored (value, g, delta): float64 value + two int64 counters
BYTES_PER_TUPLE = 24
# one raw stream element: a pair of float64
BYTES_PER_PAIR = 16


class CopulaEntry(NamedTuple):
    tuple: SummaryTuple
    sub: QuantileSummary


@dataclass(frozen=True)
class CopulaQueryResult:
    value: float
    n_hat1: int
    E: int
    bound: float


@dataclass(frozen=True)
class SummarySize:
    entry_count: int
    total_tuple_count: int
    byte_estimate: int


def copula_bound(mode: ErrorMode, r1: int, r2: int, n: int) -> float:
    """Theoretical error of a copula query relative to the empirical copula.

    Biased mode: ``eps * min(i, n - i) * (8 + 9 eps) / n`` at diagonal rank ``i``;
    uniform mode: ``5 eps``.  Off the diagonal the rank with the larger
    ``min(i, n - i)`` is used.
    """
    eps = mode.epsilon
    if not mode.is_biased:
        return 5.0 * eps
    m = max(min(r1, n - r1), min(r2, n - r2))
    return eps * m * (8.0 + 9.0 * eps) / n


class CopulaSummary:
    """Space-efficient summary of a paired stream ``(x1, x2)``.

    ``insert`` adds one pair, ``combine`` compresses; ``add`` does both on the
    ``mode.compress_period`` schedule.
    """

    def __init__(self, mode: ErrorMode):
        self.mode = mode
        self.s1 = QuantileSummary(mode)
        self.subs: list[QuantileSummary] = []
        self._merged_all: QuantileSummary | None = None

    @property
    def n(self) -> int:
        return self.s1.n

    def __len__(self) -> int:
        return len(self.subs)

    def __repr__(self) -> str:
        return f"CopulaSummary({self.mode.kind.value}, eps={self.mode.epsilon}, n={self.n}, entries={len(self)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, CopulaSummary):
            return NotImplemented
        return self.s1 == other.s1 and self.subs == other.subs

    @property
    def entries(self) -> list[CopulaEntry]:
        return [CopulaEntry(t, s) for t, s in zip(self.s1.tuples, self.subs)]

    # ------------------------------------------------------------ mutation
    def insert(self, x1: float, x2: float) -> int:
        x1 = _check_finite(x1)
        x2 = _check_finite(x2)
        pos = self.s1.insert(x1)
        self.subs.insert(pos, QuantileSummary.singleton(self.mode, x2))
        self._merged_all = None
        return pos

    def add(self, x1: float, x2: float) -> int:
        pos = self.insert(x1, x2)
        if self.n % self.mode.compress_period == 0:
            self.combine()
        return pos

    def extend(self, pairs: Iterable) -> "CopulaSummary":
        for x1, x2 in pairs:
            self.add(x1, x2)
        return self

    def combine(self) -> bool:
        """Combine first-marginal tuples and merge their subsummaries.

        Each merged subsummary is then compressed against its own element count.
        """
        alive = self.s1.compress_plan()
        if alive is None:
            return False
        subs = self.subs
        new_subs = []
        start = 0
        flags = alive if isinstance(alive, list) else alive.tolist()
        for i, keep in enumerate(flags):
            if not keep:
                continue
            if start == i:
                new_subs.append(subs[i])
            else:
                merged = merge_all(subs[start : i + 1])
                merged.compress()
                new_subs.append(merged)
            start = i + 1
        self.s1.apply_plan(alive)
        self.subs = new_subs
        self._merged_all = None
        return True

    # ------------------------------------------------------------- queries
    def _require_data(self):
        if self.n == 0:
            raise EmptySummaryError("query on an empty copula summary")

    def nhat(self, u1: float) -> tuple[int, int]:
        """``(E, n_hat1)``: the first ``E`` entries answer the ``u1``-quantile of
        the first marginal and cover ``n_hat1`` elements."""
        self._require_data()
        idx = self.s1.query_index(u1)
        return idx + 1, sum(self.s1.g[: idx + 1])

    def merged_second(self) -> QuantileSummary:
        """Merge of every subsummary; a summary of the whole second marginal."""
        if self._merged_all is None:
            self._merged_all = merge_all(self.subs)
        return self._merged_all

    def query(self, u1: float, u2: float) -> CopulaQueryResult:
        self._require_data()
        u1 = _check_unit(u1)
        u2 = _check_unit(u2)
        E, n_hat1 = self.nhat(u1)
        q2 = self.merged_second().query(u2)
        head = merge_all(self.subs[:E])
        value = n_hat1 / self.n * head.inverse_query(q2)
        n = self.n
        bound = copula_bound(self.mode, target_rank(u1, n), target_rank(u2, n), n)
        return CopulaQueryResult(value=value, n_hat1=n_hat1, E=E, bound=bound)

    # ---------------------------------------------------------------- size
    def size(self) -> SummarySize:
        tuples = len(self.s1) + sum(len(s) for s in self.subs)
        return SummarySize(len(self.subs), tuples, tuples * BYTES_PER_TUPLE)

    def size_ratio(self) -> float:
        """Summary bytes over raw stream bytes (``BYTES_PER_PAIR`` per pair)."""
        if self.n == 0:
            return 0.0
        return self.size().byte_estimate / (BYTES_PER_PAIR * self.n)

    # -------------------------------------------------------- serialization
    def to_dict(self) -> dict:
        return {
            "format": SNAPSHOT_FORMAT,
            "schema_version": SNAPSHOT_VERSION,
            "mode": self.mode.kind.value,
            "epsilon": self.mode.epsilon,
            "n": self.n,
            "entries": [
                {"tuple": [v, g, d], "sub": sub.to_dict()["tuples"]}
                for v, g, d, sub in zip(self.s1.values, self.s1.g, self.s1.delta, self.subs)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CopulaSummary":
        if d.get("format") != SNAPSHOT_FORMAT:
            raise ValueError(f"not a copula summary snapshot: format={d.get('format')!r}")
        if d.get("schema_version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot schema_version {d.get('schema_version')!r}")
        mode = ErrorMode(d["mode"], d["epsilon"])
        cs = cls(mode)
        cs.s1 = QuantileSummary.from_tuples(mode, [e["tuple"] for e in d["entries"]])
        cs.subs = [QuantileSummary.from_tuples(mode, e["sub"]) for e in d["entries"]]
        if cs.n != d["n"]:
            raise ValueError(f"snapshot n={d['n']} disagrees with entries (sum g={cs.n})")
        for t_g, sub in zip(cs.s1.g, cs.subs):
            if sub.n != t_g:
                raise ValueError("snapshot entry has subsummary count != g")
        return cs

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "CopulaSummary":
        return cls.from_dict(json.loads(text))


def check_alignment(cs: CopulaSummary) -> bool:
    """Structural invariants: valid S1, ``sub.n == g`` per entry, shared mode."""
    if len(cs.subs) != len(cs.s1):
        return False
    if not check_invariant(cs.s1):
        return False
    for g, sub in zip(cs.s1.g, cs.subs):
        if sub.n != g or sub.mode != cs.mode or not check_invariant(sub):
            return False
    return sum(s.n for s in cs.subs) == cs.n
