import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailsketch import (
    CopulaSummary,
    ErrorMode,
    QuantileSummary,
    RawPairs,
    check_alignment,
    check_invariant,
    copula_bound,
    merge_all,
    oracle_copula,
)
from tailsketch.copula import BYTES_PER_TUPLE

from oracles import modes

B10 = ErrorMode.biased(0.1)

pair_streams = st.lists(
    st.tuples(st.integers(-15, 15).map(float), st.integers(-15, 15).map(float)), min_size=1, max_size=200
)
distinct_streams = st.lists(
    st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=1, max_size=200, unique_by=(lambda p: p[0], lambda p: p[1])
)
unit = st.floats(1e-4, 1.0)


def build(mode, pairs):
    return CopulaSummary(mode).extend(pairs)


@pytest.fixture(scope="module")
def gaussian_30k():
    rng = np.random.default_rng(7)
    z = rng.standard_normal((30_000, 2))
    x1, x2 = z[:, 0], 0.8 * z[:, 0] + 0.6 * z[:, 1]
    return RawPairs(x1, x2), build(B10, zip(x1.tolist(), x2.tolist()))


# --------------------------------------------------------------------- insert
def test_insert_into_empty():
    cs = CopulaSummary(B10)
    cs.insert(1.0, 9.0)
    (entry,) = cs.entries
    assert entry.tuple == (1.0, 1, 0)
    assert entry.sub.tuples == [(9.0, 1, 0)]


def test_insert_lands_between_neighbours():
    cs = CopulaSummary(B10)
    cs.insert(2, 100)
    cs.insert(8, 200)
    pos = cs.insert(5, 3)
    assert pos == 1
    assert [e.tuple.value for e in cs.entries] == [2.0, 5.0, 8.0]
    assert cs.subs[1].tuples == [(3.0, 1, 0)]


@pytest.mark.parametrize("pair", [(math.nan, 1.0), (1.0, math.inf)])
def test_insert_rejects_non_finite(pair):
    cs = CopulaSummary(B10)
    with pytest.raises(ValueError):
        cs.insert(*pair)
    assert cs.n == 0 and len(cs) == 0


@given(modes, pair_streams)
def test_alignment_after_every_operation(mode, pairs):
    cs = CopulaSummary(mode)
    for k, (a, b) in enumerate(pairs, 1):
        cs.insert(a, b)
        if k % 3 == 0:
            cs.combine()
        assert check_alignment(cs)
        assert sum(s.n for s in cs.subs) == cs.n == k


# -------------------------------------------------------------------- combine
def test_combine_three_entries_unchanged():
    cs = CopulaSummary(ErrorMode.uniform(0.5))
    for k in range(3):
        cs.insert(k, -k)
    before = [e.sub.tuples for e in cs.entries]
    assert cs.combine() is False
    assert [e.sub.tuples for e in cs.entries] == before


def test_combine_on_gaussian_stream(rng):
    z = rng.standard_normal((10_000, 2))
    cs = build(B10, zip(z[:, 0], 0.8 * z[:, 0] + 0.6 * z[:, 1]))
    assert len(cs) < 1000
    assert check_alignment(cs)


def test_combine_conserves_counts(rng):
    cs = CopulaSummary(ErrorMode.uniform(0.25))
    for a, b in rng.standard_normal((40, 2)):
        cs.insert(a, b)
    old_values = list(cs.s1.values)
    old_n = [s.n for s in cs.subs]
    assert cs.combine()
    # every surviving entry absorbed a contiguous run of old entries ending at its value
    start = 0
    for t, sub in zip(cs.s1.tuples, cs.subs):
        end = old_values.index(t.value, start)
        assert sub.n == t.g == sum(old_n[start : end + 1])
        start = end + 1
    assert start == len(old_values)


# ---------------------------------------------------------------------- nhat
def test_nhat_comonotone_median():
    n = 2000
    cs = build(B10, ((k, k) for k in range(1, n + 1)))
    _, n_hat1 = cs.nhat(0.5)
    assert 0.5 - 0.05 - 1 / n <= n_hat1 / n <= 0.5 + 0.05 + 1 / n


def test_nhat_exact_in_low_tail(rng):
    n = 1000
    cs = build(B10, rng.standard_normal((n, 2)).tolist())
    E, n_hat1 = cs.nhat(0.005)
    assert n_hat1 == 5
    assert cs.s1.g[:E] == [1] * E


@pytest.mark.parametrize("u1", [0.01, 0.5, 1.0])
def test_nhat_single_pair(u1):
    cs = CopulaSummary(B10)
    cs.insert(3.0, 4.0)
    assert cs.nhat(u1) == (1, 1)


# --------------------------------------------------------------------- query
@pytest.mark.parametrize("t", [0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99])
def test_query_comonotone_diagonal(t):
    n = 3000
    cs = build(B10, ((k, k) for k in range(n)))
    res = cs.query(t, t)
    assert abs(res.value - math.ceil(t * n) / n) <= res.bound


def test_query_gaussian_low_corner(gaussian_30k):
    data, cs = gaussian_30k
    res = cs.query(0.02, 0.02)
    assert res.bound == pytest.approx(0.1 * 600 * 8.9 / 30_000)
    assert abs(res.value - oracle_copula(data, 0.02, 0.02)) <= res.bound


@pytest.mark.parametrize("i", [25, 3000, 15000, 27000, 29975])
def test_query_gaussian_diagonal(gaussian_30k, i):
    data, cs = gaussian_30k
    u = i / 30_000
    res = cs.query(u, u)
    assert abs(res.value - oracle_copula(data, u, u)) <= res.bound


@given(modes, pair_streams, unit)
def test_query_second_argument_one(mode, pairs, u1):
    cs = build(mode, pairs)
    res = cs.query(u1, 1.0)
    assert res.value == res.n_hat1 / cs.n


@given(modes, pair_streams, unit, unit)
def test_query_in_unit_interval(mode, pairs, u1, u2):
    v = build(mode, pairs).query(u1, u2).value
    assert 0.0 <= v <= 1.0


@given(modes, distinct_streams, st.data())
def test_query_diagonal_bound_distinct(mode, pairs, data):
    cs = build(mode, pairs)
    raw = RawPairs.from_pairs(pairs)
    n = cs.n
    i = data.draw(st.integers(1, n))
    res = cs.query(i / n, i / n)
    assert abs(res.value - oracle_copula(raw, i / n, i / n)) <= res.bound + 1e-12


@given(modes, pair_streams)
def test_query_deterministic(mode, pairs):
    a, b = build(mode, pairs), build(mode, pairs)
    assert a == b
    assert a.query(0.3, 0.6) == b.query(0.3, 0.6)


def test_cached_merge_matches_fresh(rng):
    cs = build(B10, rng.standard_normal((3000, 2)).tolist())
    assert cs.merged_second() == merge_all(cs.subs)
    cs.add(0.0, 0.0)
    assert cs.merged_second() == merge_all(cs.subs)
    assert cs.merged_second().n == 3001


@given(modes, pair_streams)
def test_merged_subsummaries_valid(mode, pairs):
    cs = build(mode, pairs)
    for k in range(1, len(cs) + 1):
        assert check_invariant(merge_all(cs.subs[:k]))


def test_query_empty_raises():
    with pytest.raises(ValueError):
        CopulaSummary(B10).query(0.5, 0.5)


def test_copula_bound_values():
    assert copula_bound(B10, 15000, 15000, 30000) == pytest.approx(0.1 * 8.9 / 2)
    assert copula_bound(B10, 25, 25, 30000) == pytest.approx(0.1 * 25 * 8.9 / 30000)
    assert copula_bound(ErrorMode.uniform(0.1), 25, 25, 30000) == pytest.approx(0.5)


# ---------------------------------------------------------------------- size
def test_size_empty():
    cs = CopulaSummary(B10)
    s = cs.size()
    assert (s.entry_count, s.total_tuple_count, s.byte_estimate) == (0, 0, 0)
    assert cs.size_ratio() == 0.0


def test_size_one_insert():
    cs = CopulaSummary(B10)
    cs.insert(1.0, 2.0)
    s = cs.size()
    assert (s.entry_count, s.total_tuple_count, s.byte_estimate) == (1, 2, 2 * BYTES_PER_TUPLE)


def test_size_shrinks_relative_to_stream(gaussian_30k):
    _, cs = gaussian_30k
    assert cs.size().total_tuple_count < cs.n / 2
    assert cs.size_ratio() < 1.0


# -------------------------------------------------------------- serialization
@given(modes, pair_streams)
def test_snapshot_roundtrip(mode, pairs):
    cs = build(mode, pairs)
    back = CopulaSummary.from_json(cs.to_json())
    assert back == cs and back.mode == cs.mode
    assert back.query(0.5, 0.5) == cs.query(0.5, 0.5)
    # the restored summary keeps streaming identically
    back.add(0.5, 0.5)
    cs.add(0.5, 0.5)
    assert back == cs


def _snapshot():
    cs = build(B10, [(1, 2), (3, 4), (5, 6)])
    return cs.to_dict()


@pytest.mark.parametrize(
    "tamper",
    [
        lambda d: d.update(format="other"),
        lambda d: d.update(schema_version=99),
        lambda d: d.update(n=4),
        lambda d: d["entries"][0].update(sub=[[2.0, 2, 0]]),
    ],
)
def test_snapshot_rejects_tampering(tamper):
    d = _snapshot()
    tamper(d)
    with pytest.raises(ValueError):
        CopulaSummary.from_dict(json.loads(json.dumps(d)))


def test_alignment_detects_corruption():
    cs = build(B10, [(1, 2), (3, 4), (5, 6)])
    cs.subs[0] = QuantileSummary.from_tuples(B10, [(2.0, 1, 0), (2.5, 1, 0)])
    assert not check_alignment(cs)
