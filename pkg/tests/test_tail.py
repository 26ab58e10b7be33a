import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailsketch import (
    CopulaSummary,
    Distribution,
    ErrorMode,
    RawPairs,
    Side,
    StreamSpec,
    bound_values,
    estimate_lambda_lower,
    estimate_lambda_upper,
    generate_stream,
    oracle_copula,
    oracle_lambda_lower,
    oracle_lambda_upper,
)

B10 = ErrorMode.biased(0.1)
FOUR = RawPairs.from_pairs([(1, 4), (2, 3), (3, 2), (4, 1)])

small_tied = st.lists(
    st.tuples(st.integers(0, 12).map(float), st.integers(0, 12).map(float)), min_size=1, max_size=200
)


def brute_copula(pairs, u1, u2):
    """Double loop straight from the definition, in exact arithmetic."""
    n = len(pairs)
    r1, r2 = math.ceil(Fraction(u1) * n), math.ceil(Fraction(u2) * n)
    q1 = sorted(p[0] for p in pairs)[r1 - 1]
    q2 = sorted(p[1] for p in pairs)[r2 - 1]
    return Fraction(sum(1 for a, b in pairs if a <= q1 and b <= q2), n)


def summarize(data):
    return CopulaSummary(B10).extend(data)


@pytest.fixture(scope="module")
def desk_streams():
    out = {}
    for dist in (Distribution.GAUSSIAN_PAIR, Distribution.BETA_PAIR):
        data = generate_stream(StreamSpec(dist, length=30_000, seed=3))
        out[dist] = (data, summarize(data))
    return out


# -------------------------------------------------------------------- oracles
@pytest.mark.parametrize("t", [0.01, 0.2, 0.5, 0.77, 1.0])
def test_oracle_comonotone(t):
    x = np.random.default_rng(0).standard_normal(500)
    assert oracle_copula(RawPairs(x, x), t, t) == math.ceil(t * 500) / 500


@pytest.mark.parametrize("t", [0.01, 0.2, 0.49])
def test_oracle_antimonotone(t):
    x = np.random.default_rng(0).standard_normal(500)
    assert oracle_copula(RawPairs(x, -x), t, t) == 0.0


def test_oracle_four_pairs():
    assert oracle_copula(FOUR, 0.75, 0.75) == 0.5
    assert oracle_copula(FOUR, 0.75, 0.75, form="restricted") == 0.5
    assert oracle_lambda_lower(FOUR, 3) == pytest.approx(2 / 3)
    assert oracle_lambda_upper(FOUR, 3) == 0.0


def test_oracle_unknown_form():
    with pytest.raises(ValueError):
        oracle_copula(FOUR, 0.5, 0.5, form="other")


@given(small_tied, st.data())
def test_oracle_forms_agree_with_ties(pairs, data):
    n = len(pairs)
    k1, k2 = data.draw(st.integers(1, n)), data.draw(st.integers(1, n))
    raw = RawPairs.from_pairs(pairs)
    a = oracle_copula(raw, k1 / n, k2 / n, form="indicator")
    b = oracle_copula(raw, k1 / n, k2 / n, form="restricted")
    assert a == b == float(brute_copula(pairs, Fraction(k1, n), Fraction(k2, n)))


def test_oracle_lambda_comonotone():
    x = np.random.default_rng(1).standard_normal(400)
    data = RawPairs(x, x)
    assert all(oracle_lambda_lower(data, i) == 1.0 for i in range(1, 401))
    assert all(oracle_lambda_upper(data, i) == 1.0 for i in range(1, 400))


def test_oracle_lambda_antimonotone():
    x = np.random.default_rng(1).standard_normal(400)
    data = RawPairs(x, -x)
    assert all(oracle_lambda_lower(data, i) == 0.0 for i in range(1, 201))
    assert all(oracle_lambda_upper(data, i) == 0.0 for i in range(201, 400))


def test_oracle_lambda_upper_independent():
    n = 2000
    u = np.random.default_rng(2).random((n, 2))
    data = RawPairs(u[:, 0], u[:, 1])
    i = n - 25
    pairs = list(zip(u[:, 0].tolist(), u[:, 1].tolist()))
    c = brute_copula(pairs, Fraction(i, n), Fraction(i, n))
    expected = (1 - Fraction(2 * i, n) + c) / (1 - Fraction(i, n))
    assert oracle_lambda_upper(data, i) == pytest.approx(float(expected), abs=1e-12)
    assert 0.0 <= oracle_lambda_upper(data, i) <= 1.0


@given(small_tied, st.data())
def test_oracle_lambda_range(pairs, data):
    raw = RawPairs.from_pairs(pairs)
    n = raw.n
    i = data.draw(st.integers(1, n))
    assert 0.0 <= oracle_lambda_lower(raw, i) <= n / i
    if i < n:
        assert math.isfinite(oracle_lambda_upper(raw, i))


@pytest.mark.parametrize("i", [0, 5])
def test_oracle_lambda_index_range(i):
    with pytest.raises(ValueError):
        oracle_lambda_lower(FOUR, i)
    with pytest.raises(ValueError):
        oracle_lambda_upper(FOUR, max(i, 4))


# ---------------------------------------------------------------- bound values
def test_bound_values_biased_tail():
    b = bound_values(B10, 25, 300_000)
    assert b.tail_bound_lower == pytest.approx(0.89)
    assert b.tail_bound_upper == pytest.approx(0.89)
    assert b.copula_bound == pytest.approx(7.4167e-5, rel=1e-4)


def test_bound_values_uniform_linear_in_n():
    m = ErrorMode.uniform(0.1)
    assert bound_values(m, 25, 60_000).tail_bound_lower == pytest.approx(2 * bound_values(m, 25, 30_000).tail_bound_lower)
    assert bound_values(m, 25, 100_000).tail_bound_lower == pytest.approx(2000.0)


def test_bound_values_midpoint():
    assert bound_values(B10, 5000, 10_000).copula_bound == pytest.approx(0.1 * 8.9 / 2)


# ------------------------------------------------------------------ estimates
def test_estimates_comonotone():
    n = 5000
    x = np.random.default_rng(4).standard_normal(n)
    cs = summarize(RawPairs(x, x))
    lo = estimate_lambda_lower(cs, 25)
    up = estimate_lambda_upper(cs, n - 25)
    assert lo.side is Side.LOWER and up.side is Side.UPPER
    assert up.tail_index == 25
    assert abs(lo.lambda_ - 1.0) <= lo.bound
    assert abs(up.lambda_ - 1.0) <= up.bound


def test_estimate_upper_antimonotone():
    n = 5000
    x = np.random.default_rng(5).standard_normal(n)
    data = RawPairs(x, -x)
    est = estimate_lambda_upper(summarize(data), n - 25)
    assert oracle_lambda_upper(data, n - 25) == 0.0
    assert abs(est.lambda_) <= est.bound


@pytest.mark.parametrize("dist", [Distribution.GAUSSIAN_PAIR, Distribution.BETA_PAIR])
def test_estimates_desk_scale(desk_streams, dist):
    data, cs = desk_streams[dist]
    n = data.n
    lo = estimate_lambda_lower(cs, 25)
    up = estimate_lambda_upper(cs, n - 25)
    assert abs(lo.lambda_ - oracle_lambda_lower(data, 25)) <= 0.89
    assert abs(up.lambda_ - oracle_lambda_upper(data, n - 25)) <= 0.89


def test_split_point_belongs_to_lower_side():
    cs = summarize(RawPairs(np.arange(11.0), np.arange(11.0)))
    estimate_lambda_lower(cs, 6)
    with pytest.raises(ValueError):
        estimate_lambda_upper(cs, 6)
    estimate_lambda_upper(cs, 7)
    with pytest.raises(ValueError):
        estimate_lambda_lower(cs, 7)


def test_estimate_empty_summary():
    with pytest.raises(ValueError):
        estimate_lambda_lower(CopulaSummary(B10), 1)


def test_raw_pairs_shape_check():
    with pytest.raises(ValueError):
        RawPairs([1.0, 2.0], [1.0])
