"""Exact fraction-cut arithmetic against a brute-force rational enumerator."""

from fractions import Fraction

import pytest

from knowdis.cuts import ceil_count, floor_count, ramp_floor_count
from knowdis.errors import ConfigError


def enum_ceil(fraction_literal: str, n: int) -> int:
    """Smallest k in [0, n] with k >= fraction * n, in exact rationals."""
    target = Fraction(fraction_literal) * n
    for k in range(n + 1):
        if Fraction(k) >= target:
            return k
    return n


def enum_floor(q: Fraction, n: int) -> int:
    """Largest k in [0, n] with k <= q * n, in exact rationals."""
    best = 0
    for k in range(n + 1):
        if Fraction(k) <= q * n:
            best = k
    return best


@pytest.mark.parametrize("fraction", [0.1, 0.5, 1.0])
@pytest.mark.parametrize("n", range(0, 13))
def test_ceil_count_matches_enumerator(fraction, n):
    assert ceil_count(fraction, n) == enum_ceil(str(fraction), n)


def test_ceil_count_famous_float_trap():
    # 0.1 * 20 rounds above 2.0 in binary; the exact cut is still 2
    assert ceil_count(0.1, 20) == 2
    assert ceil_count(0.1, 5) == 1
    assert ceil_count(0.1, 10) == 1


def test_ceil_count_rejects_bad_fraction():
    with pytest.raises(ConfigError):
        ceil_count(0.0, 5)
    with pytest.raises(ConfigError):
        ceil_count(1.5, 5)


@pytest.mark.parametrize("rate", [0.1, 0.3, 0.5, 1.0])
@pytest.mark.parametrize("step", range(0, 15))
@pytest.mark.parametrize("n", [0, 1, 7, 10, 50])
def test_ramp_floor_matches_enumerator(rate, step, n):
    q = min(Fraction(1), Fraction(str(rate)) * step)
    assert ramp_floor_count(step, rate, n) == enum_floor(q, n)


def test_floor_count_basics():
    assert floor_count(0.5, 10) == 5
    assert floor_count(0.3, 2) == 0
    assert floor_count(1.0, 7) == 7
