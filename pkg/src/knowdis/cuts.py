"""Exact fraction-cut arithmetic for top-k retention rules.

Cut sizes are specified as fractions ("keep the top 10%"). Computing
``ceil(fraction * n)`` in binary floating point miscounts on boundary
cases (``0.1 * 20`` rounds up to 2.0000000000000004, whose ceiling is 3),
so the fraction is re-read through its decimal literal and the product is
taken exactly.
"""

from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal

from .errors import ConfigError


def _as_decimal(fraction: float) -> Decimal:
    # str() yields the shortest round-tripping literal, recovering the
    # decimal the user actually wrote (0.1 -> Decimal("0.1")).
    return Decimal(str(fraction))


def check_fraction(fraction: float, name: str = "fraction") -> float:
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"{name} must be in (0, 1], got {fraction!r}")
    return fraction


def ceil_count(fraction: float, n: int) -> int:
    """Smallest k with k >= fraction * n, computed exactly."""
    check_fraction(fraction)
    if n <= 0:
        return 0
    k = int((_as_decimal(fraction) * n).to_integral_value(rounding=ROUND_CEILING))
    return min(k, n)


def floor_count(fraction: float, n: int) -> int:
    """Largest k with k <= fraction * n, computed exactly; clamped to [0, n]."""
    if n <= 0:
        return 0
    q = min(Decimal(1), _as_decimal(fraction))
    k = int((q * n).to_integral_value(rounding=ROUND_FLOOR))
    return max(0, min(k, n))


def ramp_floor_count(step: int, rate: float, n: int) -> int:
    """floor(min(1, step * rate) * n), again via exact decimal products."""
    if n <= 0 or step <= 0:
        return 0
    q = min(Decimal(1), _as_decimal(rate) * step)
    k = int((q * n).to_integral_value(rounding=ROUND_FLOOR))
    return max(0, min(k, n))
