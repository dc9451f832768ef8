"""Exact integer q-expansions: E4, the discriminant and the j-function.

Coefficients are built from divisor sums and product expansions with Python
integers, so nothing is transcribed by hand.
"""

from __future__ import annotations

from functools import lru_cache


def sigma(k: int, n: int) -> int:
    """Sum of the k-th powers of the positive divisors of n."""
    total = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            total += d**k
            e = n // d
            if e != d:
                total += e**k
        d += 1
    return total


def series_mul(a: list[int], b: list[int], length: int) -> list[int]:
    out = [0] * length
    for i, ai in enumerate(a[:length]):
        if ai == 0:
            continue
        for j, bj in enumerate(b[: length - i]):
            out[i + j] += ai * bj
    return out


def series_inverse(a: list[int], length: int) -> list[int]:
    """Inverse of a power series with constant term 1, over the integers."""
    if a[0] != 1:
        raise ValueError("series must have constant term 1")
    inv = [0] * length
    inv[0] = 1
    for n in range(1, length):
        inv[n] = -sum(a[k] * inv[n - k] for k in range(1, min(n, len(a) - 1) + 1))
    return inv


def eisenstein_e4(length: int) -> list[int]:
    return [1] + [240 * sigma(3, n) for n in range(1, length)]


def eta_product_24(length: int) -> list[int]:
    """Coefficients of prod_{n>=1} (1 - q^n)^24, i.e. Delta(q) / q."""
    # (1 - q^n)^24 via binomial expansion, multiplied in one factor at a time
    out = [0] * length
    out[0] = 1
    for n in range(1, length):
        factor = [0] * length
        for k in range(0, 25):
            if k * n >= length:
                break
            binom = _binomial(24, k)
            factor[k * n] = binom if k % 2 == 0 else -binom
        out = series_mul(out, factor, length)
    return out


def _binomial(n: int, k: int) -> int:
    from math import comb

    return comb(n, k)


@lru_cache(maxsize=None)
def j_coefficients(count: int) -> tuple[int, ...]:
    """First ``count`` coefficients of j, starting at the q^-1 term.

    j = E4^3 / Delta, and Delta = q * prod(1 - q^n)^24, so
    q * j = E4^3 / prod(1 - q^n)^24 is a power series with integer
    coefficients; entry k of the result is the coefficient of q^(k-1).
    """
    if count < 1:
        raise ValueError("count must be positive")
    e4 = eisenstein_e4(count)
    e4_cubed = series_mul(series_mul(e4, e4, count), e4, count)
    return tuple(series_mul(e4_cubed, series_inverse(eta_product_24(count), count), count))


def j_power_series(power: int, min_exponent: int, max_exponent: int) -> dict[int, int]:
    """Exact q-expansion of j^power, keyed by exponent, truncated above max_exponent.

    The lowest exponent is -power; ``min_exponent`` is accepted for symmetry
    with callers and only checked.
    """
    if power < 0:
        raise ValueError("power must be non-negative")
    if power == 0:
        return {0: 1} if 0 <= max_exponent else {}
    if min_exponent > -power:
        raise ValueError("min_exponent above the pole order")
    length = max_exponent + power + 1
    if length <= 0:
        return {}
    base = list(j_coefficients(length))
    acc = [1] + [0] * (length - 1)
    for _ in range(power):
        acc = series_mul(acc, base, length)
    return {k - power: c for k, c in enumerate(acc) if c != 0}
