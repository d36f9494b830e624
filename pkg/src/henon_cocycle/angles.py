"""Exact angle arithmetic on R/Z.

Angles are kept as reduced fractions ``num/den`` so that doubling never
drifts.  Binary floats are exact dyadic rationals and convert losslessly.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable

AngleKey = tuple  # (num, den), reduced, 0 <= num < den


def as_fraction(theta) -> Fraction:
    """Reduce ``theta`` (float, int, Fraction, or a (num, den) key) mod 1."""
    if isinstance(theta, tuple):
        theta = Fraction(*theta)
    if isinstance(theta, float):
        theta = Fraction(theta)
    elif not isinstance(theta, Fraction):
        theta = Fraction(theta)
    return theta - (theta.numerator // theta.denominator)


def key(theta) -> AngleKey:
    f = as_fraction(theta)
    return (f.numerator, f.denominator)


def to_float(k: AngleKey) -> float:
    return k[0] / k[1]


def to_fraction(k: AngleKey) -> Fraction:
    return Fraction(k[0], k[1])


def double(k: AngleKey) -> AngleKey:
    num, den = k
    if den % 2 == 0:
        h = den // 2
        num = num % h
        return (0, 1) if num == 0 else (num, h)
    return ((2 * num) % den, den)


def add(k: AngleKey, other) -> AngleKey:
    return key(to_fraction(k) + as_fraction(other))


def dyadic_form(theta) -> tuple[int, int] | None:
    """Return reduced (j, k) with theta = j/2^k, j odd, or (0, 0) for zero."""
    f = as_fraction(theta)
    if f == 0:
        return (0, 0)
    den = f.denominator
    if den & (den - 1):
        return None
    return (f.numerator, den.bit_length() - 1)


def period(theta) -> int | None:
    """Exact period under doubling, or None if theta is not periodic."""
    k0 = key(theta)
    if k0[1] % 2 == 0:
        return None
    k = double(k0)
    n = 1
    while k != k0:
        k = double(k)
        n += 1
    return n


def orbit(theta, length: int) -> list[AngleKey]:
    k = key(theta)
    out = [k]
    for _ in range(length):
        k = double(k)
        out.append(k)
    return out


def closure(thetas: Iterable[AngleKey]) -> dict[AngleKey, AngleKey]:
    """Forward-invariant closure of a set of angles; maps each angle to its double."""
    succ: dict[AngleKey, AngleKey] = {}
    stack = list(thetas)
    while stack:
        k = stack.pop()
        if k in succ:
            continue
        d = double(k)
        succ[k] = d
        if d not in succ:
            stack.append(d)
    return succ
