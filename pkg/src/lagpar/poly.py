"""Exact Lagrange interpolation over the rationals.

A polynomial is a tuple of Fraction coefficients in ascending degree:
index i holds the coefficient of x**i.  Trailing zeros are stripped on
construction, so the highest-index coefficient is always nonzero and the
zero polynomial is the empty tuple.  All values are immutable and all
operations are pure functions, so everything here is safe to share across
threads.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .errors import DuplicateXError, EmptyInputError


class Point(NamedTuple):
    x: Fraction
    y: Fraction


class Polynomial:
    """Immutable polynomial with exact rational coefficients."""

    __slots__ = ("coefficients",)

    def __init__(self, coefficients: Iterable[Fraction | int] = ()):
        coeffs = [Fraction(c) for c in coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self.coefficients: tuple[Fraction, ...] = tuple(coeffs)

    @property
    def degree(self) -> int:
        """Degree of the polynomial; -1 for the zero polynomial."""
        return len(self.coefficients) - 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.coefficients == other.coefficients

    def __hash__(self) -> int:
        return hash(self.coefficients)

    def __bool__(self) -> bool:
        return bool(self.coefficients)

    def __repr__(self) -> str:
        return f"Polynomial({list(self.coefficients)!r})"


def _check_distinct(xs: Sequence[Fraction]) -> None:
    if len(set(xs)) != len(xs):
        raise DuplicateXError(f"x-coordinates must be pairwise distinct: {xs}")


def lagrange_basis(xs: Sequence[Fraction], i: int, x: Fraction) -> Fraction:
    """Evaluate the i-th Lagrange basis polynomial for nodes xs at x.

    Returns prod over j != i of (x - xs[j]) / (xs[i] - xs[j]), exactly.
    """
    if not 0 <= i < len(xs):
        raise IndexError(f"basis index {i} out of range for {len(xs)} nodes")
    _check_distinct(xs)
    result = Fraction(1)
    xi = xs[i]
    for j, xj in enumerate(xs):
        if j != i:
            result *= (x - xj) / (xi - xj)
    return result


def interpolate(points: Sequence[Point]) -> Polynomial:
    """Return the unique polynomial of degree <= len(points) - 1 through points.

    Accumulates y_i times the expanded i-th basis polynomial.  The basis
    numerator prod over j != i of (x - x_j) is built by repeated
    multiplication with the linear factors.
    """
    if not points:
        raise EmptyInputError("cannot interpolate through zero points")
    xs = [p.x for p in points]
    _check_distinct(xs)
    total = [Fraction(0)] * len(points)
    for i, (xi, yi) in enumerate(points):
        numerator = [Fraction(1)]
        denominator = Fraction(1)
        for j, xj in enumerate(xs):
            if j == i:
                continue
            # multiply numerator by (x - xj)
            prev = numerator
            numerator = [Fraction(0)] + prev
            for d, c in enumerate(prev):
                numerator[d] -= xj * c
            denominator *= xi - xj
        scale = yi / denominator
        for d, c in enumerate(numerator):
            total[d] += scale * c
    return Polynomial(total)


def evaluate(p: Polynomial, x: Fraction) -> Fraction:
    """Evaluate p at x by Horner's rule."""
    result = Fraction(0)
    for c in reversed(p.coefficients):
        result = result * x + c
    return result


def evaluate_many(p: Polynomial, xs: Sequence[Fraction]) -> list[Fraction]:
    """Evaluate p at each x in xs, preserving order."""
    return [evaluate(p, x) for x in xs]
