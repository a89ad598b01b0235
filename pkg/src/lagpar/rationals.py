"""Canonical text encoding of exact rationals.

Every rational in the system is a :class:`fractions.Fraction`, which already
guarantees the canonical form (denominator > 0, gcd(|num|, den) = 1, zero is
0/1).  On the wire and on disk a rational is always the bit-exact string
``<numerator>/<denominator>`` in base 10, with an optional leading ``-`` on
the numerator only and no whitespace: ``-1/2``, ``3/1``, ``0/1``.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import BadRationalError

Rational = Fraction

_CANONICAL_RE = re.compile(r"(-?)(0|[1-9][0-9]*)/([1-9][0-9]*)\Z")
_USER_RE = re.compile(r"(-?[0-9]+)(?:/(-?[0-9]+))?\Z")


def format_rational(value: Fraction) -> str:
    """Render a Fraction in the canonical ``<num>/<den>`` form."""
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text: str) -> Fraction:
    """Parse a canonical ``<num>/<den>`` string, rejecting everything else.

    Rejects non-canonical spellings (``2/4``, ``03/1``, ``-0/1``, ``1/-2``,
    whitespace) so that stored encodings round-trip bit-exactly.
    """
    match = _CANONICAL_RE.match(text)
    if match is None:
        raise BadRationalError(f"not a canonical rational: {text!r}")
    sign, num, den = match.groups()
    if sign and num == "0":
        raise BadRationalError(f"negative zero is not canonical: {text!r}")
    value = Fraction(int(sign + num), int(den))
    if format_rational(value) != text:
        raise BadRationalError(f"not in lowest terms: {text!r}")
    return value


def parse_user_rational(text: str) -> Fraction:
    """Parse a user-supplied rational: bare integer or ``num/den``.

    Accepts non-canonical input (``3/6`` becomes 1/2, ``7`` becomes 7/1) but
    still rejects zero denominators and anything outside the grammar.
    """
    match = _USER_RE.match(text)
    if match is None:
        raise BadRationalError(f"not a rational: {text!r}")
    num, den = match.groups()
    if den is None:
        return Fraction(int(num))
    if int(den) == 0:
        raise BadRationalError(f"zero denominator: {text!r}")
    return Fraction(int(num), int(den))
