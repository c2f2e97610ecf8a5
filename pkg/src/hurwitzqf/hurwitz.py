"""Nearest-integer minus continued fractions.

An irrational x is written x = a0 - 1/(a1 - 1/(a2 - ...)) with a0 = nint(x)
and each tail obtained by x <- 1/(a - x).  Valid tails have |a_j| >= 2 and,
whenever |a_j| = 2, a_j * a_(j+1) < 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .numerics import (
    CertifiedReal,
    PrecisionExhausted,
    QuadraticSurd,
    as_surd,
    surd_nearest_integer,
)

__all__ = [
    "DigitSequence",
    "Violation",
    "TerminatingExpansion",
    "expand",
    "expand_certified",
    "validate",
    "is_valid",
    "evaluate",
    "gauss_step",
    "word_matrix",
    "periodic_value",
    "eventually_periodic_value",
]


class TerminatingExpansion(ValueError):
    """Raised when a rational value is expanded (its expansion terminates)."""


@dataclass(frozen=True)
class DigitSequence:
    digits: tuple[int, ...]
    period: Optional[tuple[int, int]] = None
    source: str = ""
    # set when a certified expansion stopped early
    exhausted: bool = False

    def __len__(self):
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)

    def __getitem__(self, i):
        return self.digits[i]

    def to_json(self) -> str:
        out = {"digits": list(self.digits)}
        if self.period is not None:
            out["period"] = list(self.period)
        if self.exhausted:
            out["precision_exhausted"] = True
        return json.dumps(out)

    @classmethod
    def from_json(cls, text: str) -> "DigitSequence":
        data = json.loads(text)
        if isinstance(data, list):
            return cls(tuple(int(a) for a in data))
        period = data.get("period")
        return cls(
            tuple(int(a) for a in data["digits"]),
            tuple(period) if period is not None else None,
            exhausted=bool(data.get("precision_exhausted", False)),
        )


@dataclass(frozen=True)
class Violation:
    index: int
    rule: str  # "size" for |a_j| < 2, "sign" for the |a_j| = 2 rule

    def __str__(self):
        return f"j={self.index}: {self.rule}"


def expand(x, n: int) -> DigitSequence:
    """First ``n`` digits of the minus continued fraction of a quadratic surd.

    Eventual periodicity is detected by recurrence of the exact surd state;
    the recorded period is (start index, length).
    """
    x = as_surd(x)
    if n < 1:
        raise ValueError("need n >= 1")
    if x.is_rational:
        raise TerminatingExpansion(f"{x!r} is rational: terminating expansion")
    seen: dict[QuadraticSurd, int] = {}
    digits: list[int] = []
    period = None
    state = x
    for j in range(n):
        if period is None:
            if state in seen:
                start = seen[state]
                period = (start, j - start)
            else:
                seen[state] = j
        a = surd_nearest_integer(state)
        digits.append(a)
        if j + 1 < n:
            state = (a - state).inverse()
    if period is None:
        # a period closing exactly at n is still reported
        nxt = (digits[-1] - state).inverse()
        if nxt in seen:
            period = (seen[nxt], n - seen[nxt])
    return DigitSequence(tuple(digits), period, source=repr(x))


def expand_certified(x: CertifiedReal, n: int, max_prec: int = 4096) -> DigitSequence:
    """Expand a value known only through brackets.

    Stops early, with ``exhausted`` set, once the nearest integer of a tail is
    ambiguous at ``max_prec`` bits.
    """
    best: list[int] = []
    bits = 64
    while True:
        try:
            lo, hi = x.refine(Fraction(1, 2**bits), max_prec=max_prec).bracket
        except PrecisionExhausted:
            break
        digits = _bracket_digits(lo, hi, n)
        if len(digits) > len(best):
            best = digits
        if len(best) == n:
            return DigitSequence(tuple(best), None, source=repr(x))
        if hi == lo or bits >= max_prec:
            break
        bits *= 2
    return DigitSequence(tuple(best), None, source=repr(x), exhausted=True)


def _bracket_digits(lo: Fraction, hi: Fraction, n: int) -> list[int]:
    digits: list[int] = []
    while len(digits) < n:
        a = _nint_fraction(lo)
        if a != _nint_fraction(hi):
            break
        digits.append(a)
        dlo, dhi = a - hi, a - lo
        if dlo <= 0 <= dhi:
            break
        lo, hi = 1 / dhi, 1 / dlo
    return digits


def _nint_fraction(f: Fraction) -> int:
    fl = math.floor(f)
    frac = f - fl
    if frac == Fraction(1, 2):
        return fl + 1 if f > 0 else fl
    return fl + 1 if frac > Fraction(1, 2) else fl


def validate(digits: Sequence[int], cyclic: bool = False) -> list[Violation]:
    """Indices j >= 1 breaking |a_j| >= 2 or the sign rule for |a_j| = 2.

    With ``cyclic`` the block is treated as repeating, so every index is
    checked and the successor of the last digit is the first.
    """
    digits = list(digits)
    out = []
    m = len(digits)
    start = 0 if cyclic else 1
    for j in range(start, m):
        a = digits[j]
        if abs(a) < 2:
            out.append(Violation(j, "size"))
            continue
        if abs(a) == 2:
            if j + 1 < m:
                nxt = digits[j + 1]
            elif cyclic:
                nxt = digits[0]
            else:
                continue
            if a * nxt >= 0:
                out.append(Violation(j, "sign"))
    return out


def is_valid(digits: Sequence[int], cyclic: bool = False) -> bool:
    return not validate(digits, cyclic)


def evaluate(digits: Sequence[int]) -> Fraction:
    """Exact value of the finite minus continued fraction, right to left."""
    digits = list(digits)
    if not digits:
        raise ValueError("empty digit sequence")
    value = Fraction(digits[-1])
    for a in reversed(digits[:-1]):
        if value == 0:
            raise ZeroDivisionError("degenerate tail evaluates to 0")
        value = a - 1 / value
    return value


def gauss_step(x) -> tuple[int, QuadraticSurd]:
    """One step of the minus-CF Gauss map on [-1/2, 1/2].

    Returns the digit a = nint(-1/x) and the next point -1/x - a.
    """
    x = as_surd(x)
    if x.sign() == 0:
        raise ZeroDivisionError("Gauss map undefined at 0")
    y = -x.inverse()
    a = surd_nearest_integer(y)
    return a, y - a


def word_matrix(digits: Sequence[int]) -> tuple[tuple[int, int], tuple[int, int]]:
    """Matrix of z -> [a0, a1, ..., a_{k-1}, z], a product of ((a, -1), (1, 0))."""
    m11, m12, m21, m22 = 1, 0, 0, 1
    for a in digits:
        m11, m12, m21, m22 = m11 * a + m12, -m11, m21 * a + m22, -m21
    return ((m11, m12), (m21, m22))


def periodic_value(block: Sequence[int]) -> QuadraticSurd:
    """The quadratic surd whose expansion is ``block`` repeated forever."""
    block = list(block)
    if not block:
        raise ValueError("empty period")
    if validate(block, cyclic=True):
        raise ValueError(f"block {block} is not a valid repeating expansion")
    (a, b), (c, d) = word_matrix(block)
    tr = a + d
    if abs(tr) <= 2:
        raise ValueError(f"block {block} has a non-hyperbolic word (trace {tr})")
    # fixed points of z -> (az+b)/(cz+d): c z^2 + (d - a) z - b = 0
    disc = (d - a) ** 2 + 4 * b * c
    roots = [QuadraticSurd(a - d, s, disc, 2 * c) for s in (1, -1)]
    k = len(block)
    for root in roots:
        if expand(root, k).digits == tuple(block):
            return root
    raise ValueError(f"no fixed point of {block} expands to the block")


def eventually_periodic_value(prefix: Sequence[int], block: Sequence[int]) -> QuadraticSurd:
    """[prefix..., block, block, ...] as an exact surd."""
    tail = periodic_value(block)
    for a in reversed(list(prefix)):
        tail = a - tail.inverse()
    return tail
