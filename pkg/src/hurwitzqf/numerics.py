"""Exact and certified real arithmetic.

``QuadraticSurd`` holds numbers (p + q*sqrt(d))/r exactly; every sign and
ordering decision on such numbers is made with integer arithmetic.
``CertifiedReal`` is a lazily evaluated interval expression used for the
transcendental quantities (logarithms, hyperbolic distances).  Rationals are
plain ``fractions.Fraction``.
"""

from __future__ import annotations

import math
import re
import threading
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Callable, Union

from mpmath import iv as _iv_template
from mpmath.libmp import to_rational

__all__ = [
    "QuadraticSurd",
    "INF",
    "Infinity",
    "CertifiedReal",
    "PrecisionExhausted",
    "as_fraction",
    "as_surd",
    "surd_sign",
    "surd_nearest_integer",
    "surd_mobius",
    "compare",
    "certified",
    "parse_literal",
    "format_literal",
]


def as_fraction(x) -> Fraction:
    """Exact rational from int, Fraction, decimal string or float.

    Floats go through their shortest repr so that ``0.3`` means 3/10.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, QuadraticSurd) and x.is_rational:
        return Fraction(x.p, x.r)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


@lru_cache(maxsize=4096)
def _square_part(d: int) -> tuple[int, int]:
    """Return (s, e) with d = s*s*e and e squarefree."""
    s, e, m = 1, 1, d
    f = 2
    # past the cube root the cofactor has at most two prime factors
    while f * f * f <= d:
        if m % f == 0:
            k = 0
            while m % f == 0:
                m //= f
                k += 1
            s *= f ** (k // 2)
            if k % 2:
                e *= f
        f += 1 if f == 2 else 2
    r = math.isqrt(m)
    if r * r == m:
        s *= r
    else:
        e *= m
    return s, e


class Infinity:
    """The point at infinity of the real projective line."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (Infinity, ())


INF = Infinity()


class QuadraticSurd:
    """The real number (p + q*sqrt(d)) / r in canonical form.

    Canonical means r > 0, gcd(p, q, r) = 1, d squarefree and d > 1 whenever
    q != 0; rationals have q = d = 0.
    """

    __slots__ = ("p", "q", "d", "r")

    def __init__(self, p: int, q: int = 0, d: int = 0, r: int = 1):
        p, q, d, r = int(p), int(q), int(d), int(r)
        if r == 0:
            raise ZeroDivisionError("surd with zero denominator")
        if d < 0:
            raise ValueError("negative radicand")
        if q != 0 and d > 1:
            s, d = _square_part(d)
            q *= s
            if d == 1:
                p, q, d = p + q, 0, 0
        elif q != 0 and d == 1:
            p, q, d = p + q, 0, 0
        else:
            q, d = 0, 0
        self._set(p, q, d, r)

    def _set(self, p, q, d, r):
        if r < 0:
            p, q, r = -p, -q, -r
        g = math.gcd(math.gcd(p, q), r)
        if g > 1:
            p //= g
            q //= g
            r //= g
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "d", d if q else 0)
        object.__setattr__(self, "r", r)

    @classmethod
    def _raw(cls, p, q, d, r):
        # d already squarefree
        obj = object.__new__(cls)
        obj._set(p, q, d, r)
        return obj

    @classmethod
    def from_rational(cls, x) -> "QuadraticSurd":
        f = as_fraction(x)
        return cls._raw(f.numerator, 0, 0, f.denominator)

    @classmethod
    def sqrt(cls, x) -> "QuadraticSurd":
        """sqrt of a nonnegative rational, as a surd."""
        f = as_fraction(x)
        if f < 0:
            raise ValueError("sqrt of negative rational")
        # sqrt(a/b) = sqrt(a*b)/b
        return cls(0, 1, f.numerator * f.denominator, f.denominator)

    def __setattr__(self, *_):
        raise AttributeError("QuadraticSurd is immutable")

    # -- structure -----------------------------------------------------
    @property
    def is_rational(self) -> bool:
        return self.q == 0

    @property
    def rational_part(self) -> Fraction:
        return Fraction(self.p, self.r)

    @property
    def irrational_coeff(self) -> Fraction:
        return Fraction(self.q, self.r)

    def conjugate(self) -> "QuadraticSurd":
        return QuadraticSurd._raw(self.p, -self.q, self.d, self.r)

    def key(self) -> tuple[int, int, int, int]:
        return (self.p, self.q, self.d, self.r)

    def __hash__(self):
        if self.q == 0:
            return hash(Fraction(self.p, self.r))
        return hash(self.key())

    def __eq__(self, other):
        if isinstance(other, QuadraticSurd):
            return self.key() == other.key()
        if isinstance(other, (int, Fraction)):
            return self.q == 0 and Fraction(self.p, self.r) == other
        return NotImplemented

    def __repr__(self):
        if self.q == 0:
            return f"rat({self.p},{self.r})" if self.r != 1 else f"rat({self.p},1)"
        return f"surd({self.p},{self.q},{self.d},{self.r})"

    def __float__(self):
        if self.q == 0:
            return self.p / self.r
        k = 64
        s = math.isqrt(self.q * self.q * self.d << (2 * k))
        num = (self.p << k) + (s if self.q > 0 else -s)
        return float(Fraction(num, self.r << k))

    # -- arithmetic ----------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, QuadraticSurd):
            if other.q and self.q and other.d != self.d:
                raise ValueError(
                    f"mixed radicands sqrt({self.d}) and sqrt({other.d})"
                )
            return other
        if isinstance(other, (int, Fraction)):
            f = Fraction(other)
            return QuadraticSurd._raw(f.numerator, 0, 0, f.denominator)
        return None

    def _field(self, other):
        return self.d or other.d

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadraticSurd._raw(
            self.p * o.r + o.p * self.r,
            self.q * o.r + o.q * self.r,
            self._field(o),
            self.r * o.r,
        )

    __radd__ = __add__

    def __neg__(self):
        return QuadraticSurd._raw(-self.p, -self.q, self.d, self.r)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = self._field(o)
        return QuadraticSurd._raw(
            self.p * o.p + self.q * o.q * d,
            self.p * o.q + self.q * o.p,
            d,
            self.r * o.r,
        )

    __rmul__ = __mul__

    def inverse(self) -> "QuadraticSurd":
        # r / (p + q sqrt d) = r (p - q sqrt d) / (p^2 - q^2 d)
        n = self.p * self.p - self.q * self.q * self.d
        if n == 0:
            raise ZeroDivisionError("inverse of zero surd")
        return QuadraticSurd._raw(self.r * self.p, -self.r * self.q, self.d, n)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        out = QuadraticSurd._raw(1, 0, 0, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # -- order ---------------------------------------------------------
    def sign(self) -> int:
        return surd_sign(self)

    def __lt__(self, other):
        return compare(self, other) < 0

    def __le__(self, other):
        return compare(self, other) <= 0

    def __gt__(self, other):
        return compare(self, other) > 0

    def __ge__(self, other):
        return compare(self, other) >= 0

    def floor(self) -> int:
        if self.q == 0:
            return self.p // self.r
        s = math.isqrt(self.q * self.q * self.d)
        approx = self.p + (s if self.q > 0 else -s)
        n = approx // self.r
        while compare(self, n) < 0:
            n -= 1
        while compare(self, n + 1) >= 0:
            n += 1
        return n

    def nearest(self) -> int:
        return surd_nearest_integer(self)


Number = Union[int, Fraction, QuadraticSurd]


def as_surd(x) -> QuadraticSurd:
    if isinstance(x, QuadraticSurd):
        return x
    return QuadraticSurd.from_rational(x)


def _sgn(n) -> int:
    return (n > 0) - (n < 0)


def surd_sign(x: QuadraticSurd) -> int:
    """Exact sign of (p + q sqrt d)/r using integer comparisons only."""
    sp, sq = _sgn(x.p), _sgn(x.q)
    if sq == 0 or x.d == 0:
        return sp
    if sp == 0 or sp == sq:
        return sq
    # opposite signs: the larger of p^2 and q^2 d wins (never equal, d nonsquare)
    return sp if x.p * x.p > x.q * x.q * x.d else sq


def _sign_plus_root(x: QuadraticSurd, s: Fraction, e: int) -> int:
    """sign(x + s*sqrt(e)) for x in another quadratic field (or Q)."""
    sx, ss = surd_sign(x), _sgn(s)
    if ss == 0:
        return sx
    if sx == 0 or sx == ss:
        return ss
    t = surd_sign(x * x - s * s * e)
    if t > 0:
        return sx
    if t < 0:
        return ss
    return 0


def compare(x, y) -> int:
    """Exact sign of x - y for surds in possibly different quadratic fields."""
    x, y = as_surd(x), as_surd(y)
    if x.q == 0 or y.q == 0 or x.d == y.d:
        return surd_sign(x - y)
    rest = x - y.rational_part
    return _sign_plus_root(rest, -y.irrational_coeff, y.d)


def surd_nearest_integer(x) -> int:
    """Nearest integer; exact half-odd ties go away from zero."""
    x = as_surd(x)
    if x.q == 0:
        f = Fraction(x.p, x.r)
        fl = math.floor(f)
        frac = f - fl
        if frac == Fraction(1, 2):
            return fl + 1 if f > 0 else fl
        return fl + 1 if frac > Fraction(1, 2) else fl
    return (x + Fraction(1, 2)).floor()


def surd_mobius(x, m):
    """Apply the integer matrix m = ((a, b), (c, d)) as z -> (az+b)/(cz+d).

    ``x`` may be ``INF``; a vanishing denominator yields ``INF``.
    """
    (a, b), (c, d) = m
    if x is INF:
        if c == 0:
            return INF
        return QuadraticSurd.from_rational(Fraction(a, c))
    x = as_surd(x)
    den = x * c + d
    if den.sign() == 0:
        return INF
    return (x * a + b) / den


# ---------------------------------------------------------------------------
# Certified reals


class PrecisionExhausted(ArithmeticError):
    """A bracket could not be tightened enough within the precision cap."""


_local = threading.local()
_ContextType = type(_iv_template)

DEFAULT_MAX_PREC = 4096


def _ctx(prec: int):
    ctx = getattr(_local, "ctx", None)
    if ctx is None:
        ctx = _ContextType()
        _local.ctx = ctx
    ctx.prec = prec
    return ctx


def _iv_of(ctx, x):
    if isinstance(x, CertifiedReal):
        return x._fn(ctx)
    if isinstance(x, int):
        return ctx.mpf(x)
    if isinstance(x, Fraction):
        return ctx.mpf(x.numerator) / ctx.mpf(x.denominator)
    if isinstance(x, QuadraticSurd):
        v = ctx.mpf(x.p)
        if x.q:
            v = v + ctx.mpf(x.q) * ctx.sqrt(ctx.mpf(x.d))
        return v / ctx.mpf(x.r)
    if isinstance(x, float):
        return _iv_of(ctx, as_fraction(x))
    raise TypeError(f"cannot certify {type(x).__name__}")


def _frac(mpf_tuple) -> Fraction:
    p, q = to_rational(mpf_tuple)
    return Fraction(int(p), int(q))


class CertifiedReal:
    """A real number known through rational brackets [lower, upper].

    The value is an interval expression; ``refine`` re-evaluates it at higher
    precision.  Instances are immutable: refinement returns a new object whose
    bracket is contained in the old one.
    """

    __slots__ = ("_fn", "_prec", "_bracket")

    def __init__(self, fn: Callable, prec: int = 64, _bracket=None):
        self._fn = fn
        self._prec = prec
        self._bracket = _bracket

    @classmethod
    def exact(cls, x) -> "CertifiedReal":
        if isinstance(x, CertifiedReal):
            return x
        return cls(lambda ctx, x=x: _iv_of(ctx, x))

    def _evaluate(self, prec):
        v = self._fn(_ctx(prec))
        lo, hi = v._mpi_
        return _frac(lo), _frac(hi)

    @property
    def bracket(self) -> tuple[Fraction, Fraction]:
        if self._bracket is None:
            # memoisation only; the value itself never changes
            self._bracket = self._evaluate(self._prec)
        return self._bracket

    @property
    def lower(self) -> Fraction:
        return self.bracket[0]

    @property
    def upper(self) -> Fraction:
        return self.bracket[1]

    @property
    def width(self) -> Fraction:
        lo, hi = self.bracket
        return hi - lo

    @property
    def prec(self) -> int:
        return self._prec

    def refine(self, width=Fraction(1, 10**12), max_prec: int = DEFAULT_MAX_PREC):
        """Return a copy whose bracket is no wider than ``width``."""
        width = as_fraction(width)
        lo, hi = self.bracket
        prec = self._prec
        while hi - lo > width:
            prec *= 2
            if prec > max_prec:
                raise PrecisionExhausted(
                    f"bracket width {float(hi - lo):.3g} > {float(width):.3g} "
                    f"at {max_prec} bits"
                )
            nlo, nhi = self._evaluate(prec)
            lo, hi = max(lo, nlo), min(hi, nhi)
        return CertifiedReal(self._fn, prec, (lo, hi))

    def sign(self, max_prec: int = DEFAULT_MAX_PREC):
        """+1/-1 once the bracket excludes 0; None if undecided at max_prec."""
        c = self
        while True:
            lo, hi = c.bracket
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            if lo == hi == 0:
                return 0
            if c._prec * 2 > max_prec:
                return None
            c = CertifiedReal(c._fn, c._prec * 2)

    def contains(self, x) -> bool:
        lo, hi = self.bracket
        return compare(x, lo) >= 0 and compare(x, hi) <= 0

    def __float__(self):
        lo, hi = self.bracket
        return float((lo + hi) / 2)

    def __repr__(self):
        lo, hi = self.bracket
        return f"CertifiedReal([{float(lo)!r}, {float(hi)!r}])"

    # -- arithmetic builds new expressions ------------------------------
    @staticmethod
    def _lift(x):
        return x if isinstance(x, CertifiedReal) else CertifiedReal.exact(x)

    def _binary(self, other, op):
        try:
            o = self._lift(other)
        except TypeError:
            return NotImplemented
        f, g = self._fn, o._fn
        return CertifiedReal(lambda ctx: op(f(ctx), g(ctx)), self._prec)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __radd__(self, other):
        return self._binary(other, lambda a, b: b + a)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    def __rmul__(self, other):
        return self._binary(other, lambda a, b: b * a)

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binary(other, lambda a, b: b / a)

    def __neg__(self):
        f = self._fn
        return CertifiedReal(lambda ctx: -f(ctx), self._prec)

    def __abs__(self):
        f = self._fn
        return CertifiedReal(lambda ctx: abs(f(ctx)), self._prec)

    def _unary(self, name):
        f = self._fn
        return CertifiedReal(lambda ctx: getattr(ctx, name)(f(ctx)), self._prec)

    def sqrt(self):
        return self._unary("sqrt")

    def log(self):
        return self._unary("log")

    def exp(self):
        return self._unary("exp")

    def acosh(self):
        # interval context has no acosh; log(x + sqrt(x^2 - 1)) is monotone on x >= 1
        f = self._fn

        def fn(ctx):
            x = f(ctx)
            lo = max(x.a, ctx.mpf(1))  # clip rounding below the domain
            x = ctx.mpf([lo.a, x.b]) if x.a < 1 else x
            s = x * x - 1
            if s.a < 0:
                s = ctx.mpf([0, s.b])
            return ctx.log(x + ctx.sqrt(s))

        return CertifiedReal(fn, self._prec)


def certified(x) -> CertifiedReal:
    """Lift an exact number (or pass through a CertifiedReal)."""
    return CertifiedReal.exact(x)


# ---------------------------------------------------------------------------
# literal grammar: surd(p,q,d,r) | rat(p,q) | inf | integer | decimal

_SURD_RE = re.compile(r"^\s*surd\(\s*([-+]?\d+)\s*,\s*([-+]?\d+)\s*,\s*(\d+)\s*,\s*([-+]?\d+)\s*\)\s*$")
_RAT_RE = re.compile(r"^\s*rat\(\s*([-+]?\d+)\s*,\s*([-+]?\d+)\s*\)\s*$")
_NUM_RE = re.compile(r"^\s*[-+]?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?\s*$")


def parse_literal(text: str):
    """Parse a number literal; returns QuadraticSurd or INF."""
    m = _SURD_RE.match(text)
    if m:
        p, q, d, r = map(int, m.groups())
        return QuadraticSurd(p, q, d, r)
    m = _RAT_RE.match(text)
    if m:
        p, q = map(int, m.groups())
        return QuadraticSurd.from_rational(Fraction(p, q))
    if text.strip().lower() in ("inf", "oo", "infinity"):
        return INF
    if _NUM_RE.match(text):
        return QuadraticSurd.from_rational(Fraction(text.strip()))
    raise ValueError(f"unparseable number literal {text!r}")


def format_literal(x) -> str:
    if x is INF:
        return "inf"
    x = as_surd(x)
    if x.q == 0:
        return f"rat({x.p},{x.r})"
    return f"surd({x.p},{x.q},{x.d},{x.r})"
