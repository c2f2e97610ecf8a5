"""Geodesics in the upper half-plane and their coding by the arc C.

C is the part of the unit circle with |Re z| < mu, mu = (23 - 3 sqrt 5)/22.
A geodesic with H-reduced endpoints (u, w) crosses C, then the translate
a + C with a = nint(w); mapping by z -> -1/(z - a) returns the second crossing
to C and replaces (u, w) by (-1/(u - a), -1/(w - a)).

All crossing coordinates are exact: the crossing of the geodesic (u, w) with
the unit circle has x = (1 + uw)/(u + w) and y^2 = 1 - x^2, both in the
quadratic field of (u, w).  Only the final arccosh is done with intervals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .forms import LAMBDA, is_h_reduced
from .hurwitz import word_matrix
from .numerics import (
    DEFAULT_MAX_PREC,
    CertifiedReal,
    QuadraticSurd,
    as_fraction,
    as_surd,
    certified,
    compare,
    surd_nearest_integer,
)

__all__ = [
    "MU",
    "GeodesicSpec",
    "SegmentRecord",
    "CuspRegion",
    "CuspVerdict",
    "CuspGeometry",
    "TraceError",
    "hyp_distance",
    "cross_section_arc",
    "CrossSectionArc",
    "unit_circle_crossing",
    "trace_segments",
    "digit_cusp_criterion",
    "segment_cusp_geometry",
    "chi_constant",
    "sharp_chi_two",
    "return_time_bounds",
    "closed_geodesic_length",
    "periodic_form_minimum",
]

MU = QuadraticSurd(23, -3, 5, 22)
DEFAULT_WIDTH = Fraction(1, 10**12)


class TraceError(ArithmeticError):
    """An invariant of the coding failed; this signals a bug, not bad input."""


@dataclass(frozen=True)
class GeodesicSpec:
    u: QuadraticSurd
    w: QuadraticSurd

    def __post_init__(self):
        object.__setattr__(self, "u", as_surd(self.u))
        object.__setattr__(self, "w", as_surd(self.w))
        if self.u == self.w:
            raise ValueError("endpoints coincide")

    @property
    def center(self) -> QuadraticSurd:
        return (self.u + self.w) / 2

    @property
    def radius(self) -> QuadraticSurd:
        return abs(self.w - self.u) / 2


@dataclass(frozen=True)
class CuspRegion:
    delta: Fraction

    def __post_init__(self):
        d = as_fraction(self.delta)
        if not 0 < d < 1:
            raise ValueError("delta must lie in (0, 1)")
        object.__setattr__(self, "delta", d)

    @property
    def height(self) -> Fraction:
        return 1 / self.delta**2


class CuspVerdict(enum.Enum):
    INTERSECTS = "intersects"
    MISSES = "misses"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class CuspGeometry:
    intersects: bool
    # x-range of the part of the semicircle above the horoball, when nonempty
    arc: Optional[tuple[CertifiedReal, CertifiedReal]]
    # the single-component guarantee needs delta < (1 - mu^2)^(1/4)
    unique_component: bool


@dataclass(frozen=True)
class SegmentRecord:
    index: int
    digit: int
    u: QuadraticSurd
    w: QuadraticSurd
    x: QuadraticSurd  # entry point on C is x + i sqrt(y_sq)
    y_sq: QuadraticSurd
    t: CertifiedReal
    chi: CertifiedReal
    cusp: dict = field(default_factory=dict)

    @property
    def entry_point(self) -> tuple[CertifiedReal, CertifiedReal]:
        return certified(self.x), certified(self.y_sq).sqrt()

    def bound_check(self) -> dict:
        """Which return-time bounds hold for this segment, decided with brackets.

        ``lower`` uses chi_j, ``sharp_lower`` the constant of
        ``sharp_chi_two`` for |a_j| = 2.  None means undecided at the cap.
        """
        lo, hi = return_time_bounds(self.digit)
        excess = self.t - 2 * certified(abs(self.digit)).log()
        out = {"lower": _nonneg(excess - lo), "upper": _nonneg(hi - excess)}
        if abs(self.digit) == 2:
            out["sharp_lower"] = _nonneg(excess + 2 * sharp_chi_two())
        else:
            out["sharp_lower"] = out["lower"]
        return out

    def to_row(self) -> dict:
        row = {
            "j": self.index,
            "a_j": self.digit,
            "t_lower": float(self.t.lower),
            "t_upper": float(self.t.upper),
            "chi_lower": float(self.chi.lower),
            "chi_upper": float(self.chi.upper),
        }
        checks = self.bound_check()
        row["lower_ok"] = _flag(checks["lower"])
        row["upper_ok"] = _flag(checks["upper"])
        for delta, (verdict, geo) in sorted(self.cusp.items()):
            row[f"cusp_{float(delta):g}"] = verdict.value
            row[f"geom_{float(delta):g}"] = int(geo.intersects)
        return row


def _nonneg(x: CertifiedReal) -> Optional[bool]:
    s = x.sign(max_prec=1024)
    return None if s is None else s >= 0


def _flag(v: Optional[bool]) -> Optional[int]:
    return None if v is None else int(v)


def _point(z):
    if isinstance(z, complex):
        return certified(z.real), certified(z.imag)
    x, y = z
    return certified(x), certified(y)


def hyp_distance(z1, z2) -> CertifiedReal:
    """Hyperbolic distance; points are complex numbers or (x, y) pairs."""
    x1, y1 = _point(z1)
    x2, y2 = _point(z2)
    for y in (y1, y2):
        if y.sign() != 1:
            raise ValueError("points must lie in the upper half-plane")
    num = (x1 - x2) * (x1 - x2) + (y1 - y2) * (y1 - y2)
    return (1 + num / (2 * y1 * y2)).acosh()


@dataclass(frozen=True)
class CrossSectionArc:
    mu: QuadraticSurd

    def contains_x(self, x) -> bool:
        return compare(abs(as_surd(x)), self.mu) < 0

    def translate(self, a: int) -> tuple[QuadraticSurd, QuadraticSurd]:
        """x-range of a + C."""
        return a - self.mu, a + self.mu

    def endpoint(self) -> tuple[QuadraticSurd, CertifiedReal]:
        return self.mu, certified(1 - self.mu * self.mu).sqrt()


def cross_section_arc() -> CrossSectionArc:
    return CrossSectionArc(MU)


def unit_circle_crossing(u, w) -> tuple[QuadraticSurd, QuadraticSurd]:
    """(x, y^2) of the point where the geodesic (u, w) meets |z| = 1."""
    u, w = as_surd(u), as_surd(w)
    s = u + w
    if s.sign() == 0:
        # symmetric geodesic: it meets |z| = 1 only if it is the circle itself
        raise TraceError("geodesic symmetric about 0 has no transverse crossing")
    x = (1 + u * w) / s
    y_sq = 1 - x * x
    if y_sq.sign() <= 0:
        raise TraceError(f"geodesic ({u!r}, {w!r}) misses the unit circle")
    return x, y_sq


_CHI3 = None
_CHI2 = None


def chi_constant(a: int) -> CertifiedReal:
    """Correction term used in the lower return-time bound for digit a."""
    global _CHI2, _CHI3
    if abs(a) < 2:
        raise ValueError("chi is defined for |a| >= 2")
    if abs(a) >= 3:
        if _CHI3 is None:
            _CHI3 = (certified(3) * certified(5).sqrt()).log() / 2
        return _CHI3
    if _CHI2 is None:
        corner = (MU, certified(1 - MU * MU).sqrt())
        top = (Fraction(3, 2), certified(3).sqrt() / 2)
        chi = certified(2).log() - hyp_distance(corner, top) / 2
        lo = certified(Fraction(16, 11)).log() / 2
        hi = certified(Fraction(3, 2)).log() / 2
        if not (chi.lower >= lo.upper and chi.upper <= hi.lower):
            raise TraceError("chi(2) outside its bracket")
        _CHI2 = chi
    return _CHI2


_SHARP_CHI2 = None


def sharp_chi_two() -> CertifiedReal:
    """The |a| = 2 constant that actually bounds H-reduced return times.

    Reduced pairs (u, w) may approach (lambda, 2) from w > 2.  Their segments
    start near the corner of C and leave through 2 + C at x -> 1 + lambda,
    which lies outside |x - 2| <= 1/2.  The infimum of t_j is the distance
    from the corner to (1 + lambda) + i sqrt(1 - (1 - lambda)^2), so this
    returns ln 2 - d/2 for that distance d.  It exceeds chi_constant(2).
    """
    global _SHARP_CHI2
    if _SHARP_CHI2 is None:
        corner = (MU, certified(1 - MU * MU).sqrt())
        exit_x = 1 + LAMBDA
        exit_y = certified(1 - (1 - LAMBDA) ** 2).sqrt()
        _SHARP_CHI2 = certified(2).log() - hyp_distance(corner, (exit_x, exit_y)) / 2
    return _SHARP_CHI2


_C_UPPER = None


def return_time_bounds(a: int) -> tuple[CertifiedReal, CertifiedReal]:
    """Certified (lower, upper) bounds for t_j - 2 ln|a_j|."""
    global _C_UPPER
    if _C_UPPER is None:
        root5 = certified(5).sqrt()
        _C_UPPER = (3 * root5).log() + (Fraction(3, 4) + certified(Fraction(1, 2)).sqrt()).log()
    return -2 * chi_constant(a), _C_UPPER


def digit_cusp_criterion(a: int, delta) -> CuspVerdict:
    d = as_fraction(delta)
    h = 2 / d**2
    if compare(abs(a), LAMBDA + h + Fraction(1, 2)) > 0:
        return CuspVerdict.INTERSECTS
    if compare(abs(a), LAMBDA + h - Fraction(3, 2)) <= 0:
        return CuspVerdict.MISSES
    return CuspVerdict.INDETERMINATE


def segment_cusp_geometry(u, w, delta) -> CuspGeometry:
    """Does the semicircle (u, w) rise above height delta^-2?"""
    geo = GeodesicSpec(u, w)
    d = as_fraction(delta)
    h = 1 / d**2
    r_sq = geo.radius * geo.radius
    # delta < (1 - mu^2)^(1/4)  <=>  delta^4 < 1 - mu^2
    unique = compare(d**4, 1 - MU * MU) < 0
    if compare(r_sq, h * h) <= 0:
        return CuspGeometry(False, None, unique)
    half = certified(r_sq - h * h).sqrt()
    c = certified(geo.center)
    return CuspGeometry(True, (c - half, c + half), unique)


def trace_segments(
    u,
    w,
    n: int,
    deltas: Iterable = (),
    width=DEFAULT_WIDTH,
    max_prec: int = DEFAULT_MAX_PREC,
) -> list[SegmentRecord]:
    """Code n segments of the geodesic from u to w by crossings of C.

    Segment j runs from the crossing of C to the crossing of a_j + C; its
    hyperbolic length is t_j.  Each new endpoint pair is asserted H-reduced.
    """
    u, w = as_surd(u), as_surd(w)
    if not is_h_reduced(u, w):
        raise ValueError("endpoints are not H-reduced; apply forms.h_reduce first")
    if w.is_rational:
        raise ValueError("attracting endpoint must be irrational")
    deltas = [as_fraction(d) for d in deltas]
    out: list[SegmentRecord] = []
    x, y_sq = unit_circle_crossing(u, w)
    for j in range(n):
        if compare(abs(x), MU) >= 0:
            raise TraceError(f"crossing {j} lies outside C")
        a = surd_nearest_integer(w)
        ua, wa = u - a, w - a
        xi, yp_sq = unit_circle_crossing(ua, wa)
        if compare(abs(xi), MU) >= 0:
            raise TraceError(f"exit crossing {j} lies outside a + C")
        dx = x - a - xi
        num = dx * dx + y_sq + yp_sq
        prod = y_sq * yp_sq
        t = (certified(num) / (2 * certified(prod).sqrt())).acosh().refine(width, max_prec)
        cusp = {}
        for d in deltas:
            cusp[d] = (digit_cusp_criterion(a, d), segment_cusp_geometry(u, w, d))
        out.append(SegmentRecord(j, a, u, w, x, y_sq, t, chi_constant(a), cusp))
        u, w = -ua.inverse(), -wa.inverse()
        if not is_h_reduced(u, w):
            raise TraceError(f"pair after step {j} is not H-reduced")
        # z -> -1/(z - a) sends a + xi + i y' to -xi + i y'
        x, y_sq = -xi, yp_sq
    return out


def closed_geodesic_length(block: Sequence[int]) -> CertifiedReal:
    """2 arccosh(|tr M|/2) for the word matrix M of a repeating block."""
    (a, _), (_, d) = word_matrix(block)
    return 2 * (certified(Fraction(abs(a + d), 2))).acosh()


def periodic_form_minimum(u, w, period: int) -> QuadraticSurd:
    """min |Q(p)| over nonzero integer p for the form with a closed geodesic.

    A primitive p is gamma^-1 e_1 for some gamma, and |Q(p)| = 1/|w' - u'| for
    the translated endpoints, so the minimum is 1/(2 R) with R the largest
    radius met along one period of the coding.  Valid when that radius is at
    least 1 (the apex then lies in the standard fundamental domain).
    """
    u, w = as_surd(u), as_surd(w)
    if not is_h_reduced(u, w):
        raise ValueError("endpoints are not H-reduced")
    best = None
    for _ in range(period):
        r = abs(w - u) / 2
        if best is None or compare(r, best) > 0:
            best = r
        a = surd_nearest_integer(w)
        u, w = -(u - a).inverse(), -(w - a).inverse()
    if compare(best, 1) < 0:
        raise ValueError("largest coding radius is below 1; minimum not certified")
    return (2 * best).inverse()
