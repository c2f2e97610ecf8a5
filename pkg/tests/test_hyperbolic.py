import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from conftest import random_reduced_pair
from hurwitzqf.forms import LAMBDA, form_from_endpoints, is_h_reduced
from hurwitzqf.hurwitz import expand, periodic_value
from hurwitzqf.hyperbolic import (
    MU,
    CuspRegion,
    CuspVerdict,
    GeodesicSpec,
    TraceError,
    chi_constant,
    closed_geodesic_length,
    cross_section_arc,
    digit_cusp_criterion,
    hyp_distance,
    periodic_form_minimum,
    return_time_bounds,
    segment_cusp_geometry,
    trace_segments,
    unit_circle_crossing,
)
from hurwitzqf.numerics import QuadraticSurd, certified, compare

W3 = periodic_value([3])
W22 = periodic_value([2, -2])


@pytest.fixture(autouse=True)
def _precision():
    with mpmath.workdps(50):
        yield


def mpv(x):
    x = QuadraticSurd.from_rational(x) if isinstance(x, (int, Fraction)) else x
    return (mpmath.mpf(x.p) + x.q * mpmath.sqrt(x.d)) / x.r


def test_distance_examples():
    assert hyp_distance(1j, 1j).contains(0)
    assert abs(float(hyp_distance(1j, 4j)) - float(mpmath.log(4))) < 1e-15
    d = hyp_distance(1j, 2 + 1j)
    assert d.contains(Fraction(mpmath.nstr(mpmath.log(3 + 2 * mpmath.sqrt(2)), 40))) or \
        abs(float(d) - float(mpmath.log(3 + 2 * mpmath.sqrt(2)))) < 1e-15
    with pytest.raises(ValueError):
        hyp_distance(1j, (0, 0))


@given(st.tuples(st.fractions(-5, 5, max_denominator=100), st.fractions(Fraction(1, 100), 5, max_denominator=100)),
       st.tuples(st.fractions(-5, 5, max_denominator=100), st.fractions(Fraction(1, 100), 5, max_denominator=100)))
def test_distance_matches_closed_form(z1, z2):
    d = hyp_distance(z1, z2)
    a = mpmath.mpc(*(mpmath.mpf(v.numerator) / v.denominator for v in z1))
    b = mpmath.mpc(*(mpmath.mpf(v.numerator) / v.denominator for v in z2))
    # 2 artanh(|a - b| / |a - conj b|)
    ref = 2 * mpmath.atanh(abs(a - b) / abs(a - mpmath.conj(b)))
    assert abs(float(d) - float(ref)) < 1e-9 * (1 + float(ref))
    assert abs(float(hyp_distance(z2, z1)) - float(d)) < 1e-12


def test_cross_section_arc():
    arc = cross_section_arc()
    assert arc.mu == QuadraticSurd(23, -3, 5, 22)
    assert abs(float(arc.mu) - 0.740536) < 1e-6
    x, y = arc.endpoint()
    d = hyp_distance((x, y), (0, 1))
    ref = mpmath.log(3 * mpmath.sqrt(5)) / 2
    assert abs(float(d.refine(Fraction(1, 10**20))) - float(ref)) < 1e-12
    assert arc.contains_x(0)
    assert not arc.contains_x(Fraction(3, 4))
    lo, hi = arc.translate(3)
    assert lo == 3 - MU and hi == 3 + MU


def test_crossing_formula_against_circle_intersection():
    rng = random.Random(2)
    for _ in range(100):
        u, w = random_reduced_pair(rng)
        x, y_sq = unit_circle_crossing(u, w)
        c, r = (mpv(u) + mpv(w)) / 2, abs(mpv(w) - mpv(u)) / 2
        # |z - c| = r and |z| = 1  =>  x = (1 + c^2 - r^2) / (2c)
        xr = (1 + c * c - r * r) / (2 * c)
        assert abs(mpv(x) - xr) < mpmath.mpf(10) ** -40
        assert abs(mpv(y_sq) - (1 - xr * xr)) < mpmath.mpf(10) ** -40


def _numeric_return_time(u, w):
    """t_0 from floating crossing points, independent of the exact formulas."""
    u, w = mpv(u), mpv(w)
    a = int(mpmath.floor(w + mpmath.mpf(1) / 2))
    c, r = (u + w) / 2, abs(w - u) / 2
    x0 = (1 + c * c - r * r) / (2 * c)
    cs = c - a
    x1 = (1 + cs * cs - r * r) / (2 * cs) + a
    z0 = mpmath.mpc(x0, mpmath.sqrt(1 - x0 * x0))
    z1 = mpmath.mpc(x1, mpmath.sqrt(r * r - (x1 - c) ** 2))
    return 2 * mpmath.atanh(abs(z0 - z1) / abs(z0 - mpmath.conj(z1)))


def test_return_times_against_numeric_geometry():
    rng = random.Random(4)
    for _ in range(40):
        u, w = random_reduced_pair(rng)
        segs = trace_segments(u, w, 6)
        for s in segs:
            ref = _numeric_return_time(s.u, s.w)
            assert s.t.contains(Fraction(mpmath.nstr(ref, 45))) or abs(float(s.t) - float(ref)) < 1e-13


def test_trace_golden_ratio_geodesic():
    segs = trace_segments(W3.conjugate(), W3, 10)
    target = 2 * mpmath.acosh(mpmath.mpf(3) / 2)
    assert abs(float(target) - 1.92485) < 1e-5
    for s in segs:
        assert s.digit == 3
        assert s.t.width <= Fraction(1, 10**12)
        assert abs(float(s.t) - float(target)) < 1e-9
        assert abs(float(s.t) - 2 * float(mpmath.log(3)) + 0.27239) < 5e-5
    # the return time is also the distance between the two crossing points
    s = segs[0]
    xi, yp_sq = unit_circle_crossing(s.u - 3, s.w - 3)
    d = hyp_distance(s.entry_point, (certified(xi + 3), certified(yp_sq).sqrt()))
    assert abs(float(d) - float(s.t)) < 1e-12


def test_trace_silver_geodesic():
    segs = trace_segments(W22.conjugate(), W22, 8)
    assert [s.digit for s in segs] == [2, -2] * 4
    lo, hi = certified(Fraction(16, 11)).log() / 2, certified(Fraction(3, 2)).log() / 2
    for s in segs:
        assert s.chi.lower >= lo.upper and s.chi.upper <= hi.lower
    total = sum((s.t for s in segs[:2]), certified(0))
    assert abs(float(total) - float(2 * mpmath.acosh(3))) < 1e-10


@pytest.mark.parametrize("block", [[3], [2, -2], [5, -3], [4, 2, -3], [7, 7, -2, 3], [12, -5, 2, -2]])
def test_period_sum_equals_closed_geodesic(block):
    w = periodic_value(block)
    segs = trace_segments(w.conjugate(), w, len(block))
    total = sum((s.t for s in segs), certified(0))
    L = closed_geodesic_length(block)
    assert abs(float(total) - float(L)) < 1e-10
    assert [s.digit for s in segs] == list(block)


def test_trace_digits_equal_expansion_and_stay_reduced():
    rng = random.Random(9)
    for _ in range(30):
        u, w = random_reduced_pair(rng)
        segs = trace_segments(u, w, 25)
        assert [s.digit for s in segs] == list(expand(w, 25).digits)
        for s in segs:
            assert is_h_reduced(s.u, s.w)
            assert compare(abs(s.x), MU) < 0
            checks = s.bound_check()
            assert checks["upper"] and checks["sharp_lower"]
            if abs(s.digit) >= 3:
                assert checks["lower"]


def test_two_digit_lower_bound_counterexample():
    # w = [2, -40, 3, 2, -40, 3, ...] is just above 2; u sits just below lambda
    w = periodic_value([2, -40, 3])
    u = Fraction(3819, 10000)
    assert is_h_reduced(u, w)
    seg = trace_segments(u, w, 1)[0]
    xi, _ = unit_circle_crossing(seg.u - 2, seg.w - 2)
    assert compare(abs(xi), Fraction(1, 2)) > 0  # exit outside 2 + C'
    checks = seg.bound_check()
    assert checks["lower"] is False and checks["sharp_lower"] is True


def test_sharp_two_constant_matches_limit():
    from hurwitzqf.hyperbolic import sharp_chi_two

    lam = (3 - mpmath.sqrt(5)) / 2
    mu = (23 - 3 * mpmath.sqrt(5)) / 22
    a = mpmath.mpc(mu, mpmath.sqrt(1 - mu * mu))
    b = mpmath.mpc(1 + lam, mpmath.sqrt(1 - (1 - lam) ** 2))
    d = 2 * mpmath.atanh(abs(a - b) / abs(a - mpmath.conj(b)))
    assert abs(float(sharp_chi_two()) - float(mpmath.log(2) - d / 2)) < 1e-14
    assert sharp_chi_two().lower > chi_constant(2).upper
    # approaching (lambda, 2) the return time tends to the sharp floor
    excess = []
    for k in (10, 100, 1000):
        w = periodic_value([2, -k, 3])
        seg = trace_segments(Fraction(381966, 10**6), w, 1)[0]
        excess.append(float(seg.t) - 2 * float(mpmath.log(2)))
    assert excess[0] > excess[1] > excess[2] > -2 * float(sharp_chi_two())
    assert excess[2] + 2 * float(sharp_chi_two()) < 1e-2


def test_trace_rejects_unreduced():
    with pytest.raises(ValueError):
        trace_segments(Fraction(1, 2), W3, 3)


def test_return_time_bound_values():
    lo, hi = return_time_bounds(3)
    half = mpmath.log(3 * mpmath.sqrt(5)) / 2
    assert abs(float(lo) + 2 * float(half)) < 1e-15
    assert abs(float(hi) - float(2 * half + mpmath.log(mpmath.mpf(3) / 4 + mpmath.sqrt(0.5)))) < 1e-15
    lo2, _ = return_time_bounds(-2)
    assert abs(float(lo2) + 2 * float(chi_constant(2))) < 1e-15


def test_chi_values():
    ref = float(mpmath.log(3 * mpmath.sqrt(5)) / 2)
    assert abs(float(chi_constant(5)) - ref) < 1e-15
    assert abs(ref - 0.9516656) < 1e-7
    c2 = chi_constant(2)
    assert Fraction(187346, 10**6) < c2.lower and c2.upper < Fraction(202733, 10**6)
    assert chi_constant(-2).bracket == c2.bracket
    with pytest.raises(ValueError):
        chi_constant(1)


@pytest.mark.parametrize(
    "a, delta, verdict",
    [
        (12, 1, CuspVerdict.INTERSECTS),
        (2, 1, CuspVerdict.INDETERMINATE),
        (2, Fraction(1, 2), CuspVerdict.MISSES),
        (-9, Fraction(1, 2), CuspVerdict.INTERSECTS),
        (8, Fraction(1, 2), CuspVerdict.INDETERMINATE),
        (6, Fraction(1, 2), CuspVerdict.MISSES),
    ],
)
def test_digit_criterion_examples(a, delta, verdict):
    assert digit_cusp_criterion(a, delta) is verdict


def test_cusp_geometry_examples():
    geo = segment_cusp_geometry(Fraction(1, 5), Fraction(61, 2), Fraction(3, 10))
    assert geo.intersects and geo.unique_component
    lo, hi = geo.arc
    c = (Fraction(1, 5) + Fraction(61, 2)) / 2
    assert lo.upper < c < hi.lower
    geo = segment_cusp_geometry(Fraction(1, 5), Fraction(13, 5), Fraction(1, 2))
    assert not geo.intersects and geo.arc is None
    assert not segment_cusp_geometry(0, 3, Fraction(9, 10)).unique_component


def test_cusp_region_and_geodesic_spec():
    assert CuspRegion(Fraction(1, 2)).height == 4
    with pytest.raises(ValueError):
        CuspRegion(1)
    g = GeodesicSpec(QuadraticSurd(-1), QuadraticSurd(3))
    assert g.center == 1 and g.radius == 2
    with pytest.raises(ValueError):
        GeodesicSpec(QuadraticSurd(2), QuadraticSurd(2))


def test_criterion_never_contradicts_geometry():
    rng = random.Random(12)
    deltas = [Fraction(3, 10), Fraction(1, 2), Fraction(7, 10)]
    for _ in range(40):
        u, w = random_reduced_pair(rng)
        for s in trace_segments(u, w, 30, deltas=deltas):
            for d, (verdict, geo) in s.cusp.items():
                if verdict is CuspVerdict.INTERSECTS:
                    assert geo.intersects
                elif verdict is CuspVerdict.MISSES:
                    assert not geo.intersects


def _brute_minimum(Q, bound=150):
    best = None
    for x in range(-bound, bound + 1):
        for y in range(0, bound + 1):
            if (x, y) == (0, 0) or (y == 0 and x < 0):
                continue
            v = abs(Q(x, y))
            if best is None or compare(v, best) < 0:
                best = v
    return best


@pytest.mark.parametrize(
    "block, expected",
    [([3], QuadraticSurd(0, 1, 5, 5)), ([2, -2], QuadraticSurd(0, 1, 2, 4))],
)
def test_periodic_form_minimum(block, expected):
    w = periodic_value(block)
    m = periodic_form_minimum(w.conjugate(), w, len(block))
    assert m == expected
    assert _brute_minimum(form_from_endpoints(w.conjugate(), w)) == m


def test_segment_rows():
    segs = trace_segments(W3.conjugate(), W3, 2, deltas=[Fraction(1, 2)])
    row = segs[0].to_row()
    assert row["a_j"] == 3 and row["cusp_0.5"] == "misses" and row["geom_0.5"] == 0
    assert row["t_lower"] <= row["t_upper"]


def test_trace_error_on_symmetric_geodesic():
    with pytest.raises(TraceError):
        unit_circle_crossing(QuadraticSurd(-2), QuadraticSurd(2))
    assert LAMBDA == QuadraticSurd(3, -1, 5, 2)
