"""Acceptance checks, one test per criterion.

Each test records its verdict through the ``acceptance`` fixture so that the
run ends with a short criterion-by-criterion summary, then asserts.
"""

import itertools
import math
import random
import time
from fractions import Fraction

import mpmath
import pytest

from conftest import random_reduced_pair, random_surd
from hurwitzqf.counting import (
    CountQuery,
    RegionKind,
    component_count,
    compare_wedge_components,
    count_region,
    count_region_bruteforce,
    grid_component_count,
)
from hurwitzqf.forms import LAMBDA, form_from_endpoints, h_reduce
from hurwitzqf.hurwitz import evaluate, expand, is_valid, periodic_value, validate
from hurwitzqf.hyperbolic import (
    CuspVerdict,
    chi_constant,
    periodic_form_minimum,
    trace_segments,
)
from hurwitzqf.numerics import QuadraticSurd, compare
from hurwitzqf.stats import (
    ETA,
    GaussMeasure,
    birkhoff_average,
    constants,
    gauss_generic,
    term_margin,
    verify_reduced_bounds,
)

WIDTH = Fraction(1, 10**9)
DELTAS = (Fraction(3, 10), Fraction(1, 2), Fraction(7, 10))


@pytest.fixture(autouse=True)
def _precision():
    with mpmath.workdps(60):
        yield


def closed(block):
    w = periodic_value(block)
    return h_reduce(form_from_endpoints(w.conjugate(), w)).form


@pytest.fixture(scope="module")
def traced():
    """100 random H-reduced geodesics, 50 coded segments each."""
    rng = random.Random(31)
    out = []
    for _ in range(100):
        u, w = random_reduced_pair(rng)
        out.append(trace_segments(u, w, 50, deltas=DELTAS, width=WIDTH / 10))
    return out


def test_criterion_01_digit_validity(acceptance):
    rng = random.Random(1)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(1000):
        seq = expand(random_surd(rng), 40)
        bad += len(validate(seq.digits))
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 10
    acceptance(1, ok, f"{bad} violations over 1000 surds x 40 digits in {elapsed:.2f}s")
    assert bad == 0
    assert elapsed < 10


def test_criterion_02_periodic_round_trips(acceptance):
    alphabet = [s * k for k in range(2, 7) for s in (1, -1)]
    blocks = failures = 0
    for length in range(1, 5):
        for block in itertools.product(alphabet, repeat=length):
            if not is_valid(block, cyclic=True):
                continue
            blocks += 1
            root = periodic_value(block)
            if expand(root, 3 * length).digits != tuple(block) * 3:
                failures += 1
            # independent check through a long truncated convergent
            elif abs(float(evaluate(list(block) * (60 // length))) - float(root)) > 1e-12:
                failures += 1
    ok = failures == 0 and blocks > 0
    acceptance(2, ok, f"{blocks} valid blocks, {failures} mismatches")
    assert ok


def test_criterion_03_return_time_bracket(acceptance, traced):
    narrow = all(s.t.width <= WIDTH for segs in traced for s in segs)
    lower_fail = upper_fail = sharp_fail = 0
    total = 0
    for segs in traced:
        for s in segs:
            total += 1
            chk = s.bound_check()
            lower_fail += chk["lower"] is not True
            upper_fail += chk["upper"] is not True
            sharp_fail += chk["sharp_lower"] is not True

    golden = closed([3])
    ref = 2 * mpmath.acosh(mpmath.mpf(3) / 2)
    golden_segs = trace_segments(golden.u, golden.w, 50, width=WIDTH / 10)
    golden_ok = all(abs(mpmath.mpf(float(s.t)) - ref) <= 1e-9 and s.t.width <= WIDTH
                    for s in golden_segs)

    ok = narrow and golden_ok and lower_fail == 0 and upper_fail == 0
    acceptance(3, ok, f"{total} segments: lower fails {lower_fail}, upper fails {upper_fail}, "
                      f"sharp |a|=2 lower fails {sharp_fail}, widths ok {narrow}, [3] ok {golden_ok}")
    assert narrow and golden_ok
    assert upper_fail == 0 and sharp_fail == 0
    assert lower_fail == 0


def test_criterion_04_cusp_criterion(acceptance, traced):
    contradictions = outside_band = 0
    definite = indeterminate = 0
    for segs in traced:
        for s in segs:
            for d, (verdict, geo) in s.cusp.items():
                if verdict is CuspVerdict.INDETERMINATE:
                    indeterminate += 1
                    h = 2 / d**2
                    lo, hi = LAMBDA + h - Fraction(3, 2), LAMBDA + h + Fraction(1, 2)
                    if not (compare(abs(s.digit), lo) > 0 and compare(abs(s.digit), hi) <= 0):
                        outside_band += 1
                    continue
                definite += 1
                if geo.intersects != (verdict is CuspVerdict.INTERSECTS):
                    contradictions += 1
    ok = contradictions == 0 and outside_band == 0
    acceptance(4, ok, f"{definite} definite verdicts, {contradictions} contradictions; "
                      f"{indeterminate} indeterminate, {outside_band} outside the band")
    assert ok


COMPONENT_FORMS = [
    ("[3]", lambda: closed([3])),
    ("[2,-2]", lambda: closed([2, -2])),
    ("[4]", lambda: closed([4])),
    ("[5,-3]", lambda: closed([5, -3])),
    ("[12,5,-6]", lambda: closed([12, 5, -6])),
    ("2/7", lambda: h_reduce(form_from_endpoints(Fraction(2, 7), QuadraticSurd(5, 3, 11, 4))).form),
    ("-1/3", lambda: h_reduce(form_from_endpoints(Fraction(-1, 3), QuadraticSurd(0, 1, 7, 1))).form),
    ("1/5", lambda: h_reduce(form_from_endpoints(Fraction(1, 5), QuadraticSurd(1, 1, 13, 2))).form),
    ("3/2", lambda: h_reduce(form_from_endpoints(Fraction(3, 2), QuadraticSurd(-7, 2, 19, 3))).form),
    ("-5", lambda: h_reduce(form_from_endpoints(Fraction(-5), QuadraticSurd(11, -1, 3, 5))).form),
]


def test_criterion_05_component_oracles(acceptance):
    mismatches = []
    cor_fail = []
    thresholds = {}
    rhos = [10, 100, 1000, 10**4, 3 * 10**4]
    for name, make in COMPONENT_FORMS:
        Q = make()
        for s2 in (Fraction(1, 4), Fraction(1, 2)):
            # tau/sigma = e^10 up to rounding of e^20 down to an integer
            t2 = s2 * Fraction(math.floor(math.exp(20)))
            res = component_count(Q.g, sigma_sq=s2, tau_sq=t2)
            runs, short = grid_component_count(Q.g, sigma_sq=s2, tau_sq=t2)
            if abs(res.count - runs) > short:
                mismatches.append((name, str(s2), res.count, runs))
        rows, threshold = compare_wedge_components(Q, Fraction(1, 2), rhos)
        thresholds[name] = threshold
        if threshold is None or any(abs(r.diff) > 1 for r in rows if r.rho >= threshold):
            cor_fail.append(name)
    ok = not mismatches and not cor_fail
    shown = {k: (None if v is None else int(v)) for k, v in thresholds.items()}
    acceptance(5, ok, f"grid mismatches {mismatches}, wedge comparison failures {cor_fail}, "
                      f"thresholds {shown}")
    assert ok


SPLIT_FORMS = [closed([3]), closed([5, -3]), closed([12, 5, -6]),
               h_reduce(form_from_endpoints(Fraction(2, 7), QuadraticSurd(5, 3, 11, 4))).form,
               h_reduce(form_from_endpoints(Fraction(-1, 3), QuadraticSurd(0, 1, 7, 1))).form]


def _naive_split(Q, delta, rho):
    """Exact counts by scanning the whole disk with exact surd arithmetic."""
    H = G = Gp = 0
    for x in range(-rho, rho + 1):
        for y in range(-rho, rho + 1):
            if x * x + y * y > rho * rho or math.gcd(x, y) != 1:
                continue
            P, M = Q.l_plus(x, y), Q.l_minus(x, y)
            v = P * M
            if v.sign() <= 0 or compare(v, delta) >= 0:
                continue
            H += 1
            G += M.sign() > 0 and compare(M * M, delta) > 0
            Gp += P.sign() > 0 and compare(P * P, delta) > 0
    return H, G, Gp


def test_criterion_06_full_split(acceptance):
    delta = Fraction(1, 2)
    t0 = time.perf_counter()
    bad = []
    for i, Q in enumerate(SPLIT_FORMS):
        for rho in (10**2, 10**3, 10**4, 10**5):
            res = count_region(CountQuery(Q, delta, 0, rho, RegionKind.FULL_H))
            if not res.split_ok:
                bad.append((i, rho, res.count, res.split))
    elapsed = time.perf_counter() - t0

    brute_bad = []
    for i, Q in enumerate(SPLIT_FORMS):
        res = count_region(CountQuery(Q, delta, 0, 40, RegionKind.FULL_H))
        if (res.count, *res.split) != _naive_split(Q, delta, 40):
            brute_bad.append((i, 40))
        q = CountQuery(Q, delta, 0, 1000, RegionKind.FULL_H)
        if count_region(q).count != count_region_bruteforce(q):
            brute_bad.append((i, 1000))

    ok = not bad and not brute_bad and elapsed < 120
    acceptance(6, ok, f"split failures {bad}, brute-force mismatches {brute_bad}, "
                      f"enumeration {elapsed:.1f}s")
    assert ok


def test_criterion_07_reduced_bounds(acceptance):
    rhos = [10**k for k in range(1, 7)]
    failures = []
    pairs = 0
    for block in ([3], [2, -2], [6, -3], [9, 3], [12, 5, -6]):
        rep = verify_reduced_bounds(closed(block), Fraction(3, 4), Fraction(1, 4), rhos)
        pairs += sum(r.pairs_checked for r in rep.rows)
        if not rep.passed:
            failures.append(block)
    ok = not failures and pairs > 0
    acceptance(7, ok, f"{pairs} (n, rho) pairs checked, failing forms {failures}")
    assert ok


def test_criterion_08_badly_approximable_vacuity(acceptance):
    kappa = Fraction(1, 4)
    details = []
    ok = True
    for block in ([3], [2, -2]):
        Q = closed(block)
        m = periodic_form_minimum(Q.u, Q.w, len(block))
        below = Fraction(math.floor(float(m) * 10**6) - 1, 10**6)
        above = Fraction(math.ceil(float(m) * 10**6) + 1, 10**6)
        assert compare(below, m) < 0 < compare(above, m)
        zero = all(count_region(CountQuery(Q, below, kappa, rho)).count == 0
                   for rho in (10**2, 10**4, 10**6))
        # the threshold is sharp: just above the minimum the count is positive
        hit = count_region(CountQuery(Q, above, kappa, 10**4)).count
        ok &= zero and hit > 0
        details.append(f"{block}: min {float(m):.6f}, empty below {zero}, count above {hit}")
    acceptance(8, ok, "; ".join(details))
    assert ok


def test_criterion_09_gauss_measure(acceptance):
    mu = GaussMeasure()
    c_ref = 2 / mpmath.log(mpmath.mpf(5) / 3)
    c_ok = abs(mpmath.mpf(float(mu.c)) - c_ref) <= 1e-9
    total = mu.interval(Fraction(-1, 2), Fraction(1, 2))
    mass_ok = abs(float(total) - 1) <= 1e-12 and float(total.width) <= 1e-12

    coarse = gauss_generic(tol=1e-6)
    fine = gauss_generic(tol=1e-8)
    lo, hi = coarse.alpha_bracket
    stable = hi - lo <= 1e-6 and abs(coarse.alpha - fine.alpha) <= 1e-6
    birk = birkhoff_average(100_000)
    close = abs(birk - coarse.alpha) <= 0.05 * coarse.alpha

    ok = c_ok and mass_ok and stable and close
    acceptance(9, ok, f"c ok {c_ok}, mass ok {mass_ok}, alpha {coarse.alpha:.9f} "
                      f"bracket width {hi - lo:.2e}, Birkhoff {birk:.5f}")
    assert ok


def test_criterion_10_constants(acceptance):
    k = constants()
    eta_ok = (ETA - Fraction(1, 8)).sign() == 1
    quartic_ok = (k["quartic_root_1_minus_mu2"] - k["sqrt_2_over_pi"]).sign() == 1
    chi = chi_constant(2)
    chi_ok = (chi - k["chi2_lower"]).sign() == 1 and (k["chi2_upper"] - chi).sign() == 1

    # |a| = 2 is the only non-exact case; for |a| >= 3 the margin is ln(|a|/3),
    # which is nonnegative because |a|/3 >= 1 (and exactly zero at |a| = 3)
    two_ok = term_margin(2).sign() == 1
    exact_ok = all(Fraction(a, 3) >= 1 for a in range(3, 10**6 + 1))
    three = term_margin(3)
    identity_ok = three.lower == 0 and three.upper == 0
    rng = random.Random(10)
    sample = [4, 5, 10**6] + [rng.randint(4, 10**6) for _ in range(200)]
    sample_ok = all(term_margin(a).sign() == 1 for a in sample)

    ok = eta_ok and quartic_ok and chi_ok and two_ok and exact_ok and identity_ok and sample_ok
    acceptance(10, ok, f"eta>1/8 {eta_ok}, sqrt(2/pi)<(1-mu^2)^(1/4) {quartic_ok}, "
                       f"chi bracket {chi_ok}, per-term a=2 {two_ok}, a=3 identity {identity_ok}, "
                       f"a>=4 {exact_ok and sample_ok}")
    assert ok
