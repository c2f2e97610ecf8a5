"""Digit statistics, the counting constants, and checks of the reduced-form
counting bounds against exact lattice counts."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from .counting import CountQuery, RegionKind, count_region
from .forms import LAMBDA, BinaryForm, is_h_reduced
from .hurwitz import DigitSequence, gauss_step
from .hyperbolic import MU, chi_constant, hyp_distance, trace_segments
from .numerics import (
    CertifiedReal,
    QuadraticSurd,
    as_fraction,
    certified,
    compare,
)

__all__ = [
    "C0",
    "ETA",
    "QUARTER_LOG_9_5",
    "constants",
    "term_margin",
    "eta_margin",
    "StatsSeries",
    "digit_statistics",
    "threshold_counts",
    "main_region_thresholds",
    "SlopeBracket",
    "slope_bracket",
    "GaussMeasure",
    "GenericConstants",
    "gauss_generic",
    "birkhoff_average",
    "region_area",
    "VerificationRow",
    "VerificationReport",
    "verify_reduced_bounds",
]

_half_log_3root5 = (3 * certified(5).sqrt()).log() / 2
C0 = _half_log_3root5 + (Fraction(3, 4) + certified(Fraction(1, 2)).sqrt()).log() / 2
QUARTER_LOG_9_5 = certified(Fraction(9, 5)).log() / 4
ETA = certified(Fraction(9, 5)).log() / (4 * certified(3).log())


def constants() -> dict[str, CertifiedReal]:
    """The fixed numbers of the theory as certified brackets."""
    return {
        "lambda": certified(LAMBDA),
        "mu": certified(MU),
        "c0": C0,
        "eta": ETA,
        "quarter_log_9_5": QUARTER_LOG_9_5,
        "half_log_3sqrt5": _half_log_3root5,
        "chi2": chi_constant(2),
        "chi2_lower": certified(Fraction(16, 11)).log() / 2,
        "chi2_upper": certified(Fraction(3, 2)).log() / 2,
        "quartic_root_1_minus_mu2": certified(1 - MU * MU).sqrt().sqrt(),
        "sqrt_2_over_pi": (2 / CertifiedReal(lambda ctx: ctx.pi)).sqrt(),
        "gauss_c": 2 / certified(Fraction(5, 3)).log(),
    }


def term_margin(a: int) -> CertifiedReal:
    """ln|a| - chi(a) - (1/4) ln(9/5).

    For |a| >= 3 this simplifies exactly to ln(|a|/3), since
    (1/2) ln(3 sqrt 5) + (1/4) ln(9/5) = ln 3; the margin is then zero at
    |a| = 3 and the interval evaluation of log(1) is exactly [0, 0].
    """
    a = abs(a)
    if a < 2:
        raise ValueError("need |a| >= 2")
    if a >= 3:
        return certified(Fraction(a, 3)).log()
    return certified(2).log() - chi_constant(2) - QUARTER_LOG_9_5


def eta_margin(a: int) -> CertifiedReal:
    """ln|a| - chi(a) - eta ln|a|; equals (1 - eta) ln(|a|/3) for |a| >= 3."""
    a = abs(a)
    if a < 2:
        raise ValueError("need |a| >= 2")
    if a >= 3:
        return (1 - ETA) * certified(Fraction(a, 3)).log()
    return (1 - ETA) * certified(2).log() - chi_constant(2)


# ---------------------------------------------------------------------------
# digit statistics


def threshold_counts(digits: Sequence[int], delta) -> tuple[np.ndarray, np.ndarray]:
    """Prefix counts e(delta, n), f(delta, n) for n = 0..len(digits)."""
    d = as_fraction(delta)
    h = 2 / d**2
    hi = LAMBDA + h + Fraction(1, 2)
    lo = LAMBDA + h - Fraction(3, 2)
    cache: dict[int, tuple[int, int]] = {}
    e = np.zeros(len(digits) + 1, dtype=np.int64)
    f = np.zeros(len(digits) + 1, dtype=np.int64)
    for j, a in enumerate(digits):
        m = abs(a)
        if m not in cache:
            cache[m] = (int(compare(m, hi) > 0), int(compare(m, lo) > 0))
        ei, fi = cache[m]
        e[j + 1] = e[j] + ei
        f[j + 1] = f[j] + fi
    return e, f


def main_region_thresholds(delta) -> dict[str, object]:
    """Digit thresholds for the region {0 < Q < delta, L- > kappa}.

    ``printed`` are 2/delta + 1 and 2/delta - 3/2.  ``substituted`` replaces
    delta by sqrt(2 delta) in the reduced-form thresholds, which gives
    1/delta + 1/2 + lambda and 1/delta - 3/2 + lambda.
    """
    d = as_fraction(delta)
    return {
        "printed": (2 / d + 1, 2 / d - Fraction(3, 2)),
        "substituted": (LAMBDA + 1 / d + Fraction(1, 2), LAMBDA + 1 / d - Fraction(3, 2)),
    }


@dataclass
class StatsSeries:
    digits: tuple[int, ...]
    delta: Fraction
    alpha: np.ndarray  # alpha[n] = sum_{j<n} ln|a_j|
    omega: np.ndarray  # omega[n] = sum_{j<n} (ln|a_j| - chi_j)
    e: np.ndarray
    f: np.ndarray
    window: tuple[int, int]
    alpha_plus: float
    alpha_minus: float
    omega_rate: float
    e_minus: float
    e_plus: float
    f_minus: float
    f_plus: float

    @property
    def n(self) -> int:
        return len(self.digits)

    def alpha_certified(self, n: int) -> CertifiedReal:
        return _log_sum(self.digits[:n])

    def omega_certified(self, n: int) -> CertifiedReal:
        return _log_sum(self.digits[:n]) - _chi_sum(self.digits[:n])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "delta": str(self.delta),
            "window": list(self.window),
            "alpha_plus": self.alpha_plus,
            "alpha_minus": self.alpha_minus,
            "omega": self.omega_rate,
            "e_minus": self.e_minus,
            "e_plus": self.e_plus,
            "f_minus": self.f_minus,
            "f_plus": self.f_plus,
        }


def _log_sum(digits) -> CertifiedReal:
    prod = 1
    for a in digits:
        prod *= abs(a)
    return certified(prod).log()


def _chi_sum(digits) -> CertifiedReal:
    twos = sum(1 for a in digits if abs(a) == 2)
    rest = len(digits) - twos
    return twos * chi_constant(2) + rest * chi_constant(3)


def digit_statistics(digits, delta, n: Optional[int] = None,
                     window: Optional[int] = None) -> StatsSeries:
    """Prefix sums over the first n digits and windowed limit estimates.

    The limit quantities are min/max of the Cesaro averages X_m/m over
    m in the last ``window`` prefixes (default: the last half).
    """
    if isinstance(digits, DigitSequence):
        digits = digits.digits
    digits = tuple(int(a) for a in digits)
    n = len(digits) if n is None else n
    if n > len(digits):
        raise ValueError(f"need at least {n} digits, have {len(digits)}")
    if n < 1:
        raise ValueError("need n >= 1")
    digits = digits[:n]
    d = as_fraction(delta)
    if d <= 0:
        raise ValueError("delta must be positive")
    chi2, chi3 = float(chi_constant(2)), float(chi_constant(3))
    logs = np.log(np.abs(np.array(digits, dtype=np.float64)))
    chis = np.where(np.abs(np.array(digits)) == 2, chi2, chi3)
    alpha = np.concatenate([[0.0], np.cumsum(logs)])
    omega = np.concatenate([[0.0], np.cumsum(logs - chis)])
    e, f = threshold_counts(digits, d)
    if window is None:
        window = max(1, n // 2)
    lo = max(1, n - window + 1)
    ms = np.arange(lo, n + 1)
    ra, ro = alpha[ms] / ms, omega[ms] / ms
    re, rf = e[ms] / ms, f[ms] / ms
    return StatsSeries(
        digits, d, alpha, omega, e, f, (int(lo), int(n)),
        float(ra.max()), float(ra.min()), float(ro.min()),
        float(re.min()), float(re.max()), float(rf.min()), float(rf.max()),
    )


@dataclass(frozen=True)
class SlopeBracket:
    lower: float
    upper: float
    lower_is_trivial: bool = False


def slope_bracket(series: StatsSeries, epsilon: float, M: float) -> SlopeBracket:
    """[(1-eps) e^-/(alpha^+ + c0), (1+eps)(f^+ + eps)/M] for count / ln rho."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if M <= 0:
        raise ValueError("M must be positive")
    upper = (1 + epsilon) * (series.f_plus + epsilon) / M
    if not math.isfinite(series.alpha_plus):
        return SlopeBracket(0.0, upper, True)
    lower = (1 - epsilon) * series.e_minus / (series.alpha_plus + float(C0))
    return SlopeBracket(lower, upper)


# ---------------------------------------------------------------------------
# Gauss measure


@dataclass(frozen=True)
class GaussMeasure:
    """mu(E) = c * int_E dx/(4 - x^2) on [-1/2, 1/2], c = 2/ln(5/3)."""

    @property
    def c(self) -> CertifiedReal:
        return 2 / certified(Fraction(5, 3)).log()

    @staticmethod
    def _antiderivative_exp(x: Fraction) -> Fraction:
        # exp(4 F(x)) with F(x) = (1/4) ln((2 + x)/(2 - x))
        return (2 + x) / (2 - x)

    def interval(self, lo, hi) -> CertifiedReal:
        lo, hi = as_fraction(lo), as_fraction(hi)
        if not Fraction(-1, 2) <= lo <= hi <= Fraction(1, 2):
            raise ValueError("interval must lie in [-1/2, 1/2]")
        ratio = self._antiderivative_exp(hi) / self._antiderivative_exp(lo)
        return self.c * certified(ratio).log() / 4

    def union(self, pieces) -> CertifiedReal:
        total = certified(0)
        for lo, hi in pieces:
            total = total + self.interval(lo, hi)
        return total

    def density(self, x: float) -> float:
        return float(self.c) / (4 - x * x)


@dataclass(frozen=True)
class GenericConstants:
    alpha: float
    alpha_bracket: tuple[float, float]
    terms: int
    e: Optional[CertifiedReal]
    f: Optional[CertifiedReal]
    k: Optional[int]
    l: Optional[int]


def _digit_mass(k):
    # mu of the set where |digit| = k, both signs, as a vectorised float
    c = 2 / math.log(5 / 3)
    hi = np.minimum(0.5, 1 / (k - 0.5))
    lo = 1 / (k + 0.5)
    F = lambda x: 0.25 * np.log((2 + x) / (2 - x))
    return 2 * c * (F(hi) - F(lo))


def gauss_generic(delta=None, tol: float = 1e-6) -> GenericConstants:
    """Generic alpha = sum_k ln k * mu(|digit| = k), plus mu([-1/k, 1/k]) and
    mu([-1/l, 1/l]) for the threshold integers of the given delta.

    The series is summed until its terms drop below ``tol``; the remainder is
    bracketed by the integral test (terms decrease for k >= 3).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    def small(k):
        return math.log(k) * _digit_mass(np.float64(k)) <= tol

    # smallest A >= 3 with term(A) <= tol; the terms decrease from k = 3 on,
    # so the remainder bracket below has width at most term(A)
    hi = 3
    while not small(hi):
        hi *= 2
    lo = hi // 2
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if small(mid):
            hi = mid
        else:
            lo = mid
    A = max(hi, 3)
    ks = np.arange(2, A + 1, dtype=np.float64)
    partial = float(np.sum(np.log(ks) * _digit_mass(ks)))
    c = mpmath.mpf(2) / mpmath.log(mpmath.mpf(5) / 3)

    def term(x):
        G = lambda y: mpmath.log((2 + y) / (2 - y)) / 4
        return 2 * c * mpmath.log(x) * (G(1 / (x - 0.5)) - G(1 / (x + 0.5)))

    tail_hi = float(mpmath.quad(term, [A, mpmath.inf]))
    tail_lo = float(mpmath.quad(term, [A + 1, mpmath.inf]))
    lo, hi = partial + tail_lo, partial + tail_hi
    e = f = None
    k = l = None
    if delta is not None:
        d = as_fraction(delta)
        k = math.floor(2 / d + 1)
        l = math.floor(2 / d - Fraction(3, 2))
        if l < 2:
            raise ValueError(f"delta = {d} too large: l = {l} < 2")
        mu = GaussMeasure()
        e = mu.interval(Fraction(-1, k), Fraction(1, k))
        f = mu.interval(Fraction(-1, l), Fraction(1, l))
    return GenericConstants((lo + hi) / 2, (lo, hi), A - 1, e, f, k, l)


def birkhoff_average(steps: int = 100_000, seed: int = 0) -> float:
    """Average of ln|a_j| along the exact Gauss-map orbit of a random surd.

    The seed is sqrt(D) reduced into [-1/2, 1/2] for a random D of about 70
    bits; its orbit is eventually periodic, so a repeated state aborts the run.
    """
    rng = random.Random(seed)
    while True:
        D = rng.randrange(10**20, 10**21)
        if math.isqrt(D) ** 2 != D:
            break
    x = QuadraticSurd(0, 1, D, 1)
    x = x - x.nearest()
    seen = set()
    total = 0.0
    for _ in range(steps):
        a, x = gauss_step(x)
        total += math.log(abs(a))
        key = x.key()
        if key in seen:
            raise RuntimeError("orbit became periodic; pick another seed")
        seen.add(key)
    return total / steps


def region_area(delta, kappa, tau) -> float:
    """Area of {0 < Q < delta, kappa < L- <= tau}: delta ln(tau/kappa)."""
    delta, kappa, tau = float(delta), float(kappa), float(tau)
    if kappa <= 0 or delta <= 0:
        raise ValueError("need delta, kappa > 0")
    if tau < kappa:
        raise ValueError("need tau >= kappa")
    return delta * math.log(tau / kappa)


# ---------------------------------------------------------------------------
# verification of the reduced-form bounds


@dataclass
class VerificationRow:
    rho: Fraction
    log_rho: float
    count: int
    n_lower: Optional[int]  # largest n admissible for the lower bound
    lower_bound: Optional[int]
    n_upper: Optional[int]  # smallest traced n admissible for the upper bound
    upper_bound: Optional[int]
    pass_lower: bool
    pass_upper: bool
    pairs_checked: int


@dataclass
class VerificationReport:
    form: str
    delta: Fraction
    kappa: Fraction
    t_prime: CertifiedReal
    theta: CertifiedReal
    nu: int
    n_traced: int
    rows: list = field(default_factory=list)
    slope: Optional[float] = None
    series: Optional[StatsSeries] = None

    @property
    def passed(self) -> bool:
        return all(r.pass_lower and r.pass_upper for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "form": self.form,
            "delta": str(self.delta),
            "kappa": str(self.kappa),
            "theta_lower": float(self.theta.lower),
            "theta_upper": float(self.theta.upper),
            "t_prime_lower": float(self.t_prime.lower),
            "t_prime_upper": float(self.t_prime.upper),
            "nu": self.nu,
            "n_traced": self.n_traced,
            "slope": self.slope,
            "passed": self.passed,
            "rows": [
                {
                    "rho": str(r.rho),
                    "log_rho": r.log_rho,
                    "count": r.count,
                    "n_lower": r.n_lower,
                    "lower_bound": r.lower_bound,
                    "n_upper": r.n_upper,
                    "upper_bound": r.upper_bound,
                    "pass_lower": r.pass_lower,
                    "pass_upper": r.pass_upper,
                    "pairs_checked": r.pairs_checked,
                }
                for r in self.rows
            ],
        }


def _signed_position(form: BinaryForm, x0, y0_sq) -> CertifiedReal:
    """Signed distance from the crossing point z0 to g(i) along u -> w."""
    gx, gy = form.g.act_i()
    d = hyp_distance((x0, certified(y0_sq).sqrt()), (gx, gy))
    s = compare(gx, x0) * compare(form.w, form.u)
    return d if s >= 0 else -d


def _le(a: CertifiedReal, b: CertifiedReal) -> Optional[bool]:
    s = (b - a).sign()
    if s is None:
        return None
    return s >= 0


def verify_reduced_bounds(form: BinaryForm, delta, kappa, rhos: Sequence,
                          max_segments: int = 2000, workers: int = 1) -> VerificationReport:
    """Check both counting bounds for an H-reduced form on a grid of rho.

    theta = |t'| where t' is the signed position of g(i) on the geodesic
    measured from its first crossing of C; nu = #{j : T_j < t'} for the
    crossing times T_j = t_0 + ... + t_(j-1).  For every rho and every traced
    n, the lower bound is tested when alpha_n + c0 n + theta <= ln rho and the
    upper bound when ln rho <= omega_n - theta.
    """
    delta, kappa = as_fraction(delta), as_fraction(kappa)
    u, w = form.u, form.w
    if not is_h_reduced(u, w):
        raise ValueError("form is not H-reduced; reduce it with forms.h_reduce first")
    if not (delta > 0 and (2 / CertifiedReal(lambda ctx: ctx.pi) - delta * delta).sign() == 1):
        raise ValueError("need 0 < delta < sqrt(2/pi)")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    rhos = sorted(as_fraction(r) for r in rhos)
    log_max = certified(rhos[-1]).log()

    segs = trace_segments(u, w, 1)
    t_prime = _signed_position(form, segs[0].x, segs[0].y_sq)
    theta = abs(t_prime)
    # trace until the upper-bound condition can be met at the largest rho
    n = 64
    while True:
        segs = trace_segments(u, w, n)
        digits = [s.digit for s in segs]
        om = _log_sum(digits) - _chi_sum(digits)
        if _le(log_max + theta, om) or n >= max_segments:
            break
        n = min(2 * n, max_segments)
    series = digit_statistics(digits, delta)
    crossing = certified(0)
    nu = 0
    for s in segs:
        if _le(t_prime, crossing) is False or _le(t_prime, crossing) is None:
            nu += 1
        else:
            break
        crossing = crossing + s.t

    lower_lhs = []
    upper_rhs = []
    for m in range(len(digits) + 1):
        a_m = _log_sum(digits[:m])
        lower_lhs.append(a_m + m * C0 + theta)
        upper_rhs.append(a_m - _chi_sum(digits[:m]) - theta)

    rows = []
    for rho in rhos:
        log_rho = certified(rho).log()
        count = count_region(CountQuery(form, delta, kappa, rho, RegionKind.THM_REDUCED,
                                        workers=workers)).count
        ok_lo = ok_hi = True
        n_lo = n_hi = None
        pairs = 0
        for m in range(len(digits) + 1):
            if _le(lower_lhs[m], log_rho):
                pairs += 1
                n_lo = m
                ok_lo &= count >= int(series.e[m]) - nu
            if _le(log_rho, upper_rhs[m]):
                pairs += 1
                if n_hi is None:
                    n_hi = m
                ok_hi &= count <= int(series.f[m]) + nu
        rows.append(VerificationRow(
            rho, float(log_rho), count,
            n_lo, None if n_lo is None else int(series.e[n_lo]) - nu,
            n_hi, None if n_hi is None else int(series.f[n_hi]) + nu,
            ok_lo, ok_hi, pairs,
        ))
    slope = None
    if len(rows) >= 2:
        xs = np.array([r.log_rho for r in rows])
        ys = np.array([r.count for r in rows], dtype=float)
        slope = float(np.polyfit(xs, ys, 1)[0])
    return VerificationReport(form.literal(), delta, kappa, t_prime, theta, nu,
                              len(digits), rows, slope, series)
