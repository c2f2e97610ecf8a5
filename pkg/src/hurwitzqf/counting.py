"""Lattice point counts in thin regions {0 < Q < delta, L > kappa} and the
interval/component machinery relating them to the flow g a_t g^-1.

Enumeration works in a strip |L| < h around one of the two lines L = 0.  The
strip is swept along the coordinate whose coefficient in L is smaller, so the
number of lattice points per sweep value is O(h / coefficient) and a radius of
10^6 takes a few seconds.  Floating point only discards points that are
outside the region by a wide margin; every point that is counted has passed an
exact test in the quadratic field of the form.
"""

from __future__ import annotations

import enum
import functools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from .forms import BinaryForm, RealMatrix
from .numerics import (
    CertifiedReal,
    QuadraticSurd,
    as_fraction,
    as_surd,
    certified,
    compare,
)

__all__ = [
    "RegionKind",
    "CountQuery",
    "CountResult",
    "CountBudgetExceeded",
    "TimeInterval",
    "Component",
    "ComponentResult",
    "DichotomyViolation",
    "primitive_points",
    "strip_points",
    "count_region",
    "count_region_bruteforce",
    "interval_for_point",
    "component_count",
    "grid_component_count",
    "separation_gap",
    "count_wedge",
    "compare_wedge_components",
]

CHUNK = 1 << 18


class RegionKind(enum.Enum):
    THM_MAIN = "main"  # 0 < Q < delta, L- > kappa
    THM_REDUCED = "reduced"  # 0 < |Q| < delta^2/2, L- > kappa
    FULL_H = "full"  # 0 < Q < delta
    G_PRIME = "gprime"  # 0 < Q < delta, L+ > kappa

    @classmethod
    def parse(cls, text: str) -> "RegionKind":
        for k in cls:
            if text.lower() in (k.value, k.name.lower()):
                return k
        raise ValueError(f"unknown region kind {text!r}")


@dataclass(frozen=True)
class CountQuery:
    form: BinaryForm
    delta: Fraction
    kappa: Fraction
    rho: Fraction
    kind: RegionKind = RegionKind.THM_MAIN
    keep_witnesses: bool = False
    workers: int = 1
    # maximum number of strip candidates examined; None means unlimited
    budget: Optional[int] = None

    def __post_init__(self):
        for name in ("delta", "kappa", "rho"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", RegionKind.parse(self.kind))
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.kappa == 0 and self.kind is not RegionKind.FULL_H:
            raise ValueError(f"kind {self.kind.value} needs kappa > 0")


@dataclass
class CountResult:
    query: CountQuery
    count: int
    witnesses: Optional[list] = None
    boundary_flags: int = 0
    wall_time: float = 0.0
    candidates: int = 0
    # FullH only: (#G, #G') with kappa = sqrt(delta) and the split check
    split: Optional[tuple[int, int]] = None
    partial: bool = False

    @property
    def split_ok(self) -> Optional[bool]:
        if self.split is None:
            return None
        return abs(self.count - 2 * sum(self.split)) <= 2


class CountBudgetExceeded(RuntimeError):
    def __init__(self, partial: CountResult):
        super().__init__(
            f"candidate budget {partial.query.budget} exhausted after "
            f"{partial.candidates} candidates (partial count {partial.count})"
        )
        self.partial = partial


# ---------------------------------------------------------------------------
# enumeration


def primitive_points(rho) -> Iterator[tuple[int, int]]:
    """Primitive pairs with x^2 + y^2 <= rho^2, ordered by x then y."""
    rho = as_fraction(rho)
    if rho < 1:
        raise ValueError("rho must be at least 1")
    n2 = math.floor(rho * rho)
    R = math.isqrt(n2)
    for x in range(-R, R + 1):
        m = math.isqrt(n2 - x * x)
        ys = np.arange(-m, m + 1, dtype=np.int64)
        ys = ys[np.gcd(ys, x) == 1]
        for y in ys.tolist():
            yield (x, y)


def _slack(coeffs: Sequence[float], rho: float) -> float:
    return 1e-9 * (1.0 + sum(abs(c) for c in coeffs) * rho)


def strip_points(alpha: float, beta: float, h: float, rho: float, n2: int,
                 axis: Optional[int] = None, chunk: int = CHUNK):
    """Integer points with |alpha x + beta y| < h (loosely) and x^2+y^2 <= n2.

    Yields (x, y) int64 array pairs chunk by chunk in increasing sweep order.
    ``axis`` forces the sweep variable (0 for x, 1 for y); by default the
    variable with the smaller coefficient is swept.
    """
    if axis is None:
        axis = 0 if abs(beta) >= abs(alpha) else 1
    if axis == 1:
        for y, x in strip_points(beta, alpha, h, rho, n2, axis=0, chunk=chunk):
            yield x, y
        return
    if beta == 0:
        raise ValueError("strip is parallel to the sweep direction")
    hh = h + _slack((alpha, beta), rho)
    R = math.isqrt(n2)
    k = int(math.ceil(2 * hh / abs(beta))) + 2
    for lo in range(-R, R + 1, chunk):
        xs = np.arange(lo, min(lo + chunk, R + 1), dtype=np.int64)
        c = -alpha * xs.astype(np.float64) / beta
        w = hh / abs(beta)
        ylo = np.ceil(c - w).astype(np.int64)
        yhi = c + w
        xs_all, ys_all = [], []
        for off in range(k):
            ys = ylo + off
            keep = ys <= yhi
            if not keep.any():
                break
            xs_all.append(xs[keep])
            ys_all.append(ys[keep])
        if not xs_all:
            continue
        X = np.concatenate(xs_all)
        Y = np.concatenate(ys_all)
        inside = X * X + Y * Y <= n2
        X, Y = X[inside], Y[inside]
        order = np.lexsort((Y, X))
        yield X[order], Y[order]


def _coeffs(Q: BinaryForm):
    # L+ = a y + b x, L- = c y + d x
    return float(Q.b), float(Q.a), float(Q.d), float(Q.c)


class _Region:
    """Exact membership test plus a loose float prefilter for one region."""

    def __init__(self, Q: BinaryForm, kind: RegionKind, delta: Fraction, kappa: Fraction):
        self.Q, self.kind = Q, kind
        self.kappa = kappa
        if kind is RegionKind.THM_REDUCED:
            self.upper = delta * delta / 2
        else:
            self.upper = delta

    def strips(self, Q: BinaryForm):
        bp, ap, dm, cm = _coeffs(Q)
        k = self.kind
        if k is RegionKind.THM_MAIN:
            return [((bp, ap), float(self.upper / self.kappa))]
        if k is RegionKind.THM_REDUCED:
            return [((bp, ap), float(self.upper / self.kappa))]
        if k is RegionKind.G_PRIME:
            return [((dm, cm), float(self.upper / self.kappa))]
        h = math.sqrt(float(self.upper))
        return [((bp, ap), h), ((dm, cm), h)]

    def prefilter(self, X: np.ndarray, Y: np.ndarray, rho: float) -> np.ndarray:
        bp, ap, dm, cm = _coeffs(self.Q)
        xf, yf = X.astype(np.float64), Y.astype(np.float64)
        lp = bp * xf + ap * yf
        lm = dm * xf + cm * yf
        e = _slack((bp, ap, dm, cm), rho)
        q = lp * lm
        eq = (np.abs(lp) + np.abs(lm) + e) * e
        up = float(self.upper)
        kap = float(self.kappa)
        if self.kind is RegionKind.THM_REDUCED:
            ok = (np.abs(q) < up + eq) & (np.abs(q) + eq > 0)
        else:
            ok = (q + eq > 0) & (q < up + eq)
        if self.kind in (RegionKind.THM_MAIN, RegionKind.THM_REDUCED):
            ok &= lm + e > kap
        elif self.kind is RegionKind.G_PRIME:
            ok &= lp + e > kap
        return ok

    def exact(self, x: int, y: int) -> Optional[QuadraticSurd]:
        Q = self.Q
        lp, lm = Q.l_plus(x, y), Q.l_minus(x, y)
        q = lp * lm
        if self.kind is RegionKind.THM_REDUCED:
            s = q.sign()
            if s == 0 or compare(abs(q), self.upper) >= 0:
                return None
        else:
            if q.sign() <= 0 or compare(q, self.upper) >= 0:
                return None
        if self.kind in (RegionKind.THM_MAIN, RegionKind.THM_REDUCED):
            if compare(lm, self.kappa) <= 0:
                return None
        elif self.kind is RegionKind.G_PRIME:
            if compare(lp, self.kappa) <= 0:
                return None
        return q


def _scan_chunk(region: _Region, X, Y, rho: float):
    prim = np.gcd(X, Y) == 1
    X, Y = X[prim], Y[prim]
    keep = region.prefilter(X, Y, rho)
    hits = []
    for x, y in zip(X[keep].tolist(), Y[keep].tolist()):
        q = region.exact(x, y)
        if q is not None:
            hits.append((x, y, q))
    return hits


def _count(q: CountQuery, kind: RegionKind, kappa: Fraction) -> CountResult:
    t0 = time.perf_counter()
    region = _Region(q.form, kind, q.delta, kappa)
    n2 = math.floor(q.rho * q.rho)
    rho = float(q.rho)
    chunks = []
    for (alpha, beta), h in region.strips(q.form):
        chunks.append(strip_points(alpha, beta, h, rho, n2))
    found: dict[tuple[int, int], QuadraticSurd] = {}
    seen_candidates = 0

    def consume(hits):
        for x, y, val in hits:
            found[(x, y)] = val

    def partial_result():
        return _result(q, found, seen_candidates, t0, partial=True)

    workers = max(1, int(q.workers))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for gen in chunks:
            pending = []
            for X, Y in gen:
                if q.budget is not None and seen_candidates + len(X) > q.budget:
                    room = q.budget - seen_candidates
                    pending.append(pool.submit(_scan_chunk, region, X[:room], Y[:room], rho))
                    seen_candidates += room
                    for fut in pending:
                        consume(fut.result())
                    raise CountBudgetExceeded(partial_result())
                seen_candidates += len(X)
                pending.append(pool.submit(_scan_chunk, region, X, Y, rho))
                if len(pending) >= 2 * workers:
                    consume(pending.pop(0).result())
            for fut in pending:
                consume(fut.result())
    return _result(q, found, seen_candidates, t0)


def _result(q, found, candidates, t0, partial=False) -> CountResult:
    wit = None
    if q.keep_witnesses:
        wit = [(x, y, found[(x, y)]) for (x, y) in sorted(found)]
    return CountResult(
        q,
        len(found),
        wit,
        boundary_flags=0,
        wall_time=time.perf_counter() - t0,
        candidates=candidates,
        partial=partial,
    )


def count_region(q: CountQuery) -> CountResult:
    """Exact count of primitive points in the query region with ||p|| <= rho.

    Membership is decided exactly, so no boundary flags are ever raised for
    forms with quadratic-surd coefficients.  For the FullH kind the counts of
    the two one-sided regions with kappa = sqrt(delta) are attached as
    ``split``; sqrt(delta) enters exactly through the comparison
    L > sqrt(delta) <=> L > 0 and L^2 > delta.
    """
    if q.kind is not RegionKind.FULL_H:
        return _count(q, q.kind, q.kappa)
    res = _count(q, RegionKind.FULL_H, q.kappa)
    g = _count_sqrt_cut(q, RegionKind.THM_MAIN)
    gp = _count_sqrt_cut(q, RegionKind.G_PRIME)
    res.split = (g, gp)
    return res


def _count_sqrt_cut(q: CountQuery, kind: RegionKind) -> int:
    # kappa = sqrt(delta) is generally irrational; count with a rational kappa
    # slightly below it and drop the few points with L^2 <= delta exactly.
    lo = _rational_below_sqrt(q.delta)
    sub = CountQuery(q.form, q.delta, lo, q.rho, kind, keep_witnesses=True,
                     workers=q.workers)
    res = _count(sub, kind, lo)
    n = 0
    for x, y, _ in res.witnesses:
        L = q.form.l_minus(x, y) if kind is RegionKind.THM_MAIN else q.form.l_plus(x, y)
        if compare(L * L, q.delta) > 0:
            n += 1
    return n


def _rational_below_sqrt(d: Fraction) -> Fraction:
    s = Fraction(math.isqrt(d.numerator * 10**24 // d.denominator), 10**12)
    while s * s > d:
        s -= Fraction(1, 10**12)
    return max(s - Fraction(1, 10**9), Fraction(1, 10**12))


def count_region_bruteforce(q: CountQuery, kind: Optional[RegionKind] = None) -> int:
    """Slow oracle: float prefilter over the whole disk, exact test after."""
    kind = kind or q.kind
    region = _Region(q.form, kind, q.delta, q.kappa)
    n2 = math.floor(q.rho * q.rho)
    R = math.isqrt(n2)
    rho = float(q.rho)
    total = 0
    ys = np.arange(-R, R + 1, dtype=np.int64)
    for x in range(-R, R + 1):
        Y = ys[x * x + ys * ys <= n2]
        X = np.full_like(Y, x)
        total += len(_scan_chunk(region, X, Y, rho))
    return total


# ---------------------------------------------------------------------------
# time intervals and components


@dataclass(frozen=True)
class TimeInterval:
    """Times t >= 0 with a_{-t} g^-1 p in W(sigma), stored as e^t values.

    The interval is [ln exp_start, ln exp_end), closed on the right only when
    it has been clipped to a finite window.
    """

    point: tuple[int, int]
    exp_start: QuadraticSurd
    exp_end: QuadraticSurd
    closed: bool = False

    @property
    def start(self) -> CertifiedReal:
        return certified(self.exp_start).log()

    @property
    def end(self) -> CertifiedReal:
        return certified(self.exp_end).log()


def _sq(value, sq) -> Fraction | QuadraticSurd:
    if sq is not None:
        return as_surd(sq)
    if value is None:
        raise ValueError("give either the value or its square")
    return as_surd(as_fraction(value)) ** 2


def interval_for_point(g: RealMatrix, p, sigma=None, *, sigma_sq=None) -> Optional[TimeInterval]:
    """[2 ln(X/sigma), ln(X/Y)) intersected with [0, inf), or None if empty."""
    s2 = _sq(sigma, sigma_sq)
    if s2.sign() <= 0:
        raise ValueError("sigma must be positive")
    x, y = p
    gi = g.inverse()
    X = gi.a * x + gi.b * y
    Y = gi.c * x + gi.d * y
    if X.sign() <= 0 or Y.sign() <= 0 or compare(X * Y, s2) >= 0:
        return None
    start = X * X / s2
    end = X / Y
    one = QuadraticSurd(1)
    if compare(start, one) < 0:
        start = one
    if compare(start, end) >= 0:
        return None
    return TimeInterval((x, y), start, end)


@dataclass
class Component:
    exp_start: QuadraticSurd
    exp_end: QuadraticSurd
    points: list

    @property
    def start(self) -> float:
        return math.log(float(self.exp_start))

    @property
    def end(self) -> float:
        return math.log(float(self.exp_end))


@dataclass
class ComponentResult:
    count: int
    components: list
    window: float  # 2 ln(tau/sigma)
    candidates: int = 0

    def gaps(self) -> list[CertifiedReal]:
        out = []
        for c1, c2 in zip(self.components, self.components[1:]):
            out.append(certified(c2.exp_start / c1.exp_end).log())
        return out


class DichotomyViolation(AssertionError):
    """Points in one component were independent, or across components dependent."""


def _candidates(g: RealMatrix, s2, t2, axis=None):
    sigma = math.sqrt(float(s2)) * (1 + 1e-9)
    tau = math.sqrt(float(t2)) * (1 + 1e-9)
    norm = math.sqrt(sum(float(v) ** 2 for v in (g.a, g.b, g.c, g.d)))
    rho = norm * (tau + sigma) + 2
    n2 = math.floor(rho * rho)
    gi = g.inverse()
    # Y = L+ = gi.c x + gi.d y
    for X, Y in strip_points(float(gi.c), float(gi.d), sigma, rho, n2, axis=axis):
        nz = (X != 0) | (Y != 0)
        yield X[nz], Y[nz]


def component_count(g: RealMatrix, sigma=None, tau=None, *, sigma_sq=None, tau_sq=None,
                    check_dichotomy: bool = True) -> ComponentResult:
    """Number of connected components of {t in [0, 2 ln(tau/sigma)] :
    g a_t W(sigma) meets Z^2 minus 0}, by merging exact intervals."""
    s2 = _sq(sigma, sigma_sq)
    t2 = _sq(tau, tau_sq)
    if compare(s2, 1) >= 0:
        raise ValueError("sigma^2/2 must be below 1/2 (triangle area)")
    if compare(t2, s2) <= 0:
        raise ValueError("need tau > sigma > 0")
    limit = t2 / s2  # e^T with T = 2 ln(tau/sigma)
    intervals = []
    n_cand = 0
    gi = g.inverse()
    for X, Y in _candidates(g, s2, t2):
        n_cand += len(X)
        Xf = float(gi.a) * X + float(gi.b) * Y
        Yf = float(gi.c) * X + float(gi.d) * Y
        loose = (Xf > -1e-6) & (Yf > -1e-6) & (Xf * Yf < float(s2) * 1.001 + 1e-6)
        for x, y in zip(X[loose].tolist(), Y[loose].tolist()):
            iv = interval_for_point(g, (x, y), sigma_sq=s2)
            if iv is None or compare(iv.exp_start, limit) > 0:
                continue
            if compare(iv.exp_end, limit) > 0:
                iv = TimeInterval(iv.point, iv.exp_start, limit, closed=True)
            intervals.append(iv)
    intervals.sort(key=functools.cmp_to_key(lambda a, b: compare(a.exp_start, b.exp_start)))
    comps: list[Component] = []
    for iv in intervals:
        if comps and compare(iv.exp_start, comps[-1].exp_end) <= 0:
            c = comps[-1]
            if compare(iv.exp_end, c.exp_end) > 0:
                c.exp_end = iv.exp_end
            c.points.append(iv.point)
        else:
            comps.append(Component(iv.exp_start, iv.exp_end, [iv.point]))
    if check_dichotomy:
        _check_dichotomy(comps)
    window = 2 * math.log(math.sqrt(float(t2)) / math.sqrt(float(s2)))
    return ComponentResult(len(comps), comps, window, n_cand)


def _check_dichotomy(comps: list[Component]) -> None:
    reps = []
    for c in comps:
        x0, y0 = c.points[0]
        for x, y in c.points[1:]:
            if x0 * y - x * y0 != 0:
                raise DichotomyViolation(f"independent points {c.points[0]} and {(x, y)} share a component")
        reps.append((x0, y0))
    for i, (x0, y0) in enumerate(reps):
        for x1, y1 in reps[i + 1:]:
            if x0 * y1 - x1 * y0 == 0:
                raise DichotomyViolation(f"dependent points {(x0, y0)} and {(x1, y1)} in different components")


def grid_component_count(g: RealMatrix, sigma=None, tau=None, *, sigma_sq=None, tau_sq=None,
                         step: float = 1e-3) -> tuple[int, int]:
    """Oracle: scan t on a grid and count runs where some lattice point lies in
    a_t W(sigma) (in g-coordinates).  Returns (count, ambiguity) where the
    ambiguity counts runs and gaps no longer than two grid steps."""
    s2_exact = _sq(sigma, sigma_sq)
    t2_exact = _sq(tau, tau_sq)
    s2, t2 = float(s2_exact), float(t2_exact)
    sigma = math.sqrt(s2)
    T = math.log(t2 / s2)
    ts = np.arange(0.0, T + step / 2, step)
    hit = np.zeros(ts.shape, dtype=bool)
    gi = g.inverse()
    ga, gb, gc, gd = (float(v) for v in (gi.a, gi.b, gi.c, gi.d))
    down = np.exp(-ts / 2)
    up = np.exp(ts / 2)
    # sweep the other coordinate than component_count does
    bp, ap = float(gi.c), float(gi.d)
    axis = 1 if abs(ap) >= abs(bp) else 0
    for X, Y in _candidates(g, s2_exact, t2_exact, axis=axis):
        Xf = ga * X + gb * Y
        Yf = gc * X + gd * Y
        keep = (Xf > 0) & (Yf > 0) & (Xf * Yf < s2 * 1.01)
        for xv, yv in zip(Xf[keep], Yf[keep]):
            a = xv * down
            b = yv * up
            hit |= (a <= sigma) & (b > 0) & (b < a)
    runs = 0
    short = 0
    i = 0
    n = len(hit)
    while i < n:
        if hit[i]:
            j = i
            while j < n and hit[j]:
                j += 1
            runs += 1
            if j - i <= 2:
                short += 1
            if j < n:
                k = j
                while k < n and not hit[k]:
                    k += 1
                if k < n and k - j <= 2:
                    short += 1
            i = j
        else:
            i += 1
    return runs, short


def separation_gap(sigma=None, *, sigma_sq=None) -> CertifiedReal:
    """Lower bound -ln(sigma) for the distance between successive components.

    For |s| < kappa the flow maps W(sigma) into the wedge {0 < Y < e^kappa X,
    X <= e^(kappa/2) sigma}, whose area e^(2 kappa) sigma^2 / 2 stays below
    1/2 exactly when kappa < -ln(sigma).
    """
    s2 = _sq(sigma, sigma_sq)
    if compare(s2, 1) >= 0:
        raise ValueError("W(sigma) must have area below 1/2")
    return -certified(s2).log() / 2


# ---------------------------------------------------------------------------
# the wedge count F(rho)


def count_wedge(Q: BinaryForm, eps, rho) -> int:
    """#{p primitive : 0 < L+(p) < L-(p), 0 < Q(p) < eps, ||p|| <= rho}."""
    eps = as_fraction(eps)
    rho = as_fraction(rho)
    n2 = math.floor(rho * rho)
    bp, ap, dm, cm = _coeffs(Q)
    h = math.sqrt(float(eps))
    total = 0
    for X, Y in strip_points(bp, ap, h, float(rho), n2):
        prim = np.gcd(X, Y) == 1
        X, Y = X[prim], Y[prim]
        lp = bp * X + ap * Y
        lm = dm * X + cm * Y
        e = _slack((bp, ap, dm, cm), float(rho))
        keep = (lp + e > 0) & (lm + e > lp - e) & (lp * lm < float(eps) + 1e-6)
        for x, y in zip(X[keep].tolist(), Y[keep].tolist()):
            P, M = Q.l_plus(x, y), Q.l_minus(x, y)
            if P.sign() > 0 and compare(P, M) < 0 and compare(P * M, eps) < 0:
                total += 1
    return total


@dataclass
class WedgeComparisonRow:
    rho: Fraction
    wedge_count: int
    components: int

    @property
    def diff(self) -> int:
        return self.wedge_count - self.components


def compare_wedge_components(Q: BinaryForm, eps, rhos: Sequence) -> tuple[list[WedgeComparisonRow], Optional[Fraction]]:
    """Compare #F(rho) with n(rho/||g e1||, sqrt(eps)) on a grid of rho.

    Returns the rows and the smallest grid value from which on every row has
    |difference| <= 1 (None when even the last row fails).
    """
    eps = as_fraction(eps)
    g = Q.g
    ge1_sq = g.a * g.a + g.c * g.c
    rows = []
    for rho in rhos:
        rho = as_fraction(rho)
        t2 = QuadraticSurd.from_rational(rho * rho) / ge1_sq
        if compare(t2, eps) <= 0:
            n = 0
        else:
            n = component_count(g, sigma_sq=eps, tau_sq=t2).count
        rows.append(WedgeComparisonRow(rho, count_wedge(Q, eps, rho), n))
    threshold = None
    for row in reversed(rows):
        if abs(row.diff) > 1:
            break
        threshold = row.rho
    return rows, threshold
