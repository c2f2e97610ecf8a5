import math
import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hurwitzqf.forms import form_from_endpoints, h_reduce
from hurwitzqf.numerics import QuadraticSurd

settings.register_profile(
    "repo",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("repo")

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record a criterion outcome; the summary is printed after the run."""

    def record(number: int, ok: bool, detail: str = ""):
        ACCEPTANCE[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def nonsquare(n: int) -> bool:
    return math.isqrt(n) ** 2 != n


def random_surd(rng: random.Random, size: int = 60, dmax: int = 400) -> QuadraticSurd:
    while True:
        d = rng.randint(2, dmax)
        if nonsquare(d):
            break
    q = rng.choice([-1, 1]) * rng.randint(1, size)
    return QuadraticSurd(rng.randint(-size, size), q, d, rng.randint(1, size))


def random_reduced_pair(rng: random.Random):
    """Endpoints of a random H-reduced geodesic.

    Half of the time u is the Galois conjugate of w (a closed geodesic on the
    modular surface), otherwise a random rational.
    """
    w0 = random_surd(rng)
    if rng.random() < 0.5:
        u0 = w0.conjugate()
    else:
        u0 = QuadraticSurd.from_rational(Fraction(rng.randint(-500, 500), rng.randint(1, 50)))
    red = h_reduce(form_from_endpoints(u0, w0)).form
    return red.u, red.w


@st.composite
def surds(draw, size=40, dmax=200):
    d = draw(st.integers(2, dmax).filter(nonsquare))
    q = draw(st.integers(-size, size).filter(bool))
    return QuadraticSurd(draw(st.integers(-size, size)), q, d, draw(st.integers(1, size)))


@st.composite
def unimodular(draw, bound=30):
    from hurwitzqf.forms import UnimodularMatrix

    while True:
        a = draw(st.integers(-bound, bound))
        c = draw(st.integers(-bound, bound))
        if math.gcd(a, c) == 1:
            break
    # a x + c y = 1 gives d = x, b = -y; then shift by a multiple of the first column
    x, y = _bezout(a, c)
    k = draw(st.integers(-5, 5))
    return UnimodularMatrix(a, -y + k * a, c, x + k * c)


def _bezout(a, b):
    """(x, y) with a x + b y = 1 for coprime a, b."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return (x0, y0) if a == 1 else (-x0, -y0)
