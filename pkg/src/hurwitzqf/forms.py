"""Binary quadratic forms Q_g(v) = Q0(g^-1 v) with Q0(x, y) = xy.

Coefficients follow Q(x, y) = (a*y + b*x)(c*y + d*x) with ad - bc = 1, which
corresponds to g = ((a, -c), (-b, d)).  Writing (X, Y) = g^-1 (x, y) gives
X = L-(x, y) = c*y + d*x and Y = L+(x, y) = a*y + b*x; the flow
g a_t g^-1 scales X by e^(t/2) and Y by e^(-t/2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .numerics import (
    INF,
    CertifiedReal,
    QuadraticSurd,
    as_surd,
    certified,
    compare,
    format_literal,
    parse_literal,
    surd_mobius,
    surd_nearest_integer,
)

__all__ = [
    "RealMatrix",
    "UnimodularMatrix",
    "BinaryForm",
    "ReductionError",
    "ReductionResult",
    "LAMBDA",
    "form_from_coefficients",
    "form_from_matrix",
    "form_from_endpoints",
    "evaluate_form",
    "is_h_reduced",
    "h_reduce",
    "flow_image",
    "parse_form",
]

# (3 - sqrt 5)/2
LAMBDA = QuadraticSurd(3, -1, 5, 2)


@dataclass(frozen=True)
class UnimodularMatrix:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"determinant of {self.rows} is not 1")

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)

    @classmethod
    def step(cls, digit: int) -> "UnimodularMatrix":
        """z -> -1/(z - digit)."""
        return cls(0, -1, 1, -digit)

    @property
    def rows(self):
        return ((self.a, self.b), (self.c, self.d))

    def __matmul__(self, other):
        if isinstance(other, UnimodularMatrix):
            return UnimodularMatrix(
                self.a * other.a + self.b * other.c,
                self.a * other.b + self.b * other.d,
                self.c * other.a + self.d * other.c,
                self.c * other.b + self.d * other.d,
            )
        if isinstance(other, RealMatrix):
            return RealMatrix(
                other.a * self.a + other.c * self.b,
                other.b * self.a + other.d * self.b,
                other.a * self.c + other.c * self.d,
                other.b * self.c + other.d * self.d,
            )
        return NotImplemented

    def inverse(self) -> "UnimodularMatrix":
        return UnimodularMatrix(self.d, -self.b, -self.c, self.a)

    def apply(self, v: Sequence[int]) -> tuple[int, int]:
        x, y = v
        return (self.a * x + self.b * y, self.c * x + self.d * y)

    def act(self, z):
        return surd_mobius(z, self.rows)

    def operator_norm(self) -> float:
        # largest singular value
        s = self.a**2 + self.b**2 + self.c**2 + self.d**2
        return ((s + (s * s - 4) ** 0.5) / 2) ** 0.5


@dataclass(frozen=True)
class RealMatrix:
    """Determinant-one matrix ((a, b), (c, d)) with surd entries."""

    a: QuadraticSurd
    b: QuadraticSurd
    c: QuadraticSurd
    d: QuadraticSurd

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, as_surd(getattr(self, name)))
        det = self.a * self.d - self.b * self.c
        if det != 1:
            raise ValueError(f"determinant {det!r} != 1")

    @property
    def rows(self):
        return ((self.a, self.b), (self.c, self.d))

    def inverse(self) -> "RealMatrix":
        return RealMatrix(self.d, -self.b, -self.c, self.a)

    def apply(self, v):
        x, y = v
        return (self.a * x + self.b * y, self.c * x + self.d * y)

    def act(self, z):
        """Mobius action on the boundary, INF allowed."""
        if z is INF:
            if self.c.sign() == 0:
                return INF
            return self.a / self.c
        den = self.c * z + self.d
        if den.sign() == 0:
            return INF
        return (self.a * z + self.b) / den

    def act_i(self) -> tuple[QuadraticSurd, QuadraticSurd]:
        """g(i) as (real part, imaginary part); exact because det = 1."""
        n = self.c * self.c + self.d * self.d
        return ((self.a * self.c + self.b * self.d) / n, n.inverse())


@dataclass(frozen=True)
class BinaryForm:
    g: RealMatrix
    label: str = field(default="", compare=False)

    # coefficients of Q(x, y) = (a y + b x)(c y + d x)
    @property
    def a(self):
        return self.g.a

    @property
    def b(self):
        return -self.g.c

    @property
    def c(self):
        return -self.g.b

    @property
    def d(self):
        return self.g.d

    @property
    def u(self):
        """Repelling endpoint g(0)."""
        return self.g.act(QuadraticSurd(0))

    @property
    def w(self):
        """Attracting endpoint g(inf)."""
        return self.g.act(INF)

    def l_plus(self, x, y):
        return self.a * y + self.b * x

    def l_minus(self, x, y):
        return self.c * y + self.d * x

    def __call__(self, x, y):
        return self.l_plus(x, y) * self.l_minus(x, y)

    def transform(self, gamma: UnimodularMatrix) -> "BinaryForm":
        """The form Q_{gamma g}; satisfies Q'(gamma p) = Q(p)."""
        return BinaryForm(gamma @ self.g, self.label)

    def literal(self) -> str:
        return (
            f"form(a={format_literal(self.a)}, b={format_literal(self.b)}, "
            f"c={format_literal(self.c)}, d={format_literal(self.d)})"
        )

    def to_dict(self) -> dict:
        return {
            "form": self.literal(),
            "g": [[format_literal(x) for x in row] for row in self.g.rows],
            "u": format_literal(self.u),
            "w": format_literal(self.w),
        }


def form_from_matrix(g: RealMatrix, label: str = "") -> BinaryForm:
    return BinaryForm(g, label)


def form_from_coefficients(a, b, c, d, label: str = "") -> BinaryForm:
    """Q(x, y) = (a y + b x)(c y + d x); requires ad - bc = 1 and b != 0."""
    a, b, c, d = (as_surd(v) for v in (a, b, c, d))
    if a * d - b * c != 1:
        raise ValueError(f"ad - bc = {a * d - b * c!r}, expected 1")
    if b.sign() == 0:
        raise ValueError("b = 0: the form needs b != 0")
    return BinaryForm(RealMatrix(a, -c, -b, d), label)


def form_from_endpoints(u, w, label: str = "") -> BinaryForm:
    """The determinant-one form whose geodesic runs from u to w (both finite)."""
    u, w = as_surd(u), as_surd(w)
    if u == w:
        raise ValueError("endpoints coincide")
    t = (w - u).inverse()
    # g = ((w, u t), (1, t)) has det t (w - u) = 1
    return BinaryForm(RealMatrix(w, u * t, QuadraticSurd(1), t), label)


def evaluate_form(Q: BinaryForm, x: int, y: int) -> QuadraticSurd:
    return Q(x, y)


def is_h_reduced(u, w) -> bool:
    """|w| > 2 and sgn(w) u in [lambda - 1, lambda], decided exactly."""
    if w is INF:
        raise ValueError("attracting endpoint at infinity is not allowed")
    if u is INF:
        return False
    u, w = as_surd(u), as_surd(w)
    if compare(abs(w), 2) <= 0:
        return False
    su = u if w.sign() > 0 else -u
    return compare(su, LAMBDA - 1) >= 0 and compare(su, LAMBDA) <= 0


class ReductionError(RuntimeError):
    def __init__(self, msg, word=()):
        super().__init__(msg)
        self.word = tuple(word)


@dataclass(frozen=True)
class ReductionResult:
    gamma: UnimodularMatrix
    form: BinaryForm
    steps: int
    word: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "gamma": [list(r) for r in self.gamma.rows],
            "steps": self.steps,
            "word": list(self.word),
            "reduced": self.form.to_dict(),
        }


def h_reduce(Q: BinaryForm, max_steps: int = 10_000) -> ReductionResult:
    """Walk z -> -1/(z - nint(w)) until the endpoint pair is H-reduced."""
    u, w = Q.u, Q.w
    gamma = UnimodularMatrix.identity()
    word: list[int] = []
    steps = 0
    while not is_h_reduced(u, w):
        if steps >= max_steps:
            raise ReductionError(f"not H-reduced after {max_steps} steps", word)
        if w is INF:
            raise ReductionError("attracting endpoint became infinite (rational w)", word)
        a = surd_nearest_integer(w)
        step = UnimodularMatrix.step(a)
        u = step.act(u)
        w = step.act(w)
        gamma = step @ gamma
        word.append(a)
        steps += 1
    return ReductionResult(gamma, Q.transform(gamma), steps, tuple(word))


def flow_image(g: RealMatrix, t, v) -> tuple[CertifiedReal, CertifiedReal]:
    """g a_t g^-1 v with a_t = diag(e^(t/2), e^(-t/2)), as certified brackets."""
    t = certified(t)
    x, y = v
    gi = g.inverse()
    X = certified(gi.a) * x + certified(gi.b) * y
    Y = certified(gi.c) * x + certified(gi.d) * y
    e = (t / 2).exp()
    X, Y = X * e, Y / e
    return (
        certified(g.a) * X + certified(g.b) * Y,
        certified(g.c) * X + certified(g.d) * Y,
    )


def parse_form(text: str) -> BinaryForm:
    """``form(a=..., b=..., c=..., d=...)`` or ``endpoints(u=..., w=...)``."""
    text = text.strip()
    for head, keys in (("form", "abcd"), ("endpoints", "uw")):
        if text.startswith(head + "(") and text.endswith(")"):
            body = text[len(head) + 1 : -1]
            parts = _split_args(body)
            vals = {}
            for part in parts:
                k, _, v = part.partition("=")
                vals[k.strip()] = parse_literal(v)
            if set(vals) != set(keys):
                raise ValueError(f"{head}(...) needs keys {', '.join(keys)}")
            if head == "form":
                return form_from_coefficients(*(vals[k] for k in keys), label=text)
            return form_from_endpoints(vals["u"], vals["w"], label=text)
    raise ValueError(f"unparseable form literal {text!r}")


def _split_args(body: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur))
    return parts


def form_json(Q: BinaryForm, reduction: ReductionResult | None = None) -> str:
    out = Q.to_dict()
    if reduction is not None:
        out["reduction"] = reduction.to_dict()
    return json.dumps(out, sort_keys=True)
