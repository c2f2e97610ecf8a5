"""Wedge counts #F(rho) next to component counts n(rho/||g e1||, sqrt eps)."""

import argparse
from dataclasses import dataclass
from fractions import Fraction

from hurwitzqf.counting import compare_wedge_components
from hurwitzqf.forms import form_from_endpoints, h_reduce
from hurwitzqf.hurwitz import periodic_value
from hurwitzqf.numerics import QuadraticSurd


@dataclass
class Config:
    eps: Fraction = Fraction(1, 2)
    max_exp: int = 5


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--eps", type=Fraction, default=Config.eps)
    p.add_argument("--max-exp", type=int, default=Config.max_exp)
    cfg = Config(**vars(p.parse_args(argv)))
    rhos = [10**k for k in range(1, cfg.max_exp + 1)]
    w = periodic_value([5, -3])
    cases = {
        "[5,-3]": form_from_endpoints(w.conjugate(), w),
        "u=2/7": h_reduce(form_from_endpoints(Fraction(2, 7), QuadraticSurd(5, 3, 11, 4))).form,
    }
    for name, Q in cases.items():
        rows, threshold = compare_wedge_components(Q, cfg.eps, rhos)
        print(f"{name}: empirical threshold {threshold}")
        for r in rows:
            print(f"  rho={r.rho!s:>7}  wedge={r.wedge_count:>4}  components={r.components:>4}  diff={r.diff:+d}")


if __name__ == "__main__":
    main()
