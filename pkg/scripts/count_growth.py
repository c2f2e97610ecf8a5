"""Growth of small-value counts with rho for a few forms.

For each form the exact count of the chosen region kind is printed over a
geometric rho grid together with the least-squares slope against ln rho.
"""

import argparse
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from hurwitzqf.counting import CountQuery, RegionKind, count_region
from hurwitzqf.forms import form_from_endpoints, h_reduce
from hurwitzqf.hurwitz import periodic_value
from hurwitzqf.numerics import QuadraticSurd

BLOCKS = {"golden [3]": [3], "[5,-3]": [5, -3], "[12,5,-6]": [12, 5, -6]}


@dataclass
class Config:
    delta: Fraction = Fraction(1, 2)
    kappa: Fraction = Fraction(1, 4)
    kind: str = "main"
    rhos: list = field(default_factory=lambda: [10**k for k in range(1, 7)])


def forms():
    for name, block in BLOCKS.items():
        w = periodic_value(block)
        yield name, h_reduce(form_from_endpoints(w.conjugate(), w)).form
    # a rational partner: the geodesic is not closed, but w = sqrt 7 still has a periodic tail
    yield "u=1/3, w=sqrt 7", h_reduce(form_from_endpoints(Fraction(1, 3), QuadraticSurd(0, 1, 7, 1))).form


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--delta", type=Fraction, default=Config.delta)
    p.add_argument("--kappa", type=Fraction, default=Config.kappa)
    p.add_argument("--kind", choices=[k.value for k in RegionKind], default=Config.kind)
    p.add_argument("--max-exp", type=int, default=6)
    a = p.parse_args(argv)
    cfg = Config(a.delta, a.kappa, a.kind, [10**k for k in range(1, a.max_exp + 1)])
    kappa = Fraction(0) if cfg.kind == "full" else cfg.kappa
    for name, Q in forms():
        t0 = time.perf_counter()
        counts = [count_region(CountQuery(Q, cfg.delta, kappa, r, cfg.kind)).count for r in cfg.rhos]
        slope = np.polyfit(np.log(cfg.rhos), counts, 1)[0]
        print(f"{name:>18}: {counts}  slope {slope:.3f}  ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
