"""Generic constants of the Gauss measure against Birkhoff averages."""

import argparse
from dataclasses import dataclass
from fractions import Fraction

from hurwitzqf.stats import birkhoff_average, gauss_generic


@dataclass
class Config:
    tol: float = 1e-8
    steps: int = 100_000
    seeds: int = 3


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--tol", type=float, default=Config.tol)
    p.add_argument("--steps", type=int, default=Config.steps)
    p.add_argument("--seeds", type=int, default=Config.seeds)
    cfg = Config(**vars(p.parse_args(argv)))

    res = gauss_generic(tol=cfg.tol)
    lo, hi = res.alpha_bracket
    print(f"alpha = {res.alpha:.10f}  in [{lo:.10f}, {hi:.10f}] after {res.terms} terms")
    for seed in range(cfg.seeds):
        b = birkhoff_average(cfg.steps, seed=seed)
        print(f"  Birkhoff average, seed {seed}: {b:.5f} (relative gap {abs(b - res.alpha) / res.alpha:.3%})")

    print("\ndelta      k   mu([-1/k,1/k])   l   mu([-1/l,1/l])")
    for d in (Fraction(1, 10), Fraction(1, 4), Fraction(1, 2)):
        g = gauss_generic(d, tol=1e-4)
        print(f"{str(d):>5} {g.k:>6} {float(g.e):16.10f} {g.l:>3} {float(g.f):16.10f}")


if __name__ == "__main__":
    main()
