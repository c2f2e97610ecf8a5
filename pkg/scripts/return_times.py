"""Return times along random H-reduced geodesics.

Prints, per digit size, the smallest and largest observed t_j - 2 ln|a_j|
next to the certified bounds, and scans the |a| = 2 corner where the lower
bound with chi(2) breaks.
"""

import argparse
import math
import random
import sys
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from conftest import random_reduced_pair  # noqa: E402
from hurwitzqf.forms import LAMBDA, form_from_endpoints, h_reduce, is_h_reduced  # noqa: E402
from hurwitzqf.hurwitz import periodic_value  # noqa: E402
from hurwitzqf.hyperbolic import return_time_bounds, sharp_chi_two, trace_segments  # noqa: E402
from hurwitzqf.numerics import as_surd  # noqa: E402


@dataclass
class Config:
    geodesics: int = 100
    segments: int = 50
    seed: int = 0
    corner_steps: int = 8


def excess_table(cfg: Config):
    rng = random.Random(cfg.seed)
    lo = defaultdict(lambda: math.inf)
    hi = defaultdict(lambda: -math.inf)
    for _ in range(cfg.geodesics):
        u, w = random_reduced_pair(rng)
        for s in trace_segments(u, w, cfg.segments):
            k = min(abs(s.digit), 10)
            e = float(s.t) - 2 * math.log(abs(s.digit))
            lo[k] = min(lo[k], e)
            hi[k] = max(hi[k], e)
    print("|a|   min excess   max excess   lower bound   upper bound")
    for k in sorted(lo):
        b_lo, b_hi = return_time_bounds(k)
        label = f"{k:>3}" if k < 10 else ">=10"
        print(f"{label:>4} {lo[k]:12.6f} {hi[k]:12.6f} {float(b_lo):13.6f} {float(b_hi):13.6f}")


def corner_scan(cfg: Config):
    """Reduced pairs (u, w) -> (lambda, 2+): the first return time shrinks."""
    print("\ncorner scan for |a| = 2 (u just below lambda, w = 2 + 1/m):")
    print(f"bound with chi(2): -2 chi(2) = {float(return_time_bounds(2)[0]):.6f}, "
          f"sharp bound = {-2 * float(sharp_chi_two()):.6f}")
    for k in range(1, cfg.corner_steps + 1):
        m = 10**k
        # an irrational w keeps the trace away from a terminating expansion
        w = 2 - 1 / periodic_value([-(m + 2)])
        u = as_surd(Fraction(math.floor(float(LAMBDA) * m * 10) - 1, m * 10))
        if not is_h_reduced(u, w):
            continue
        s = trace_segments(u, w, 1)[0]
        print(f"  w - 2 ~ {float(w) - 2:.1e}: t - 2 ln 2 = {float(s.t) - 2 * math.log(2):.6f}")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--geodesics", type=int, default=Config.geodesics)
    p.add_argument("--segments", type=int, default=Config.segments)
    p.add_argument("--seed", type=int, default=Config.seed)
    cfg = Config(**vars(p.parse_args(argv)))
    excess_table(cfg)
    corner_scan(cfg)


if __name__ == "__main__":
    main()
