"""How many lines does a shallow dent in the circle need before the line test sees it?

For a V-shaped notch of depth h and mouth width w the lines crossing both
notch sides have measure 2 sqrt((w/2)^2 + h^2) - w (the two sides minus
the mouth).  Dividing by the sampled measure gives the per-line probability
of a 4-crossing, which is compared against the artifact rate and checked by
simulation.

    python scripts/dent_oracle.py [--lines 10000000]
"""

import argparse
import math

import numpy as np

from convexity import crofton, geometry


def dented_circle(resolution=1024, depth=1e-3, width=1e-3):
    t = 2 * np.pi * np.arange(1, resolution) / resolution
    half = 0.5 * width
    pts = [(math.cos(-half), math.sin(-half)), (1.0 - depth, 0.0), (math.cos(half), math.sin(half))]
    pts += list(zip(np.cos(t), np.sin(t)))
    return geometry.make_polygon(pts)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lines", type=int, default=10_000_000)
    ap.add_argument("--depth", type=float, default=1e-3)
    ap.add_argument("--width", type=float, default=1e-3)
    args = ap.parse_args()
    shape = dented_circle(depth=args.depth, width=args.width)
    sampler = crofton.LineSampler.for_target(shape)
    measure = 2 * math.hypot(0.5 * args.width, args.depth) - args.width
    rate = measure / sampler.sampled_measure
    print(f"predicted 4-crossing rate {rate:.3e} (artifact rate {crofton.ARTIFACT_RATE:.0e})")
    for lines in (10_000, 100_000, 1_000_000, args.lines):
        v = crofton.convexity_test(sampler, shape, lines)
        print(f"{lines:>10d} lines: {v.multi_hit_lines} multi-hit (expected {rate * lines:.1f}), "
              f"verdict {v.verdict}, p={v.p_value:.2e}")


if __name__ == "__main__":
    main()
