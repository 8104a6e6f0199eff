"""Defect of the generator shapes under refinement.

Writes data/reference_defects.json: the defect at each resolution, the
ratio of successive differences (about 0.5 for corner-limited O(h) error,
about 0.25 for smooth curves) and a Richardson estimate of the limit.  The
acceptance suite checks the nonconvex shapes against these recorded values.

    python scripts/refinement_study.py [--max-resolution 3200]
"""

import argparse
import json
import time
from pathlib import Path

from convexity import energy, geometry

SHAPES = ("circle", "ellipse", "square", "hull", "star", "kidney")


def shape_at(kind, n):
    if kind == "hull":
        return geometry.convex_hull(geometry.make_shape("star", n), n)
    return geometry.make_shape(kind, n)


def study(kind, resolutions):
    defects = []
    for n in resolutions:
        shape = shape_at(kind, n)
        d = energy.defect(geometry.discretize(shape))
        defects.append(d)
        print(f"{kind:8s} N={n:5d} defect={d:.10f} oracle_convex={geometry.is_convex_oracle(shape)}")
    diffs = [b - a for a, b in zip(defects, defects[1:])]
    ratios = [b / a for a, b in zip(diffs, diffs[1:]) if a != 0]
    rate = ratios[-1] if ratios else 0.5
    limit = defects[-1] + diffs[-1] * rate / (1 - rate)
    return {
        "resolutions": list(resolutions),
        "defects": defects,
        "difference_ratios": ratios,
        "extrapolated": limit,
        "convex": geometry.is_convex_oracle(shape_at(kind, resolutions[-1])),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-resolution", type=int, default=3200)
    ap.add_argument("-o", "--output", default=str(Path(__file__).resolve().parents[1] / "data" / "reference_defects.json"))
    args = ap.parse_args()
    resolutions = []
    n = 100
    while n <= args.max_resolution:
        resolutions.append(n)
        n *= 2
    t0 = time.perf_counter()
    doc = {kind: study(kind, resolutions) for kind in SHAPES}
    Path(args.output).write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {args.output} in {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
