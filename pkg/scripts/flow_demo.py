"""Convexify the star and the kidney, writing traces and before/after SVGs.

    python scripts/flow_demo.py [--out runs/flow]
"""

import argparse
from pathlib import Path

from convexity import energy, flow, formats, geometry, svg


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/flow")
    ap.add_argument("--steps", type=int, default=2000)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for kind, n in (("star", 100), ("kidney", 128)):
        shape = geometry.make_shape(kind, n)
        trace = flow.convexify(shape, flow.FlowParams(max_iterations=args.steps))
        final = trace.final_shape
        trace.write_csv(out / f"{kind}_trace.csv")
        formats.save_shape(final, out / f"{kind}_final.json")
        for tag, s in (("initial", shape), ("final", final)):
            vals = energy.pointwise_boundary_all(geometry.discretize(s))
            formats.atomic_write(out / f"{kind}_{tag}.svg", svg.render_svg(s, vals))
        d = trace.defects
        print(f"{kind}: {trace.stop_reason} after {len(d) - 1} iterations, "
              f"defect {d[0]:.4f} -> {d[-1]:.2e}, halvings {trace.halvings}, "
              f"convex {geometry.is_convex_oracle(final)}")


if __name__ == "__main__":
    main()
