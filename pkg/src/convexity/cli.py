"""Command-line entry point.

Numeric results go to stdout as JSON, human-readable summaries to stderr.
Exit codes: 0 success, 2 validation error, 3 numeric failure; errors are one
line on stderr, ``error: <kind>: <detail>``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import crofton, energy, flow, formats, geometry, svg
from .errors import ConvexityError, DimensionUnsupported, NumericError

THREADS_ENV = "CONVEXITY_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _dumps(doc) -> str:
    # json writes floats with repr, the shortest round-tripping form
    return json.dumps(doc, allow_nan=False)


def _emit(doc) -> None:
    sys.stdout.write(_dumps(doc) + "\n")


def _say(msg: str) -> None:
    sys.stderr.write(msg + "\n")


def _vector(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if len(vals) not in (2, 3) or not all(math.isfinite(x) for x in vals):
        raise argparse.ArgumentTypeError("expected 2 or 3 finite components")
    return vals


def _positive_int(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if k < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return k


def _seed(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}")
    if not 0 <= k < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return k


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="convexity", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=_positive_int, default=None,
                   help=f"cap on worker threads (fallback: ${THREADS_ENV}); results do not depend on it")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a polygon or sphere mesh")
    g.add_argument("--shape", required=True, choices=geometry.SHAPE_KINDS + ("sphere",))
    g.add_argument("--resolution", type=_positive_int, required=True,
                   help="vertex count (polygons) or subdivision level (sphere)")
    g.add_argument("--radius", type=float)
    g.add_argument("--a", type=float)
    g.add_argument("--b", type=float)
    g.add_argument("--side", type=float)
    g.add_argument("--outer", type=float, dest="outer_radius")
    g.add_argument("--inner", type=float, dest="inner_radius")
    g.add_argument("--points", type=int)
    g.add_argument("--base", type=float)
    g.add_argument("--lobe", type=float)
    g.add_argument("--hull", action="store_true", help="replace the polygon by its convex hull")
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--svg")

    c = sub.add_parser("constant", help="print c_n")
    c.add_argument("--dim", type=int, required=True)

    e = sub.add_parser("energy", help="interaction energy report")
    e.add_argument("-i", "--input", required=True)
    e.add_argument("--refine", type=int, default=None)
    e.add_argument("--svg", help="color edges by the pointwise boundary integral (2D)")

    pw = sub.add_parser("pointwise", help="pointwise boundary or interior integral")
    pw.add_argument("-i", "--input", required=True)
    where = pw.add_mutually_exclusive_group(required=True)
    where.add_argument("--boundary-index", type=int)
    where.add_argument("--at", type=_vector)
    pw.add_argument("--direction", type=_vector)

    for name, helptext in (("crofton", "Monte Carlo line statistics"),
                           ("crossval", "line statistics vs. quadrature energy")):
        cr = sub.add_parser(name, help=helptext)
        cr.add_argument("-i", "--input", required=True)
        cr.add_argument("--lines", type=_positive_int, default=100_000)
        cr.add_argument("--seed", type=_seed, default=0)
        cr.add_argument("--radius", type=float)

    cv = sub.add_parser("convexity", help="convexity verdict")
    cv.add_argument("-i", "--input", required=True)
    cv.add_argument("--method", choices=("defect", "crofton"), default="defect")
    cv.add_argument("--lines", type=_positive_int, default=100_000)
    cv.add_argument("--seed", type=_seed, default=0)
    cv.add_argument("--radius", type=float)
    cv.add_argument("--significance", type=float, default=crofton.SIGNIFICANCE)

    f = sub.add_parser("flow", help="defect-descent convexification of a polygon")
    f.add_argument("-i", "--input", required=True)
    f.add_argument("--steps", type=_positive_int, default=2000)
    f.add_argument("--lr", type=float, default=1e-2)
    f.add_argument("--stop-defect", type=float, default=1e-2)
    f.add_argument("--gradient-mode", choices=("analytic", "finite_difference"), default="analytic")
    f.add_argument("--fd-epsilon", type=float, default=1e-6)
    f.add_argument("--smoothing", type=float, default=0.03)
    f.add_argument("--no-redistribution", action="store_true")
    f.add_argument("-o", "--output", required=True)
    f.add_argument("--trace")
    f.add_argument("--svg")
    return p


def _set_threads(requested) -> None:
    if requested is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                requested = int(env)
            except ValueError:
                raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}")
    if requested is not None:
        import numba

        numba.set_num_threads(max(1, min(int(requested), numba.config.NUMBA_NUM_THREADS)))


def _check_paths(args) -> None:
    for attr in ("input",):
        path = getattr(args, attr, None)
        if path is not None and not Path(path).is_file():
            raise UsageError(f"input file not found: {path}")
    for attr in ("output", "trace", "svg"):
        path = getattr(args, attr, None)
        if path is not None:
            parent = Path(path).resolve().parent
            if not parent.is_dir():
                raise UsageError(f"output directory does not exist: {parent}")


def _sampler(shape, args):
    return crofton.LineSampler.for_target(shape, seed=args.seed, radius=args.radius)


def _cmd_gen(args):
    kind = args.shape
    if kind == "sphere":
        if args.svg:
            raise DimensionUnsupported("SVG output is only available for 2D polygons")
        shape = geometry.make_sphere_mesh(args.resolution, args.radius or 1.0)
    else:
        keys = ("radius", "a", "b", "side", "outer_radius", "inner_radius", "points", "base", "lobe")
        params = {k: getattr(args, k) for k in keys if getattr(args, k) is not None}
        shape = geometry.make_shape(kind, args.resolution, **params)
        if args.hull:
            shape = geometry.convex_hull(shape, args.resolution)
    pending = [(args.output, formats.shape_to_text(shape))]
    if args.svg:
        pending.append((args.svg, svg.render_svg(shape)))
    for path, text in pending:
        formats.atomic_write(path, text)
    _emit({"shape": kind, "elements": len(shape), "output": args.output})
    _say(f"wrote {kind} with {len(shape)} elements to {args.output}")


def _cmd_constant(args):
    value = energy.c_constant(args.dim)
    sys.stdout.write(format(value, ".17g") + "\n")


def _load(args):
    shape = formats.load_shape(args.input)
    if getattr(args, "refine", None) is not None:
        shape = geometry.refine(shape, args.refine)
    return shape


def _cmd_energy(args):
    shape = _load(args)
    boundary = geometry.discretize(shape)
    report = energy.total_energy(boundary)
    if args.svg:
        text = svg.render_svg(shape, energy.pointwise_boundary_all(boundary))
        formats.atomic_write(args.svg, text)
    doc = report.as_dict()
    _emit(doc)
    _say(f"E = {report.energy:.10g}, |dOmega| = {report.boundary_measure:.10g}, defect = {report.defect:.3e}")


def _cmd_pointwise(args):
    shape = _load(args)
    boundary = geometry.discretize(shape)
    cn = energy.c_constant(boundary.dimension)
    if args.boundary_index is not None:
        if args.direction is not None:
            raise UsageError("--direction only applies with --at")
        value = energy.pointwise_boundary(boundary, args.boundary_index)
        expected = cn
    else:
        if args.direction is None:
            raise UsageError("--at needs --direction")
        w = np.asarray(args.direction, dtype=float)
        norm = float(np.linalg.norm(w))
        if norm == 0:
            raise UsageError("--direction must be nonzero")
        value = energy.pointwise_interior(boundary, args.at, w / norm)
        expected = 2 * cn
    _emit({"value": value, "expected": expected, "gap": value - expected})
    _say(f"value {value:.10g}, expected {expected:.10g}")


def _cmd_crofton(args):
    shape = _load(args)
    est = crofton.estimate(_sampler(shape, args), shape, args.lines)
    _emit(est.as_dict())
    _say(f"measure estimate {est.area_estimate:.6g} +- {est.area_std_error:.2g}; histogram {list(est.histogram)}")


def _cmd_crossval(args):
    shape = _load(args)
    res = crofton.cross_validate_energy(_sampler(shape, args), shape, args.lines)
    _emit(res.as_dict())
    _say(f"line estimate {res.mc_energy_estimate:.6g}, quadrature {res.quadrature_energy:.6g}, "
         f"gap {100 * res.relative_gap:.3f}%")


def _cmd_convexity(args):
    shape = _load(args)
    if args.method == "defect":
        is_convex, report, tol = energy.classify(geometry.discretize(shape))
        doc = {"verdict": "convex" if is_convex else "nonconvex", "method": "defect",
               "defect": report.defect, "threshold": tol}
    else:
        res = crofton.convexity_test(_sampler(shape, args), shape, args.lines, args.significance)
        doc = {"method": "crofton", **res.as_dict()}
    _emit(doc)
    _say(f"verdict: {doc['verdict']}")


def _cmd_flow(args):
    shape = _load(args)
    if not isinstance(shape, geometry.PolygonBoundary):
        raise DimensionUnsupported("the flow only runs on 2D polygons")
    params = flow.FlowParams(
        step_size=args.lr,
        max_iterations=args.steps,
        gradient_mode=args.gradient_mode,
        fd_epsilon=args.fd_epsilon,
        tangential_redistribution=not args.no_redistribution,
        stop_defect=args.stop_defect,
        smoothing=args.smoothing,
    )
    trace = flow.convexify(shape, params)
    final = trace.final_shape
    formats.atomic_write(args.output, formats.polygon_to_json(final))
    if args.trace:
        trace.write_csv(args.trace)
    if args.svg:
        formats.atomic_write(args.svg, svg.render_svg(final))
    last = trace.iterations[-1]
    _emit({
        "converged": trace.converged,
        "stop_reason": trace.stop_reason,
        "iterations": last.iteration,
        "final_defect": last.defect,
        "initial_defect": trace.iterations[0].defect,
        "is_convex": geometry.is_convex_oracle(final),
    })
    _say(f"flow {trace.stop_reason} after {last.iteration} iterations, defect {last.defect:.3e}")


COMMANDS = {
    "gen": _cmd_gen,
    "constant": _cmd_constant,
    "energy": _cmd_energy,
    "pointwise": _cmd_pointwise,
    "crofton": _cmd_crofton,
    "crossval": _cmd_crossval,
    "convexity": _cmd_convexity,
    "flow": _cmd_flow,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _set_threads(args.threads)
        _check_paths(args)
        COMMANDS[args.command](args)
    except UsageError as exc:
        _say(f"error: usage: {exc}")
        return 2
    except NumericError as exc:
        _say(f"error: {exc.kind}: {exc}")
        return 3
    except ConvexityError as exc:
        _say(f"error: {exc.kind}: {exc}")
        return 2
    except (FloatingPointError, OverflowError) as exc:
        _say(f"error: numeric: {exc}")
        return 3
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
