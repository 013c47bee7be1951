"""Command line driver.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

import argparse
import json
import logging
import shlex
import sys
import time
from pathlib import Path


from . import evaluation as ev
from . import glyphs, nmdf, plotting, serialization, synthetic, tfld
from .errors import InvalidInput, NMDFError
from .manifolds import SPD, Power, barycenter

log = logging.getLogger("ccnmdf")

NEAR_ZERO = 1e-5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _triple(text):
    try:
        vals = tuple(int(v) for v in text.replace("x", ",").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three integers, got {text!r}") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected three integers, got {text!r}")
    return vals


def _pair(text):
    try:
        rows, cols = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROWSxCOLS, got {text!r}") from None
    return rows, cols


def _floats(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def resolve_basepoint(manifold, points, choice, path=None):
    if choice == "near-zero":
        return manifold.near_zero(NEAR_ZERO)
    if choice == "barycenter":
        q, converged = barycenter(manifold, points)
        if not converged:
            log.warning("barycenter iteration did not converge; using last iterate")
        return q
    if choice == "file":
        if path is None:
            raise InvalidInput("--basepoint file needs --basepoint-file")
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        point = raw.get("basepoint", raw.get("point")) if isinstance(raw, dict) else raw
        if point is None:
            raise InvalidInput(f"{path}: no 'basepoint' or 'point' entry")
        return manifold.check_point(point)
    raise InvalidInput(f"unknown base point choice {choice!r}")


def _method_params(args, method=None):
    if (method or args.method) == "t-nmdf":
        return {"iters": args.max_iter, "seed": args.seed, "restarts": args.restarts}
    return {"delta": args.delta, "max_iter": args.max_iter, "max_sub_iter": args.max_sub_iter,
            "seed": args.seed, "restarts": args.restarts}


def _figure_path(args, out):
    if args.no_figure:
        return None
    return Path(args.figure) if args.figure else Path(out).with_suffix(".png")


def cmd_synth(args):
    field = synthetic.dti_field(args.dims, seed=args.seed, n_bundles=args.bundles,
                                noise=args.noise) * args.units
    mask = synthetic.knockout_mask(args.dims, args.block, args.knockout, args.seed)
    tfld.save_tfld(tfld.TensorField.from_array(field, mask), args.out)
    print(f"wrote {args.out}")


def cmd_ingest(args):
    field = tfld.read_tfld(args.tfld)
    ds = tfld.extract_blocks(field, args.block)
    if len(ds.points) == 0:
        raise InvalidInput("no complete block in the field")
    serialization.save_dataset(
        args.out, ds.manifold, ds.points, block=list(ds.block), origins=ds.origins,
        source=Path(args.tfld).name,
    )
    print(f"{len(ds.points)} points on {ds.manifold.to_dict()} -> {args.out}")


def cmd_factorize(args):
    manifold, points, _ = serialization.load_dataset(args.dataset)
    q = resolve_basepoint(manifold, points, args.basepoint, args.basepoint_file)
    fac = ev.run_method(manifold, points, q, args.rank, args.method, **_method_params(args))
    serialization.save_factorization(args.out, fac)
    if args.figure:
        plotting.plot_objective_trace(fac, args.figure)
    print(f"{fac.method} rank {fac.rank}: final objective {fac.objective_trace[-1]:.6g} -> {args.out}")


def cmd_errors(args):
    manifold, points, _ = serialization.load_dataset(args.dataset)
    fac = serialization.load_factorization(args.factorization)
    if fac.manifold != manifold or fac.H.shape[0] != len(points):
        raise InvalidInput("factorization does not match the dataset")
    t0 = time.perf_counter()
    rep = ev.report(points, fac)
    rep.wall_time = time.perf_counter() - t0
    if args.out:
        serialization.write_reports(args.out, [rep], timing=args.timing)
    print(f"rank={rep.rank} exact={rep.exact:.6g} tangent={rep.tangent:.6g} "
          f"cc={rep.curvature_corrected:.6g}")


def cmd_sweep(args):
    manifold, points, _ = serialization.load_dataset(args.dataset)
    q = resolve_basepoint(manifold, points, args.basepoint, args.basepoint_file)
    ranks = ev.parse_ranks(args.ranks)
    reports = ev.rank_sweep(manifold, points, q, ranks, args.method, **_method_params(args))
    serialization.write_reports(args.out, reports, timing=args.timing)
    fig = _figure_path(args, args.out)
    if fig:
        plotting.plot_reports(reports, fig, title=f"{args.method}, base point {args.basepoint}")
    failed = [r.rank for r in reports if r.failure]
    print(f"{len(reports)} ranks -> {args.out}" + (f" (failed: {failed})" if failed else ""))
    return 3 if failed else 0


COMPARE_RUNS = (("cc-nmdf", "near-zero"), ("cc-nmdf", "barycenter"), ("t-nmdf", "near-zero"))


def cmd_compare(args):
    manifold, points, _ = serialization.load_dataset(args.dataset)
    ranks = ev.parse_ranks(args.ranks)
    rows, series = [], {}
    for method, base in COMPARE_RUNS:
        q = resolve_basepoint(manifold, points, base)
        reports = ev.rank_sweep(manifold, points, q, ranks, method, **_method_params(args, method))
        rows += [(method, base, r) for r in reports]
        ok = [r for r in reports if r.failure is None]
        series[f"{method} ({base})"] = ([r.rank for r in ok], [r.exact for r in ok])
    lookup = {id(r): (m, b) for m, b, r in rows}
    serialization.write_reports(args.out, [r for _, _, r in rows], timing=args.timing,
                                prefix=lambda r: lookup[id(r)])
    fig = _figure_path(args, args.out)
    if fig:
        plotting.plot_error_curves(series, fig)
    print(f"{len(rows)} runs -> {args.out}")


def cmd_render(args):
    fac = serialization.load_factorization(args.factorization)
    m = fac.manifold
    if isinstance(m, Power) and isinstance(m.base, SPD) and m.base.n == 3:
        pts = fac.Y
    elif isinstance(m, SPD) and m.n == 3:
        pts = fac.Y[:, None]
    else:
        raise InvalidInput("glyph rendering needs SPD(3) or power-of-SPD(3) factors")
    svg = glyphs.render_glyphs(pts, layout=args.layout, scale=args.scale,
                               command=args.command_line)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    print(f"{fac.rank} factors -> {args.out}")


def cmd_check_basepoint(args):
    manifold, points, _ = serialization.load_dataset(args.dataset)
    q = resolve_basepoint(manifold, points, args.basepoint, args.basepoint_file)
    ok, min_inner = nmdf.verify_basepoint(manifold, points, q)
    print(f"ok={'true' if ok else 'false'} min_inner={min_inner:.6g}")
    return 0


def cmd_scan(args):
    manifold, points, _ = serialization.load_dataset(args.dataset)
    fac = serialization.load_factorization(args.factorization)
    scan = ev.consistency_scan(manifold, points, fac.q, fac, args.scales)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(ev.ScanResult.COLUMNS) + "\n")
        for row in scan.rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    fig = _figure_path(args, args.out)
    if fig:
        plotting.plot_scan(scan, fig)
    print(f"cc slope {scan.cc_slope:.3f}, tangent slope {scan.tangent_slope:.3f} -> {args.out}")


def _add_basepoint(p):
    p.add_argument("--basepoint", choices=["near-zero", "barycenter", "file"], default="near-zero")
    p.add_argument("--basepoint-file", help="JSON file with a 'basepoint' or 'point' entry")


def _add_method(p):
    p.add_argument("--method", choices=["t-nmdf", "cc-nmdf"], default="cc-nmdf")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--max-sub-iter", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=10, help="K-means restarts")


def _add_figure(p):
    p.add_argument("--figure", help="figure path (default: next to --out, .png)")
    p.add_argument("--no-figure", action="store_true")


def build_parser():
    parser = _Parser(prog="ccnmdf", description="Nonnegative factorization of manifold-valued data.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a synthetic DTI-like tensor field")
    p.add_argument("--dims", type=_triple, default=(8, 8, 8))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bundles", type=int, default=3)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--units", type=float, default=1e-3, help="tensor scale (mm^2/s)")
    p.add_argument("--knockout", type=int, default=0,
                   help="mask one voxel in this many blocks")
    p.add_argument("--block", type=_triple, default=(4, 4, 4))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="extract voxel blocks from a TFLD file")
    p.add_argument("tfld")
    p.add_argument("--block", type=_triple, default=(4, 4, 4))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("factorize", help="run T-NMDF or CC-NMDF")
    p.add_argument("dataset")
    p.add_argument("--rank", type=int, required=True)
    _add_method(p)
    _add_basepoint(p)
    p.add_argument("--figure", help="optional objective-trace figure")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("errors", help="exact, tangent and curvature corrected errors")
    p.add_argument("dataset")
    p.add_argument("factorization")
    p.add_argument("--out")
    p.add_argument("--timing", action="store_true", help="fill the wall_time_s column")
    p.set_defaults(func=cmd_errors)

    p = sub.add_parser("sweep", help="errors over a list of ranks")
    p.add_argument("dataset")
    p.add_argument("--ranks", default="2:35:12", help="START:STOP:COUNT or K1,K2,...")
    _add_method(p)
    _add_basepoint(p)
    _add_figure(p)
    p.add_argument("--timing", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="CC-NMDF at both base points against T-NMDF")
    p.add_argument("dataset")
    p.add_argument("--ranks", default="2:35:12")
    _add_method(p)
    _add_figure(p)
    p.add_argument("--timing", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("render", help="draw manifold-valued factors as SVG glyphs")
    p.add_argument("factorization")
    p.add_argument("--layout", type=_pair, help="ROWSxCOLS grid per factor")
    p.add_argument("--scale", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("check-basepoint", help="test the nonnegative-inner-product heuristic")
    p.add_argument("dataset")
    _add_basepoint(p)
    p.set_defaults(func=cmd_check_basepoint)

    p = sub.add_parser("scan", help="error gaps while shrinking the data toward the base point")
    p.add_argument("dataset")
    p.add_argument("factorization")
    p.add_argument("--scales", type=_floats, default=[1.0, 0.5, 0.25, 0.125, 0.0625])
    _add_figure(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    args.command_line = "ccnmdf " + shlex.join(argv)
    try:
        return args.func(args) or 0
    except NMDFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
