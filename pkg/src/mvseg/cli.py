"""``mvseg`` command-line tool.

Subcommands::

    gen          synthetic two-region MVI + ground-truth mask
    gen-texture  grayscale stripe montage + ground-truth mask
    grad         manifold gradient magnitude (normalized PGM + raw .npy)
    gac          geodesic active contour segmentation
    cv           Chan-Vese segmentation
    texture      grayscale PGM -> SPD(M^2) MVI
    render       MVI -> PPM preview with optional mask contour

Every run writes a ``key=value`` manifest next to its outputs.  Exit codes:
0 success or converged, 2 usage error, 3 solver stopped at max iterations,
4 malformed input file.
"""

import argparse
import os
import sys

import numpy as np
from skimage.measure import find_contours

from . import __version__
from . import io as mio
from . import levelset as ls
from .errors import FormatError, InvalidArgumentError, NonConvergenceError
from .geometry import MeanSolverParams, format_manifold, parse_manifold
from .image import ManifoldImage, gradient_magnitude
from .render import render
from .segmentation import ChanVeseParams, GacParams, segment_chan_vese, segment_gac
from .synthetic import default_points, generate_synthetic, stripe_montage
from .texture import TextureFeatureParams, texture_to_mvi

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MAX_ITERS = 3
EXIT_FORMAT = 4

ENERGY_COLUMNS = ("iter", "length", "area", "data_in", "data_out", "total")


class UsageError(Exception):
    """Bad flag value; the message names the flag."""


def sidecar(path, suffix):
    """``out/img.mvi`` + ``_mask.pgm`` -> ``out/img_mask.pgm``."""
    return os.path.splitext(path)[0] + suffix


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _parse_point(text, manifold, flag):
    try:
        vals = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise UsageError(f"{flag}: cannot parse {text!r} as comma-separated numbers") from None
    if vals.size != manifold.elem_len:
        raise UsageError(f"{flag}: {manifold.name} points need {manifold.elem_len} values, got {vals.size}")
    pt = vals.reshape(manifold.point_shape)
    if not manifold.is_point(pt):
        raise UsageError(f"{flag}: {text!r} is not a point on {manifold.name}")
    return pt


def _format_point(pt):
    return ",".join(f"{v:.17g}" for v in np.ravel(pt))


def _manifest(args, extra=None):
    entries = {"command": args.command, "version": __version__}
    for key, value in sorted(vars(args).items()):
        if key in ("command", "func"):
            continue
        entries[key] = "" if value is None else value
    entries.update(extra or {})
    return entries


def _load_image(args):
    if getattr(args, "in_pgm", None):
        return ManifoldImage.from_grayscale(mio.read_pgm(args.in_pgm))
    if not args.input:
        raise UsageError("one of --in or --in-pgm is required")
    return mio.read_mvi(args.input)


def _initial_phi(img, text):
    try:
        shape = ls.parse_shape(text)
        return ls.init_shape(img.height, img.width, shape)
    except InvalidArgumentError as exc:
        raise UsageError(f"--init: {exc}") from None


def _write_energy(terms, path):
    with open(path, "w") as fh:
        fh.write(",".join(ENERGY_COLUMNS) + "\n")
        for it, e in terms:
            row = (e.length, e.area, e.data_in, e.data_out, e.total)
            fh.write(f"{it}," + ",".join(f"{v:.17g}" for v in row) + "\n")


def contour_polylines(phi):
    """Zero-level polylines of ``phi`` as ``(x, y)`` = (row, column) vertices."""
    return find_contours(np.asarray(phi, dtype=float), 0.0)


def _snapshot_callback(prefix, every):
    if not every:
        return None
    _ensure_parent(prefix + "_snap.pgm")

    def callback(it, phi):
        if it % every == 0:
            mio.write_mask(ls.extract_mask(phi), f"{prefix}_snap_{it:05d}.pgm")

    return callback


def _finish_segmentation(args, img, phi0, result, extra):
    prefix = args.out_prefix
    _ensure_parent(prefix + "_mask.pgm")
    mio.write_mask(result.mask, prefix + "_mask.pgm")
    mio.write_contours(contour_polylines(result.phi), prefix + "_contours.txt")
    _write_energy(result.energy_terms, prefix + "_energy.csv")
    info = {
        "manifold": format_manifold(img.manifold),
        "height": img.height,
        "width": img.width,
        "iterations": result.iterations,
        "converged": int(result.converged),
        "inside_pixels": int(result.mask.sum()),
    }
    for key, count in sorted(result.warnings.items()):
        info[f"warning_{key}"] = count
    info.update(extra)
    mio.write_manifest(_manifest(args, info), prefix + "_manifest.txt")
    state = "converged" if result.converged else "stopped at max iterations"
    print(f"{args.command}: {state} after {result.iterations} iterations, "
          f"{int(result.mask.sum())} pixels inside -> {prefix}_mask.pgm")
    return EXIT_OK if result.converged else EXIT_MAX_ITERS


# ---------------------------------------------------------------- commands


def cmd_gen(args):
    try:
        manifold = parse_manifold(args.kind)
    except InvalidArgumentError as exc:
        raise UsageError(f"--kind: {exc}") from None
    try:
        shape = ls.parse_shape(args.shape)
    except InvalidArgumentError as exc:
        raise UsageError(f"--shape: {exc}") from None
    if args.height < 1 or args.width < 1:
        raise UsageError("--height/--width: must be positive")
    if args.noise < 0:
        raise UsageError("--noise: must be non-negative")
    inside, outside = default_points(manifold)
    if args.inside is not None:
        inside = _parse_point(args.inside, manifold, "--inside")
    if args.outside is not None:
        outside = _parse_point(args.outside, manifold, "--outside")
    img, mask = generate_synthetic(
        manifold, args.height, args.width, shape, inside, outside, args.noise, args.seed
    )
    _ensure_parent(args.out)
    mio.write_mvi(img, args.out)
    mio.write_mask(mask, sidecar(args.out, "_mask.pgm"))
    extra = {
        "inside_point": _format_point(inside),
        "outside_point": _format_point(outside),
        "mask": sidecar(args.out, "_mask.pgm"),
    }
    mio.write_manifest(_manifest(args, extra), sidecar(args.out, "_manifest.txt"))
    print(f"gen: {manifold.name} {args.height}x{args.width} -> {args.out}")
    return EXIT_OK


def cmd_gen_texture(args):
    if args.height < 1 or args.width < 1:
        raise UsageError("--height/--width: must be positive")
    gray, mask = stripe_montage(args.height, args.width, args.period, args.noise, args.seed)
    _ensure_parent(args.out)
    mio.write_pgm(gray, args.out)
    mio.write_mask(mask, sidecar(args.out, "_mask.pgm"))
    mio.write_manifest(_manifest(args), sidecar(args.out, "_manifest.txt"))
    print(f"gen-texture: {args.height}x{args.width} montage -> {args.out}")
    return EXIT_OK


def cmd_grad(args):
    img = _load_image(args)
    grad, cut = gradient_magnitude(img, return_count=True)
    peak = float(grad.max())
    scaled = grad / peak if peak > 0 else np.zeros_like(grad)
    _ensure_parent(args.out)
    mio.write_pgm(scaled, args.out)
    raw = sidecar(args.out, ".npy")
    np.save(raw, grad)
    extra = {"raw": raw, "max": f"{peak:.17g}", "warning_cut_locus": cut}
    mio.write_manifest(_manifest(args, extra), sidecar(args.out, "_manifest.txt"))
    print(f"grad: max {peak:.6g} -> {args.out}, raw field {raw}")
    return EXIT_OK


def cmd_gac(args):
    img = _load_image(args)
    phi0 = _initial_phi(img, args.init)
    try:
        params = GacParams(
            dt=args.dt,
            max_iters=args.max_iters,
            convergence_tol=args.tol,
            reinit_every=args.reinit_every,
            balloon=args.balloon,
            epsilon=args.epsilon,
        )
    except InvalidArgumentError as exc:
        raise UsageError(str(exc)) from None
    result = segment_gac(img, phi0, params, callback=_snapshot_callback(args.out_prefix, args.snapshot_every))
    return _finish_segmentation(args, img, phi0, result, {})


def cmd_cv(args):
    img = _load_image(args)
    phi0 = _initial_phi(img, args.init)
    try:
        params = ChanVeseParams(
            lambda1=args.lambda1,
            lambda2=args.lambda2,
            mu=None if args.mu == "auto" else float(args.mu),
            nu=args.nu,
            dt=args.dt,
            max_iters=args.max_iters,
            mean_update_every=args.mean_every,
            reinit_every=args.reinit_every,
            convergence_tol=args.tol,
            epsilon=args.epsilon,
            mean_params=MeanSolverParams(args.mean_tol, args.mean_max_iters),
        )
    except (InvalidArgumentError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    callback = _snapshot_callback(args.out_prefix, args.snapshot_every)
    result = segment_chan_vese(img, phi0, params, callback=callback, workers=args.threads)
    extra = {
        "mu_used": f"{result.mu:.17g}",
        "mean_inside": _format_point(result.mean_inside),
        "mean_outside": _format_point(result.mean_outside),
    }
    return _finish_segmentation(args, img, phi0, result, extra)


def cmd_texture(args):
    gray = mio.read_pgm(args.in_pgm)
    if args.ridge == "auto":
        ridge = None
    else:
        try:
            ridge = float(args.ridge)
        except ValueError:
            raise UsageError(f"--ridge: expected a number or 'auto', got {args.ridge!r}") from None
    try:
        params = TextureFeatureParams(args.patch, args.window, ridge)
        img = texture_to_mvi(gray, params)
    except InvalidArgumentError as exc:
        raise UsageError(str(exc)) from None
    _ensure_parent(args.out)
    mio.write_mvi(img, args.out)
    mio.write_manifest(
        _manifest(args, {"manifold": format_manifold(img.manifold)}), sidecar(args.out, "_manifest.txt")
    )
    print(f"texture: {img.manifold.name} {img.height}x{img.width} -> {args.out}")
    return EXIT_OK


def cmd_render(args):
    img = mio.read_mvi(args.input)
    mask = None
    if args.mask:
        mask = mio.read_mask(args.mask)
        if mask.shape != img.shape:
            raise UsageError(f"--mask: shape {mask.shape} does not match image {img.shape}")
    if args.cell < 1:
        raise UsageError("--cell: must be positive")
    rgb = render(img, mask, cell=args.cell)
    _ensure_parent(args.out_ppm)
    mio.write_ppm(rgb, args.out_ppm)
    mio.write_manifest(_manifest(args), sidecar(args.out_ppm, "_render_manifest.txt"))
    print(f"render: {rgb.shape[0]}x{rgb.shape[1]} -> {args.out_ppm}")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_solver_input(p):
    p.add_argument("--in", dest="input", help="input MVI file")
    p.add_argument("--in-pgm", help="grayscale PGM, read as a Euclidean(1) image")
    p.add_argument("--init", required=True, help="circle:cx,cy,r or rect:x0,y0,x1,y1")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--snapshot-every", type=int, default=0, metavar="K",
                   help="write the mask every K iterations (0 = off)")


def build_parser():
    parser = argparse.ArgumentParser(prog="mvseg", description="Active contours on manifold-valued images.")
    parser.add_argument("--version", action="version", version=f"mvseg {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for per-pixel work (1 = bit-exact reference)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="synthetic two-region MVI")
    p.add_argument("--kind", required=True, help="euclidean:n, s1, s2, so3 or spd:n")
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--shape", default="rect:16,16,47,47", help="region: circle:cx,cy,r or rect:x0,y0,x1,y1")
    p.add_argument("--inside", help="comma-separated point (row-major for matrices)")
    p.add_argument("--outside")
    p.add_argument("--noise", type=float, default=0.0, help="tangent noise sigma")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output .mvi path")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("gen-texture", parents=[common], help="two-texture stripe montage PGM")
    p.add_argument("--height", type=int, default=96)
    p.add_argument("--width", type=int, default=96)
    p.add_argument("--period", type=float, default=6.0)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output .pgm path")
    p.set_defaults(func=cmd_gen_texture)

    p = sub.add_parser("grad", parents=[common], help="manifold gradient magnitude")
    p.add_argument("--in", dest="input")
    p.add_argument("--in-pgm")
    p.add_argument("--out", required=True, help="normalized PGM; the raw field goes to <out>.npy")
    p.set_defaults(func=cmd_grad)

    d = GacParams()
    p = sub.add_parser("gac", parents=[common], help="geodesic active contours")
    _add_solver_input(p)
    p.add_argument("--dt", type=float, default=d.dt)
    p.add_argument("--max-iters", type=int, default=d.max_iters)
    p.add_argument("--tol", type=float, default=d.convergence_tol)
    p.add_argument("--reinit-every", type=int, default=d.reinit_every)
    p.add_argument("--balloon", type=float, default=d.balloon, help="normal speed; negative shrinks")
    p.add_argument("--epsilon", type=float, default=d.epsilon)
    p.set_defaults(func=cmd_gac)

    d = ChanVeseParams()
    p = sub.add_parser("cv", parents=[common], help="Chan-Vese with intrinsic region means")
    _add_solver_input(p)
    p.add_argument("--lambda1", type=float, default=d.lambda1)
    p.add_argument("--lambda2", type=float, default=d.lambda2)
    p.add_argument("--mu", default="auto", help="length weight or 'auto'")
    p.add_argument("--nu", type=float, default=d.nu)
    p.add_argument("--dt", type=float, default=d.dt)
    p.add_argument("--max-iters", type=int, default=d.max_iters)
    p.add_argument("--mean-every", type=int, default=d.mean_update_every)
    p.add_argument("--reinit-every", type=int, default=d.reinit_every)
    p.add_argument("--tol", type=float, default=d.convergence_tol)
    p.add_argument("--epsilon", type=float, default=d.epsilon)
    p.add_argument("--mean-tol", type=float, default=d.mean_params.tolerance)
    p.add_argument("--mean-max-iters", type=int, default=d.mean_params.max_iters)
    p.set_defaults(func=cmd_cv)

    d = TextureFeatureParams()
    p = sub.add_parser("texture", parents=[common], help="grayscale PGM to SPD(M^2) MVI")
    p.add_argument("--in-pgm", required=True)
    p.add_argument("--patch", type=int, default=d.patch_size)
    p.add_argument("--window", type=int, default=d.window_size)
    p.add_argument("--ridge", default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_texture)

    p = sub.add_parser("render", parents=[common], help="PPM preview")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--mask")
    p.add_argument("--out-ppm", required=True)
    p.add_argument("--cell", type=int, default=9, help="glyph cell size for SPD(3)")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads: must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mvseg {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidArgumentError as exc:
        print(f"mvseg {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"mvseg {args.command}: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except FileNotFoundError as exc:
        print(f"mvseg {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        print(f"mvseg {args.command}: {exc}", file=sys.stderr)
        return EXIT_MAX_ITERS


if __name__ == "__main__":
    sys.exit(main())
