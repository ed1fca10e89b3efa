"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 numerical
degeneracy.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import jsonio
from .decompose import DEFAULT_FRACTION, IlluminationParams, decompose
from .errors import DegenerateInputError
from .gaussian_map import DEFAULT_ANGULAR_SIZE, GaussianMapConfig, render_gaussian_map
from .hdrio import Panorama, read_image, write_image, write_preview_png
from .metrics import evaluate
from .sphconv import kernel_sample_grid
from .sphere import generate_anchors
from .transport import DEFAULT_EPSILON, SinkhornConfig, sml_channels

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


class InputError(Exception):
    """Unreadable or malformed input file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(obj, out, schema):
    jsonio.validate(obj, schema)
    text = jsonio.dumps(obj)
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load_image(path):
    try:
        return read_image(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_params(path):
    try:
        obj = json.loads(Path(path).read_text())
        jsonio.validate(obj, "params")
        return IlluminationParams.from_json(obj)
    except Exception as exc:  # any malformed params file is an input error
        raise InputError(f"{path}: {exc}") from exc


def cmd_anchors(args):
    _emit(generate_anchors(args.n).to_json(), args.out, "anchors")


def cmd_decompose(args):
    img = _load_image(args.input)
    try:
        pano = Panorama.from_image(img)
    except ValueError as exc:
        raise InputError(f"{args.input}: {exc}") from exc
    params = decompose(pano, generate_anchors(args.n), fraction=args.fraction, weighted=args.weighted)
    _emit(params.to_json(), args.out, "params")


def cmd_distance(args):
    a = _load_params(args.a)
    b = _load_params(args.b)
    if a.n != b.n:
        raise InputError(f"anchor counts differ: {a.n} vs {b.n}")
    cfg = SinkhornConfig(epsilon=args.epsilon)
    results = sml_channels(a, b, generate_anchors(a.n).cost, cfg)
    _emit(
        {
            "transport_cost": float(np.mean([r.transport_cost for r in results])),
            "regularized_objective": float(np.mean([r.regularized_objective for r in results])),
            "iterations": max(r.iterations for r in results),
            "marginal_error": max(r.marginal_error for r in results),
        },
        None,
        "sml",
    )


def cmd_render(args):
    params = _load_params(args.params)
    cfg = GaussianMapConfig(angular_size=args.s, width=args.width, height=args.height)
    pano = render_gaussian_map(params, generate_anchors(params.n), cfg)
    try:
        write_image(args.out, pano)
        if args.preview:
            write_preview_png(args.preview, pano, exposure=args.exposure)
    except OSError as exc:
        raise InputError(str(exc)) from exc


def cmd_metrics(args):
    pred = _load_image(args.pred)
    true = _load_image(args.true)
    if pred.pixels.shape != true.pixels.shape:
        raise InputError(f"image sizes differ: {pred.width}x{pred.height} vs {true.width}x{true.height}")
    _emit(evaluate(pred, true, lambda_cos=args.lambda_cos).to_json(), args.out, "metrics")


def cmd_sphconv_grid(args):
    _emit(kernel_sample_grid(args.width, args.height, args.k).to_json(), args.out, "kernel_grid")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spherelight", description="Spherical light distributions, transport losses and lobe maps.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("anchors", help="export the anchor lattice as JSON")
    s.add_argument("--n", type=int, default=128)
    s.add_argument("--out")
    s.set_defaults(func=cmd_anchors)

    s = sub.add_parser("decompose", help="split an HDR panorama into distribution, intensity, ambient")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--n", type=int, default=128)
    s.add_argument("--fraction", type=float, default=DEFAULT_FRACTION)
    s.add_argument("--weighted", action="store_true", help="weight pixel sums by solid angle")
    s.add_argument("--out")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("distance", help="transport loss between two params files")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    s.set_defaults(func=cmd_distance)

    s = sub.add_parser("render", help="render params as a spherical Gaussian panorama")
    s.add_argument("--params", required=True)
    s.add_argument("--s", type=float, default=DEFAULT_ANGULAR_SIZE)
    s.add_argument("--width", type=int, default=256)
    s.add_argument("--height", type=int, default=128)
    s.add_argument("--out", required=True)
    s.add_argument("--preview")
    s.add_argument("--exposure", type=float, default=1.0)
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("metrics", help="compare two HDR images")
    s.add_argument("--pred", required=True)
    s.add_argument("--true", required=True)
    s.add_argument("--lambda-cos", type=float, default=1.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("sphconv-grid", help="export spherical convolution sample coordinates")
    s.add_argument("--width", type=int, default=256)
    s.add_argument("--height", type=int, default=128)
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sphconv_grid)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except InputError as exc:
        print(f"spherelight: {exc}", file=sys.stderr)
        return EXIT_IO
    except DegenerateInputError as exc:
        print(f"spherelight: numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"spherelight: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"spherelight: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
