"""Command line front end.

Exit status: 0 on success, 1 for invalid input, 2 when a numerical solve
fails.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import io, pipeline, spatial1d, spatial2d, tonal
from .grid import mse
from .inpaint import OPERATOR_KINDS, SolverError
from .operators import EedParams, assemble
from .synth import GENERATORS, synth_image

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


def _load_image(args) -> np.ndarray:
    if args.image in GENERATORS:
        return synth_image(args.image, args.width, args.height)
    return io.read_pgm(args.image)


def _load_mask(args, shape) -> np.ndarray:
    mask = io.read_pbm(args.mask)
    if mask.shape != shape:
        raise ValueError(f"mask is {mask.shape[1]}x{mask.shape[0]}, image is {shape[1]}x{shape[0]}")
    return mask


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _eed(args) -> EedParams:
    return EedParams(lam=args.eed_lambda, sigma=args.eed_sigma, stencil=args.eed_stencil)


def _write_rows(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([repr(float(v)) if isinstance(v, float) else v for v in row] for row in rows)


def _reconstruct(f, mask, g, args) -> np.ndarray:
    cfg = pipeline.PipelineConfig(operator=args.operator, eed=_eed(args))
    return pipeline.reconstruct(f, mask, g, cfg)


def cmd_inpaint(args) -> int:
    f = _load_image(args)
    mask = _load_mask(args, f.shape)
    g = io.read_tonal_csv(args.tonal, f.shape) if args.tonal else np.where(mask, f, 0.0)
    u = _reconstruct(f, mask, g, args)
    out = _out(args)
    io.write_pgm(u, out / "reconstruction.pgm")
    print(f"mse {mse(u, f):.10g}")
    return EXIT_OK


def cmd_analytic(args) -> int:
    f = _load_image(args)
    mask = spatial2d.analytic_mask(f, spatial2d.AnalyticParams(args.sigma, args.s, args.d))
    out = _out(args)
    io.write_pbm(mask, out / "mask.pbm")
    u = _reconstruct(f, mask, np.where(mask, f, 0.0), args)
    print(f"pixels {int(mask.sum())} mse {mse(u, f):.10g}")
    return EXIT_OK


def cmd_sparsify(args) -> int:
    f = _load_image(args)
    params = spatial2d.SparsifyParams(args.p, args.q, args.d, args.seed)
    res = spatial2d.probabilistic_sparsification(f, args.operator, params, eed=_eed(args))
    out = _out(args)
    io.write_pbm(res.mask, out / "mask.pbm")
    _write_rows(out / "sparsify_log.csv", ("iteration", "mask_pixels", "mse"), res.log)
    print(f"pixels {int(res.mask.sum())} iterations {res.iterations}")
    return EXIT_OK


def cmd_exchange(args) -> int:
    f = _load_image(args)
    mask = _load_mask(args, f.shape)
    params = spatial2d.ExchangeParams(args.m, args.iters, args.seed)
    res = spatial2d.nonlocal_pixel_exchange(f, mask, args.operator, params, eed=_eed(args))
    out = _out(args)
    io.write_pbm(res.mask, out / "mask.pbm")
    _write_rows(out / "exchange_log.csv", ("iteration", "mse", "accepted"), res.log)
    print(f"accepted {res.accepted} mse {res.mse:.10g}")
    return EXIT_OK


def cmd_gvo(args) -> int:
    f = _load_image(args)
    mask = _load_mask(args, f.shape)
    if args.method == "eed":
        if args.operator != "eed":
            raise ValueError("--method eed needs --operator eed")
        conf = tonal.EedGvoConfig(args.alpha, args.eta, args.iters)
        res = tonal.gvo_eed(f, mask, _eed(args), conf)
    else:
        if args.operator == "eed":
            raise ValueError("linear tonal optimisation needs a linear operator; use --method eed")
        op = assemble(args.operator, f.shape)
        if args.method == "direct":
            res = tonal.gvo_direct(f, mask, op)
        elif args.method == "els":
            res = tonal.gvo_exact_line_search(f, mask, op, args.eps)
        else:
            res = tonal.gvo_fed(f, mask, op, tonal.FedConfig(M=args.M, eps=args.eps))
    out = _out(args)
    io.write_tonal_csv(res.g, mask, out / "tonal.csv")
    _write_rows(out / "gvo_log.csv", ("iteration", "grad_sq", "mse"), res.log)
    print(f"mse {res.mse:.10g} gradient_evals {res.gradient_evals}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    values = pipeline.read_config_file(args.config) if args.config else {}
    for item in args.set or []:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        values[key.strip()] = value.strip()
    values.setdefault("operator", args.operator)
    values.setdefault("seed", str(args.seed))
    values.setdefault("out", args.out)
    report = pipeline.run_pipeline(pipeline.config_from_mapping(values))
    for entry in report.stages:
        print(f"{entry['stage']:<12} mse {entry['mse']:.10g}")
    return EXIT_OK


def cmd_freeknot1d(args) -> int:
    f = spatial1d.TEST_FUNCTIONS[args.function]()
    out = _out(args)
    if args.method == "hamideh":
        res, _ = spatial1d.hamideh_knots(f, args.knots, max_iters=args.max_iters)
        final = res.errors[-1]
    else:
        res = spatial1d.optimize_knots_interpolation(f, args.knots, max_iters=args.max_iters)
        final = res.errors[-1]
        if args.method == "tonal":
            final = spatial1d.tonal_optimize_1d(f, res.knots).error
    _write_rows(out / "freeknot_log.csv", ("iteration", "error"), enumerate(map(float, res.errors)))
    print("knots " + " ".join(f"{c:.10g}" for c in res.knots))
    print(f"error {final:.10g}")
    return EXIT_OK


def cmd_table1(args) -> int:
    rows = pipeline.reproduce_table1()
    print(f"{'method':<14}{'knots':>6}{'value':>12}{'reference':>12}  status")
    for r in rows:
        status = "ok" if r["ok"] else "MISMATCH"
        print(f"{r['method']:<14}{r['knots']:>6}{r['value']:>12.5f}{r['reference']:>12.3f}  {status}")
    return EXIT_OK


def cmd_synth(args) -> int:
    f = synth_image(args.name, args.width, args.height)
    out = _out(args)
    io.write_pgm(f, out / f"{args.name}.pgm")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # bad usage is a validation error, not argparse's default status 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--operator", choices=OPERATOR_KINDS, default="homogeneous")
    common.add_argument("--out", default="out")
    common.add_argument("--eed-lambda", type=float, default=0.8)
    common.add_argument("--eed-sigma", type=float, default=0.7)
    common.add_argument("--eed-stencil", choices=("split", "central"), default="split")

    image = argparse.ArgumentParser(add_help=False)
    image.add_argument("--image", required=True, help="PGM path or synthetic image name")
    image.add_argument("--width", type=int, default=64)
    image.add_argument("--height", type=int, default=64)

    parser = _Parser(prog="pdeinpaint", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("inpaint", parents=[common, image], help="reconstruct from a mask")
    p.add_argument("--mask", required=True)
    p.add_argument("--tonal", help="tonal CSV; defaults to the image values on the mask")
    p.set_defaults(func=cmd_inpaint)

    p = sub.add_parser("analytic", parents=[common, image], help="Laplacian-magnitude mask")
    p.add_argument("--d", type=float, default=0.04)
    p.add_argument("--sigma", type=float, default=1.6)
    p.add_argument("--s", type=float, default=0.8)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("sparsify", parents=[common, image], help="probabilistic sparsification")
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--d", type=float, default=0.04)
    p.set_defaults(func=cmd_sparsify)

    p = sub.add_parser("exchange", parents=[common, image], help="nonlocal pixel exchange")
    p.add_argument("--mask", required=True)
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--iters", type=int, default=500_000)
    p.set_defaults(func=cmd_exchange)

    p = sub.add_parser("gvo", parents=[common, image], help="tonal optimisation")
    p.add_argument("--mask", required=True)
    p.add_argument("--method", choices=("direct", "els", "fed", "eed"), default="fed")
    p.add_argument("--M", type=int, default=15)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--alpha", type=float, default=1e-2)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--iters", type=int, default=10)
    p.set_defaults(func=cmd_gvo)

    p = sub.add_parser("pipeline", parents=[common], help="spatial + exchange + tonal pipeline")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("freeknot1d", parents=[common], help="1D free-knot optimisation")
    p.add_argument("--function", choices=sorted(spatial1d.TEST_FUNCTIONS), default="exp2x3px")
    p.add_argument("--knots", type=int, default=5, help="number of knots N+1")
    p.add_argument("--method", choices=("interp", "tonal", "hamideh"), default="interp")
    p.add_argument("--max-iters", type=int, default=5000)
    p.set_defaults(func=cmd_freeknot1d)

    p = sub.add_parser("table1", parents=[common], help="1D free-knot error table")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic test image")
    p.add_argument("--name", choices=sorted(GENERATORS), required=True)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SolverError, RuntimeError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
