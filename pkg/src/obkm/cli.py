"""``obkm`` command line.

::

    obkm simulate --config run.json [--resume final.ckpt] [--output DIR]
    obkm validate --seed 42 --resolutions 16,32 [--output DIR]
    obkm kernel-check --resolution 32 [--output DIR]

Exit codes: 0 success, 1 configuration or precondition error (or a failed
check), 2 blow-up suspected, 3 step failure.  The number of FFT threads is
read from ``OBKM_THREADS``.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import runner
from .stokes import PVQuadratureSpec


def _resolutions(text: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("at least one resolution is required")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obkm", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", metavar="DIR", default=None, help="output directory")

    sim = sub.add_parser("simulate", parents=[common], help="integrate the stress equation")
    sim.add_argument("--config", required=True, metavar="PATH")
    sim.add_argument("--resume", metavar="CHECKPOINT", default=None)

    val = sub.add_parser("validate", parents=[common], help="run the inequality battery")
    val.add_argument("--seed", type=int, default=42)
    val.add_argument("--resolutions", type=_resolutions, default=[16, 32])
    val.add_argument("--samples", type=int, default=100)

    ker = sub.add_parser("kernel-check", parents=[common], help="free-space vs spectral velocity")
    ker.add_argument("--resolution", type=int, default=32)
    ker.add_argument("--radius", type=float, default=0.5, help="Gaussian bump radius")
    ker.add_argument("--inner-radius", type=float, default=0.25)
    ker.add_argument("--outer-radius", type=float, default=None)
    ker.add_argument("--points-per-axis", type=int, default=32)
    ker.add_argument("--sphere-samples", type=int, default=1 << 20)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    if args.command == "simulate":
        return runner.cmd_simulate(args.config, args.output, args.resume)
    out = args.output or "."
    if args.command == "validate":
        return runner.cmd_validate(args.seed, args.resolutions, out, args.samples)
    try:
        kw = {"inner_radius": args.inner_radius, "points_per_axis": args.points_per_axis}
        if args.outer_radius is not None:
            kw["outer_radius"] = args.outer_radius
        spec = PVQuadratureSpec(**kw)
    except ValueError as exc:
        logging.getLogger(__name__).error("%s", exc)
        return runner.EXIT_ERROR
    return runner.cmd_kernel_check(args.resolution, out, args.radius, spec, args.sphere_samples)


if __name__ == "__main__":
    sys.exit(main())
