"""Command-line entry points: `voxelskip bench` and `voxelskip serve`."""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys

from .bench import BenchConfig, run_benchmark, to_csv


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--dataset",
        required=True,
        help="raw volume file or generator spec (e.g. menger:level=3, "
        "shell:dims=128,radius=48,thickness=2, blobs:dims=128,n=100,seed=7)",
    )
    p.add_argument(
        "--tf",
        default=None,
        help='transfer function: JSON file with {"rgba": [[r,g,b,a] x 256]}, '
        'or a preset name ("ramp", "opaque"); default ramp',
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxelskip",
        description="Empty-space-skipping indices for scalar volumes: "
        "benchmarks and an interactive rendering service.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="build indices, render a rotation, emit CSV")
    _add_dataset_args(b)
    b.add_argument(
        "--index",
        default="naive",
        help="comma-separated index kinds: naive, grid, lbvh, kd-shallow, "
        "kd-deep-mls32, kd-deep-mls128, kd-binned-mls32, hybrid",
    )
    b.add_argument("--frames", type=int, default=36, help="views per 360-degree orbit")
    b.add_argument("--viewport", type=int, default=1024, help="square viewport in pixels")
    b.add_argument("--dt", type=float, default=0.5, help="sampling step in voxels")
    b.add_argument("--reps", type=int, default=3, help="build repetitions (median taken)")
    b.add_argument("--csv", default=None, help="output path; stdout when omitted")

    s = sub.add_parser("serve", help="interactive session service over WebSocket")
    _add_dataset_args(s)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=9000)
    s.add_argument("--viewport", type=int, default=512)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "bench":
        cfg = BenchConfig(
            dataset=args.dataset,
            tf=args.tf,
            kinds=tuple(k.strip() for k in args.index.split(",") if k.strip()),
            frames=args.frames,
            viewport=args.viewport,
            dt=args.dt,
            reps=args.reps,
            output=args.csv,
        )
        records = run_benchmark(cfg)
        if args.csv is None:
            sys.stdout.write(to_csv(records))
        return 0
    if args.command == "serve":
        from .service import serve

        asyncio.run(
            serve(
                dataset=args.dataset,
                tf=args.tf,
                host=args.host,
                port=args.port,
                viewport=args.viewport,
            )
        )
        return 0
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
