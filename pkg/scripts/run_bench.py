#!/usr/bin/env python3
"""Benchmark every index kind over the three stock datasets.

Produces one CSV per dataset (or a single combined file with --csv) covering
build time, render throughput, and tree shape, so the construction-speed vs
traversal-speed trade-off of the different indices can be compared directly.

    python3 scripts/run_bench.py --out results/
    python3 scripts/run_bench.py --datasets "shell:dims=256,radius=96,thickness=2" --csv all.csv
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from voxelskip import BenchConfig, INDEX_KINDS, run_benchmark
from voxelskip.bench import to_csv

STOCK_DATASETS = (
    "menger:level=3",
    "shell:dims=128,radius=48,thickness=2",
    "blobs:dims=128,n=100,seed=7",
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--datasets", nargs="*", default=list(STOCK_DATASETS),
                    help="dataset specs or raw files (default: the stock trio)")
    ap.add_argument("--kinds", default=",".join(INDEX_KINDS),
                    help="comma-separated index kinds")
    ap.add_argument("--frames", type=int, default=24)
    ap.add_argument("--viewport", type=int, default=256)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--tf", default=None, help="ramp (default), opaque, or a JSON file")
    ap.add_argument("--out", default=None, help="directory for one CSV per dataset")
    ap.add_argument("--csv", default=None, help="single combined CSV path")
    args = ap.parse_args()

    kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    records = []
    for spec in args.datasets:
        cfg = BenchConfig(dataset=spec, kinds=kinds, frames=args.frames,
                          viewport=args.viewport, reps=args.reps, tf=args.tf)
        rows = run_benchmark(cfg)
        records.extend(rows)
        if args.out:
            outdir = Path(args.out)
            outdir.mkdir(parents=True, exist_ok=True)
            stem = spec.replace(":", "_").replace(",", "_").replace("=", "")
            (outdir / f"{stem}.csv").write_text(to_csv(rows))
        for rec in rows:
            print(f"{rec.dataset:42s} {rec.index:16s} build {rec.build_s*1000:9.2f} ms"
                  f"  {rec.fps:8.2f} fps  {rec.nodes:6d} nodes")

    if args.csv:
        Path(args.csv).write_text(to_csv(records))
        print(f"wrote {args.csv}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
