#!/usr/bin/env python3
"""Render a dataset from several orbit angles and save PNGs.

Also renders the same views without any index and reports the worst
per-channel difference, demonstrating that skipping preserves the image.

    python3 scripts/render_views.py --dataset menger:level=3 --index kd-deep-mls32 --out frames/
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from voxelskip import (
    Camera,
    build_index,
    classify,
    load_dataset,
    load_tf,
    render_frame,
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dataset", default="menger:level=3")
    ap.add_argument("--index", default="kd-deep-mls32")
    ap.add_argument("--tf", default=None)
    ap.add_argument("--viewport", type=int, default=512)
    ap.add_argument("--views", type=int, default=6, help="orbit positions")
    ap.add_argument("--elevation", type=float, default=20.0)
    ap.add_argument("--zoom", type=float, default=1.0)
    ap.add_argument("--dt", type=float, default=0.5)
    ap.add_argument("--check-naive", action="store_true",
                    help="also render without an index and compare")
    ap.add_argument("--out", default="frames")
    args = ap.parse_args()

    v = load_dataset(args.dataset)
    tf = load_tf(args.tf)
    bits = classify(v, tf, dilate=True)
    index = build_index(args.index, bits)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    worst = 0
    for i in range(args.views):
        azimuth = 360.0 * i / args.views
        cam = Camera.orbit(v.dims, azimuth, args.elevation, zoom=args.zoom,
                           width=args.viewport)
        t0 = time.perf_counter()
        frame = render_frame(v, tf, index, cam, dt=args.dt)
        ms = 1000.0 * (time.perf_counter() - t0)
        path = outdir / f"{v.name}_{args.index}_{i:02d}.png"
        frame.to_png(path)
        line = f"{path}  {ms:8.2f} ms  {frame.sample_count:>12,} samples"
        if args.check_naive:
            naive = render_frame(v, tf, None, cam, dt=args.dt)
            diff = int(np.abs(frame.pixels.astype(np.int16)
                              - naive.pixels.astype(np.int16)).max())
            worst = max(worst, diff)
            line += f"  max channel diff vs naive: {diff}"
        print(line)

    if args.check_naive:
        print(f"worst difference across views: {worst} (tolerance: 1)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
