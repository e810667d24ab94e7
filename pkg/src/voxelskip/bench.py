"""Benchmark driver: build each index kind over a dataset, render a rotating
orbit, and emit one CSV row per kind.

Datasets come from a raw file or a generator spec like ``menger:level=3``;
transfer functions from a JSON LUT file or a builtin preset name.  Build
times are medians over repetitions and include the summed-table construction
for the tree builders that consume it (the tables must be rebuilt whenever
the transfer function changes, so they are part of the price of those
indices).  Classification time is shared by all kinds and logged separately
rather than folded into any build column.
"""

from __future__ import annotations

import csv
import io
import logging
import statistics
import time
from dataclasses import dataclass
from pathlib import Path

from .hybrid import build_hybrid
from .kdtree import BuildParams, build_kdtree
from .lbvh import build_lbvh, flag_bricks
from .render import Camera, SpatialIndex, index_kind, render_frame
from .svt import build_svt_grid, derive_macro_grid
from .volume import (
    BinaryVolume,
    TransferFunction,
    Volume,
    classify,
    gen_blobs,
    gen_menger,
    gen_shell,
    load_raw,
    occupancy,
)

log = logging.getLogger(__name__)

CSV_HEADER = "dataset,index,occupancy_pct,build_s,fps,nodes,height,samples"

INDEX_KINDS = (
    "naive",
    "grid",
    "lbvh",
    "kd-shallow",
    "kd-deep-mls32",
    "kd-deep-mls128",
    "kd-binned-mls32",
    "hybrid",
)

_KD_PARAMS = {
    "kd-shallow": BuildParams(mode="shallow"),
    "kd-deep-mls32": BuildParams(mode="deep", max_leaf_size=32),
    "kd-deep-mls128": BuildParams(mode="deep", max_leaf_size=128),
    "kd-binned-mls32": BuildParams(mode="deep", max_leaf_size=32, builder="binned"),
}


@dataclass
class BenchConfig:
    dataset: str
    tf: str | None = None
    kinds: tuple[str, ...] = ("naive",)
    frames: int = 36
    viewport: int = 1024
    dt: float = 0.5
    reps: int = 3
    output: str | None = None

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        if self.viewport < 16:
            raise ValueError("viewport must be >= 16")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        for kind in self.kinds:
            if kind not in INDEX_KINDS:
                raise ValueError(f"unknown index kind: {kind!r}")


@dataclass
class BenchRecord:
    dataset: str
    index: str
    occupancy_pct: float
    build_s: float
    fps: float
    nodes: int
    height: int
    samples: int

    def csv_row(self) -> list[str]:
        return [
            self.dataset,
            self.index,
            f"{self.occupancy_pct:.4f}",
            f"{self.build_s:.6f}",
            f"{self.fps:.4f}",
            str(self.nodes),
            str(self.height),
            str(self.samples),
        ]


def parse_dims(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) == 1:
        d = int(parts[0])
        return (d, d, d)
    if len(parts) == 3:
        return tuple(int(p) for p in parts)
    raise ValueError(f"bad dims spec: {text!r}")


def load_dataset(spec: str) -> Volume:
    """A raw volume file, or a generator spec ``name:key=value,...``.

    Generators: ``menger:level=3``, ``shell:dims=128,radius=48,thickness=2``,
    ``blobs:dims=128,n=100,seed=7``.  An optional ``gen:`` prefix is
    accepted.
    """
    text = spec[4:] if spec.startswith("gen:") else spec
    name, _, rest = text.partition(":")
    if name in ("menger", "shell", "blobs"):
        kv: dict[str, str] = {}
        if rest:
            for item in rest.split(","):
                key, _, value = item.partition("=")
                if not _:
                    raise ValueError(f"bad generator argument: {item!r}")
                kv[key.strip()] = value.strip()
        if name == "menger":
            return gen_menger(int(kv.get("level", "3")))
        if name == "shell":
            dims = parse_dims(kv.get("dims", "128"))
            radius = float(kv["radius"]) if "radius" in kv else 0.375 * min(dims)
            return gen_shell(dims, radius=radius, thickness=float(kv.get("thickness", "1")))
        return gen_blobs(
            parse_dims(kv.get("dims", "128")),
            n=int(kv.get("n", "100")),
            seed=int(kv.get("seed", "0")),
        )
    return load_raw(spec)


def load_tf(spec: str | None) -> TransferFunction:
    """A LUT JSON file, a preset name (``ramp``/``opaque``), or the default
    ramp when unspecified."""
    if spec is None or spec == "ramp":
        return TransferFunction.ramp()
    if spec == "opaque":
        return TransferFunction.opaque()
    return TransferFunction.from_json(spec)


def build_index(kind: str, b: BinaryVolume) -> SpatialIndex:
    """One index of the requested kind over a classification."""
    if kind == "naive":
        return None
    if kind == "grid":
        return derive_macro_grid(b, 16)
    if kind == "lbvh":
        return build_lbvh(flag_bricks(b))
    if kind == "hybrid":
        return build_hybrid(build_svt_grid(b), b)
    if kind in _KD_PARAMS:
        return build_kdtree(build_svt_grid(b), _KD_PARAMS[kind])
    raise ValueError(f"unknown index kind: {kind!r}")


def report_stats(index: SpatialIndex) -> dict[str, int]:
    """Node count and height (nodes on the longest path); 0/0 for indices
    without a tree."""
    kind = index_kind(index)
    if kind in ("naive", "grid"):
        return {"node_count": 0, "height": 0}
    tree = index.tree if kind == "hybrid" else index
    return {"node_count": tree.node_count, "height": tree.height()}


def run_benchmark(cfg: BenchConfig) -> list[BenchRecord]:
    """Classify once, then per index kind: timed builds (median of reps), a
    rotating render pass, one record.  Writes CSV when cfg.output is set."""
    v = load_dataset(cfg.dataset)
    tf = load_tf(cfg.tf)

    t0 = time.perf_counter()
    visible = classify(v, tf, dilate=False)
    occ_pct = 100.0 * occupancy(visible)
    b = classify(v, tf, dilate=True)
    classify_s = time.perf_counter() - t0
    log.info("classification (plain + dilated): %.4f s", classify_s)

    cameras = [
        Camera.orbit(v.dims, azimuth_deg=360.0 * i / cfg.frames, width=cfg.viewport)
        for i in range(cfg.frames)
    ]

    records = []
    for kind in cfg.kinds:
        times = []
        index = None
        for _ in range(cfg.reps):
            t0 = time.perf_counter()
            index = build_index(kind, b)
            times.append(time.perf_counter() - t0)
        build_s = statistics.median(times)
        stats = report_stats(index)

        samples = 0
        t0 = time.perf_counter()
        for cam in cameras:
            frame = render_frame(v, tf, index, cam, dt=cfg.dt)
            samples += frame.sample_count
        render_s = time.perf_counter() - t0
        fps = cfg.frames / render_s if render_s > 0 else float("inf")
        log.info(
            "%s: build %.4f s, %d frames in %.3f s (%.2f fps), %d samples",
            kind, build_s, cfg.frames, render_s, fps, samples,
        )
        records.append(
            BenchRecord(
                dataset=cfg.dataset,
                index=kind,
                occupancy_pct=occ_pct,
                build_s=build_s,
                fps=fps,
                nodes=stats["node_count"],
                height=stats["height"],
                samples=samples,
            )
        )
    if cfg.output is not None:
        Path(cfg.output).write_text(to_csv(records))
    return records


def to_csv(records: list[BenchRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for rec in records:
        writer.writerow(rec.csv_row())
    return buf.getvalue()
