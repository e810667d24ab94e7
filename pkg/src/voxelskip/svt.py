"""Per-brick summed volume tables over the binary classification.

Each brick of ``brick_size**3`` voxels carries its own local 3-d prefix-sum
table with a zero border, so counting set flags inside any axis-aligned box
is an 8-term inclusion-exclusion per overlapped brick with no edge branches.
Partial border bricks are zero-padded to the full logical brick extent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .volume import Aabb, BinaryVolume

DEFAULT_BRICK_SIZE = 32


@dataclass
class SvtGrid:
    brick_size: int
    bricks_dims: tuple[int, int, int]
    tables: np.ndarray  # (nbx, nby, nbz, bs+1, bs+1, bs+1) uint32
    dims: tuple[int, int, int]
    bits: np.ndarray  # the classification the tables were built over


@dataclass
class MacroGrid:
    cell_size: int
    cells_dims: tuple[int, int, int]
    dims: tuple[int, int, int]
    occupied: np.ndarray  # bool per cell

    def storage_bytes(self) -> int:
        return int(np.packbits(self.occupied.reshape(-1)).nbytes)


def build_svt_grid(b: BinaryVolume, brick_size: int = DEFAULT_BRICK_SIZE) -> SvtGrid:
    """Cumulative-count tables for every brick, corner (i,j,k) holding the
    number of set flags in the brick-local prefix box [0,i)x[0,j)x[0,k)."""
    if brick_size < 2:
        raise ValueError("brick_size must be >= 2")
    bs = brick_size
    dims = b.dims
    nb = tuple(-(-d // bs) for d in dims)
    padded = np.zeros((nb[0] * bs, nb[1] * bs, nb[2] * bs), dtype=np.uint32)
    padded[: dims[0], : dims[1], : dims[2]] = b.bits
    blocks = (
        padded.reshape(nb[0], bs, nb[1], bs, nb[2], bs).transpose(0, 2, 4, 1, 3, 5).copy()
    )
    for axis in (3, 4, 5):
        np.cumsum(blocks, axis=axis, out=blocks)
    tables = np.zeros((nb[0], nb[1], nb[2], bs + 1, bs + 1, bs + 1), dtype=np.uint32)
    tables[:, :, :, 1:, 1:, 1:] = blocks
    return SvtGrid(brick_size=bs, bricks_dims=nb, tables=tables, dims=dims, bits=b.bits)


def _clip_box(g: SvtGrid, box: Aabb) -> Aabb | None:
    full = Aabb((0, 0, 0), g.dims)
    return box.intersect(full)


def box_count(g: SvtGrid, box: Aabb) -> int:
    """Exact number of set flags inside ``box``, never approximate."""
    box = _clip_box(g, box)
    if box is None:
        return 0
    bs = g.brick_size
    spans = []
    for axis in range(3):
        lo, hi = box.lo[axis], box.hi[axis]
        b0, b1 = lo // bs, (hi - 1) // bs
        idx = np.arange(b0, b1 + 1)
        loc_lo = np.clip(lo - idx * bs, 0, bs)
        loc_hi = np.clip(hi - idx * bs, 0, bs)
        spans.append((b0, b1, loc_lo, loc_hi))
    (bx0, bx1, lx0, lx1), (by0, by1, ly0, ly1), (bz0, bz1, lz0, lz1) = spans
    t = g.tables[bx0 : bx1 + 1, by0 : by1 + 1, bz0 : bz1 + 1]
    total = np.int64(0)
    for sx, xs in ((1, lx1), (-1, lx0)):
        for sy, ys in ((1, ly1), (-1, ly0)):
            for sz, zs in ((1, lz1), (-1, lz0)):
                ix = np.arange(t.shape[0])[:, None, None]
                iy = np.arange(t.shape[1])[None, :, None]
                iz = np.arange(t.shape[2])[None, None, :]
                term = t[ix, iy, iz, xs[:, None, None], ys[None, :, None], zs[None, None, :]]
                total += sx * sy * sz * term.sum(dtype=np.int64)
    return int(total)


def _axis_range_box(box: Aabb, axis: int, lo: int, hi: int) -> Aabb:
    blo = list(box.lo)
    bhi = list(box.hi)
    blo[axis], bhi[axis] = lo, hi
    return Aabb(tuple(blo), tuple(bhi))


def shrink_to_occupied(g: SvtGrid, box: Aabb) -> Aabb | None:
    """Minimal box containing every set flag inside ``box``, or None.

    Each of the six faces is found by a binary search on monotone slab
    counts; the shrunk box keeps the exact flag count of its parent.
    """
    box = _clip_box(g, box)
    if box is None or box_count(g, box) == 0:
        return None
    lo = list(box.lo)
    hi = list(box.hi)
    for axis in range(3):
        a0, a1 = box.lo[axis], box.hi[axis]
        # first coordinate with a flag: smallest c where [a0, c) is non-empty
        low, high = a0 + 1, a1
        while low < high:
            mid = (low + high) // 2
            if box_count(g, _axis_range_box(box, axis, a0, mid)) > 0:
                high = mid
            else:
                low = mid + 1
        lo[axis] = low - 1
        # last coordinate with a flag: largest c where [c, a1) is non-empty
        low, high = a0, a1 - 1
        while low < high:
            mid = (low + high + 1) // 2
            if box_count(g, _axis_range_box(box, axis, mid, a1)) > 0:
                low = mid
            else:
                high = mid - 1
        hi[axis] = low + 1
    return Aabb(tuple(lo), tuple(hi))


def derive_macro_grid(source: SvtGrid | BinaryVolume, cell_size: int) -> MacroGrid:
    """Coarse occupancy grid: a cell is occupied iff it holds >= 1 set flag.
    Border cells are clipped to the volume dims."""
    if cell_size < 2:
        raise ValueError("cell_size must be >= 2")
    if isinstance(source, BinaryVolume):
        return _macro_from_bits(source.bits, cell_size)
    g = source
    cs = cell_size
    dims = g.dims
    nc = tuple(-(-d // cs) for d in dims)
    if g.brick_size % cs == 0:
        # cells nest inside bricks: one 8-corner lookup per cell, batched
        counts = _aligned_cell_counts(g, cs, nc)
        return MacroGrid(cell_size=cs, cells_dims=nc, dims=dims, occupied=counts > 0)
    occupied = np.zeros(nc, dtype=bool)
    for cx in range(nc[0]):
        for cy in range(nc[1]):
            for cz in range(nc[2]):
                cell = Aabb(
                    (cx * cs, cy * cs, cz * cs),
                    ((cx + 1) * cs, (cy + 1) * cs, (cz + 1) * cs),
                )
                occupied[cx, cy, cz] = box_count(g, cell) > 0
    return MacroGrid(cell_size=cs, cells_dims=nc, dims=dims, occupied=occupied)


def _macro_from_bits(bits: np.ndarray, cs: int) -> MacroGrid:
    dims = bits.shape
    nc = tuple(-(-d // cs) for d in dims)
    padded = np.zeros((nc[0] * cs, nc[1] * cs, nc[2] * cs), dtype=bool)
    padded[: dims[0], : dims[1], : dims[2]] = bits
    occ = padded.reshape(nc[0], cs, nc[1], cs, nc[2], cs).any(axis=(1, 3, 5))
    return MacroGrid(cell_size=cs, cells_dims=nc, dims=dims, occupied=occ)


def _aligned_cell_counts(g: SvtGrid, cs: int, nc: tuple[int, int, int]) -> np.ndarray:
    """Per-cell flag counts when cell_size divides brick_size: every cell
    lies within exactly one brick, so its count is a single inclusion-
    exclusion on that brick's table.  Vectorized over all cells."""
    bs = g.brick_size
    brick = []
    loc0 = []
    loc1 = []
    for axis in range(3):
        c = np.arange(nc[axis]) * cs
        b = c // bs
        brick.append(b)
        loc0.append(c - b * bs)
        loc1.append(loc0[axis] + cs)
    bx = brick[0][:, None, None]
    by = brick[1][None, :, None]
    bz = brick[2][None, None, :]
    counts = np.zeros(nc, dtype=np.int64)
    for sx, xs in ((1, loc1[0]), (-1, loc0[0])):
        for sy, ys in ((1, loc1[1]), (-1, loc0[1])):
            for sz, zs in ((1, loc1[2]), (-1, loc0[2])):
                term = g.tables[
                    bx, by, bz, xs[:, None, None], ys[None, :, None], zs[None, None, :]
                ]
                counts += sx * sy * sz * term.astype(np.int64)
    return counts
