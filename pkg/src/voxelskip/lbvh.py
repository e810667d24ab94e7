"""Linear BVH over visible bricks: flag, compact, Morton-sort, radix-tree.

The hierarchy is implicit in the sorted 30-bit Morton codes; internal node
ranges fall out of longest-common-prefix deltas (Karras-style construction)
and boxes are assembled bottom-up afterwards.  Leaves hold exactly one brick.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .volume import Aabb, BinaryVolume

DEFAULT_BRICK_SIZE = 8
MORTON_AXIS_BITS = 10


class MortonRangeError(ValueError):
    """Coordinate outside the 10-bit-per-axis Morton budget."""


def _spread_bits(v: np.ndarray) -> np.ndarray:
    """Insert two zero bits between each of the low 10 bits."""
    v = v.astype(np.uint64)
    v = (v | (v << 16)) & np.uint64(0x030000FF)
    v = (v | (v << 8)) & np.uint64(0x0300F00F)
    v = (v | (v << 4)) & np.uint64(0x030C30C3)
    v = (v | (v << 2)) & np.uint64(0x09249249)
    return v


def _compact_bits(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.uint64) & np.uint64(0x09249249)
    v = (v | (v >> 2)) & np.uint64(0x030C30C3)
    v = (v | (v >> 4)) & np.uint64(0x0300F00F)
    v = (v | (v >> 8)) & np.uint64(0x030000FF)
    v = (v | (v >> 16)) & np.uint64(0x000003FF)
    return v


def morton_encode(x, y, z):
    """Interleave three 10-bit coordinates: bit i of x lands at code bit 3i,
    y at 3i+1, z at 3i+2.  Accepts scalars or arrays."""
    xa, ya, za = (np.asarray(c, dtype=np.int64) for c in (x, y, z))
    for c in (xa, ya, za):
        if c.size and (c.min() < 0 or c.max() >= 1 << MORTON_AXIS_BITS):
            raise MortonRangeError("coordinates must be in [0, 1024)")
    code = _spread_bits(xa) | (_spread_bits(ya) << np.uint64(1)) | (
        _spread_bits(za) << np.uint64(2)
    )
    code = code.astype(np.uint32)
    return int(code) if code.ndim == 0 else code


def morton_decode(code):
    """Inverse of morton_encode."""
    c = np.asarray(code, dtype=np.uint64)
    x = _compact_bits(c)
    y = _compact_bits(c >> np.uint64(1))
    z = _compact_bits(c >> np.uint64(2))
    if c.ndim == 0:
        return int(x), int(y), int(z)
    return x.astype(np.int64), y.astype(np.int64), z.astype(np.int64)


@dataclass
class BrickSet:
    """The non-empty bricks of a classification, with their Morton codes."""

    brick_size: int
    dims: tuple[int, int, int]
    coords: np.ndarray  # (n, 3) int32 brick coordinates
    codes: np.ndarray  # (n,) uint32

    @property
    def count(self) -> int:
        return len(self.coords)


def flag_bricks(b: BinaryVolume, brick_size: int = DEFAULT_BRICK_SIZE) -> BrickSet:
    """Vote per brick (OR over its flags) and compact to the non-empty ones,
    in scan order."""
    if brick_size < 1:
        raise ValueError("brick_size must be >= 1")
    bs = brick_size
    dims = b.dims
    nb = tuple(-(-d // bs) for d in dims)
    if max(nb) > 1 << MORTON_AXIS_BITS:
        raise MortonRangeError(f"brick grid {nb} exceeds 1024 per axis")
    padded = np.zeros((nb[0] * bs, nb[1] * bs, nb[2] * bs), dtype=bool)
    padded[: dims[0], : dims[1], : dims[2]] = b.bits
    votes = padded.reshape(nb[0], bs, nb[1], bs, nb[2], bs).any(axis=(1, 3, 5))
    coords = np.argwhere(votes).astype(np.int32)
    codes = (
        morton_encode(coords[:, 0], coords[:, 1], coords[:, 2])
        if len(coords)
        else np.empty(0, dtype=np.uint32)
    )
    return BrickSet(brick_size=bs, dims=dims, coords=coords, codes=np.asarray(codes, np.uint32))


@dataclass
class Lbvh:
    """Node-array BVH: internal nodes first (0..n-2), then the n leaves in
    Morton order.  ``left``/``right`` are -1 on leaves; ``leaf_brick`` maps a
    leaf to its row in ``brick_coords``."""

    lo: np.ndarray  # (m, 3) int32 box lower corners
    hi: np.ndarray  # (m, 3) int32
    left: np.ndarray  # (m,) int32
    right: np.ndarray  # (m,) int32
    leaf_brick: np.ndarray  # (m,) int32, -1 on internal nodes
    brick_coords: np.ndarray  # (n, 3) int32, Morton-sorted
    root: int
    brick_size: int
    dims: tuple[int, int, int]

    @property
    def node_count(self) -> int:
        return len(self.left)

    def is_leaf(self, i: int) -> bool:
        return self.left[i] < 0

    def height(self) -> int:
        """Nodes along the longest root-to-leaf path; 0 when empty."""
        if self.node_count == 0:
            return 0
        depth = np.zeros(self.node_count, dtype=np.int64)
        depth[self.root] = 1
        best = 1
        stack = [self.root]
        while stack:
            i = stack.pop()
            if self.left[i] < 0:
                best = max(best, int(depth[i]))
                continue
            for c in (int(self.left[i]), int(self.right[i])):
                depth[c] = depth[i] + 1
                stack.append(c)
        return best


def empty_lbvh(brick_size: int, dims: tuple[int, int, int]) -> Lbvh:
    z3 = np.empty((0, 3), dtype=np.int32)
    z1 = np.empty(0, dtype=np.int32)
    return Lbvh(z3, z3.copy(), z1, z1.copy(), z1.copy(), z3.copy(), -1, brick_size, dims)


@njit(cache=True)
def _common_prefix(keys, i, j, n):
    if j < 0 or j >= n:
        return -1
    x = keys[i] ^ keys[j]
    if x == np.uint64(0):
        return 64
    c = 0
    while (x & (np.uint64(1) << np.uint64(63))) == np.uint64(0):
        x = x << np.uint64(1)
        c += 1
    return c


@njit(cache=True)
def _build_radix_tree(keys, left, right, first, last):
    """Fill child links and covered leaf ranges for internal nodes 0..n-2.
    Leaf k is referenced as node index (n-1)+k."""
    n = len(keys)
    for i in range(n - 1):
        d = 1 if _common_prefix(keys, i, i + 1, n) > _common_prefix(keys, i, i - 1, n) else -1
        delta_min = _common_prefix(keys, i, i - d, n)
        lmax = 2
        while _common_prefix(keys, i, i + lmax * d, n) > delta_min:
            lmax *= 2
        length = 0
        t = lmax // 2
        while t >= 1:
            if _common_prefix(keys, i, i + (length + t) * d, n) > delta_min:
                length += t
            t //= 2
        j = i + length * d
        delta_node = _common_prefix(keys, i, j, n)
        s = 0
        t = length
        while True:
            t = (t + 1) // 2
            if _common_prefix(keys, i, i + (s + t) * d, n) > delta_node:
                s += t
            if t == 1:
                break
        gamma = i + s * d + min(d, 0)
        lo = min(i, j)
        hi = max(i, j)
        first[i] = lo
        last[i] = hi
        left[i] = (n - 1) + gamma if lo == gamma else gamma
        right[i] = (n - 1) + gamma + 1 if hi == gamma + 1 else gamma + 1


@njit(cache=True)
def _refit_boxes(order, left, right, lo, hi):
    """Union child boxes into parents; ``order`` lists internal nodes with
    children strictly before parents."""
    for k in range(len(order)):
        i = order[k]
        l = left[i]
        r = right[i]
        for a in range(3):
            lo[i, a] = min(lo[l, a], lo[r, a])
            hi[i, a] = max(hi[l, a], hi[r, a])


def build_lbvh(bricks: BrickSet) -> Lbvh:
    """Sort bricks by Morton code (ties broken by scan index), derive the
    radix tree, then refit every internal box as the union of its children.
    Leaf boxes are brick boxes clipped to the volume dims."""
    n = bricks.count
    bs = bricks.brick_size
    dims = bricks.dims
    if n == 0:
        return empty_lbvh(bs, dims)
    # augmented sort keys: morton code high, original index low -> unique
    keys = (bricks.codes.astype(np.uint64) << np.uint64(32)) | np.arange(n, dtype=np.uint64)
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    coords = bricks.coords[order]

    leaf_lo = (coords * bs).astype(np.int64)
    leaf_hi = np.minimum(leaf_lo + bs, np.asarray(dims, dtype=np.int64))

    m = 2 * n - 1
    lo = np.zeros((m, 3), dtype=np.int32)
    hi = np.zeros((m, 3), dtype=np.int32)
    left = np.full(m, -1, dtype=np.int32)
    right = np.full(m, -1, dtype=np.int32)
    leaf_brick = np.full(m, -1, dtype=np.int32)
    lo[n - 1 :] = leaf_lo
    hi[n - 1 :] = leaf_hi
    leaf_brick[n - 1 :] = np.arange(n, dtype=np.int32)

    if n > 1:
        first = np.zeros(n - 1, dtype=np.int64)
        last = np.zeros(n - 1, dtype=np.int64)
        _build_radix_tree(keys, left, right, first, last)
        internal_order = np.argsort(last - first, kind="stable").astype(np.int64)
        _refit_boxes(internal_order, left, right, lo, hi)
        root = 0
    else:
        root = 0  # the single leaf occupies slot 0 (m == 1)

    return Lbvh(
        lo=lo,
        hi=hi,
        left=left,
        right=right,
        leaf_brick=leaf_brick,
        brick_coords=coords,
        root=root,
        brick_size=bs,
        dims=dims,
    )


def leaf_boxes(idx: Lbvh) -> list[Aabb]:
    out = []
    for i in range(idx.node_count):
        if idx.is_leaf(i):
            out.append(Aabb(tuple(int(c) for c in idx.lo[i]), tuple(int(c) for c in idx.hi[i])))
    return out
