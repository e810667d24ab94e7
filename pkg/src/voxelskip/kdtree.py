"""Kd-tree builders over occupancy classifications.

Two plane-search strategies share one recursion.  The exhaustive sweep scans
every slab of the node region through three 2-d projections and prefix/suffix
extent accumulations, so each candidate plane is costed in O(1) after an
O(region) setup.  The binned search evaluates only a few candidate planes per
axis, snapped to a coarse cell raster, and resolves child bounds from
precomputed per-cell tight boxes gathered over a Morton code range instead of
touching the voxel data.

The recursion splits while the summed volume of the two child tight boxes
strictly undercuts the node's own volume, halts on a volume floor (a fraction
of the root for shallow trees, an absolute floor for deep ones), and can
force mid-splits on the largest axis until every leaf extent fits a size cap.
Child boxes are tight: exactly so for the sweep, cell-granular for binned
interior nodes, and exact again at binned leaves which get a final
table-driven shrink.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lbvh import morton_encode
from .svt import SvtGrid, shrink_to_occupied
from .volume import Aabb, BinaryVolume

DEFAULT_CELL_SIZE = 8
DEFAULT_BINS = 4

_HALT_VOLUME_DEEP = 512  # 8**3 voxels
_HALT_ROOT_FRACTION = 10  # shallow: halt at <= 1/10 of the root volume

# Sweeping axis a yields extents in row order (a, sec1, sec2); this maps xyz
# component i to its row for each a.
_ROWS_TO_XYZ = ((0, 1, 2), (1, 0, 2), (1, 2, 0))

_FAR = np.int64(1) << np.int64(60)


@dataclass(frozen=True)
class BuildParams:
    """Knobs for :func:`build_kdtree`.

    mode selects the halting rule: "shallow" stops at 10% of the root volume,
    "deep" at an absolute 8^3-voxel floor.  max_leaf_size (deep only) forces
    middle splits until every leaf extent fits.  builder picks the plane
    search: "sweep" is exhaustive, "binned" snaps bins-1 candidates per axis
    to multiples of cell_size.
    """

    mode: str = "shallow"
    max_leaf_size: int | None = None
    builder: str = "sweep"
    bins: int = DEFAULT_BINS
    cell_size: int = DEFAULT_CELL_SIZE

    def __post_init__(self):
        if self.mode not in ("shallow", "deep"):
            raise ValueError(f"unknown mode: {self.mode!r}")
        if self.builder not in ("sweep", "binned"):
            raise ValueError(f"unknown builder: {self.builder!r}")
        if self.max_leaf_size is not None:
            if self.mode != "deep":
                raise ValueError("max_leaf_size only applies to deep trees")
            if self.max_leaf_size < 1:
                raise ValueError("max_leaf_size must be positive")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if self.cell_size < 1:
            raise ValueError("cell_size must be positive")


@dataclass(frozen=True)
class SplitPlane:
    """An axis-aligned cut: voxels with coordinate < position go left."""

    axis: int
    position: int
    cost: int


@dataclass
class KdTree:
    """Flat node arrays; row 0 is the root unless the tree is empty.

    axis < 0 marks a leaf; left/right are row indices, -1 when the child was
    dropped.  Boxes are half-open voxel bounds.
    """

    lo: np.ndarray
    hi: np.ndarray
    axis: np.ndarray
    plane: np.ndarray
    left: np.ndarray
    right: np.ndarray
    root: int
    dims: tuple[int, int, int]

    @property
    def node_count(self) -> int:
        return int(self.axis.shape[0])

    def is_leaf(self, i: int) -> bool:
        return bool(self.axis[i] < 0)

    def node_box(self, i: int) -> Aabb:
        return Aabb(tuple(int(v) for v in self.lo[i]), tuple(int(v) for v in self.hi[i]))

    def leaf_mask(self) -> np.ndarray:
        return self.axis < 0

    def height(self) -> int:
        """Number of nodes on the longest root-to-leaf path."""
        if self.node_count == 0:
            return 0
        best = 0
        stack = [(self.root, 1)]
        while stack:
            i, d = stack.pop()
            best = max(best, d)
            for c in (int(self.left[i]), int(self.right[i])):
                if c >= 0:
                    stack.append((c, d + 1))
        return best


def empty_kdtree(dims: tuple[int, int, int]) -> KdTree:
    z3 = np.zeros((0, 3), dtype=np.int32)
    z = np.zeros(0, dtype=np.int32)
    return KdTree(
        lo=z3,
        hi=z3.copy(),
        axis=np.zeros(0, dtype=np.int8),
        plane=z,
        left=z.copy(),
        right=z.copy(),
        root=-1,
        dims=dims,
    )


# -- exhaustive sweep ---------------------------------------------------------


def _slab_spans(p: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-row occupancy flag and first/last set column of a 2-d mask."""
    ok = p.any(axis=1)
    first = np.argmax(p, axis=1).astype(np.int64)
    last = (p.shape[1] - 1 - np.argmax(p[:, ::-1], axis=1)).astype(np.int64)
    return ok, first, last


def _axis_sweep(pa: np.ndarray, pb: np.ndarray):
    """Running tight-extent bounds for every cut along the shared leading axis.

    pa/pb project the region onto (axis, other1) and (axis, other2).  Returns
    (preL, preH, sufL, sufH), each (3, e): rows are (axis, other1, other2)
    first/last coordinates of the tight box over slabs [0..i] (pre) or [i..]
    (suf), with empty prefixes/suffixes marked by a last coordinate < 0.
    """
    e = pa.shape[0]
    idx = np.arange(e, dtype=np.int64)
    ok, f1, l1 = _slab_spans(pa)
    _, f2, l2 = _slab_spans(pb)
    firsts = np.stack([
        np.where(ok, idx, _FAR),
        np.where(ok, f1, _FAR),
        np.where(ok, f2, _FAR),
    ])
    lasts = np.stack([
        np.where(ok, idx, -1),
        np.where(ok, l1, -1),
        np.where(ok, l2, -1),
    ])
    pre_lo = np.minimum.accumulate(firsts, axis=1)
    pre_hi = np.maximum.accumulate(lasts, axis=1)
    suf_lo = np.minimum.accumulate(firsts[:, ::-1], axis=1)[:, ::-1]
    suf_hi = np.maximum.accumulate(lasts[:, ::-1], axis=1)[:, ::-1]
    return pre_lo, pre_hi, suf_lo, suf_hi


def _side_volumes(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    empty = hi[0] < 0
    w = np.where(empty[None, :], 0, hi - lo + 1)
    return w.prod(axis=0)


def _sweep_search(region: np.ndarray):
    """Best cut of a non-empty region; returns (axis, cut, cost, left, right)
    in region-local coordinates or None when no axis admits a cut.  left and
    right are ((lo rows), (hi rows)) in sweep row order, or None for an empty
    side."""
    projections = (region.any(axis=2), region.any(axis=1), region.any(axis=0))
    best = None
    for a in range(3):
        if a == 0:
            pa, pb = projections[0], projections[1]
        elif a == 1:
            pa, pb = projections[0].T, projections[2]
        else:
            pa, pb = projections[1].T, projections[2].T
        e = pa.shape[0]
        if e < 2:
            continue
        pre_lo, pre_hi, suf_lo, suf_hi = _axis_sweep(pa, pb)
        cost = _side_volumes(pre_lo, pre_hi)[:-1] + _side_volumes(suf_lo, suf_hi)[1:]
        k = int(np.argmin(cost)) + 1
        c = int(cost[k - 1])
        if best is not None and c >= best[2]:
            continue
        left = None
        if pre_hi[0, k - 1] >= 0:
            left = (pre_lo[:, k - 1].copy(), pre_hi[:, k - 1] + 1)
        right = None
        if suf_hi[0, k] >= 0:
            right = (suf_lo[:, k].copy(), suf_hi[:, k] + 1)
        best = (a, k, c, left, right)
    return best


def _local_to_global(box: Aabb, axis: int, side) -> Aabb | None:
    if side is None:
        return None
    rows = _ROWS_TO_XYZ[axis]
    lo = tuple(box.lo[i] + int(side[0][rows[i]]) for i in range(3))
    hi = tuple(box.lo[i] + int(side[1][rows[i]]) for i in range(3))
    return Aabb(lo, hi)


def _region_tight_volume(region: np.ndarray) -> int:
    vol = 1
    for a in range(3):
        others = tuple(i for i in range(3) if i != a)
        line = region.any(axis=others)
        first = int(np.argmax(line))
        last = line.shape[0] - 1 - int(np.argmax(line[::-1]))
        vol *= last - first + 1
    return vol


def sweep_best_plane(g: SvtGrid, box: Aabb) -> SplitPlane | None:
    """Exhaustive search for the cut minimizing volume(tight left) +
    volume(tight right); None when no cut strictly beats the volume of the
    box's own tight box.  Ties resolve to the lower axis, then the lower
    position."""
    clipped = box.intersect(Aabb((0, 0, 0), g.dims))
    if clipped is None:
        return None
    (x0, y0, z0), (x1, y1, z1) = clipped.lo, clipped.hi
    region = g.bits[x0:x1, y0:y1, z0:z1]
    if not region.any():
        return None
    found = _sweep_search(region)
    if found is None:
        return None
    a, k, cost, _, _ = found
    if cost >= _region_tight_volume(region):
        return None
    return SplitPlane(axis=a, position=clipped.lo[a] + k, cost=cost)


# -- binned search over per-cell boxes ----------------------------------------


@dataclass
class CellBoxList:
    """Tight flag bounds of every coarse cell, sorted by cell Morton code.

    Rows for unoccupied cells are placeholders; consult ``occupied`` first.
    """

    cell_size: int
    cells_dims: tuple[int, int, int]
    dims: tuple[int, int, int]
    codes: np.ndarray
    coords: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    occupied: np.ndarray


def precompute_cell_boxes(b: BinaryVolume, cell_size: int = DEFAULT_CELL_SIZE) -> CellBoxList:
    """One pass over the classification producing per-cell tight boxes."""
    cs = cell_size
    dims = b.dims
    nc = tuple(-(-d // cs) for d in dims)
    padded = np.zeros((nc[0] * cs, nc[1] * cs, nc[2] * cs), dtype=bool)
    padded[: dims[0], : dims[1], : dims[2]] = b.bits
    v = padded.reshape(nc[0], cs, nc[1], cs, nc[2], cs)
    occupied = v.any(axis=(1, 3, 5))
    slabs_x = v.any(axis=(3, 5)).transpose(0, 2, 3, 1)
    slabs_y = v.any(axis=(1, 5)).transpose(0, 1, 3, 2)
    slabs_z = v.any(axis=(1, 3))

    def spans(m):
        first = np.argmax(m, axis=-1)
        last = cs - 1 - np.argmax(m[..., ::-1], axis=-1)
        return first, last

    fx, lx = spans(slabs_x)
    fy, ly = spans(slabs_y)
    fz, lz = spans(slabs_z)
    cx, cy, cz = np.indices(nc)
    lo = np.stack([cx * cs + fx, cy * cs + fy, cz * cs + fz], axis=-1)
    hi = np.stack([cx * cs + lx + 1, cy * cs + ly + 1, cz * cs + lz + 1], axis=-1)
    codes = morton_encode(cx, cy, cz)
    order = np.argsort(codes.reshape(-1))
    return CellBoxList(
        cell_size=cs,
        cells_dims=nc,
        dims=dims,
        codes=codes.reshape(-1)[order],
        coords=np.stack([cx, cy, cz], axis=-1).reshape(-1, 3)[order].astype(np.int32),
        lo=lo.reshape(-1, 3)[order].astype(np.int32),
        hi=hi.reshape(-1, 3)[order].astype(np.int32),
        occupied=occupied.reshape(-1)[order],
    )


def _cells_reduce(cells: CellBoxList, region: Aabb) -> Aabb | None:
    """Bounds of a region as the union of tight boxes of the occupied cells
    it intersects, clipped back to the region.  The candidate cells come from
    one contiguous Morton code range (codes are monotone per axis, so the
    corner cells bound every code in between conservatively)."""
    cs = cells.cell_size
    clo = tuple(max(v // cs, 0) for v in region.lo)
    chi = tuple(min((v - 1) // cs, n - 1) for v, n in zip(region.hi, cells.cells_dims))
    if any(a > b for a, b in zip(clo, chi)):
        return None
    i0 = int(np.searchsorted(cells.codes, morton_encode(*clo), side="left"))
    i1 = int(np.searchsorted(cells.codes, morton_encode(*chi), side="right"))
    cc = cells.coords[i0:i1]
    sel = cells.occupied[i0:i1] & np.all((cc >= clo) & (cc <= chi), axis=1)
    if not sel.any():
        return None
    lo = np.maximum(cells.lo[i0:i1][sel].min(axis=0), region.lo)
    hi = np.minimum(cells.hi[i0:i1][sel].max(axis=0), region.hi)
    if np.any(lo >= hi):
        return None
    return Aabb(tuple(int(v) for v in lo), tuple(int(v) for v in hi))


def _snapped_positions(lo: int, hi: int, bins: int, cell_size: int) -> list[int]:
    extent = hi - lo
    raw = lo + np.arange(1, bins) * (extent / bins)
    snapped = (np.floor(raw / cell_size + 0.5).astype(np.int64) * cell_size).tolist()
    return sorted({p for p in snapped if lo < p < hi})


def _binned_search(cells: CellBoxList, box: Aabb, bins: int):
    """Best snapped cut of a box; (axis, position, cost, left, right) or None
    when no candidate survives snapping."""
    best = None
    for a in range(3):
        for p in _snapped_positions(box.lo[a], box.hi[a], bins, cells.cell_size):
            left_hi = list(box.hi)
            left_hi[a] = p
            right_lo = list(box.lo)
            right_lo[a] = p
            lb = _cells_reduce(cells, Aabb(box.lo, tuple(left_hi)))
            rb = _cells_reduce(cells, Aabb(tuple(right_lo), box.hi))
            cost = (lb.volume() if lb else 0) + (rb.volume() if rb else 0)
            if best is None or cost < best[2]:
                best = (a, p, cost, lb, rb)
    return best


def binned_best_plane(cells: CellBoxList, box: Aabb, bins: int = DEFAULT_BINS) -> SplitPlane | None:
    """Like :func:`sweep_best_plane` but restricted to bins-1 candidate cuts
    per axis snapped to the cell raster, with child bounds resolved from the
    per-cell boxes rather than the voxel data."""
    target = _cells_reduce(cells, box)
    if target is None:
        return None
    found = _binned_search(cells, box, bins)
    if found is None or found[2] >= target.volume():
        return None
    return SplitPlane(axis=found[0], position=found[1], cost=found[2])


# -- tree construction --------------------------------------------------------


def build_kdtree(g: SvtGrid, params: BuildParams | None = None) -> KdTree:
    """Recursive top-down build over a table grid.

    The root box is the exact tight box of the whole volume.  A node splits
    when the best plane's cost strictly undercuts its own volume, else it
    halts by the mode's volume rule; a leaf whose extent exceeds
    max_leaf_size is still forced apart at the middle of its largest axis
    (snapped to the cell raster for the binned builder).  Children with no
    occupancy are dropped.
    """
    params = params or BuildParams()
    root_box = shrink_to_occupied(g, Aabb((0, 0, 0), g.dims))
    if root_box is None:
        return empty_kdtree(g.dims)
    root_vol = root_box.volume()
    binned = params.builder == "binned"
    cells = precompute_cell_boxes(BinaryVolume(g.bits), params.cell_size) if binned else None

    rows_lo: list[tuple[int, int, int]] = []
    rows_hi: list[tuple[int, int, int]] = []
    rows_axis: list[int] = []
    rows_plane: list[int] = []
    rows_left: list[int] = []
    rows_right: list[int] = []

    def emit(box: Aabb, axis: int, plane: int) -> int:
        rows_lo.append(box.lo)
        rows_hi.append(box.hi)
        rows_axis.append(axis)
        rows_plane.append(plane)
        rows_left.append(-1)
        rows_right.append(-1)
        return len(rows_axis) - 1

    def halted(vol: int) -> bool:
        if params.mode == "shallow":
            return vol * _HALT_ROOT_FRACTION <= root_vol
        return vol <= _HALT_VOLUME_DEEP

    def best_split(box: Aabb):
        # (axis, position, left box, right box) when the cut strictly beats
        # the node's own volume, else None.
        if binned:
            found = _binned_search(cells, box, params.bins)
            if found is None or found[2] >= box.volume():
                return None
            return found[0], found[1], found[3], found[4]
        (x0, y0, z0), (x1, y1, z1) = box.lo, box.hi
        found = _sweep_search(g.bits[x0:x1, y0:y1, z0:z1])
        if found is None or found[2] >= box.volume():
            return None
        a, k, _, left, right = found
        return a, box.lo[a] + k, _local_to_global(box, a, left), _local_to_global(box, a, right)

    def forced_split(box: Aabb):
        mls = params.max_leaf_size
        if mls is None:
            return None
        ext = box.extent()
        if max(ext) <= mls:
            return None
        axis = int(np.argmax(ext))
        lo, hi = box.lo[axis], box.hi[axis]
        pos = lo + ext[axis] // 2
        if binned:
            cs = params.cell_size
            first = (lo // cs + 1) * cs
            last = ((hi - 1) // cs) * cs
            if first <= last:  # an interior raster plane exists
                pos = min(max(int(np.floor(pos / cs + 0.5)) * cs, first), last)
        left_hi = list(box.hi)
        left_hi[axis] = pos
        right_lo = list(box.lo)
        right_lo[axis] = pos
        left_region = Aabb(box.lo, tuple(left_hi))
        right_region = Aabb(tuple(right_lo), box.hi)
        if binned:
            lb, rb = _cells_reduce(cells, left_region), _cells_reduce(cells, right_region)
        else:
            lb, rb = shrink_to_occupied(g, left_region), shrink_to_occupied(g, right_region)
        return axis, pos, lb, rb

    def build(box: Aabb) -> int | None:
        split = None if halted(box.volume()) else best_split(box)
        if split is None:
            split = forced_split(box)
        if split is None:
            leaf_box = shrink_to_occupied(g, box) if binned else box
            if leaf_box is None:
                return None
            return emit(leaf_box, -1, -1)
        axis, pos, lb, rb = split
        i = emit(box, axis, pos)
        li = build(lb) if lb is not None else None
        ri = build(rb) if rb is not None else None
        rows_left[i] = -1 if li is None else li
        rows_right[i] = -1 if ri is None else ri
        return i

    root = build(root_box)
    if root is None:
        return empty_kdtree(g.dims)
    return KdTree(
        lo=np.asarray(rows_lo, dtype=np.int32),
        hi=np.asarray(rows_hi, dtype=np.int32),
        axis=np.asarray(rows_axis, dtype=np.int8),
        plane=np.asarray(rows_plane, dtype=np.int32),
        left=np.asarray(rows_left, dtype=np.int32),
        right=np.asarray(rows_right, dtype=np.int32),
        root=root,
        dims=g.dims,
    )
