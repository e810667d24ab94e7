"""Orthographic ray marcher with pluggable empty-space skipping.

Traversal produces per-ray lists of [t0, t1) intervals; integration walks a
sampling lattice t = t_entry + k*dt anchored at the ray's entry into the full
volume box, taking only the lattice points that fall inside an interval.
Because every index kind samples the same lattice, skipping can never shift
sample positions — a skipping renderer differs from the naive one only by
omitting samples, and with a one-voxel-dilated classification the omitted
samples all have zero alpha, making frames bit-identical.

All plane crossings are computed directly as (coord - origin) * (1/d) rather
than accumulated, so interval endpoints are reproducible across kernels: the
hybrid traversal emits exactly the intersection of the tree and grid interval
lists, and intervals of nested boxes nest as floats.

Rays are marched in chunks through numba kernels with per-chunk segment
buffers that regrow on overflow; pixels within a chunk are independent, so
frames are deterministic regardless of thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .hybrid import HybridGrid
from .kdtree import KdTree
from .lbvh import Lbvh
from .svt import MacroGrid
from .volume import TransferFunction, Volume

DEFAULT_DT = 0.5

_CHUNK = 16384
_INITIAL_SEGMENT_CAP = 32
_FAR = 1e300

SpatialIndex = None | MacroGrid | Lbvh | KdTree | HybridGrid


def index_kind(index: SpatialIndex) -> str:
    if index is None:
        return "naive"
    if isinstance(index, MacroGrid):
        return "grid"
    if isinstance(index, Lbvh):
        return "lbvh"
    if isinstance(index, KdTree):
        return "kd"
    if isinstance(index, HybridGrid):
        return "hybrid"
    raise TypeError(f"not a spatial index: {type(index).__name__}")


# -- camera and frame ---------------------------------------------------------


def _normalize(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ValueError("zero-length vector")
    return v / n


@dataclass(frozen=True)
class Camera:
    """Orthographic frame: rays start on the eye plane and share a direction.

    extent is the world-space width of the image; pixels are square, so the
    world height is extent * height / width.
    """

    eye: tuple[float, float, float]
    direction: tuple[float, float, float]
    up: tuple[float, float, float]
    extent: float
    width: int
    height: int

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        u = np.asarray(self.up, dtype=np.float64)
        if abs(np.linalg.norm(d) - 1.0) > 1e-6 or abs(np.linalg.norm(u) - 1.0) > 1e-6:
            raise ValueError("direction and up must be unit vectors")
        if np.linalg.norm(np.cross(d, u)) < 1e-6:
            raise ValueError("direction and up are collinear")
        if self.extent <= 0 or self.width < 1 or self.height < 1:
            raise ValueError("bad viewport")

    @classmethod
    def orbit(
        cls,
        dims: tuple[int, int, int],
        azimuth_deg: float,
        elevation_deg: float = 0.0,
        zoom: float = 1.0,
        width: int = 512,
        height: int | None = None,
    ) -> "Camera":
        """Camera on the volume's bounding sphere looking at its center.

        The orbit is about the volume's vertical (y) axis; at zoom 1 the
        viewport extent equals the bounding-sphere diameter so the whole
        volume stays in frame at every angle.
        """
        if zoom <= 0:
            raise ValueError("zoom must be positive")
        center = np.asarray(dims, dtype=np.float64) * 0.5
        diameter = float(np.linalg.norm(np.asarray(dims, dtype=np.float64)))
        az = math.radians(azimuth_deg)
        el = math.radians(max(-89.9, min(89.9, elevation_deg)))
        u = np.array(
            [math.cos(el) * math.sin(az), math.sin(el), math.cos(el) * math.cos(az)]
        )
        eye = center + diameter * u
        d = _normalize(center - eye)
        right = np.cross(d, np.array([0.0, 1.0, 0.0]))
        if np.linalg.norm(right) < 1e-9:
            right = np.array([1.0, 0.0, 0.0])
        right = _normalize(right)
        up = _normalize(np.cross(right, d))
        return cls(
            eye=tuple(eye),
            direction=tuple(d),
            up=tuple(up),
            extent=diameter / zoom,
            width=width,
            height=height if height is not None else width,
        )

    def ray_origins(self) -> np.ndarray:
        """(h*w, 3) origins in image row-major order, top row first."""
        d = np.asarray(self.direction)
        up = np.asarray(self.up)
        right = _normalize(np.cross(d, up))
        up = _normalize(np.cross(right, d))
        scale = self.extent / self.width
        xs = (np.arange(self.width) + 0.5 - self.width / 2.0) * scale
        ys = (self.height / 2.0 - np.arange(self.height) - 0.5) * scale
        eye = np.asarray(self.eye)
        origins = (
            eye[None, None, :]
            + ys[:, None, None] * up[None, None, :]
            + xs[None, :, None] * right[None, None, :]
        )
        return np.ascontiguousarray(origins.reshape(-1, 3), dtype=np.float64)


@dataclass(frozen=True)
class Ray:
    origin: tuple[float, float, float]
    direction: tuple[float, float, float]


@dataclass
class RaySegmentList:
    """Sorted disjoint [t0, t1) intervals to integrate along one ray."""

    t: np.ndarray  # (m, 2) float64

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64).reshape(-1, 2)

    @property
    def count(self) -> int:
        return int(self.t.shape[0])

    def as_pairs(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in self.t]


@dataclass
class Frame:
    """Premultiplied RGBA8 image plus the number of field samples taken."""

    width: int
    height: int
    pixels: np.ndarray  # (height, width, 4) uint8
    sample_count: int

    def to_raw(self) -> bytes:
        return self.pixels.tobytes()

    def to_png(self, path) -> None:
        from PIL import Image

        Image.fromarray(self.pixels, mode="RGBA").save(path)


# -- numba kernels ------------------------------------------------------------


@njit(cache=True)
def _slab(ox, oy, oz, ix, iy, iz, zx, zy, zz, lx, ly, lz, hx, hy, hz):
    """Ray vs box [l, h); returns (hit, t0, t1).  z* flag a zero direction
    component, i* hold reciprocals of the others."""
    tmin = -_FAR
    tmax = _FAR
    if zx:
        if ox < lx or ox >= hx:
            return False, 0.0, 0.0
    else:
        ta = (lx - ox) * ix
        tb = (hx - ox) * ix
        if ta > tb:
            ta, tb = tb, ta
        if ta > tmin:
            tmin = ta
        if tb < tmax:
            tmax = tb
    if zy:
        if oy < ly or oy >= hy:
            return False, 0.0, 0.0
    else:
        ta = (ly - oy) * iy
        tb = (hy - oy) * iy
        if ta > tb:
            ta, tb = tb, ta
        if ta > tmin:
            tmin = ta
        if tb < tmax:
            tmax = tb
    if zz:
        if oz < lz or oz >= hz:
            return False, 0.0, 0.0
    else:
        ta = (lz - oz) * iz
        tb = (hz - oz) * iz
        if ta > tb:
            ta, tb = tb, ta
        if ta > tmin:
            tmin = ta
        if tb < tmax:
            tmax = tb
    if tmax <= tmin:
        return False, 0.0, 0.0
    return True, tmin, tmax


@njit(cache=True)
def _sort_merge(seg, m):
    """Insertion sort rows [0:m] by t0, then merge touching intervals and
    drop empty ones; returns the new count."""
    for i in range(1, m):
        a0 = seg[i, 0]
        a1 = seg[i, 1]
        j = i - 1
        while j >= 0 and seg[j, 0] > a0:
            seg[j + 1, 0] = seg[j, 0]
            seg[j + 1, 1] = seg[j, 1]
            j -= 1
        seg[j + 1, 0] = a0
        seg[j + 1, 1] = a1
    w = 0
    for i in range(m):
        t0 = seg[i, 0]
        t1 = seg[i, 1]
        if t1 <= t0:
            continue
        if w > 0 and t0 <= seg[w - 1, 1]:
            if t1 > seg[w - 1, 1]:
                seg[w - 1, 1] = t1
        else:
            seg[w, 0] = t0
            seg[w, 1] = t1
            w += 1
    return w


@njit(cache=True)
def _ray_setup(origins, direction, r):
    ox = origins[r, 0]
    oy = origins[r, 1]
    oz = origins[r, 2]
    dx = direction[0]
    dy = direction[1]
    dz = direction[2]
    zx = dx == 0.0
    zy = dy == 0.0
    zz = dz == 0.0
    ix = 0.0 if zx else 1.0 / dx
    iy = 0.0 if zy else 1.0 / dy
    iz = 0.0 if zz else 1.0 / dz
    return ox, oy, oz, ix, iy, iz, zx, zy, zz


@njit(cache=True, parallel=True)
def _k_naive(origins, direction, nx, ny, nz, segs, counts):
    for r in prange(origins.shape[0]):
        ox, oy, oz, ix, iy, iz, zx, zy, zz = _ray_setup(origins, direction, r)
        hit, t0, t1 = _slab(
            ox, oy, oz, ix, iy, iz, zx, zy, zz, 0.0, 0.0, 0.0, nx, ny, nz
        )
        if hit:
            segs[r, 0, 0] = t0
            segs[r, 0, 1] = t1
            counts[r] = 1
        else:
            counts[r] = 0


@njit(cache=True)
def _dda_runs(
    ox, oy, oz, dx, dy, dz, ix, iy, iz, zx, zy, zz,
    occ, cs, t_in, t_out, segs, row, w, cap,
):
    """March macro cells over [t_in, t_out), appending occupied-cell runs to
    segs[row, w:].  Returns the count the row WOULD need; entries past cap
    are dropped (caller regrows and retries)."""
    ncx, ncy, ncz = occ.shape
    px = ox + t_in * dx
    py = oy + t_in * dy
    pz = oz + t_in * dz
    cx = int(np.floor(px / cs))
    cy = int(np.floor(py / cs))
    cz = int(np.floor(pz / cs))
    if cx < 0:
        cx = 0
    if cy < 0:
        cy = 0
    if cz < 0:
        cz = 0
    if cx > ncx - 1:
        cx = ncx - 1
    if cy > ncy - 1:
        cy = ncy - 1
    if cz > ncz - 1:
        cz = ncz - 1
    sx = 0 if zx else (1 if ix > 0.0 else -1)
    sy = 0 if zy else (1 if iy > 0.0 else -1)
    sz = 0 if zz else (1 if iz > 0.0 else -1)
    tnx = _FAR if sx == 0 else ((cx + (1 if sx > 0 else 0)) * cs - ox) * ix
    tny = _FAR if sy == 0 else ((cy + (1 if sy > 0 else 0)) * cs - oy) * iy
    tnz = _FAR if sz == 0 else ((cz + (1 if sz > 0 else 0)) * cs - oz) * iz
    open_run = False
    run_t0 = 0.0
    tcur = t_in
    max_steps = ncx + ncy + ncz + 3
    for _ in range(max_steps):
        tn = tnx
        if tny < tn:
            tn = tny
        if tnz < tn:
            tn = tnz
        if occ[cx, cy, cz]:
            if not open_run:
                open_run = True
                run_t0 = tcur
        else:
            if open_run:
                if w < cap:
                    segs[row, w, 0] = run_t0
                    segs[row, w, 1] = tcur
                w += 1
                open_run = False
        if tn >= t_out:
            break
        if tnx == tn:
            cx += sx
            tnx = ((cx + (1 if sx > 0 else 0)) * cs - ox) * ix
        if tny == tn:
            cy += sy
            tny = ((cy + (1 if sy > 0 else 0)) * cs - oy) * iy
        if tnz == tn:
            cz += sz
            tnz = ((cz + (1 if sz > 0 else 0)) * cs - oz) * iz
        tcur = tn
        if cx < 0 or cy < 0 or cz < 0 or cx >= ncx or cy >= ncy or cz >= ncz:
            break
    if open_run:
        if w < cap:
            segs[row, w, 0] = run_t0
            segs[row, w, 1] = t_out
        w += 1
    return w


@njit(cache=True, parallel=True)
def _k_grid(origins, direction, occ, cs, nx, ny, nz, segs, counts, needed):
    cap = segs.shape[1]
    for r in prange(origins.shape[0]):
        ox, oy, oz, ix, iy, iz, zx, zy, zz = _ray_setup(origins, direction, r)
        hit, t0, t1 = _slab(
            ox, oy, oz, ix, iy, iz, zx, zy, zz, 0.0, 0.0, 0.0, nx, ny, nz
        )
        if not hit:
            counts[r] = 0
            needed[r] = 0
            continue
        w = _dda_runs(
            ox, oy, oz, direction[0], direction[1], direction[2],
            ix, iy, iz, zx, zy, zz, occ, cs, t0, t1, segs, r, 0, cap,
        )
        needed[r] = w
        if w > cap:
            counts[r] = 0
        else:
            counts[r] = _sort_merge(segs[r], w)


@njit(cache=True, parallel=True)
def _k_bvh(
    origins, direction, node_lo, node_hi, leaf, left, right, root,
    nx, ny, nz, stack_cap, segs, counts, needed,
):
    cap = segs.shape[1]
    for r in prange(origins.shape[0]):
        ox, oy, oz, ix, iy, iz, zx, zy, zz = _ray_setup(origins, direction, r)
        hit, tmin, tmax = _slab(
            ox, oy, oz, ix, iy, iz, zx, zy, zz, 0.0, 0.0, 0.0, nx, ny, nz
        )
        if not hit or root < 0:
            counts[r] = 0
            needed[r] = 0
            continue
        stack_i = np.empty(stack_cap, dtype=np.int32)
        stack_a = np.empty(stack_cap, dtype=np.float64)
        stack_b = np.empty(stack_cap, dtype=np.float64)
        h, a, b = _slab(
            ox, oy, oz, ix, iy, iz, zx, zy, zz,
            node_lo[root, 0], node_lo[root, 1], node_lo[root, 2],
            node_hi[root, 0], node_hi[root, 1], node_hi[root, 2],
        )
        sp = 0
        if h:
            a = a if a > tmin else tmin
            b = b if b < tmax else tmax
            if b > a:
                stack_i[0] = root
                stack_a[0] = a
                stack_b[0] = b
                sp = 1
        w = 0
        while sp > 0:
            sp -= 1
            i = stack_i[sp]
            t0 = stack_a[sp]
            t1 = stack_b[sp]
            if leaf[i] < 0:
                if w < cap:
                    segs[r, w, 0] = t0
                    segs[r, w, 1] = t1
                w += 1
                continue
            li = left[i]
            ri_ = right[i]
            hl, la, lb = _slab(
                ox, oy, oz, ix, iy, iz, zx, zy, zz,
                node_lo[li, 0], node_lo[li, 1], node_lo[li, 2],
                node_hi[li, 0], node_hi[li, 1], node_hi[li, 2],
            )
            if hl:
                la = la if la > tmin else tmin
                lb = lb if lb < tmax else tmax
                if lb <= la:
                    hl = False
            hr, ra, rb = _slab(
                ox, oy, oz, ix, iy, iz, zx, zy, zz,
                node_lo[ri_, 0], node_lo[ri_, 1], node_lo[ri_, 2],
                node_hi[ri_, 0], node_hi[ri_, 1], node_hi[ri_, 2],
            )
            if hr:
                ra = ra if ra > tmin else tmin
                rb = rb if rb < tmax else tmax
                if rb <= ra:
                    hr = False
            if hl and hr:
                # push far child first so the near one is popped next
                if la <= ra:
                    stack_i[sp] = ri_
                    stack_a[sp] = ra
                    stack_b[sp] = rb
                    sp += 1
                    stack_i[sp] = li
                    stack_a[sp] = la
                    stack_b[sp] = lb
                    sp += 1
                else:
                    stack_i[sp] = li
                    stack_a[sp] = la
                    stack_b[sp] = lb
                    sp += 1
                    stack_i[sp] = ri_
                    stack_a[sp] = ra
                    stack_b[sp] = rb
                    sp += 1
            elif hl:
                stack_i[sp] = li
                stack_a[sp] = la
                stack_b[sp] = lb
                sp += 1
            elif hr:
                stack_i[sp] = ri_
                stack_a[sp] = ra
                stack_b[sp] = rb
                sp += 1
        needed[r] = w
        if w > cap:
            counts[r] = 0
        else:
            counts[r] = _sort_merge(segs[r], w)


@njit(cache=True)
def _kd_leaves(
    ox, oy, oz, ix, iy, iz, zx, zy, zz,
    node_lo, node_hi, axis, plane, left, right, root,
    tmin, tmax, stack, segs, row, cap,
):
    """Front-to-back leaf intervals of a kd-tree, clipped to [tmin, tmax).
    Returns the needed count; extra intervals beyond cap are dropped."""
    sp = 0
    stack[0] = root
    sp = 1
    w = 0
    while sp > 0:
        sp -= 1
        i = stack[sp]
        hit, a, b = _slab(
            ox, oy, oz, ix, iy, iz, zx, zy, zz,
            node_lo[i, 0], node_lo[i, 1], node_lo[i, 2],
            node_hi[i, 0], node_hi[i, 1], node_hi[i, 2],
        )
        if not hit:
            continue
        a = a if a > tmin else tmin
        b = b if b < tmax else tmax
        if b <= a:
            continue
        if axis[i] < 0:
            if w < cap:
                segs[row, w, 0] = a
                segs[row, w, 1] = b
            w += 1
            continue
        ax = axis[i]
        if zx and ax == 0 or zy and ax == 1 or zz and ax == 2:
            if ax == 0:
                front_left = ox < plane[i]
            elif ax == 1:
                front_left = oy < plane[i]
            else:
                front_left = oz < plane[i]
        else:
            if ax == 0:
                front_left = ix > 0.0
            elif ax == 1:
                front_left = iy > 0.0
            else:
                front_left = iz > 0.0
        near = left[i] if front_left else right[i]
        far = right[i] if front_left else left[i]
        if far >= 0:
            stack[sp] = far
            sp += 1
        if near >= 0:
            stack[sp] = near
            sp += 1
    return w


@njit(cache=True, parallel=True)
def _k_kd(
    origins, direction, node_lo, node_hi, axis, plane, left, right, root,
    nx, ny, nz, stack_cap, segs, counts, needed,
):
    cap = segs.shape[1]
    for r in prange(origins.shape[0]):
        ox, oy, oz, ix, iy, iz, zx, zy, zz = _ray_setup(origins, direction, r)
        hit, tmin, tmax = _slab(
            ox, oy, oz, ix, iy, iz, zx, zy, zz, 0.0, 0.0, 0.0, nx, ny, nz
        )
        if not hit or root < 0:
            counts[r] = 0
            needed[r] = 0
            continue
        stack = np.empty(stack_cap, dtype=np.int32)
        w = _kd_leaves(
            ox, oy, oz, ix, iy, iz, zx, zy, zz,
            node_lo, node_hi, axis, plane, left, right, root,
            tmin, tmax, stack, segs, r, cap,
        )
        needed[r] = w
        if w > cap:
            counts[r] = 0
        else:
            counts[r] = _sort_merge(segs[r], w)


@njit(cache=True, parallel=True)
def _k_hybrid(
    origins, direction, node_lo, node_hi, axis, plane, left, right, root,
    occ, cs, nx, ny, nz, stack_cap, leaf_cap, segs, leafbuf, counts, needed,
):
    cap = segs.shape[1]
    for r in prange(origins.shape[0]):
        ox, oy, oz, ix, iy, iz, zx, zy, zz = _ray_setup(origins, direction, r)
        hit, tmin, tmax = _slab(
            ox, oy, oz, ix, iy, iz, zx, zy, zz, 0.0, 0.0, 0.0, nx, ny, nz
        )
        if not hit or root < 0:
            counts[r] = 0
            needed[r] = 0
            continue
        stack = np.empty(stack_cap, dtype=np.int32)
        nleaf = _kd_leaves(
            ox, oy, oz, ix, iy, iz, zx, zy, zz,
            node_lo, node_hi, axis, plane, left, right, root,
            tmin, tmax, stack, leafbuf, r, leaf_cap,
        )
        if nleaf > leaf_cap:
            counts[r] = 0
            needed[r] = -nleaf  # signal leaf-buffer overflow
            continue
        nleaf = _sort_merge(leafbuf[r], nleaf)
        w = 0
        for s in range(nleaf):
            w = _dda_runs(
                ox, oy, oz, direction[0], direction[1], direction[2],
                ix, iy, iz, zx, zy, zz,
                occ, cs, leafbuf[r, s, 0], leafbuf[r, s, 1], segs, r, w, cap,
            )
        needed[r] = w
        if w > cap:
            counts[r] = 0
        else:
            counts[r] = _sort_merge(segs[r], w)


@njit(cache=True, parallel=True)
def _k_integrate(
    origins, direction, segs, counts, field, lut, dt, nearest,
    nx, ny, nz, out_rgba, out_samples,
):
    for r in prange(origins.shape[0]):
        out_rgba[r, 0] = 0.0
        out_rgba[r, 1] = 0.0
        out_rgba[r, 2] = 0.0
        out_rgba[r, 3] = 0.0
        out_samples[r] = 0
        m = counts[r]
        if m == 0:
            continue
        ox, oy, oz, ix, iy, iz, zx, zy, zz = _ray_setup(origins, direction, r)
        hit, entry, _exit = _slab(
            ox, oy, oz, ix, iy, iz, zx, zy, zz, 0.0, 0.0, 0.0, nx, ny, nz
        )
        if not hit:
            continue
        dx = direction[0]
        dy = direction[1]
        dz = direction[2]
        accr = 0.0
        accg = 0.0
        accb = 0.0
        acca = 0.0
        taken = 0
        for s in range(m):
            t0 = segs[r, s, 0]
            t1 = segs[r, s, 1]
            k = int(math.ceil((t0 - entry) / dt))
            if k < 0:
                k = 0
            while k > 0 and entry + (k - 1) * dt >= t0:
                k -= 1
            while entry + k * dt < t0:
                k += 1
            t = entry + k * dt
            while t < t1:
                px = ox + t * dx
                py = oy + t * dy
                pz = oz + t * dz
                if nearest:
                    xi = int(math.floor(px))
                    yi = int(math.floor(py))
                    zi = int(math.floor(pz))
                    if xi < 0:
                        xi = 0
                    if yi < 0:
                        yi = 0
                    if zi < 0:
                        zi = 0
                    if xi > nx - 1:
                        xi = nx - 1
                    if yi > ny - 1:
                        yi = ny - 1
                    if zi > nz - 1:
                        zi = nz - 1
                    value = field[xi, yi, zi]
                else:
                    qx = px - 0.5
                    qy = py - 0.5
                    qz = pz - 0.5
                    x0 = int(math.floor(qx))
                    y0 = int(math.floor(qy))
                    z0 = int(math.floor(qz))
                    fx = qx - x0
                    fy = qy - y0
                    fz = qz - z0
                    x1 = x0 + 1
                    y1 = y0 + 1
                    z1 = z0 + 1
                    if x0 < 0:
                        x0 = 0
                    if y0 < 0:
                        y0 = 0
                    if z0 < 0:
                        z0 = 0
                    if x1 < 0:
                        x1 = 0
                    if y1 < 0:
                        y1 = 0
                    if z1 < 0:
                        z1 = 0
                    if x0 > nx - 1:
                        x0 = nx - 1
                    if y0 > ny - 1:
                        y0 = ny - 1
                    if z0 > nz - 1:
                        z0 = nz - 1
                    if x1 > nx - 1:
                        x1 = nx - 1
                    if y1 > ny - 1:
                        y1 = ny - 1
                    if z1 > nz - 1:
                        z1 = nz - 1
                    c000 = field[x0, y0, z0]
                    c100 = field[x1, y0, z0]
                    c010 = field[x0, y1, z0]
                    c110 = field[x1, y1, z0]
                    c001 = field[x0, y0, z1]
                    c101 = field[x1, y0, z1]
                    c011 = field[x0, y1, z1]
                    c111 = field[x1, y1, z1]
                    c00 = c000 + (c100 - c000) * fx
                    c10 = c010 + (c110 - c010) * fx
                    c01 = c001 + (c101 - c001) * fx
                    c11 = c011 + (c111 - c011) * fx
                    c0 = c00 + (c10 - c00) * fy
                    c1 = c01 + (c11 - c01) * fy
                    value = c0 + (c1 - c0) * fz
                bin_ = int(math.floor(value * 255.0 + 0.5))
                if bin_ < 0:
                    bin_ = 0
                if bin_ > 255:
                    bin_ = 255
                alpha = lut[bin_, 3]
                if alpha > 0.0:
                    corrected = 1.0 - (1.0 - alpha) ** dt
                    weight = (1.0 - acca) * corrected
                    accr += weight * lut[bin_, 0]
                    accg += weight * lut[bin_, 1]
                    accb += weight * lut[bin_, 2]
                    acca += weight
                taken += 1
                k += 1
                t = entry + k * dt
        out_rgba[r, 0] = accr
        out_rgba[r, 1] = accg
        out_rgba[r, 2] = accb
        out_rgba[r, 3] = acca
        out_samples[r] = taken


# -- chunked frame driver -----------------------------------------------------


def _kd_arrays(t: KdTree):
    return (
        np.ascontiguousarray(t.lo, dtype=np.float64),
        np.ascontiguousarray(t.hi, dtype=np.float64),
        np.ascontiguousarray(t.axis, dtype=np.int8),
        np.ascontiguousarray(t.plane, dtype=np.float64),
        np.ascontiguousarray(t.left, dtype=np.int32),
        np.ascontiguousarray(t.right, dtype=np.int32),
    )


def _bvh_arrays(t: Lbvh):
    return (
        np.ascontiguousarray(t.lo, dtype=np.float64),
        np.ascontiguousarray(t.hi, dtype=np.float64),
        np.ascontiguousarray(np.where(t.left < 0, -1, 0), dtype=np.int8),
        np.ascontiguousarray(t.left, dtype=np.int32),
        np.ascontiguousarray(t.right, dtype=np.int32),
    )


def _stack_cap(height: int) -> int:
    return max(2 * height + 8, 64)


class _Traverser:
    """Chunk-level traversal closure over one prepared index."""

    def __init__(self, index: SpatialIndex, dims: tuple[int, int, int]):
        self.kind = index_kind(index)
        self.dims = dims
        self.cap = 1 if self.kind == "naive" else _INITIAL_SEGMENT_CAP
        self.leaf_cap = _INITIAL_SEGMENT_CAP
        if self.kind == "grid":
            self.occ = np.ascontiguousarray(index.occupied)
            self.cs = float(index.cell_size)
        elif self.kind == "lbvh":
            self.lo, self.hi, self.leaf, self.left, self.right = _bvh_arrays(index)
            self.root = index.root if index.node_count else -1
            self.stack = _stack_cap(index.height())
        elif self.kind == "kd":
            (self.lo, self.hi, self.axis, self.plane, self.left, self.right) = _kd_arrays(index)
            self.root = index.root
            self.stack = _stack_cap(index.height())
        elif self.kind == "hybrid":
            (self.lo, self.hi, self.axis, self.plane, self.left, self.right) = _kd_arrays(index.tree)
            self.root = index.tree.root
            self.stack = _stack_cap(index.tree.height())
            self.occ = np.ascontiguousarray(index.grid.occupied)
            self.cs = float(index.grid.cell_size)

    def run(self, origins: np.ndarray, direction: np.ndarray):
        """Returns (segs, counts) for the chunk, regrowing buffers on
        overflow."""
        n = origins.shape[0]
        nx, ny, nz = (float(d) for d in self.dims)
        counts = np.zeros(n, dtype=np.int32)
        while True:
            segs = np.zeros((n, self.cap, 2), dtype=np.float64)
            needed = np.zeros(n, dtype=np.int64)
            if self.kind == "naive":
                _k_naive(origins, direction, nx, ny, nz, segs, counts)
                return segs, counts
            if self.kind == "grid":
                _k_grid(
                    origins, direction, self.occ, self.cs, nx, ny, nz,
                    segs, counts, needed,
                )
            elif self.kind == "lbvh":
                _k_bvh(
                    origins, direction, self.lo, self.hi, self.leaf,
                    self.left, self.right, self.root, nx, ny, nz,
                    self.stack, segs, counts, needed,
                )
            elif self.kind == "kd":
                _k_kd(
                    origins, direction, self.lo, self.hi, self.axis, self.plane,
                    self.left, self.right, self.root, nx, ny, nz,
                    self.stack, segs, counts, needed,
                )
            else:
                leafbuf = np.zeros((n, self.leaf_cap, 2), dtype=np.float64)
                _k_hybrid(
                    origins, direction, self.lo, self.hi, self.axis, self.plane,
                    self.left, self.right, self.root, self.occ, self.cs,
                    nx, ny, nz, self.stack, self.leaf_cap, segs, leafbuf,
                    counts, needed,
                )
                worst_leaf = int(-needed.min()) if needed.size else 0
                if worst_leaf > self.leaf_cap:
                    self.leaf_cap = max(worst_leaf, self.leaf_cap * 2)
                    continue
            worst = int(needed.max()) if needed.size else 0
            if worst <= self.cap:
                return segs, counts
            self.cap = max(worst, self.cap * 2)


def render_frame(
    v: Volume,
    tf: TransferFunction,
    index: SpatialIndex,
    cam: Camera,
    dt: float = DEFAULT_DT,
    interp: str = "trilinear",
) -> Frame:
    """March every pixel's ray through the index and composite front to back.

    Output alpha is the accumulated opacity and colors are premultiplied;
    sample_count totals the field fetches across all rays.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if interp not in ("trilinear", "nearest"):
        raise ValueError(f"unknown interpolation: {interp!r}")
    field = np.ascontiguousarray(v.data, dtype=np.float32)
    lut = np.ascontiguousarray(tf.lut, dtype=np.float32)
    direction = np.asarray(cam.direction, dtype=np.float64)
    origins = cam.ray_origins()
    n = origins.shape[0]
    nx, ny, nz = v.dims
    trav = _Traverser(index, v.dims)
    rgba = np.zeros((n, 4), dtype=np.float64)
    samples = np.zeros(n, dtype=np.int64)
    nearest = interp == "nearest"
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        chunk = origins[start:stop]
        segs, counts = trav.run(chunk, direction)
        _k_integrate(
            chunk, direction, segs, counts, field, lut, float(dt), nearest,
            nx, ny, nz, rgba[start:stop], samples[start:stop],
        )
    quant = np.clip(np.floor(rgba * 255.0 + 0.5), 0, 255).astype(np.uint8)
    pixels = quant.reshape(cam.height, cam.width, 4)
    return Frame(
        width=cam.width,
        height=cam.height,
        pixels=pixels,
        sample_count=int(samples.sum()),
    )


# -- single-ray interface -----------------------------------------------------


def _single(ray: Ray):
    origins = np.asarray([ray.origin], dtype=np.float64)
    direction = np.asarray(ray.direction, dtype=np.float64)
    return origins, direction


def _segments_from(segs, counts) -> RaySegmentList:
    m = int(counts[0])
    return RaySegmentList(t=segs[0, :m].copy())


def traverse_naive(ray: Ray, dims: tuple[int, int, int]) -> RaySegmentList:
    """Single segment spanning the ray's overlap with the volume box."""
    origins, direction = _single(ray)
    trav = _Traverser(None, dims)
    return _segments_from(*trav.run(origins, direction))


def traverse_grid(ray: Ray, grid: MacroGrid) -> RaySegmentList:
    """Occupied-cell runs along the ray, merged when contiguous."""
    origins, direction = _single(ray)
    trav = _Traverser(grid, grid.dims)
    return _segments_from(*trav.run(origins, direction))


def traverse_lbvh(ray: Ray, idx: Lbvh) -> RaySegmentList:
    """Near-first depth-first leaf intervals, sorted and merged."""
    origins, direction = _single(ray)
    trav = _Traverser(idx, idx.dims)
    return _segments_from(*trav.run(origins, direction))


def traverse_kd(ray: Ray, idx: KdTree) -> RaySegmentList:
    """Front-to-back leaf intervals of the tree, sorted and merged."""
    origins, direction = _single(ray)
    trav = _Traverser(idx, idx.dims)
    return _segments_from(*trav.run(origins, direction))


def traverse_hybrid(ray: Ray, idx: HybridGrid) -> RaySegmentList:
    """Tree leaves restricted to occupied macro cells: exactly the
    intersection of the tree's and the grid's interval lists."""
    origins, direction = _single(ray)
    trav = _Traverser(idx, idx.tree.dims)
    return _segments_from(*trav.run(origins, direction))


def integrate(
    ray: Ray,
    segments: RaySegmentList,
    v: Volume,
    tf: TransferFunction,
    dt: float = DEFAULT_DT,
    interp: str = "trilinear",
) -> np.ndarray:
    """Composite one ray over its segments; returns premultiplied RGBA floats.

    Samples lie on the lattice t_entry + k*dt anchored at the ray's entry
    into the full volume, regardless of how segments subdivide it.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    origins, direction = _single(ray)
    m = segments.count
    segs = np.zeros((1, max(m, 1), 2), dtype=np.float64)
    if m:
        segs[0, :m] = segments.t
    counts = np.asarray([m], dtype=np.int32)
    rgba = np.zeros((1, 4), dtype=np.float64)
    samples = np.zeros(1, dtype=np.int64)
    nx, ny, nz = v.dims
    _k_integrate(
        origins, direction, segs, counts,
        np.ascontiguousarray(v.data, dtype=np.float32),
        np.ascontiguousarray(tf.lut, dtype=np.float32),
        float(dt), interp == "nearest", nx, ny, nz, rgba, samples,
    )
    return rgba[0]


def sample_count_of(
    ray: Ray, segments: RaySegmentList, dims: tuple[int, int, int], dt: float = DEFAULT_DT
) -> int:
    """Lattice points of the ray that fall inside the segments."""
    origins, direction = _single(ray)
    m = segments.count
    segs = np.zeros((1, max(m, 1), 2), dtype=np.float64)
    if m:
        segs[0, :m] = segments.t
    counts = np.asarray([m], dtype=np.int32)
    rgba = np.zeros((1, 4), dtype=np.float64)
    samples = np.zeros(1, dtype=np.int64)
    field = np.zeros(dims, dtype=np.float32)
    lut = np.zeros((256, 4), dtype=np.float32)
    _k_integrate(
        origins, direction, segs, counts, field, lut, float(dt), False,
        dims[0], dims[1], dims[2], rgba, samples,
    )
    return int(samples[0])
