"""Scalar volumes, transfer functions and binary visibility classification.

Arrays are indexed ``[x, y, z]``; raw files on disk are flat with x varying
fastest, so I/O goes through ``order="F"`` reshapes.  All voxel coordinates
are integers, boxes are half-open ``[lo, hi)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

LUT_SIZE = 256


class VolumeFormatError(ValueError):
    """Raw file does not match its metadata (size or layout)."""


class UnsupportedFormatError(ValueError):
    """Voxel precision outside the supported 8/16-bit range."""


@dataclass(frozen=True)
class Aabb:
    """Half-open integer voxel box [lo, hi).  Empty boxes are represented as
    ``None`` at API level, never as an Aabb with inverted bounds."""

    lo: tuple[int, int, int]
    hi: tuple[int, int, int]

    def __post_init__(self):
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"inverted bounds {self.lo}..{self.hi}")

    def volume(self) -> int:
        (x0, y0, z0), (x1, y1, z1) = self.lo, self.hi
        return (x1 - x0) * (y1 - y0) * (z1 - z0)

    def extent(self) -> tuple[int, int, int]:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    def contains(self, p: tuple[int, int, int]) -> bool:
        return all(l <= c < h for l, c, h in zip(self.lo, p, self.hi))

    def union(self, other: "Aabb") -> "Aabb":
        return Aabb(
            tuple(min(a, b) for a, b in zip(self.lo, other.lo)),
            tuple(max(a, b) for a, b in zip(self.hi, other.hi)),
        )

    def intersect(self, other: "Aabb") -> "Aabb | None":
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        if any(l >= h for l, h in zip(lo, hi)):
            return None
        return Aabb(lo, hi)


@dataclass
class Volume:
    """Dense scalar field normalized to [0, 1], shape (nx, ny, nz)."""

    data: np.ndarray
    name: str = "volume"

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 3 or min(self.data.shape) < 1:
            raise ValueError("volume data must be a non-empty 3-d array")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def bounds(self) -> Aabb:
        return Aabb((0, 0, 0), self.dims)


@dataclass
class TransferFunction:
    """256-entry RGBA lookup table, all channels in [0, 1]."""

    lut: np.ndarray

    def __post_init__(self):
        self.lut = np.ascontiguousarray(self.lut, dtype=np.float32)
        if self.lut.shape != (LUT_SIZE, 4):
            raise ValueError(f"lut must be ({LUT_SIZE}, 4), got {self.lut.shape}")
        if self.lut.min() < 0.0 or self.lut.max() > 1.0:
            raise ValueError("lut channels must lie in [0, 1]")

    @classmethod
    def constant(cls, r: float, g: float, b: float, a: float) -> "TransferFunction":
        lut = np.tile(np.array([r, g, b, a], dtype=np.float32), (LUT_SIZE, 1))
        return cls(lut)

    @classmethod
    def opaque(cls) -> "TransferFunction":
        """Grayscale, fully opaque everywhere except the zero bin.

        Matches the binary classification exactly on {0, 1}-valued volumes:
        occupancy under this table equals the generator's solid fraction.
        """
        v = np.linspace(0.0, 1.0, LUT_SIZE, dtype=np.float32)
        lut = np.stack([v, v, v, np.where(np.arange(LUT_SIZE) > 0, 1.0, 0.0)], axis=1)
        return cls(lut.astype(np.float32))

    @classmethod
    def ramp(
        cls,
        threshold: float = 0.3,
        max_alpha: float = 0.8,
        color_lo: tuple[float, float, float] = (0.2, 0.4, 1.0),
        color_hi: tuple[float, float, float] = (1.0, 0.6, 0.1),
    ) -> "TransferFunction":
        """Zero alpha below ``threshold``, then a linear ramp to ``max_alpha``.

        The invisible value range is a single low interval, which keeps
        per-voxel classification conservative for interpolated samples:
        any sample whose interpolation corners are all invisible stays
        invisible itself.
        """
        v = np.linspace(0.0, 1.0, LUT_SIZE)
        t = np.clip((v - threshold) / max(1e-9, 1.0 - threshold), 0.0, 1.0)
        rgb = np.outer(1.0 - t, color_lo) + np.outer(t, color_hi)
        a = np.where(v > threshold, t * max_alpha, 0.0)
        return cls(np.column_stack([rgb, a]).astype(np.float32))

    @classmethod
    def from_json(cls, path: str | Path) -> "TransferFunction":
        doc = json.loads(Path(path).read_text())
        return cls(np.asarray(doc["rgba"], dtype=np.float32))

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps({"rgba": self.lut.tolist()}))


@dataclass
class BinaryVolume:
    """One visibility flag per voxel, same dims as the source volume."""

    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.ascontiguousarray(self.bits, dtype=bool)
        if self.bits.ndim != 3:
            raise ValueError("bits must be 3-d")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.bits.shape


def quantize_scalar(values: np.ndarray) -> np.ndarray:
    """Map normalized scalars to LUT bins: floor(v*255 + 0.5), clamped."""
    idx = np.floor(np.asarray(values, dtype=np.float64) * 255.0 + 0.5).astype(np.int64)
    return np.clip(idx, 0, LUT_SIZE - 1)


def load_raw(path: str | Path, meta: dict | None = None) -> Volume:
    """Load a .raw scalar volume.

    ``meta`` needs ``dims`` (3 ints), ``bits`` (8 or 16) and optionally
    ``endian`` ("little"/"big", 16-bit only).  When ``meta`` is None a JSON
    sidecar ``<path>.json`` is read instead.
    """
    path = Path(path)
    if meta is None:
        sidecar = path.with_suffix(path.suffix + ".json")
        meta = json.loads(sidecar.read_text())
    dims = tuple(int(d) for d in meta["dims"])
    bits = int(meta.get("bits", meta.get("bits_per_voxel", 8)))
    endian = meta.get("endian", meta.get("endianness", "little"))
    if bits == 8:
        dtype = np.dtype(np.uint8)
    elif bits == 16:
        dtype = np.dtype(np.uint16).newbyteorder("<" if endian == "little" else ">")
    else:
        raise UnsupportedFormatError(f"unsupported bit depth {bits}")
    raw = path.read_bytes()
    expected = dims[0] * dims[1] * dims[2] * dtype.itemsize
    if len(raw) != expected:
        raise VolumeFormatError(
            f"{path}: file is {len(raw)} bytes, dims {dims} at {bits} bit need {expected}"
        )
    flat = np.frombuffer(raw, dtype=dtype)
    # Raw files are x-fastest; normalize in float64 before narrowing to f32.
    data = flat.astype(np.float64).reshape(dims, order="F") / float(2**bits - 1)
    return Volume(data.astype(np.float32), name=path.stem)


def save_raw(v: Volume, path: str | Path, bits: int = 8) -> None:
    """Write a volume as .raw plus JSON sidecar; inverse of load_raw."""
    if bits not in (8, 16):
        raise UnsupportedFormatError(f"unsupported bit depth {bits}")
    path = Path(path)
    peak = float(2**bits - 1)
    q = np.rint(v.data.astype(np.float64) * peak).astype(np.uint8 if bits == 8 else "<u2")
    path.write_bytes(q.flatten(order="F").tobytes())
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(json.dumps({"dims": list(v.dims), "bits": bits, "endian": "little"}))


def gen_menger(level: int) -> Volume:
    """Menger sponge of side 3^level, values exactly 0.0 / 1.0.

    A voxel is solid iff at no base-3 digit position do two or more of its
    coordinates have digit 1.  Solid fraction is (20/27)^level.
    """
    if level < 0 or level > 6:
        raise ValueError("level must be in [0, 6]")
    n = 3**level
    coords = np.arange(n)
    solid = np.ones((n, n, n), dtype=bool)
    for d in range(level):
        digit = (coords // 3**d) % 3 == 1
        x = digit[:, None, None]
        y = digit[None, :, None]
        z = digit[None, None, :]
        hole = (x & y) | (x & z) | (y & z)
        solid &= ~hole
    return Volume(solid.astype(np.float32), name=f"menger{level}")


def gen_shell(
    dims: tuple[int, int, int],
    center: tuple[float, float, float] | None = None,
    radius: float = 0.0,
    thickness: float = 1.0,
) -> Volume:
    """Spherical shell: solid where ``| |p - center| - radius | <= thickness/2``,
    with p the voxel center.  Default center is the volume middle."""
    if thickness <= 0:
        raise ValueError("thickness must be positive")
    dims = tuple(int(d) for d in dims)
    if center is None:
        center = tuple(d / 2.0 for d in dims)
    axes = [np.arange(d) + 0.5 - c for d, c in zip(dims, center)]
    dist = np.sqrt(
        axes[0][:, None, None] ** 2 + axes[1][None, :, None] ** 2 + axes[2][None, None, :] ** 2
    )
    solid = np.abs(dist - radius) <= thickness / 2.0
    return Volume(solid.astype(np.float32), name="shell")


def gen_blobs(
    dims: tuple[int, int, int],
    n: int,
    seed: int,
    sigma: float = 1.5,
    centers: np.ndarray | None = None,
) -> Volume:
    """Sum of n Gaussian splats at seeded-random positions, clamped to [0, 1].

    ``centers`` overrides the random placement (one row per splat).  Each
    splat is accumulated on its local +-4 sigma neighborhood only.
    """
    if n < 1:
        raise ValueError("need at least one blob")
    dims = tuple(int(d) for d in dims)
    if centers is None:
        rng = np.random.default_rng(seed)
        centers = rng.uniform(low=(0.0, 0.0, 0.0), high=dims, size=(n, 3))
    centers = np.asarray(centers, dtype=np.float64)
    data = np.zeros(dims, dtype=np.float64)
    support = max(1, int(math.ceil(4.0 * sigma)))
    for cx, cy, cz in centers:
        x0 = max(0, int(cx - support))
        y0 = max(0, int(cy - support))
        z0 = max(0, int(cz - support))
        x1 = min(dims[0], int(cx + support) + 2)
        y1 = min(dims[1], int(cy + support) + 2)
        z1 = min(dims[2], int(cz + support) + 2)
        if x0 >= x1 or y0 >= y1 or z0 >= z1:
            continue
        gx = (np.arange(x0, x1) + 0.5 - cx) ** 2
        gy = (np.arange(y0, y1) + 0.5 - cy) ** 2
        gz = (np.arange(z0, z1) + 0.5 - cz) ** 2
        d2 = gx[:, None, None] + gy[None, :, None] + gz[None, None, :]
        data[x0:x1, y0:y1, z0:z1] += np.exp(-d2 / (2.0 * sigma * sigma))
    return Volume(np.clip(data, 0.0, 1.0).astype(np.float32), name="blobs")


def _dilate26(bits: np.ndarray) -> np.ndarray:
    """Binary dilation by the 3x3x3 box, separable max filter per axis.
    Neighborhoods are clipped at the borders."""
    out = bits
    for axis in range(3):
        lo = np.roll(out, 1, axis=axis)
        hi = np.roll(out, -1, axis=axis)
        # roll wraps around; kill the wrapped slabs
        idx_first = [slice(None)] * 3
        idx_first[axis] = 0
        idx_last = [slice(None)] * 3
        idx_last[axis] = out.shape[axis] - 1
        lo[tuple(idx_first)] = False
        hi[tuple(idx_last)] = False
        out = out | lo | hi
    return out


def classify(v: Volume, tf: TransferFunction, dilate: bool = False) -> BinaryVolume:
    """Binary visibility: a voxel is visible iff its LUT alpha is > 0.

    With ``dilate`` the flags are grown by one voxel in all 26 directions so
    that every trilinear sample whose interpolation support touches a visible
    voxel lies inside a flagged voxel; skipping built on the dilated
    classification never drops a contributing sample.
    """
    alpha_pos = tf.lut[:, 3] > 0.0
    base = alpha_pos[quantize_scalar(v.data)]
    if dilate:
        base = _dilate26(base)
    return BinaryVolume(base)


def occupancy(b: BinaryVolume) -> float:
    """Fraction of voxels flagged visible."""
    return float(np.count_nonzero(b.bits)) / b.bits.size
