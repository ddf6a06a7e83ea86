"""Voxel volumes: windowing, cropping, resampling, and coordinate transforms.

Conventions used throughout the package:

* voxels are stored z-major with x fastest, array shape ``(nz, ny, nx)``;
* ``spacing`` is ``(sx, sy, sz)`` millimetres per voxel;
* ``origin`` is the world-mm position of the *center* of voxel ``(0, 0, 0)``;
* voxel indices are ordered ``(z, y, x)`` and world points ``(x, y, z)``.

All operations are pure: inputs are never mutated and outputs are freshly
allocated, so values can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import trilinear_resample
from .errors import BoundsError, ExtentError, ParameterError, ShapeError, WindowError

LANDMARK_NAMES = ("A", "B", "C", "D", "E", "F", "G")


@dataclass(frozen=True)
class Volume:
    """A 3D scalar field on a regular grid with physical metadata."""

    voxels: np.ndarray
    spacing: tuple[float, float, float]
    origin: tuple[float, float, float]

    def __post_init__(self):
        vox = np.asarray(self.voxels, dtype=np.float32)
        if vox.ndim != 3:
            raise ShapeError(f"voxels must be a 3D array, got ndim={vox.ndim}")
        if any(d < 1 for d in vox.shape):
            raise ShapeError(f"all dims must be >= 1, got {vox.shape}")
        spacing = tuple(float(s) for s in self.spacing)
        origin = tuple(float(o) for o in self.origin)
        if len(spacing) != 3 or len(origin) != 3:
            raise ParameterError("spacing and origin must have 3 components")
        if any(not np.isfinite(s) or s <= 0 for s in spacing):
            raise ParameterError(f"spacings must be positive, got {spacing}")
        if any(not np.isfinite(o) for o in origin):
            raise ParameterError(f"origin must be finite, got {origin}")
        vox = np.ascontiguousarray(vox)
        vox.setflags(write=False)
        object.__setattr__(self, "voxels", vox)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @property
    def dims(self) -> tuple[int, int, int]:
        """Voxel counts (nz, ny, nx)."""
        return self.voxels.shape

    def extent_mm(self) -> tuple[float, float, float]:
        """Physical size (z, y, x) in mm: voxel count times spacing per axis."""
        nz, ny, nx = self.dims
        sx, sy, sz = self.spacing
        return (nz * sz, ny * sy, nx * sx)


@dataclass(frozen=True)
class BoundingBox:
    """Inclusive voxel-index corners (z, y, x)."""

    lo: tuple[int, int, int]
    hi: tuple[int, int, int]

    def __post_init__(self):
        lo = tuple(int(v) for v in self.lo)
        hi = tuple(int(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ParameterError("bounding box corners must have 3 components")
        if any(l < 0 for l in lo):
            raise BoundsError(f"lo must be non-negative, got {lo}")
        if any(h < l for l, h in zip(lo, hi)):
            raise BoundsError(f"lo must be <= hi componentwise, got lo={lo} hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))


class LandmarkSet:
    """The seven named vertebral points A..G in world millimetres.

    A/B: anterior/posterior edge centers of the vertebral body; C/D: medial
    and lower edge of the left pedicle; E/F: lower and medial edge of the
    right pedicle; G: posterior midpoint of the lower endplate.
    """

    __slots__ = ("_points",)

    def __init__(self, points):
        pts = {}
        for name in LANDMARK_NAMES:
            if name not in points:
                raise ParameterError(f"landmark {name} missing")
            p = np.asarray(points[name], dtype=np.float64).reshape(3).copy()
            if not np.all(np.isfinite(p)):
                raise ParameterError(f"landmark {name} has non-finite coordinates")
            p.setflags(write=False)
            pts[name] = p
        extra = set(points) - set(LANDMARK_NAMES)
        if extra:
            raise ParameterError(f"unknown landmark names: {sorted(extra)}")
        if np.array_equal(pts["A"], pts["B"]):
            raise ParameterError("landmarks A and B must differ")
        self._points = pts

    def __getitem__(self, name: str) -> np.ndarray:
        return self._points[name]

    def __iter__(self):
        return iter(LANDMARK_NAMES)

    def __eq__(self, other):
        if not isinstance(other, LandmarkSet):
            return NotImplemented
        return all(np.array_equal(self[n], other[n]) for n in LANDMARK_NAMES)

    def __repr__(self):
        inner = ", ".join(f"{n}={self[n].tolist()}" for n in LANDMARK_NAMES)
        return f"LandmarkSet({inner})"

    def as_dict(self) -> dict:
        """Plain name -> [x, y, z] mapping (JSON schema of the landmark file)."""
        return {n: [float(v) for v in self._points[n]] for n in LANDMARK_NAMES}


def apply_window(vol: Volume, w_min: float, w_max: float) -> Volume:
    """Clamp-and-ramp intensity windowing onto [0, 1].

    Values at or below w_min map to 0, at or above w_max map to 1, and the
    open interval in between maps linearly. Grid metadata is unchanged.
    """
    w_min = float(w_min)
    w_max = float(w_max)
    if not (w_min < w_max):
        raise WindowError(f"w_min must be < w_max, got ({w_min}, {w_max})")
    v = vol.voxels
    ramp = (v - np.float32(w_min)) / np.float32(w_max - w_min)
    np.clip(ramp, 0.0, 1.0, out=ramp)
    out = np.where(v <= w_min, np.float32(0), np.where(v >= w_max, np.float32(1), ramp))
    return Volume(out, vol.spacing, vol.origin)


def crop(vol: Volume, box: BoundingBox) -> Volume:
    """Extract the inclusive sub-grid of ``box``; values copied bit-exactly."""
    for axis, (h, d) in enumerate(zip(box.hi, vol.dims)):
        if h >= d:
            raise BoundsError(
                f"box hi {box.hi} exceeds volume dims {vol.dims} on axis {axis} "
                "(corners are inclusive)"
            )
    lz, ly, lx = box.lo
    hz, hy, hx = box.hi
    sub = vol.voxels[lz : hz + 1, ly : hy + 1, lx : hx + 1].copy()
    sx, sy, sz = vol.spacing
    ox, oy, oz = vol.origin
    origin = (ox + lx * sx, oy + ly * sy, oz + lz * sz)
    return Volume(sub, vol.spacing, origin)


def resample(vol: Volume, target_dims) -> Volume:
    """Trilinear resample to ``target_dims`` (nz, ny, nx).

    Spacing is rescaled by n_old/n_new per axis so the physical extent
    (voxel count x spacing) is preserved, and the origin stays at the same
    world point. Out-of-grid samples clamp to the border voxel.
    """
    td = tuple(int(d) for d in target_dims)
    if len(td) != 3 or any(d < 1 for d in td):
        raise ParameterError(f"target dims must be 3 values >= 1, got {target_dims}")
    nz, ny, nx = vol.dims
    out = trilinear_resample(vol.voxels, td)
    sx, sy, sz = vol.spacing
    spacing = (sx * nx / td[2], sy * ny / td[1], sz * nz / td[0])
    return Volume(out, spacing, vol.origin)


def voxel_to_world(vol: Volume, idx) -> np.ndarray:
    """Map fractional voxel indices (z, y, x) to world mm (x, y, z)."""
    idx = np.asarray(idx, dtype=np.float64)
    sx, sy, sz = vol.spacing
    ox, oy, oz = vol.origin
    iz, iy, ix = idx[..., 0], idx[..., 1], idx[..., 2]
    return np.stack([ox + ix * sx, oy + iy * sy, oz + iz * sz], axis=-1)


def world_to_voxel(vol: Volume, point) -> np.ndarray:
    """Inverse of :func:`voxel_to_world`: world mm (x, y, z) to (z, y, x)."""
    p = np.asarray(point, dtype=np.float64)
    sx, sy, sz = vol.spacing
    ox, oy, oz = vol.origin
    wx, wy, wz = p[..., 0], p[..., 1], p[..., 2]
    return np.stack([(wz - oz) / sz, (wy - oy) / sy, (wx - ox) / sx], axis=-1)


def map_landmarks(lm: LandmarkSet, src: Volume, dst: Volume) -> LandmarkSet:
    """Carry landmarks from one grid to another covering the same region.

    Each point goes world -> src voxel -> index scaled by n_dst/n_src per
    axis -> world of dst, preserving relative position within the grid.
    """
    se = src.extent_mm()
    de = dst.extent_mm()
    for axis, (a, b) in enumerate(zip(se, de)):
        if abs(a - b) > 1e-6 * max(abs(a), abs(b)):
            raise ExtentError(
                f"physical extents differ on axis {axis}: {a} mm vs {b} mm"
            )
    scale = np.array(dst.dims, dtype=np.float64) / np.array(src.dims, dtype=np.float64)
    out = {}
    for name in lm:
        u = world_to_voxel(src, lm[name])
        out[name] = voxel_to_world(dst, u * scale)
    return LandmarkSet(out)
