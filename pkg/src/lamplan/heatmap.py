"""Gaussian target heatmaps, argmax localization, and error metrics.

A heatmap channel holds, at every voxel x, the isotropic 3D Gaussian density

    (2*pi)**(-3/2) * sigma**(-3) * exp(-||x - c||^2 / (2 sigma^2))

measured in voxel units around the channel's landmark position c. Landmarks
are recovered by per-channel argmax (ties broken toward the smallest
(z, y, x) index) and mapped to world mm through the volume geometry.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, ParameterError, ShapeError, SigmaError
from .volume import LANDMARK_NAMES, LandmarkSet, Volume, voxel_to_world, world_to_voxel


@dataclass(frozen=True)
class HeatmapStack:
    """Per-landmark scalar fields with a channel -> name mapping."""

    data: np.ndarray  # (n_channels, nz, ny, nx)
    names: tuple[str, ...]

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 4:
            raise ShapeError(f"heatmap stack must be 4D (C, Z, Y, X), got ndim={data.ndim}")
        names = tuple(str(n) for n in self.names)
        if len(names) != data.shape[0]:
            raise ShapeError(
                f"{data.shape[0]} channels but {len(names)} names"
            )
        if len(set(names)) != len(names):
            raise ParameterError(f"duplicate channel names: {names}")
        if not np.all(np.isfinite(data)):
            raise ParameterError("heatmap values must be finite")
        data = np.ascontiguousarray(data)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "names", names)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape[1:]


@dataclass(frozen=True)
class LocalizationReport:
    """Per-landmark localization errors with mean and sample std (mm)."""

    errors: tuple[float, ...]
    mean_mm: float
    std_mm: float

    def as_dict(self) -> dict:
        return {
            "errors_mm": list(self.errors),
            "mean_mm": self.mean_mm,
            "std_mm": self.std_mm,
            "count": len(self.errors),
        }


def make_target(dims, center, sigma: float, normalize: bool = False) -> np.ndarray:
    """Rasterize one Gaussian target channel.

    dims: (nz, ny, nx); center: fractional voxel point (z, y, x); sigma in
    voxels. With normalize=True the peak is rescaled to 1 (visualization
    only; the default keeps the analytic density amplitude).
    """
    sigma = float(sigma)
    if not (sigma > 0):
        raise SigmaError(f"sigma must be > 0, got {sigma}")
    nz, ny, nx = (int(d) for d in dims)
    if min(nz, ny, nx) < 1:
        raise ParameterError(f"dims must be >= 1, got {dims}")
    cz, cy, cx = (float(c) for c in np.asarray(center, dtype=np.float64).reshape(3))
    dz2 = (np.arange(nz, dtype=np.float64) - cz) ** 2
    dy2 = (np.arange(ny, dtype=np.float64) - cy) ** 2
    dx2 = (np.arange(nx, dtype=np.float64) - cx) ** 2
    d2 = dz2[:, None, None] + dy2[None, :, None] + dx2[None, None, :]
    amp = 1.0 if normalize else (2.0 * np.pi) ** -1.5 / sigma**3
    return amp * np.exp(d2 / (-2.0 * sigma * sigma))


def make_target_stack(lm: LandmarkSet, vol: Volume, sigma: float) -> HeatmapStack:
    """Target heatmaps for all 7 landmarks on the grid of ``vol``."""
    channels = [
        make_target(vol.dims, world_to_voxel(vol, lm[name]), sigma)
        for name in LANDMARK_NAMES
    ]
    return HeatmapStack(np.stack(channels), LANDMARK_NAMES)


def localize(h: HeatmapStack, vol: Volume) -> dict[str, np.ndarray]:
    """Per-channel argmax positions in world mm, keyed by channel name.

    Ties resolve to the smallest (z, y, x) index. A flat channel is reported
    with a "degenerate channel" warning and localizes to voxel (0, 0, 0).
    """
    if h.dims != vol.dims:
        raise ShapeError(f"heatmap dims {h.dims} do not match volume dims {vol.dims}")
    out = {}
    for i, name in enumerate(h.names):
        chan = h.data[i]
        if chan.size == 0:
            raise EmptyInputError(f"channel {name} is empty")
        flat = int(np.argmax(chan))
        if flat == 0 and np.all(chan == chan.flat[0]):
            warnings.warn(f"degenerate channel {name}: all values equal", stacklevel=2)
        idx = np.unravel_index(flat, chan.shape)
        out[name] = voxel_to_world(vol, np.asarray(idx, dtype=np.float64))
    return out


def localize_landmarks(h: HeatmapStack, vol: Volume) -> LandmarkSet:
    """:func:`localize` for the standard 7-channel stack."""
    return LandmarkSet(localize(h, vol))


def mse_loss(pred, target) -> float:
    """Mean squared difference over all channels and voxels."""
    a = pred.data if isinstance(pred, HeatmapStack) else np.asarray(pred)
    b = target.data if isinstance(target, HeatmapStack) else np.asarray(target)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(diff * diff))


def localization_error(pred, truth) -> float:
    """Euclidean distance in mm between predicted and true points."""
    p = np.asarray(pred, dtype=np.float64).reshape(3)
    t = np.asarray(truth, dtype=np.float64).reshape(3)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(t))):
        raise ParameterError("points must be finite")
    return float(np.sqrt(np.sum((p - t) ** 2)))


def aggregate_errors(errors) -> LocalizationReport:
    """Mean and sample standard deviation (n-1; zero for n=1) of distances."""
    vals = [float(e) for e in errors]
    if not vals:
        raise EmptyInputError("no errors to aggregate")
    if any(not np.isfinite(v) or v < 0 for v in vals):
        raise ParameterError("errors must be finite and >= 0")
    arr = np.asarray(vals, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if len(vals) > 1 else 0.0
    return LocalizationReport(tuple(vals), mean, std)


def evaluate_landmarks(pred: LandmarkSet, truth: LandmarkSet) -> LocalizationReport:
    """Aggregate per-landmark Euclidean errors in the canonical A..G order."""
    return aggregate_errors(
        localization_error(pred[n], truth[n]) for n in LANDMARK_NAMES
    )
