"""Parametric synthetic vertebra phantoms with analytic ground truth.

The phantom is built from closed-form solids in a canonical pose: an
elliptical-cylinder vertebral body (axis superior), two cylindrical pedicles
reaching posteriorly, and a partial ring for the posterior arch, embedded in
a soft-tissue capsule surrounded by air. The seven landmarks are computed
from the same parametric surfaces before rasterization, so they are exact by
construction. Deformity knobs tilt the posterior elements relative to the
body and skew the left/right pedicle offsets; a rigid pose moves the whole
vertebra in world space.

Canonical axes before posing: +x left, +y posterior, +z superior, with the
body centered at the origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .volume import LandmarkSet, Volume

# Attachment of the pedicles along the body's posterior direction, as a
# fraction of the body half-depth.
_PEDICLE_ATTACH_FRACTION = 0.6


@dataclass(frozen=True)
class PhantomParams:
    """Geometry, intensity, pose, and grid parameters of one phantom."""

    body_half_axes: tuple[float, float] = (18.0, 14.0)  # (lateral, AP) mm
    body_height: float = 26.0
    pedicle_radius: float = 3.5
    pedicle_length: float = 12.0
    pedicle_offset: float = 12.0  # lateral offset of each pedicle axis
    pedicle_superior_offset: float = 3.0
    rotation_deg: tuple[float, float, float] = (0.0, 0.0, 0.0)
    translation_mm: tuple[float, float, float] = (0.0, 0.0, 0.0)
    lateral_tilt_deg: float = 0.0  # posterior elements vs body, about +y
    lr_scale_skew: float = 0.0  # left offset *(1+s), right *(1-s)
    bone_hu: float = 400.0
    tissue_hu: float = -100.0
    air_hu: float = -1000.0
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    dims: tuple[int, int, int] = (72, 128, 128)
    seed: int = 0

    def __post_init__(self):
        lengths = (
            *self.body_half_axes,
            self.body_height,
            self.pedicle_radius,
            self.pedicle_length,
            self.pedicle_offset,
        )
        if any(not np.isfinite(v) or v <= 0 for v in lengths):
            raise ParameterError(f"phantom lengths must be positive, got {lengths}")
        if any(int(d) < 16 for d in self.dims):
            raise ParameterError(f"dims must be >= 16 per axis, got {self.dims}")
        if any(not np.isfinite(s) or s <= 0 for s in self.spacing):
            raise ParameterError(f"spacings must be positive, got {self.spacing}")
        hu = (self.bone_hu, self.tissue_hu, self.air_hu)
        if any(not np.isfinite(v) for v in hu):
            raise ParameterError("intensities must be finite")
        if not (self.bone_hu > self.tissue_hu > self.air_hu):
            raise ParameterError(
                f"need bone > tissue > air intensity, got {hu}"
            )
        for off in (self.pedicle_offset * (1 + self.lr_scale_skew),
                    self.pedicle_offset * (1 - self.lr_scale_skew)):
            if off - self.pedicle_radius <= 0:
                raise ParameterError(
                    "pedicle medial edge crosses the midline "
                    f"(offset {off}, radius {self.pedicle_radius})"
                )


def _rotation(deg_xyz) -> np.ndarray:
    ax, ay, az = np.radians(np.asarray(deg_xyz, dtype=np.float64))
    cx, sx = np.cos(ax), np.sin(ax)
    cy, sy = np.cos(ay), np.sin(ay)
    cz, sz = np.cos(az), np.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return rz @ ry @ rx


def _canonical_landmarks(p: PhantomParams) -> dict[str, np.ndarray]:
    rx, ry = p.body_half_axes
    h = p.body_height
    rad = p.pedicle_radius
    z_ped = p.pedicle_superior_offset
    y0 = ry * _PEDICLE_ATTACH_FRACTION
    y_mid = y0 + p.pedicle_length / 2.0
    off_l = p.pedicle_offset * (1.0 + p.lr_scale_skew)
    off_r = p.pedicle_offset * (1.0 - p.lr_scale_skew)
    tilt = _rotation((0.0, p.lateral_tilt_deg, 0.0))
    pts = {
        "A": np.array([0.0, -ry, 0.0]),
        "B": np.array([0.0, ry, 0.0]),
        "G": np.array([0.0, ry, -h / 2.0]),
        "C": tilt @ np.array([off_l - rad, y_mid, z_ped]),
        "D": tilt @ np.array([off_l, y_mid, z_ped - rad]),
        "E": tilt @ np.array([-off_r, y_mid, z_ped - rad]),
        "F": tilt @ np.array([-(off_r - rad), y_mid, z_ped]),
    }
    return pts


def phantom_landmarks(p: PhantomParams) -> LandmarkSet:
    """Analytic world-mm landmarks of the posed phantom."""
    pose = _rotation(p.rotation_deg)
    t = np.asarray(p.translation_mm, dtype=np.float64)
    return LandmarkSet(
        {name: pose @ pt + t for name, pt in _canonical_landmarks(p).items()}
    )


def _grid_origin(p: PhantomParams) -> tuple[float, float, float]:
    nz, ny, nx = p.dims
    sx, sy, sz = p.spacing
    tx, ty, tz = p.translation_mm
    return (
        tx - (nx - 1) * sx / 2.0,
        ty - (ny - 1) * sy / 2.0,
        tz - (nz - 1) * sz / 2.0,
    )


def _check_landmarks_contained(p: PhantomParams, lm: LandmarkSet) -> None:
    nz, ny, nx = (int(d) for d in p.dims)
    sx, sy, sz = p.spacing
    ox, oy, oz = _grid_origin(p)
    lo = np.array([ox, oy, oz])
    hi = np.array([ox + (nx - 1) * sx, oy + (ny - 1) * sy, oz + (nz - 1) * sz])
    for name in lm:
        if np.any(lm[name] < lo) or np.any(lm[name] > hi):
            raise ParameterError(
                f"landmark {name} at {lm[name].tolist()} falls outside the volume",
                code="params-out-of-bounds",
            )


def generate_phantom(p: PhantomParams) -> tuple[Volume, LandmarkSet]:
    """Rasterize the phantom volume and return it with its landmarks."""
    lm = phantom_landmarks(p)
    _check_landmarks_contained(p, lm)
    nz, ny, nx = (int(d) for d in p.dims)
    sx, sy, sz = p.spacing
    ox, oy, oz = _grid_origin(p)

    wx = (ox + np.arange(nx, dtype=np.float64) * sx)[None, None, :]
    wy = (oy + np.arange(ny, dtype=np.float64) * sy)[None, :, None]
    wz = (oz + np.arange(nz, dtype=np.float64) * sz)[:, None, None]

    # World -> canonical body coordinates (inverse rigid pose).
    pose = _rotation(p.rotation_deg)
    t = np.asarray(p.translation_mm, dtype=np.float64)
    dx, dy, dzc = wx - t[0], wy - t[1], wz - t[2]
    xc = pose[0, 0] * dx + pose[1, 0] * dy + pose[2, 0] * dzc
    yc = pose[0, 1] * dx + pose[1, 1] * dy + pose[2, 1] * dzc
    zc = pose[0, 2] * dx + pose[1, 2] * dy + pose[2, 2] * dzc

    rx, ry = p.body_half_axes
    h = p.body_height
    body = ((xc / rx) ** 2 + (yc / ry) ** 2 <= 1.0) & (np.abs(zc) <= h / 2.0)

    # Canonical -> posterior-element coordinates (inverse lateral tilt).
    tilt = _rotation((0.0, p.lateral_tilt_deg, 0.0))
    xp = tilt[0, 0] * xc + tilt[2, 0] * zc
    yp = yc
    zp = tilt[0, 2] * xc + tilt[2, 2] * zc

    rad = p.pedicle_radius
    z_ped = p.pedicle_superior_offset
    y0 = ry * _PEDICLE_ATTACH_FRACTION
    y1 = y0 + p.pedicle_length
    off_l = p.pedicle_offset * (1.0 + p.lr_scale_skew)
    off_r = p.pedicle_offset * (1.0 - p.lr_scale_skew)
    in_y = (yp >= y0) & (yp <= y1)
    rad2 = rad * rad
    zsq = (zp - z_ped) ** 2
    left = ((xp - off_l) ** 2 + zsq <= rad2) & in_y
    right = ((xp + off_r) ** 2 + zsq <= rad2) & in_y

    r_out = (off_l + off_r) / 2.0 + rad
    r_in = max(r_out - 2.0 * rad, 0.5 * rad)
    ring2 = xp**2 + (yp - y1) ** 2
    arch = (
        (ring2 <= r_out * r_out)
        & (ring2 >= r_in * r_in)
        & (np.abs(zp - z_ped) <= rad)
        & (yp >= y1)
    )

    cap = np.array([0.46 * (nx - 1) * sx, 0.46 * (ny - 1) * sy, 0.48 * (nz - 1) * sz])
    capsule = (
        ((wx - t[0]) / cap[0]) ** 2
        + ((wy - t[1]) / cap[1]) ** 2
        + ((wz - t[2]) / cap[2]) ** 2
    ) <= 1.0

    bone = body | left | right | arch
    vox = np.where(
        bone,
        np.float32(p.bone_hu),
        np.where(capsule, np.float32(p.tissue_hu), np.float32(p.air_hu)),
    ).astype(np.float32)
    return Volume(vox, p.spacing, (ox, oy, oz)), lm


def add_noise(vol: Volume, sigma_hu: float, seed: int) -> Volume:
    """Additive Gaussian voxel noise, deterministic per seed."""
    sigma_hu = float(sigma_hu)
    if sigma_hu < 0 or not np.isfinite(sigma_hu):
        raise ParameterError(f"sigma must be >= 0, got {sigma_hu}")
    if sigma_hu == 0.0:
        return Volume(vol.voxels, vol.spacing, vol.origin)
    rng = np.random.default_rng(seed)
    noisy = vol.voxels + rng.normal(0.0, sigma_hu, size=vol.dims)
    return Volume(noisy.astype(np.float32), vol.spacing, vol.origin)


def jitter_landmarks(lm: LandmarkSet, sigma_mm: float, seed: int) -> LandmarkSet:
    """Perturb each landmark coordinate by N(0, sigma^2), per-seed fixed."""
    sigma_mm = float(sigma_mm)
    if sigma_mm < 0 or not np.isfinite(sigma_mm):
        raise ParameterError(f"sigma must be >= 0, got {sigma_mm}")
    if sigma_mm == 0.0:
        return LandmarkSet({name: lm[name] for name in lm})
    rng = np.random.default_rng(seed)
    deltas = rng.normal(0.0, sigma_mm, size=(7, 3))
    return LandmarkSet({name: lm[name] + deltas[i] for i, name in enumerate(lm)})


def random_params(seed: int, dims=(72, 128, 128), spacing=(1.0, 1.0, 1.0)) -> PhantomParams:
    """Draw plausible lumbar-scale parameters, deterministic per seed.

    The medial pedicle edges land 6-14 mm lateral of the midline; pose and
    deformity knobs stay small enough that planning preconditions hold.
    Draws that would put a posed landmark outside the requested grid are
    rejected and redrawn from the same stream.
    """
    rng = np.random.default_rng(seed)
    for _ in range(256):
        radius = rng.uniform(2.5, 4.5)
        medial_edge = rng.uniform(6.0, 14.0)
        p = PhantomParams(
            body_half_axes=(rng.uniform(15.0, 21.0), rng.uniform(11.0, 16.0)),
            body_height=rng.uniform(22.0, 30.0),
            pedicle_radius=radius,
            pedicle_length=rng.uniform(10.0, 14.0),
            pedicle_offset=medial_edge + radius,
            pedicle_superior_offset=rng.uniform(1.0, 5.0),
            rotation_deg=tuple(rng.uniform(-15.0, 15.0, size=3)),
            translation_mm=tuple(rng.uniform(-5.0, 5.0, size=3)),
            lateral_tilt_deg=rng.uniform(-8.0, 8.0),
            lr_scale_skew=rng.uniform(-0.15, 0.15),
            spacing=tuple(float(s) for s in spacing),
            dims=tuple(int(d) for d in dims),
            seed=int(seed),
        )
        try:
            _check_landmarks_contained(p, phantom_landmarks(p))
        except ParameterError:
            continue
        return p
    raise ParameterError(
        f"no phantom fits a {dims} grid at spacing {spacing} (too few voxels)"
    )
