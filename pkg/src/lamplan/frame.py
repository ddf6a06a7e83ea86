"""Personalized vertebral coordinate frame and cutting-plane generation.

The frame is fitted from the seven landmarks: Z points from A to B
(posterior), the pedicle landmarks C/D/E/F are projected onto the plane
through B perpendicular to Z, Y runs from the right pedicle midpoint toward
the left one, and X = Y x Z (superior). The three cutting planes are placed
in this frame: two longitudinal planes perpendicular to Y at 75% of each
projected medial pedicle edge's signed Y coordinate, and (for partial
resections) one transverse plane perpendicular to X through the point 40% of
the way from the pedicle lower-edge midpoint toward the endplate landmark G.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, ParameterError
from .volume import LandmarkSet

LEFT_LONGITUDINAL = "left_longitudinal"
RIGHT_LONGITUDINAL = "right_longitudinal"
TRANSVERSE = "transverse"
PLANE_NAMES = (LEFT_LONGITUDINAL, RIGHT_LONGITUDINAL, TRANSVERSE)

LONGITUDINAL_FRACTION = 0.75  # of the medial pedicle edge's frame-Y offset
TRANSVERSE_FRACTION = 0.4  # of the way from J toward G

_UNIT_TOL = 1e-9


class PlanMode(enum.Enum):
    """Total resections need planes 1-2; partial resections add plane 3."""

    TOTAL = "total"
    PARTIAL = "partial"


@dataclass(frozen=True)
class Frame:
    """Origin plus right-handed orthonormal axes X (superior), Y (left),
    Z (posterior), all in world coordinates."""

    origin: np.ndarray
    x_axis: np.ndarray
    y_axis: np.ndarray
    z_axis: np.ndarray

    def __post_init__(self):
        vals = {}
        for field in ("origin", "x_axis", "y_axis", "z_axis"):
            v = np.asarray(getattr(self, field), dtype=np.float64).reshape(3).copy()
            if not np.all(np.isfinite(v)):
                raise ParameterError(f"frame {field} must be finite")
            v.setflags(write=False)
            vals[field] = v
        m = np.column_stack([vals["x_axis"], vals["y_axis"], vals["z_axis"]])
        if np.max(np.abs(np.linalg.norm(m, axis=0) - 1.0)) > _UNIT_TOL:
            raise GeometryError("frame axes must be unit length", code="non-unit-axis")
        gram = m.T @ m - np.eye(3)
        if np.max(np.abs(gram)) > _UNIT_TOL:
            raise GeometryError("frame axes must be orthogonal", code="non-orthogonal")
        if abs(np.linalg.det(m) - 1.0) > _UNIT_TOL:
            raise GeometryError("frame must be right-handed", code="left-handed")
        for field, v in vals.items():
            object.__setattr__(self, field, v)

    def as_dict(self) -> dict:
        return {
            "origin": self.origin.tolist(),
            "X": self.x_axis.tolist(),
            "Y": self.y_axis.tolist(),
            "Z": self.z_axis.tolist(),
        }


@dataclass(frozen=True)
class CutPlane:
    """A named plane (point + unit normal) with an explicit resection side.

    resect_side is +1 or -1: the removed half-space is where
    ``resect_side * normal . (p - point) > 0``.
    """

    name: str
    point: np.ndarray
    normal: np.ndarray
    resect_side: int

    def __post_init__(self):
        if self.name not in PLANE_NAMES:
            raise ParameterError(f"plane name must be one of {PLANE_NAMES}, got {self.name!r}")
        point = np.asarray(self.point, dtype=np.float64).reshape(3).copy()
        normal = np.asarray(self.normal, dtype=np.float64).reshape(3).copy()
        if not (np.all(np.isfinite(point)) and np.all(np.isfinite(normal))):
            raise ParameterError("plane point and normal must be finite")
        if abs(np.linalg.norm(normal) - 1.0) > _UNIT_TOL:
            raise GeometryError("plane normal must be unit length", code="non-unit-normal")
        side = int(self.resect_side)
        if side not in (-1, 1):
            raise ParameterError(f"resect_side must be +1 or -1, got {self.resect_side}")
        point.setflags(write=False)
        normal.setflags(write=False)
        object.__setattr__(self, "point", point)
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "resect_side", side)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "point": self.point.tolist(),
            "normal": self.normal.tolist(),
            "resect_side": self.resect_side,
        }


def project_onto_plane(p, origin, normal) -> np.ndarray:
    """Orthogonal projection of p onto the plane through origin with the
    given normal. Normals within 1e-3 of unit length are renormalized."""
    p = np.asarray(p, dtype=np.float64).reshape(3)
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    n = np.asarray(normal, dtype=np.float64).reshape(3)
    norm = np.linalg.norm(n)
    if abs(norm - 1.0) > 1e-3:
        raise ParameterError(f"normal must be unit length within 1e-3, got |n|={norm}")
    if abs(norm - 1.0) > 1e-6:
        n = n / norm
    return p - np.dot(p - origin, n) * n


def fit_frame(lm: LandmarkSet) -> Frame:
    """Fit the personalized frame: origin B, Z along A->B, Y across the
    projected pedicle midpoints, X = Y x Z."""
    a, b = lm["A"], lm["B"]
    ab = b - a
    if np.linalg.norm(ab) < 1e-6:
        raise GeometryError("landmarks A and B coincide", code="degenerate-axis")
    z = ab / np.linalg.norm(ab)
    cp, dp, ep, fp = (project_onto_plane(lm[n], b, z) for n in "CDEF")
    h = (cp + dp) / 2.0
    i = (ep + fp) / 2.0
    hi = h - i
    if np.linalg.norm(hi) < 1e-6:
        raise GeometryError(
            "projected pedicle midpoints coincide", code="degenerate-pedicle"
        )
    y = hi / np.linalg.norm(hi)
    x = np.cross(y, z)
    return Frame(origin=b, x_axis=x, y_axis=y, z_axis=z)


def to_frame(f: Frame, p) -> np.ndarray:
    """World point -> (x, y, z) coordinates in the frame."""
    d = np.asarray(p, dtype=np.float64).reshape(3) - f.origin
    return np.array([np.dot(f.x_axis, d), np.dot(f.y_axis, d), np.dot(f.z_axis, d)])


def from_frame(f: Frame, coords) -> np.ndarray:
    """Inverse of :func:`to_frame`."""
    cx, cy, cz = np.asarray(coords, dtype=np.float64).reshape(3)
    return f.origin + cx * f.x_axis + cy * f.y_axis + cz * f.z_axis


def plan_planes(lm: LandmarkSet, mode: PlanMode = PlanMode.PARTIAL) -> list[CutPlane]:
    """Generate the cutting planes for one vertebra.

    Raises an orientation error when the projected medial pedicle edges do
    not resolve to opposite sides of the midline (severe deformity; the
    caller should fall back to manual planning).
    """
    if not isinstance(mode, PlanMode):
        mode = PlanMode(mode)
    f = fit_frame(lm)
    cp, dp, ep, fp = (project_onto_plane(lm[n], f.origin, f.z_axis) for n in "CDEF")
    y_c = float(np.dot(f.y_axis, cp - f.origin))
    y_f = float(np.dot(f.y_axis, fp - f.origin))
    if y_c <= 0 or y_f >= 0:
        raise GeometryError(
            f"pedicle sides unresolved: frame-Y of C'={y_c:.3f}, F'={y_f:.3f}",
            code="orientation",
        )
    m = f.origin + (LONGITUDINAL_FRACTION * y_c) * f.y_axis
    n = f.origin + (LONGITUDINAL_FRACTION * y_f) * f.y_axis
    planes = [
        CutPlane(LEFT_LONGITUDINAL, m, f.y_axis, resect_side=+1),
        CutPlane(RIGHT_LONGITUDINAL, n, f.y_axis, resect_side=-1),
    ]
    if mode is PlanMode.PARTIAL:
        j = (dp + ep) / 2.0
        k = j + TRANSVERSE_FRACTION * (lm["G"] - j)
        planes.append(CutPlane(TRANSVERSE, k, f.x_axis, resect_side=-1))
    return planes
