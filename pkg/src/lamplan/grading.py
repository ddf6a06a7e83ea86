"""A/B/C grading of cutting planes against ground-truth landmarks.

A plane must first be close to perpendicular to the true coronal plane
(its normal within tau degrees of 90 to the true Z axis), otherwise it is
grade C outright. Position is then judged where the plane crosses the
relevant frame axis:

* longitudinal planes: the crossing's signed Y coordinate y*, relative to
  the projected medial pedicle edge on the same side of the midline, gives
  r = y*/y_edge. Lateral third (r in [2/3, 1]) is A, middle third B,
  medial third C; r > 1 overshoots the pedicle and r <= 0 reaches or
  crosses the midline, both C.
* transverse planes: the crossing's X coordinate is expressed as the
  fraction s of the way from the endplate landmark G up to the pedicle
  lower-edge midpoint J. Cephalic half (s in [0.5, 1]) is A, caudal half B,
  outside [0, 1] C.

Boundary values always take the better grade. All quantities are ratios of
frame-relative coordinates, so grades are invariant to rigid motion and
uniform scaling of plane and landmarks together.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import GeometryError, ParameterError
from .frame import CutPlane, TRANSVERSE, fit_frame, project_onto_plane
from .volume import LandmarkSet

DEFAULT_TAU_DEG = 5.0

LONGITUDINAL = "longitudinal"
TRANSVERSE_KIND = "transverse"
KINDS = (LONGITUDINAL, TRANSVERSE_KIND)

_AXIS_EPS = 1e-12


@functools.total_ordering
class Grade(enum.Enum):
    """Plan quality: A (excellent) > B (good) > C (poor)."""

    A = "A"
    B = "B"
    C = "C"

    def __lt__(self, other):
        if not isinstance(other, Grade):
            return NotImplemented
        order = {"A": 3, "B": 2, "C": 1}
        return order[self.value] < order[other.value]


@dataclass(frozen=True)
class GradeResult:
    """One plane's grade with the measured axis ratio and a short reason."""

    plane_name: str
    kind: str
    grade: Grade
    ratio: float | None
    reason: str

    def as_dict(self) -> dict:
        return {
            "plane_name": self.plane_name,
            "grade": self.grade.value,
            "r_or_s": self.ratio,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class PlanReport:
    """Aggregate counts and percentages per plane kind (Table-style)."""

    counts: dict
    percents: dict
    totals: dict

    def as_dict(self) -> dict:
        return {
            kind: {
                "total": self.totals[kind],
                "counts": dict(self.counts[kind]),
                "percents": dict(self.percents[kind]),
            }
            for kind in KINDS
        }


def _perpendicularity_deg(plane: CutPlane, z_axis: np.ndarray) -> float:
    """Angle in degrees between the plane normal and the true Z axis."""
    d = float(np.clip(abs(np.dot(plane.normal, z_axis)), 0.0, 1.0))
    return float(np.degrees(np.arccos(d)))


def _axis_crossing(plane: CutPlane, origin: np.ndarray, axis: np.ndarray):
    """Parameter t where the plane meets the line origin + t*axis, or None."""
    denom = float(np.dot(plane.normal, axis))
    if abs(denom) < _AXIS_EPS:
        return None
    return float(np.dot(plane.normal, plane.point - origin)) / denom


def grade_longitudinal(
    plane: CutPlane, truth: LandmarkSet, tau_deg: float = DEFAULT_TAU_DEG
) -> GradeResult:
    """Grade a longitudinal plane against the true landmarks."""
    f = fit_frame(truth)
    angle = _perpendicularity_deg(plane, f.z_axis)
    if angle < 90.0 - float(tau_deg):
        return GradeResult(
            plane.name, LONGITUDINAL, Grade.C, None,
            f"not perpendicular to the coronal plane (off by {90.0 - angle:.2f} deg)",
        )
    y_star = _axis_crossing(plane, f.origin, f.y_axis)
    if y_star is None:
        return GradeResult(
            plane.name, LONGITUDINAL, Grade.C, None, "non-intersecting with the Y axis"
        )
    if y_star == 0.0:
        return GradeResult(
            plane.name, LONGITUDINAL, Grade.C, 0.0, "on the midsagittal plane"
        )
    side_point = "C" if y_star > 0 else "F"
    edge = project_onto_plane(truth[side_point], f.origin, f.z_axis)
    y_edge = float(np.dot(f.y_axis, edge - f.origin))
    if (y_star > 0) != (y_edge > 0) or y_edge == 0.0:
        raise GeometryError(
            f"medial pedicle edge {side_point}' has frame-Y {y_edge:.3f}; "
            "cannot resolve plane side",
            code="orientation",
        )
    r = y_star / y_edge
    if r < 0.0:
        grade, reason = Grade.C, "crosses the midsagittal plane to the opposite side"
    elif r > 1.0:
        grade, reason = Grade.C, "lateral to the medial pedicle edge"
    elif r >= 2.0 / 3.0:
        grade, reason = Grade.A, "lateral third"
    elif r >= 1.0 / 3.0:
        grade, reason = Grade.B, "middle third"
    else:
        grade, reason = Grade.C, "medial third"
    return GradeResult(plane.name, LONGITUDINAL, grade, r, reason)


def grade_transverse(
    plane: CutPlane, truth: LandmarkSet, tau_deg: float = DEFAULT_TAU_DEG
) -> GradeResult:
    """Grade a transverse plane against the true landmarks."""
    f = fit_frame(truth)
    angle = _perpendicularity_deg(plane, f.z_axis)
    if angle < 90.0 - float(tau_deg):
        return GradeResult(
            plane.name, TRANSVERSE_KIND, Grade.C, None,
            f"not perpendicular to the coronal plane (off by {90.0 - angle:.2f} deg)",
        )
    dp = project_onto_plane(truth["D"], f.origin, f.z_axis)
    ep = project_onto_plane(truth["E"], f.origin, f.z_axis)
    x_j = float(np.dot(f.x_axis, (dp + ep) / 2.0 - f.origin))
    x_g = float(np.dot(f.x_axis, truth["G"] - f.origin))
    if x_j <= x_g:
        raise GeometryError(
            f"pedicle lower-edge level (frame-X {x_j:.3f}) is not above the "
            f"endplate level (frame-X {x_g:.3f})",
            code="degenerate-region",
        )
    x_star = _axis_crossing(plane, f.origin, f.x_axis)
    if x_star is None:
        return GradeResult(
            plane.name, TRANSVERSE_KIND, Grade.C, None, "non-intersecting with the X axis"
        )
    s = (x_star - x_g) / (x_j - x_g)
    if s > 1.0:
        grade, reason = Grade.C, "above the pedicle lower-edge level"
    elif s < 0.0:
        grade, reason = Grade.C, "below the lower endplate level"
    elif s >= 0.5:
        grade, reason = Grade.A, "cephalic half"
    else:
        grade, reason = Grade.B, "caudal half"
    return GradeResult(plane.name, TRANSVERSE_KIND, grade, s, reason)


def grade_plane(
    plane: CutPlane, truth: LandmarkSet, tau_deg: float = DEFAULT_TAU_DEG
) -> GradeResult:
    """Dispatch on the plane's name."""
    if plane.name == TRANSVERSE:
        return grade_transverse(plane, truth, tau_deg)
    return grade_longitudinal(plane, truth, tau_deg)


def _percent(count: int, total: int) -> float:
    if total == 0:
        return 0.0
    q = (Decimal(count) * 100 / Decimal(total)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP
    )
    return float(q)


def aggregate(grades) -> PlanReport:
    """Count grades per plane kind and derive half-up percentages.

    Accepts (kind, Grade) pairs or :class:`GradeResult` items.
    """
    counts = {kind: {g.value: 0 for g in Grade} for kind in KINDS}
    for item in grades:
        if isinstance(item, GradeResult):
            kind, grade = item.kind, item.grade
        else:
            kind, grade = item
        if kind not in counts:
            raise ParameterError(f"unknown plane kind {kind!r}")
        if not isinstance(grade, Grade):
            grade = Grade(grade)
        counts[kind][grade.value] += 1
    totals = {kind: sum(counts[kind].values()) for kind in KINDS}
    percents = {
        kind: {g: _percent(c, totals[kind]) for g, c in counts[kind].items()}
        for kind in KINDS
    }
    return PlanReport(counts=counts, percents=percents, totals=totals)
