"""Axis-aligned box abstractions over observed feature vectors.

A box summarises one cluster of logged decisions as a center vector plus a
per-dimension radius. Membership is boundary-inclusive and exact: no
tolerance is applied inside the containment test itself.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np


class DimensionMismatchError(ValueError):
    """Raised when a vector's length differs from the expected dimension."""


def feature_vector(values: Iterable[float]) -> tuple[float, ...]:
    """Validate and freeze a feature vector: finite entries, length >= 1."""
    vec = tuple(float(v) for v in values)
    if not vec:
        raise ValueError("feature vector must have at least one dimension")
    for j, v in enumerate(vec):
        if not math.isfinite(v):
            raise ValueError(f"feature vector entry {j} is not finite: {v!r}")
    return vec


class Polarity(enum.Enum):
    """Whether a box abstracts correctly or incorrectly predicted samples."""

    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class AbstractionBox:
    """One axis-aligned region of feature space with its provenance.

    ``center`` and ``radius`` describe the region, ``cluster_id`` names the
    source cluster (unique within a monitor), ``sample_count`` is the number
    of abstracted samples, ``label`` is the predicted class the box refers
    to, and ``polarity`` records whether those samples were predicted
    correctly (positive) or incorrectly (negative).
    """

    center: tuple[float, ...]
    radius: tuple[float, ...]
    cluster_id: str
    sample_count: int
    label: str
    polarity: Polarity

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", feature_vector(self.center))
        object.__setattr__(self, "radius", tuple(float(r) for r in self.radius))
        if len(self.radius) != len(self.center):
            raise DimensionMismatchError(
                f"radius has {len(self.radius)} dimensions, center has {len(self.center)}"
            )
        for j, r in enumerate(self.radius):
            if not math.isfinite(r) or r < 0.0:
                raise ValueError(f"radius entry {j} must be finite and >= 0, got {r!r}")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if not self.label:
            raise ValueError("label must be non-empty")
        if not isinstance(self.polarity, Polarity):
            raise TypeError("polarity must be a Polarity")

    @property
    def dimension(self) -> int:
        return len(self.center)


def box_contains(box: AbstractionBox, x: Sequence[float]) -> bool:
    """Boundary-inclusive membership: |x[j] - center[j]| <= radius[j] for all j."""
    if len(x) != box.dimension:
        raise DimensionMismatchError(
            f"query vector has {len(x)} dimensions, box has {box.dimension}"
        )
    return all(
        abs(float(x[j]) - box.center[j]) <= box.radius[j] for j in range(box.dimension)
    )


def box_from_points(
    points: Iterable[Sequence[float]],
    cluster_id: str,
    label: str,
    polarity: Polarity,
) -> AbstractionBox:
    """Tightest enclosing axis-aligned box of a non-empty point set.

    The center is the midpoint of the per-dimension extent. The radius is
    the largest observed |x[j] - center[j]|, which equals half the extent up
    to rounding and guarantees that every source point passes box_contains
    even after floating-point rounding of the midpoint.
    """
    pts = [feature_vector(p) for p in points]
    if not pts:
        raise ValueError("cannot build a box from an empty point set")
    dim = len(pts[0])
    for p in pts:
        if len(p) != dim:
            raise DimensionMismatchError("points have mixed dimensions")
    center = tuple(
        (min(p[j] for p in pts) + max(p[j] for p in pts)) / 2.0 for j in range(dim)
    )
    radius = tuple(max(abs(p[j] - center[j]) for p in pts) for j in range(dim))
    return AbstractionBox(
        center=center,
        radius=radius,
        cluster_id=cluster_id,
        sample_count=len(pts),
        label=label,
        polarity=polarity,
    )


def box_inflate(
    box: AbstractionBox, tau: float, floor: float = 0.0
) -> AbstractionBox:
    """Widen a box: radius' = radius * (1 + tau) + floor, per dimension.

    tau is a relative margin, floor an absolute one; both default to zero so
    the literal abstraction is reproduced. tau=0, floor=0 is the identity.
    """
    if tau < 0.0:
        raise ValueError(f"inflation factor must be >= 0, got {tau}")
    if floor < 0.0:
        raise ValueError(f"inflation floor must be >= 0, got {floor}")
    if tau == 0.0 and floor == 0.0:
        return box
    return replace(box, radius=tuple(r * (1.0 + tau) + floor for r in box.radius))


def membership_matrix(
    boxes: Sequence[AbstractionBox], points: np.ndarray
) -> np.ndarray:
    """Boolean matrix: entry [i, b] is True iff points[i] lies in boxes[b].

    ``points`` is an (n, d) array; all boxes must share dimension d. An
    empty box list yields an (n, 0) matrix.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must be a 2-d array")
    if not boxes:
        return np.zeros((points.shape[0], 0), dtype=bool)
    dim = boxes[0].dimension
    if points.shape[1] != dim or any(b.dimension != dim for b in boxes):
        raise DimensionMismatchError("points and boxes must share one dimension")
    centers = np.array([b.center for b in boxes], dtype=float)
    radii = np.array([b.radius for b in boxes], dtype=float)
    return (np.abs(points[:, None, :] - centers[None, :, :]) <= radii[None, :, :]).all(
        axis=2
    )
