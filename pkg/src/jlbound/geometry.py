"""Vector and metric primitives shared by the rest of the toolkit.

Everything here works on squared Euclidean distances, which is the
quantity the JL guarantee is phrased in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Absolute slack used when comparing a ratio against the closed band [1-eps, 1+eps].
BAND_SLACK = 1e-9


class GeometryError(ValueError):
    """Raised on malformed point sequences or mismatched dimensions."""


@dataclass(frozen=True)
class PointSequence:
    """An ordered list of points in R^dim. Duplicates are allowed."""

    dim: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, self.dim)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise GeometryError(
                f"expected points of shape (n, {self.dim}), got {pts.shape}"
            )
        if self.dim < 1:
            raise GeometryError("dim must be positive")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_array(cls, points) -> "PointSequence":
        arr = np.asarray(points, dtype=np.float64)
        if arr.ndim != 2:
            raise GeometryError("points must be a 2-d array")
        return cls(arr.shape[1], arr)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __getitem__(self, i) -> np.ndarray:
        return self.points[i]

    def to_json(self) -> dict:
        return {"dim": int(self.dim), "points": self.points.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "PointSequence":
        try:
            dim = int(obj["dim"])
            points = obj["points"]
        except (KeyError, TypeError) as exc:
            raise GeometryError(f"not a PointSequence object: {exc}") from None
        arr = np.asarray(points, dtype=np.float64)
        if arr.size == 0:
            arr = arr.reshape(0, dim)
        return cls(dim, arr)


@dataclass(frozen=True)
class DistortionReport:
    max_sq_ratio: float
    min_sq_ratio: float
    worst_pair: tuple[int, int]
    passed: bool

    def to_json(self) -> dict:
        return {
            "max_sq_ratio": self.max_sq_ratio,
            "min_sq_ratio": self.min_sq_ratio,
            "worst_pair": list(self.worst_pair),
            "passed": self.passed,
        }


def squared_distance(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise GeometryError(f"dimension mismatch: {x.shape} vs {y.shape}")
    diff = x - y
    return float(diff @ diff)


def pairwise_sq_distances(points: np.ndarray) -> np.ndarray:
    """All squared distances between rows, computed from differences.

    Differences rather than the Gram-matrix trick, so that coincident points
    come out as exact zeros.
    """
    pts = np.asarray(points, dtype=np.float64)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def check_jl_guarantee(X: PointSequence, Y: PointSequence, eps: float) -> DistortionReport:
    """Check that Y preserves every squared distance of X within [1-eps, 1+eps].

    The worst pair is the one whose ratio strays furthest from 1. Pairs that
    coincide in X are skipped in the ratios but must coincide in Y too.
    """
    if not 0 < eps < 1:
        raise GeometryError(f"eps must lie in (0, 1), got {eps}")
    if len(X) != len(Y):
        raise GeometryError(f"length mismatch: {len(X)} vs {len(Y)}")

    n = len(X)
    if n < 2:
        return DistortionReport(1.0, 1.0, (0, 0), True)

    dx = pairwise_sq_distances(X.points)
    dy = pairwise_sq_distances(Y.points)
    iu, ju = np.triu_indices(n, k=1)
    src = dx[iu, ju]
    dst = dy[iu, ju]

    zero = src == 0.0
    if np.any(zero & (dst != 0.0)):
        bad = int(np.flatnonzero(zero & (dst != 0.0))[0])
        raise GeometryError(
            f"points {iu[bad]} and {ju[bad]} coincide in X but not in Y"
        )
    keep = ~zero
    if not np.any(keep):
        return DistortionReport(1.0, 1.0, (0, 0), True)

    ratios = dst[keep] / src[keep]
    pairs_i = iu[keep]
    pairs_j = ju[keep]
    hi = float(ratios.max())
    lo = float(ratios.min())
    worst = int(np.argmax(np.abs(ratios - 1.0)))
    passed = hi <= 1.0 + eps + BAND_SLACK and lo >= 1.0 - eps - BAND_SLACK
    return DistortionReport(hi, lo, (int(pairs_i[worst]), int(pairs_j[worst])), passed)


def polarization_inner(nsq_x: float, nsq_y: float, dsq_xy: float) -> float:
    """Recover <x, y> from ||x||^2, ||y||^2 and ||x - y||^2."""
    return (nsq_x + nsq_y - dsq_xy) / 2.0


def translate_to_origin(Y: PointSequence, anchor_index: int) -> PointSequence:
    if not 0 <= anchor_index < len(Y):
        raise GeometryError(f"anchor index {anchor_index} out of range for {len(Y)} points")
    return PointSequence(Y.dim, Y.points - Y.points[anchor_index])


def basis_vector(dim: int, j: int) -> np.ndarray:
    """e_j with 1-based index j."""
    if not 1 <= j <= dim:
        raise GeometryError(f"index {j} out of range [1, {dim}]")
    e = np.zeros(dim)
    e[j - 1] = 1.0
    return e


def stack(points: Sequence[np.ndarray]) -> PointSequence:
    return PointSequence.from_array(np.vstack([np.asarray(p, dtype=np.float64) for p in points]))
