"""Superquadric parameters, implicit geometry, and labeling transforms.

A superquadric is an 11-parameter convex solid: two shape exponents
``(eps1, eps2)`` in [0.1, 2.0], three positive semi-axis scales in mm, and
a rigid pose.  The implicit (inside-outside) form in the local frame is

    f(p) = (|x/ax|^(2/eps2) + |y/ay|^(2/eps2))^(eps2/eps1) + |z/az|^(2/eps1)

with f < 1 inside, f = 1 on the surface, f > 1 outside.  Poses are stored
as rotation matrices; the interchange form serializes rotations as
axis-angle 3-vectors, giving the flat layout

    (eps1, eps2, ax, ay, az, rx, ry, rz, tx, ty, tz).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from . import kernels

EPS_MIN = 0.1
EPS_MAX = 2.0
_ORTHO_TOL = 1e-9


class SqkitError(Exception):
    """Base class for package errors."""


class InputError(SqkitError):
    """Unreadable or malformed input (CLI exit code 2)."""


class AlgorithmError(SqkitError):
    """A numeric procedure cannot proceed or failed (CLI exit code 3)."""


class ContractError(SqkitError):
    """Inputs violate an operation's contract (CLI exit code 4)."""


# ------------------------------------------------------------------ rotations


def _skew(v):
    return np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
    )


def rotvec_to_matrix(rv) -> np.ndarray:
    """Rodrigues map from an axis-angle 3-vector to a rotation matrix."""
    rv = np.asarray(rv, dtype=float).reshape(3)
    angle = float(np.linalg.norm(rv))
    if angle < 1e-12:
        k = _skew(rv)
        return np.eye(3) + k + 0.5 * (k @ k)
    k = _skew(rv / angle)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def matrix_to_rotvec(rot) -> np.ndarray:
    """Axis-angle 3-vector (angle in [0, pi]) for a rotation matrix."""
    return Rotation.from_matrix(np.asarray(rot, dtype=float)).as_rotvec()


# ---------------------------------------------------------------------- types


@dataclass(frozen=True)
class ShapeParams:
    """Shape exponents, limited to the convex range."""

    eps1: float
    eps2: float

    def __post_init__(self):
        for name in ("eps1", "eps2"):
            v = getattr(self, name)
            if not np.isfinite(v) or not (EPS_MIN <= v <= EPS_MAX):
                raise ValueError(f"{name}={v!r} outside [{EPS_MIN}, {EPS_MAX}]")
            object.__setattr__(self, name, float(v))


@dataclass(frozen=True)
class ScaleParams:
    """Semi-axis lengths in mm, all strictly positive."""

    ax: float
    ay: float
    az: float

    def __post_init__(self):
        for name in ("ax", "ay", "az"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0.0:
                raise ValueError(f"{name}={v!r} must be a positive length")
            object.__setattr__(self, name, float(v))

    def as_array(self) -> np.ndarray:
        return np.array([self.ax, self.ay, self.az])


@dataclass(frozen=True)
class Pose:
    """Rigid transform: rotation matrix in SO(3) plus translation in mm."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=float)
        t = np.array(self.translation, dtype=float).reshape(3)
        if rot.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {rot.shape}")
        if not np.all(np.isfinite(rot)) or not np.all(np.isfinite(t)):
            raise ValueError("pose contains non-finite values")
        if np.max(np.abs(rot.T @ rot - np.eye(3))) > _ORTHO_TOL:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(rot) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation must have determinant +1")
        rot.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class Superquadric:
    """Shape exponents, scales, and pose; the package's central value type."""

    shape: ShapeParams
    scale: ScaleParams
    pose: Pose

    @classmethod
    def from_params(cls, eps1, eps2, scales, rotation=None, translation=None):
        pose = Pose(
            np.eye(3) if rotation is None else rotation,
            np.zeros(3) if translation is None else translation,
        )
        return cls(ShapeParams(eps1, eps2), ScaleParams(*scales), pose)

    def theta(self) -> np.ndarray:
        """Flat 11-vector: shape, scales, axis-angle rotation, translation."""
        return np.concatenate(
            [
                [self.shape.eps1, self.shape.eps2],
                self.scale.as_array(),
                matrix_to_rotvec(self.pose.rotation),
                self.pose.translation,
            ]
        )

    @classmethod
    def from_theta(cls, vec) -> "Superquadric":
        vec = np.asarray(vec, dtype=float).reshape(11)
        return cls(
            ShapeParams(vec[0], vec[1]),
            ScaleParams(vec[2], vec[3], vec[4]),
            Pose(rotvec_to_matrix(vec[5:8]), vec[8:11]),
        )

    def to_dict(self) -> dict:
        rv = matrix_to_rotvec(self.pose.rotation)
        return {
            "eps1": self.shape.eps1,
            "eps2": self.shape.eps2,
            "scale": [self.scale.ax, self.scale.ay, self.scale.az],
            "rotation_axis_angle": [float(v) for v in rv],
            "translation": [float(v) for v in self.pose.translation],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Superquadric":
        try:
            return cls(
                ShapeParams(float(data["eps1"]), float(data["eps2"])),
                ScaleParams(*[float(v) for v in data["scale"]]),
                Pose(
                    rotvec_to_matrix([float(v) for v in data["rotation_axis_angle"]]),
                    [float(v) for v in data["translation"]],
                ),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed superquadric record: {exc}") from exc


# ------------------------------------------------------------------- geometry


def _local_frame(sq: Superquadric, points) -> np.ndarray:
    pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 3))
    return np.ascontiguousarray((pts - sq.pose.translation) @ sq.pose.rotation)


def inside_outside_many(sq: Superquadric, points) -> np.ndarray:
    """Implicit values for an (n, 3) array of world-frame points."""
    return kernels.implicit_values(
        _local_frame(sq, points),
        sq.shape.eps1,
        sq.shape.eps2,
        sq.scale.ax,
        sq.scale.ay,
        sq.scale.az,
    )


def inside_outside(sq: Superquadric, point) -> float:
    return float(inside_outside_many(sq, point)[0])


def radial_distance_many(sq: Superquadric, points) -> np.ndarray:
    """Radial surface distances (mm) for an (n, 3) array of points.

    The radial distance is |r| * |1 - f^(-eps1/2)| with r the local-frame
    range; it vanishes exactly on the surface and degrades gracefully for
    far outliers.  Points at the local origin report the smallest scale.
    """
    return kernels.radial_values(
        _local_frame(sq, points),
        sq.shape.eps1,
        sq.shape.eps2,
        sq.scale.ax,
        sq.scale.ay,
        sq.scale.az,
    )


def radial_distance(sq: Superquadric, point) -> float:
    return float(radial_distance_many(sq, point)[0])


def aabb(sq: Superquadric) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounds of the solid (it lies inside its local scale box)."""
    half = np.abs(sq.pose.rotation) @ sq.scale.as_array()
    return sq.pose.translation - half, sq.pose.translation + half


# ----------------------------------------------------------------- relabeling

# Axis relabelings are signed permutation rotations folded into the pose:
# new_rotation = rotation @ q, scales permuted by |q|^T, and the shape pair
# swapped whenever q moves the local z-axis into the xy-plane.
_Q_ZX = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])  # Ry(+90)
_Q_ZY = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])  # Rx(-90)
_Q_ZROT = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])  # Rz(+90)


def _relabel(sq: Superquadric, q: np.ndarray, swap: bool) -> Superquadric:
    scales = np.abs(q).T @ sq.scale.as_array()
    e1, e2 = sq.shape.eps1, sq.shape.eps2
    if swap:
        e1, e2 = e2, e1
    return Superquadric(
        ShapeParams(e1, e2),
        ScaleParams(*scales),
        Pose(sq.pose.rotation @ q, sq.pose.translation),
    )


def duality_candidates(sq: Superquadric) -> list[Superquadric]:
    """Deterministic restart set: identity, z->x, z->y, and 90-degree-about-z.

    The axis relabelings that move z produce exactly equivalent solids only
    in symmetric cases (spheres, equal exponents); in general they are
    nearby restarts for fitting, not identities.  The about-z candidate
    swaps (ax, ay) and is always an exact relabeling.
    """
    return [
        sq,
        _relabel(sq, _Q_ZX, True),
        _relabel(sq, _Q_ZY, True),
        _relabel(sq, _Q_ZROT, False),
    ]


def _rotations_about_axes() -> list[np.ndarray]:
    """All 24 signed axis permutations with determinant +1."""
    from itertools import permutations, product

    out = []
    for perm in permutations(range(3)):
        for signs in product((1.0, -1.0), repeat=3):
            q = np.zeros((3, 3))
            for j in range(3):
                q[perm[j], j] = signs[j]
            if np.linalg.det(q) > 0.5:
                out.append(q)
    return out


_ALL_RELABEL_ROTATIONS = _rotations_about_axes()
# the subgroup fixing the z-axis up to sign: exact symmetries of every
# superquadric (x/y enter the implicit form symmetrically, all bases even)
_EXACT_RELABEL_ROTATIONS = [
    q for q in _ALL_RELABEL_ROTATIONS if abs(q[2, 2]) == 1.0
]


def _label_key(sq: Superquadric) -> tuple:
    rv = matrix_to_rotvec(sq.pose.rotation)
    return (
        sq.shape.eps1,
        sq.shape.eps2,
        float(np.linalg.norm(rv)),
        rv[0],
        rv[1],
        rv[2],
        sq.scale.ax,
        sq.scale.ay,
        sq.scale.az,
    )


def canonicalize(sq: Superquadric) -> Superquadric:
    """Pick a deterministic representative labeling of an identical solid.

    Minimizes (shape, rotation angle, rotation vector, scales) over the
    eight relabelings that leave the surface exactly unchanged.  Idempotent,
    and invariant under those relabelings; geometry is never altered, so a
    canonicalized fit result describes the same surface as the raw one.
    """
    candidates = [_relabel(sq, q, False) for q in _EXACT_RELABEL_ROTATIONS]
    return min(candidates, key=_label_key)


def duality_closure(sq: Superquadric) -> list[Superquadric]:
    """Every labeling reachable by chains of duality relabelings (48 total)."""
    out = []
    for q in _ALL_RELABEL_ROTATIONS:
        for swap in (False, True):
            out.append(_relabel(sq, q, swap))
    return out
