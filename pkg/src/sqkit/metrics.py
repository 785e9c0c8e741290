"""Geometric evaluation metrics for hand and object reconstructions.

Units are millimetres throughout except intersection_volume, which is
reported in cm^3 to match the usual hand-object benchmark tables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .core import (
    ContractError,
    InputError,
    Superquadric,
    duality_closure,
    inside_outside_many,
    radial_distance_many,
)
from .mesh import PointCloud, TriangleMesh, VoxelGrid, is_watertight, point_mesh_distance, points_inside_mesh

N_HAND_JOINTS = 21


@dataclass(frozen=True)
class MetricReport:
    name: str
    value: float
    units: str

    def to_dict(self) -> dict:
        return {"name": self.name, "value": float(self.value), "units": self.units}


def _points(arg) -> np.ndarray:
    pts = arg.points if isinstance(arg, PointCloud) else np.asarray(arg, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise InputError(f"expected (n, 3) points, got {pts.shape}")
    return np.ascontiguousarray(pts)


def mepe(predicted, reference) -> float:
    """Mean Euclidean error over the 21 hand joints, mm."""
    p = _points(predicted)
    r = _points(reference)
    if p.shape[0] != N_HAND_JOINTS or r.shape[0] != N_HAND_JOINTS:
        raise InputError(
            f"expected {N_HAND_JOINTS} joints per hand, got {p.shape[0]} and {r.shape[0]}"
        )
    return float(np.linalg.norm(p - r, axis=1).mean())


def chamfer(a, b, squared: bool = True) -> float:
    """Symmetric nearest-neighbor distance between two clouds.

    Sum of the two directed means of squared distances (mm^2); with
    squared=False each directed mean is root-ed first and the result is
    in mm.
    """
    pa = _points(a)
    pb = _points(b)
    d_ab = cKDTree(pb).query(pa, k=1)[0]
    d_ba = cKDTree(pa).query(pb, k=1)[0]
    m_ab = float(np.mean(d_ab * d_ab))
    m_ba = float(np.mean(d_ba * d_ba))
    if squared:
        return m_ab + m_ba
    return float(np.sqrt(m_ab) + np.sqrt(m_ba))


def penetration_depth(hand_vertices, obj) -> float:
    """Maximum distance from interpenetrating hand vertices to the
    object surface, mm.  Zero when no vertex is inside the object."""
    pts = _points(hand_vertices)
    if isinstance(obj, Superquadric):
        inside = inside_outside_many(obj, pts) < 1.0
        if not inside.any():
            return 0.0
        return float(radial_distance_many(obj, pts[inside]).max())
    if isinstance(obj, TriangleMesh):
        if not is_watertight(obj):
            raise ContractError("mesh not watertight; run resample/repair")
        inside = points_inside_mesh(obj, pts)
        if not inside.any():
            return 0.0
        return float(point_mesh_distance(obj, pts[inside]).max())
    raise InputError(f"unsupported object type {type(obj).__name__}")


def intersection_volume(a: VoxelGrid, b: VoxelGrid) -> float:
    """Volume of voxels occupied in both grids, cm^3.

    The grids must share a voxel size and sit on the same lattice
    (integer origin offset); anything else raises ContractError.
    """
    vs = a.voxel_size
    if abs(vs - b.voxel_size) > 1e-9 * max(vs, b.voxel_size):
        raise ContractError(
            f"incompatible grids: voxel sizes {a.voxel_size} and {b.voxel_size}"
        )
    off = (b.origin - a.origin) / vs
    off_i = np.round(off).astype(np.int64)
    if np.abs(off - off_i).max() > 1e-6:
        raise ContractError(
            f"incompatible grids: origins differ by a non-integer voxel offset {off}"
        )
    lo = np.maximum(0, off_i)
    hi = np.minimum(np.array(a.dims), off_i + np.array(b.dims))
    if (hi <= lo).any():
        return 0.0
    sub_a = a.occupancy[lo[0] : hi[0], lo[1] : hi[1], lo[2] : hi[2]]
    sub_b = b.occupancy[
        lo[0] - off_i[0] : hi[0] - off_i[0],
        lo[1] - off_i[1] : hi[1] - off_i[1],
        lo[2] - off_i[2] : hi[2] - off_i[2],
    ]
    count = int(np.count_nonzero(sub_a & sub_b))
    return count * vs**3 / 1000.0


def theta_l1(a: Superquadric, b: Superquadric) -> float:
    """L1 distance between parameter vectors, minimized over the axis
    relabelings of both arguments so equivalent encodings compare as
    equal."""
    va = np.stack([s.theta() for s in duality_closure(a)])
    vb = np.stack([s.theta() for s in duality_closure(b)])
    return float(np.abs(va[:, None, :] - vb[None, :, :]).sum(axis=2).min())
