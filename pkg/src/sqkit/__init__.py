"""Superquadric geometry, robust recovery, and evaluation toolkit."""

from .core import (
    EPS_MAX,
    EPS_MIN,
    AlgorithmError,
    ContractError,
    InputError,
    Pose,
    ScaleParams,
    ShapeParams,
    SqkitError,
    Superquadric,
    aabb,
    canonicalize,
    duality_candidates,
    duality_closure,
    inside_outside,
    inside_outside_many,
    radial_distance,
    radial_distance_many,
)
from .fit import FitConfig, FitReport, e_step, fit, initialize, loglik, m_step, switch_step
from .mesh import (
    PointCloud,
    TriangleMesh,
    VoxelGrid,
    is_watertight,
    make_mesh,
    mesh_volume,
    point_mesh_distance,
    points_inside_mesh,
    resample_mesh,
    sample_surface,
    surface_area,
    voxelize_mesh,
    voxelize_superquadric,
)
from .metrics import MetricReport, chamfer, intersection_volume, mepe, penetration_depth, theta_l1
from .splits import (
    Fold,
    ScoreSummary,
    SequenceRecord,
    make_s0,
    make_s1,
    make_s2,
    read_manifest,
    score_folds,
)

__version__ = "0.1.0"

__all__ = [
    "EPS_MAX",
    "EPS_MIN",
    "AlgorithmError",
    "ContractError",
    "InputError",
    "SqkitError",
    "Pose",
    "ScaleParams",
    "ShapeParams",
    "Superquadric",
    "aabb",
    "canonicalize",
    "duality_candidates",
    "duality_closure",
    "inside_outside",
    "inside_outside_many",
    "radial_distance",
    "radial_distance_many",
    "FitConfig",
    "FitReport",
    "e_step",
    "fit",
    "initialize",
    "loglik",
    "m_step",
    "switch_step",
    "PointCloud",
    "TriangleMesh",
    "VoxelGrid",
    "is_watertight",
    "make_mesh",
    "mesh_volume",
    "point_mesh_distance",
    "points_inside_mesh",
    "resample_mesh",
    "sample_surface",
    "surface_area",
    "voxelize_mesh",
    "voxelize_superquadric",
    "MetricReport",
    "chamfer",
    "intersection_volume",
    "mepe",
    "penetration_depth",
    "theta_l1",
    "Fold",
    "ScoreSummary",
    "SequenceRecord",
    "make_s0",
    "make_s1",
    "make_s2",
    "read_manifest",
    "score_folds",
    "__version__",
]
