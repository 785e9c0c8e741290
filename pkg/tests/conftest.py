import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from sqkit import Superquadric, TriangleMesh


def draw_superquadric(rng, eps_lo=0.3, eps_hi=1.8, scale_lo=10.0, scale_hi=50.0,
                      posed=True):
    """Random convex superquadric, scales in mm."""
    e1, e2 = rng.uniform(eps_lo, eps_hi, 2)
    scales = rng.uniform(scale_lo, scale_hi, 3)
    if posed:
        rot = Rotation.random(random_state=int(rng.integers(2**31))).as_matrix()
        t = rng.uniform(-30.0, 30.0, 3)
    else:
        rot, t = None, None
    return Superquadric.from_params(e1, e2, scales, rot, t)


# 12-triangle axis-aligned cube, outward winding
_CUBE_FACES = np.array([
    (0, 2, 1), (1, 2, 3),
    (4, 5, 6), (5, 7, 6),
    (0, 1, 4), (1, 5, 4),
    (2, 6, 3), (3, 6, 7),
    (0, 4, 2), (2, 4, 6),
    (1, 3, 5), (3, 7, 5),
])


def cube_mesh(lo=(0.0, 0.0, 0.0), size=10.0):
    lo = np.asarray(lo, dtype=float)
    verts = np.array([
        lo + size * np.array([x, y, z])
        for z in (0.0, 1.0) for y in (0.0, 1.0) for x in (0.0, 1.0)
    ])
    return TriangleMesh(verts, _CUBE_FACES.copy())


def open_cube_mesh(lo=(0.0, 0.0, 0.0), size=10.0):
    """Cube missing the +z face (both triangles): not watertight."""
    closed = cube_mesh(lo, size)
    keep = np.vstack([closed.faces[:2], closed.faces[4:]])
    return TriangleMesh(closed.vertices, keep)


@pytest.fixture
def draw_sq():
    return draw_superquadric
