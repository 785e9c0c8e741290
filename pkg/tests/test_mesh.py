"""Sampling, meshing, watertightness, resampling, and voxelization."""

import numpy as np
import pytest

from conftest import cube_mesh, draw_superquadric, open_cube_mesh
from sqkit import (
    ContractError,
    PointCloud,
    Superquadric,
    TriangleMesh,
    aabb,
    inside_outside_many,
    is_watertight,
    make_mesh,
    mesh_volume,
    radial_distance_many,
    resample_mesh,
    sample_surface,
    surface_area,
    voxelize_mesh,
    voxelize_superquadric,
)

UNIT_SPHERE = Superquadric.from_params(1.0, 1.0, (1.0, 1.0, 1.0))


# ----------------------------------------------------------- value types

def test_point_cloud_validation():
    with pytest.raises(ValueError):
        PointCloud(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        PointCloud(np.array([[0.0, 1.0]]))
    with pytest.raises(ValueError):
        PointCloud(np.array([[0.0, 0.0, np.nan]]))
    with pytest.raises(ValueError):
        PointCloud(np.zeros((2, 3)), weights=[1.0, -1.0])


def test_mesh_validation():
    v = np.eye(3)
    with pytest.raises(ValueError):
        TriangleMesh(v, [[0, 1, 3]])  # index out of range
    with pytest.raises(ValueError):
        TriangleMesh(v, [[0, 1, 1]])  # repeated vertex in a face


# -------------------------------------------------------- sample_surface

def test_samples_lie_on_surface():
    pc = sample_surface(UNIT_SPHERE, 1000, seed=0)
    f = inside_outside_many(UNIT_SPHERE, pc.points)
    assert np.max(np.abs(f - 1.0)) < 1e-6


def test_single_sample_on_surface():
    rng = np.random.default_rng(1)
    for s in range(5):
        sq = draw_superquadric(rng)
        pc = sample_surface(sq, 1, seed=s)
        assert len(pc) == 1
        d = radial_distance_many(sq, pc.points)
        assert d[0] < 1e-6 * max(sq.scale.ax, sq.scale.ay, sq.scale.az)


def test_sphere_octant_balance():
    pc = sample_surface(UNIT_SPHERE, 100_000, seed=2)
    pts = pc.points
    oct_id = (pts[:, 0] > 0) * 4 + (pts[:, 1] > 0) * 2 + (pts[:, 2] > 0)
    counts = np.bincount(oct_id, minlength=8)
    assert np.all(np.abs(counts - 12_500) < 0.05 * 12_500)


def test_sampling_deterministic():
    rng = np.random.default_rng(3)
    sq = draw_superquadric(rng)
    a = sample_surface(sq, 500, seed=7).points
    b = sample_surface(sq, 500, seed=7).points
    c = sample_surface(sq, 500, seed=8).points
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_samples_inside_aabb():
    rng = np.random.default_rng(4)
    sq = draw_superquadric(rng)
    lo, hi = aabb(sq)
    pts = sample_surface(sq, 2000, seed=0).points
    assert np.all(pts >= lo - 1e-6)
    assert np.all(pts <= hi + 1e-6)


# ------------------------------------------------------------- make_mesh

def test_coarse_mesh_counts():
    m = make_mesh(UNIT_SPHERE, 4)
    assert m.vertices.shape[0] == 26
    assert m.faces.shape[0] == 48
    # closed surface: V - E + F = 2
    edges = {frozenset(e) for f in m.faces for e in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0]))}
    assert m.vertices.shape[0] - len(edges) + m.faces.shape[0] == 2


def test_mesh_vertices_on_surface():
    rng = np.random.default_rng(5)
    for _ in range(5):
        sq = draw_superquadric(rng)
        m = make_mesh(sq, 12)
        f = inside_outside_many(sq, m.vertices)
        assert np.max(np.abs(f - 1.0)) < 1e-6


def test_mesh_always_watertight():
    rng = np.random.default_rng(6)
    for res in (4, 5, 9):
        sq = draw_superquadric(rng)
        assert is_watertight(make_mesh(sq, res))


def test_sphere_area_converges():
    m = make_mesh(UNIT_SPHERE, 64)
    assert surface_area(m) == pytest.approx(4.0 * np.pi, rel=0.01)


def test_sphere_volume_positive_orientation():
    m = make_mesh(UNIT_SPHERE, 32)
    v = mesh_volume(m)
    assert v > 0
    assert v == pytest.approx(4.0 * np.pi / 3.0, rel=0.02)


def test_cuboid_limit_volume():
    sq = Superquadric.from_params(0.1, 0.1, (1.0, 1.0, 1.0))
    m = make_mesh(sq, 128)
    assert mesh_volume(m) == pytest.approx(8.0, rel=0.03)


# ---------------------------------------------------------- is_watertight

def test_cube_watertight():
    assert is_watertight(cube_mesh())


def test_cube_missing_face_not_watertight():
    assert not is_watertight(open_cube_mesh())


def test_two_disjoint_cubes_watertight():
    a = cube_mesh((0.0, 0.0, 0.0))
    b = cube_mesh((30.0, 0.0, 0.0))
    merged = TriangleMesh(
        np.vstack([a.vertices, b.vertices]),
        np.vstack([a.faces, b.faces + len(a.vertices)]),
    )
    assert is_watertight(merged)


def test_flipped_face_not_watertight():
    m = cube_mesh()
    faces = m.faces.copy()
    faces[0] = faces[0][::-1]  # inconsistent winding across shared edges
    assert not is_watertight(TriangleMesh(m.vertices, faces))


# ---------------------------------------------------------- resample_mesh

def test_resample_triangle_centroid():
    tri = TriangleMesh(
        np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        np.array([[0, 1, 2]]),
    )
    pc = resample_mesh(tri, 10_000, seed=0)
    centroid = pc.points.mean(axis=0)
    assert np.allclose(centroid, (1 / 3, 1 / 3, 0.0), atol=0.02)


def test_resample_cube_face_balance():
    pc = resample_mesh(cube_mesh(size=1.0), 60_000, seed=1)
    pts = pc.points
    expected = 60_000 / 6
    for axis in range(3):
        for side in (0.0, 1.0):
            n = int(np.sum(np.isclose(pts[:, axis], side, atol=1e-9)))
            assert abs(n - expected) < 0.05 * expected


def test_resample_single_point_on_face_plane():
    pc = resample_mesh(cube_mesh(size=1.0), 1, seed=2)
    assert len(pc) == 1
    p = pc.points[0]
    on_any = any(
        np.isclose(p[a], s, atol=1e-9) for a in range(3) for s in (0.0, 1.0)
    )
    assert on_any


def test_resample_zero_area_mesh():
    flat = TriangleMesh(
        np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]),
        np.array([[0, 1, 2]]),
    )
    with pytest.raises(Exception, match="zero-area mesh"):
        resample_mesh(flat, 10, seed=0)


def test_resample_deterministic():
    a = resample_mesh(cube_mesh(), 400, seed=5).points
    b = resample_mesh(cube_mesh(), 400, seed=5).points
    assert np.array_equal(a, b)


# ----------------------------------------------------------- voxelization

def test_cube_voxelization_exact():
    g = voxelize_mesh(cube_mesh(size=10.0), 5.0)
    assert g.occupied_count() == 8


def test_voxelize_mesh_requires_watertight():
    with pytest.raises(ContractError, match="mesh not watertight; run resample/repair"):
        voxelize_mesh(open_cube_mesh(), 5.0)


def test_sphere_volume_by_mesh_voxels():
    g = voxelize_mesh(make_mesh(UNIT_SPHERE, 64), 0.05)
    vol = g.occupied_count() * 0.05**3
    assert vol == pytest.approx(4.0 * np.pi / 3.0, rel=0.02)


def test_sphere_volume_by_analytic_voxels():
    g = voxelize_superquadric(UNIT_SPHERE, 0.05)
    vol = g.occupied_count() * 0.05**3
    assert vol == pytest.approx(4.0 * np.pi / 3.0, rel=0.02)


def test_coarse_sphere_voxel_bounds():
    sq = Superquadric.from_params(1.0, 1.0, (5.0, 5.0, 5.0))
    g = voxelize_superquadric(sq, 5.0)
    assert 1 <= g.occupied_count() <= 27


def test_grid_origin_snapped():
    rng = np.random.default_rng(7)
    sq = draw_superquadric(rng)
    g = voxelize_superquadric(sq, 3.0)
    ratio = g.origin / 3.0
    assert np.allclose(ratio, np.round(ratio), atol=1e-9)


def test_mesh_and_analytic_voxels_agree():
    rng = np.random.default_rng(8)
    for _ in range(3):
        sq = draw_superquadric(rng, scale_lo=0.8, scale_hi=1.5, posed=False)
        vs = 0.02 * min(sq.scale.ax, sq.scale.ay, sq.scale.az)
        ga = voxelize_superquadric(sq, vs)
        gm = voxelize_mesh(make_mesh(sq, 128), vs, bounds=(ga.origin, ga.origin + vs * np.array(ga.dims)))
        assert ga.dims == gm.dims
        agree = np.mean(ga.occupancy == gm.occupancy)
        assert agree >= 0.99
