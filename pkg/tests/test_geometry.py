import numpy as np
import pytest

from beamcam import geometry as geo
from beamcam import stl


def test_box_mesh_area_and_closure():
    mesh = geo.box_mesh((1.0, -2.0, 3.0), (2.0, 3.0, 4.0), yaw_deg=30.0)
    assert mesh.tris.shape == (12, 3, 3)
    # Surface area 2(ab + bc + ca) is yaw-invariant.
    assert np.isclose(mesh.areas().sum(), 2 * (2 * 3 + 3 * 4 + 4 * 2))
    assert np.allclose(mesh.vertices().mean(axis=0), [1.0, -2.0, 3.0])


def test_box_mesh_normals_point_outward():
    mesh = geo.box_mesh((0.0, 0.0, 0.0), (2.0, 2.0, 2.0))
    v0, v1, v2 = mesh.tris[:, 0], mesh.tris[:, 1], mesh.tris[:, 2]
    normals = np.cross(v1 - v0, v2 - v0)
    centroids = (v0 + v1 + v2) / 3.0
    assert np.all(np.einsum("ij,ij->i", normals, centroids) > 0)


def test_interpolate_position_linear_and_clamped():
    traj = geo.Trajectory(((0, (0.0, 0.0, 0.0)), (10, (10.0, 20.0, 0.0))))
    assert np.allclose(geo.interpolate_position(traj, 5), [5.0, 10.0, 0.0])
    assert np.allclose(geo.interpolate_position(traj, -3), [0.0, 0.0, 0.0])
    assert np.allclose(geo.interpolate_position(traj, 42), [10.0, 20.0, 0.0])


def test_trajectory_requires_increasing_frames():
    with pytest.raises(ValueError):
        geo.Trajectory(((5, (0.0, 0.0, 0.0)), (5, (1.0, 0.0, 0.0))))


def test_azimuth_elevation_conventions():
    assert geo.azimuth_deg(geo.vec3(1, 0, 0)) == pytest.approx(0.0)
    assert geo.azimuth_deg(geo.vec3(0, 1, 0)) == pytest.approx(90.0)
    assert geo.azimuth_deg(geo.vec3(-1, 0, 0)) == pytest.approx(180.0)
    assert geo.elevation_deg(geo.vec3(1, 0, 1)) == pytest.approx(45.0)


def test_ray_hits_box_front_face():
    mesh = geo.box_mesh((0.0, 10.0, 0.0), (2.0, 2.0, 2.0))
    hit = geo.ray_intersect((0.0, 0.0, 0.0), (0.0, 1.0, 0.0), [mesh], 100.0)
    assert hit is not None
    assert hit.t == pytest.approx(9.0)
    assert geo.ray_intersect((0.0, 0.0, 5.0), (0.0, 1.0, 0.0),
                             [mesh], 100.0) is None


def test_segment_occlusion_and_exclusion():
    blocker = geo.box_mesh((0.0, 5.0, 0.0), (4.0, 1.0, 4.0), material="metal")
    tset = geo.TriangleSet([("blocker", blocker)])
    a, b = geo.vec3(0, 0, 0), geo.vec3(0, 10, 0)
    assert tset.segment_occluded(a, b)
    assert not tset.segment_occluded(a, b, exclude=("blocker",))
    # A segment ending on the box surface is not occluded by it.
    assert not tset.segment_occluded(a, geo.vec3(0, 4.5, 0))


def test_nearest_hit_matches_bruteforce_scan():
    rng = np.random.default_rng(2024)
    meshes = [
        geo.box_mesh(rng.uniform(-10, 10, 3), rng.uniform(0.5, 3.0, 3),
                     yaw_deg=rng.uniform(0, 360))
        for _ in range(6)
    ]
    tset = geo.TriangleSet([(f"m{i}", m) for i, m in enumerate(meshes)])
    for _ in range(200):
        origin = rng.uniform(-15, 15, 3)
        direction = geo.normalize(rng.standard_normal(3))
        hit = tset.nearest_hit(origin, direction, 100.0)
        # Brute force: Moller-Trumbore per triangle in pure python.
        best = None
        for name, mesh in [(f"m{i}", m) for i, m in enumerate(meshes)]:
            for v0, v1, v2 in mesh.triangles:
                e1, e2 = v1 - v0, v2 - v0
                p = np.cross(direction, e2)
                det = e1 @ p
                if abs(det) < 1e-12:
                    continue
                s = origin - v0
                u = (s @ p) / det
                q = np.cross(s, e1)
                v = (direction @ q) / det
                t = (e2 @ q) / det
                if u >= 0 and v >= 0 and u + v <= 1 and geo.RAY_EPS < t < 100.0:
                    if best is None or t < best:
                        best = t
        if best is None:
            assert hit is None
        else:
            assert hit is not None
            assert hit.t == pytest.approx(best, abs=1e-9)


def test_stl_binary_roundtrip_bit_exact():
    rng = np.random.default_rng(7)
    tris = rng.standard_normal((17, 3, 3)).astype(np.float32).astype(float)
    mesh = geo.Mesh(tris, material="brick")
    data = stl.write_stl(mesh)
    back = stl.parse_stl(data, material="brick")
    assert back.tris.shape == mesh.tris.shape
    assert np.array_equal(
        np.asarray(back.tris, np.float32), np.asarray(mesh.tris, np.float32)
    )


def test_stl_ascii_parse():
    text = b"""solid demo
  facet normal 0 0 1
    outer loop
      vertex 0 0 0
      vertex 1 0 0
      vertex 0 1 0
    endloop
  endfacet
endsolid demo
"""
    mesh = stl.parse_stl(text)
    assert mesh.tris.shape == (1, 3, 3)
    assert np.allclose(mesh.tris[0], [[0, 0, 0], [1, 0, 0], [0, 1, 0]])


def test_stl_errors():
    with pytest.raises(stl.StlError):
        stl.parse_stl(b"")
    with pytest.raises(stl.StlError):
        # Header promises one triangle but payload is truncated.
        stl.parse_stl(b"\0" * 80 + (1).to_bytes(4, "little") + b"\0" * 10)
