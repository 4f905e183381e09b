import math

import numpy as np
import pytest

from beamcam import geometry as geo
from beamcam import raytrace as rt


def wall_scene(material="metal", amp_table=None):
    """A single wall at y=5 spanning x in [-20, 20], z in [0, 10]."""
    center = (0.0, 5.0, 5.0)
    size = (40.0, 0.5, 10.0)
    mesh = geo.box_mesh(center, size, material=material)
    faces = rt.box_faces(center, size, material=material)
    return rt.SceneGeometry([("wall", mesh)], faces,
                            amp_table or {"metal": 0.95})


def test_mirror_point_involution():
    rng = np.random.default_rng(1)
    for _ in range(50):
        p = rng.standard_normal(3)
        plane_pt = rng.standard_normal(3)
        n = geo.normalize(rng.standard_normal(3))
        m = rt.mirror_point(p, plane_pt, n)
        assert np.allclose(rt.mirror_point(m, plane_pt, n), p, atol=1e-12)
        # Midpoint lies on the plane.
        assert abs((0.5 * (p + m) - plane_pt) @ n) < 1e-12


def test_wall_scene_paths():
    scene = wall_scene()
    tx = geo.vec3(-5.0, 0.0, 2.0)
    rx = geo.vec3(5.0, 0.0, 2.0)
    paths = rt.trace_paths(scene, tx, rx, max_reflections=1, carrier_ghz=28.0)
    assert [p.bounces for p in paths] == [0, 1]
    los, bounce = paths
    assert los.length_m == pytest.approx(10.0, abs=1e-12)
    # Image method: reflect rx across the wall front plane (y = 4.75).
    expected = np.linalg.norm(np.array([5.0, 2 * 4.75, 2.0]) - tx)
    assert bounce.length_m == pytest.approx(expected, abs=1e-9)


def test_reflection_law_on_wall():
    scene = wall_scene()
    tx = geo.vec3(-3.0, 1.0, 2.0)
    rx = geo.vec3(7.0, 2.0, 4.0)
    paths = rt.trace_paths(scene, tx, rx, max_reflections=1, carrier_ghz=28.0)
    bounce = [p for p in paths if p.bounces == 1][0]
    a, m, b = (np.asarray(p) for p in bounce.points)
    n = np.array([0.0, -1.0, 0.0])  # wall front face normal
    d_in = geo.normalize(m - a)
    d_out = geo.normalize(b - m)
    # Angle of incidence equals angle of reflection.
    assert abs((-d_in) @ n - d_out @ n) < 1e-12
    # Incident, reflected and normal are coplanar.
    assert abs(np.cross(-d_in + d_out, n) @ d_in) < 1e-12


def test_path_gain_and_delay_formulas():
    carrier = 28.0
    lam = rt.C_LIGHT / (carrier * 1e9)
    p = rt.compute_path_component(
        [geo.vec3(0, 0, 0), geo.vec3(10, 0, 0)], [], carrier
    )
    assert abs(p.gain) == pytest.approx(lam / (4 * math.pi * 10.0),
                                        rel=1e-12)
    assert p.delay_s == pytest.approx(10.0 / rt.C_LIGHT, abs=1e-18)
    expected_phase = -2 * math.pi * 10.0 / lam
    wrapped = (np.angle(p.gain) - expected_phase + math.pi) % (2 * math.pi)
    assert wrapped - math.pi == pytest.approx(0.0, abs=1e-6)


def test_reflection_multiplies_amplitude():
    carrier = 28.0
    pts = [geo.vec3(0, 0, 0), geo.vec3(0, 5, 0), geo.vec3(0, 10, 0)]
    direct = rt.compute_path_component(pts, [1.0], carrier)
    bounced = rt.compute_path_component(pts, [0.6], carrier)
    assert abs(bounced.gain) == pytest.approx(0.6 * abs(direct.gain),
                                              rel=1e-12)
    assert bounced.delay_s == direct.delay_s


def test_gain_decreases_with_distance():
    carrier = 28.0
    gains = [
        abs(rt.compute_path_component(
            [geo.vec3(0, 0, 0), geo.vec3(d, 0, 0)], [], carrier).gain)
        for d in (5.0, 10.0, 20.0, 40.0)
    ]
    assert all(a > b for a, b in zip(gains, gains[1:]))
    # Doubling distance halves amplitude (quarters power).
    assert gains[0] / gains[1] == pytest.approx(2.0, rel=1e-12)


def test_reciprocity():
    scene = wall_scene()
    tx = geo.vec3(-4.0, 1.0, 3.0)
    rx = geo.vec3(6.0, 2.0, 1.0)
    fwd = rt.trace_paths(scene, tx, rx, max_reflections=2, carrier_ghz=28.0)
    rev = rt.trace_paths(scene, rx, tx, max_reflections=2, carrier_ghz=28.0)
    assert len(fwd) == len(rev)
    for a, b in zip(fwd, rev):
        assert a.length_m == pytest.approx(b.length_m, abs=1e-9)
        assert abs(a.gain) == pytest.approx(abs(b.gain), rel=1e-12)
        assert a.aod_az_deg == pytest.approx(b.aoa_az_deg, abs=1e-9)


def test_blocked_scene_is_outage():
    wall = geo.box_mesh((0.0, 5.0, 5.0), (40.0, 0.5, 10.0), material="metal")
    # Slab across the x=0 plane: every tx->rx path must cross it.
    blocker = geo.box_mesh((0.0, 2.5, 2.0), (0.5, 30.0, 20.0),
                           material="concrete")
    scene = rt.SceneGeometry(
        [("wall", wall), ("blocker", blocker)],
        rt.box_faces((0.0, 5.0, 5.0), (40.0, 0.5, 10.0), material="metal"),
        {"metal": 0.95, "concrete": 0.6},
    )
    paths = rt.trace_paths(scene, geo.vec3(-5, 0, 2), geo.vec3(5, 0, 2),
                           max_reflections=2, carrier_ghz=28.0)
    assert paths == []


def test_exclude_prevents_self_occlusion():
    wall = geo.box_mesh((0.0, 5.0, 5.0), (40.0, 0.5, 10.0), material="metal")
    body = geo.box_mesh((5.0, 0.0, 2.0), (4.0, 2.0, 1.5), material="metal")
    scene = rt.SceneGeometry(
        [("wall", wall), ("car", body)],
        rt.box_faces((0.0, 5.0, 5.0), (40.0, 0.5, 10.0), material="metal"),
        {"metal": 0.95},
    )
    rx = geo.vec3(5.0, 0.0, 2.0)  # center of the car body
    tx = geo.vec3(-5.0, 0.0, 2.0)
    blocked = rt.trace_paths(scene, tx, rx, 1, 28.0)
    assert blocked == []  # rx is inside its own mesh
    open_paths = rt.trace_paths(scene, tx, rx, 1, 28.0, exclude=("car",))
    assert [p.bounces for p in open_paths] == [0, 1]


def test_aod_aoa_angles_on_bounce():
    scene = wall_scene()
    tx = geo.vec3(-5.0, 0.0, 2.0)
    rx = geo.vec3(5.0, 0.0, 2.0)
    bounce = rt.trace_paths(scene, tx, rx, 1, 28.0)[1]
    # Departure heads toward +x/+y at 45 degrees (reflection point at x=0).
    mx = bounce.points[1]
    assert mx[0] == pytest.approx(0.0, abs=1e-9)
    assert bounce.aod_az_deg == pytest.approx(
        geo.azimuth_deg(mx - tx), abs=1e-12)
    assert bounce.aoa_az_deg == pytest.approx(
        geo.azimuth_deg(mx - rx), abs=1e-12)


def test_second_order_paths_exist_in_corner():
    # Two perpendicular walls form a corner reflector.
    w1c, w1s = (0.0, 10.0, 5.0), (40.0, 0.5, 10.0)
    w2c, w2s = (10.0, 0.0, 5.0), (0.5, 40.0, 10.0)
    scene = rt.SceneGeometry(
        [("w1", geo.box_mesh(w1c, w1s)), ("w2", geo.box_mesh(w2c, w2s))],
        rt.box_faces(w1c, w1s, material="metal")
        + rt.box_faces(w2c, w2s, material="metal"),
        {"metal": 0.95},
    )
    paths = rt.trace_paths(scene, geo.vec3(-5, -5, 2), geo.vec3(-5, 5, 2),
                           max_reflections=2, carrier_ghz=28.0)
    orders = sorted(p.bounces for p in paths)
    assert 0 in orders and 1 in orders and 2 in orders
    # Every path's segments add up to its reported length.
    for p in paths:
        pts = np.asarray(p.points)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1).sum()
        assert p.length_m == pytest.approx(seg, abs=1e-9)
