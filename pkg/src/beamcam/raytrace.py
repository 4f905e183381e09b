"""Specular multipath tracing between a transmitter and a receiver.

Line-of-sight plus image-method reflections of order 1..max_reflections
over the planar rectangular faces of box reflectors. Every candidate path
is validated segment by segment: reflection points must fall inside their
faces, both neighbors of a bounce must lie on the outward side, and no
segment may be occluded by scene geometry. Blocked paths are dropped
outright (no diffraction, scattering or penetration); an empty result
means outage.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .geometry import RAY_EPS, Mesh, TriangleSet, azimuth_deg, elevation_deg, rot_z_deg

#: Speed of light, m/s.
C_LIGHT = 299_792_458.0

_CONTAIN_TOL = 1e-9


def mirror_point(p, plane_point, normal) -> np.ndarray:
    """Reflection of p across the plane (point, unit normal)."""
    p = np.asarray(p, float)
    n = np.asarray(normal, float)
    d = float(np.dot(p - np.asarray(plane_point, float), n))
    return p - 2.0 * d * n


@dataclass(frozen=True)
class Face:
    """Planar rectangle: center, outward unit normal, in-plane half axes."""

    center: tuple[float, float, float]
    normal: tuple[float, float, float]
    axis_u: tuple[float, float, float]
    axis_v: tuple[float, float, float]
    half_u: float
    half_v: float
    material: str


def box_faces(center, size, yaw_deg: float = 0.0,
              material: str = "concrete") -> list[Face]:
    """Six outward-facing rectangular faces of a yaw-rotated box."""
    center = np.asarray(center, float)
    size = np.asarray(size, float)
    rot = rot_z_deg(yaw_deg)
    faces = []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            normal = rot @ np.eye(3)[axis] * sign
            fc = center + normal * (size[axis] / 2.0)
            u_axis, v_axis = [(rot @ np.eye(3)[a], size[a] / 2.0)
                              for a in range(3) if a != axis]
            faces.append(Face(
                center=tuple(fc),
                normal=tuple(normal),
                axis_u=tuple(u_axis[0]),
                axis_v=tuple(v_axis[0]),
                half_u=u_axis[1],
                half_v=v_axis[1],
                material=material,
            ))
    return faces


@dataclass(frozen=True)
class PathComponent:
    """One propagation path between transmitter and receiver."""

    gain: complex
    delay_s: float
    aod_az_deg: float
    aod_el_deg: float
    aoa_az_deg: float
    aoa_el_deg: float
    bounces: int
    length_m: float
    points: tuple[tuple[float, float, float], ...]

    @property
    def gain_db(self) -> float:
        return 20.0 * math.log10(abs(self.gain))

    @property
    def phase_deg(self) -> float:
        return math.degrees(math.atan2(self.gain.imag, self.gain.real))


def compute_path_component(points, reflection_amps, carrier_ghz: float
                           ) -> PathComponent:
    """Gain, delay and angles of a polyline path tx -> bounces -> rx.

    Amplitude is lambda/(4*pi*L) times the product of per-bounce reflection
    amplitudes; phase is -2*pi*L/lambda.
    """
    pts = [np.asarray(p, float) for p in points]
    if len(pts) < 2:
        raise ValueError("path needs at least two points")
    if len(reflection_amps) != len(pts) - 2:
        raise ValueError("need one reflection amplitude per interior vertex")
    segments = [b - a for a, b in zip(pts, pts[1:])]
    seg_lengths = [float(np.linalg.norm(s)) for s in segments]
    if any(l <= 0.0 for l in seg_lengths):
        raise ValueError("degenerate zero-length path segment")
    length = sum(seg_lengths)
    lam = C_LIGHT / (carrier_ghz * 1e9)
    amp = lam / (4.0 * math.pi * length)
    for r in reflection_amps:
        amp *= r
    phase = -2.0 * math.pi * length / lam
    gain = amp * complex(math.cos(phase), math.sin(phase))
    first = segments[0]
    last = -segments[-1]
    return PathComponent(
        gain=gain,
        delay_s=length / C_LIGHT,
        aod_az_deg=azimuth_deg(first),
        aod_el_deg=elevation_deg(first),
        aoa_az_deg=azimuth_deg(last),
        aoa_el_deg=elevation_deg(last),
        bounces=len(pts) - 2,
        length_m=length,
        points=tuple(tuple(float(c) for c in p) for p in pts),
    )


class SceneGeometry:
    """Immutable per-frame snapshot: occluder triangles plus reflector faces."""

    def __init__(self, meshes: list[tuple[str, Mesh]], faces: list[Face],
                 materials: dict[str, float]):
        self.tset = TriangleSet(meshes)
        self.faces = list(faces)
        self.materials = dict(materials)
        f = len(self.faces)
        self.face_center = np.array([fc.center for fc in faces]).reshape(f, 3)
        self.face_normal = np.array([fc.normal for fc in faces]).reshape(f, 3)
        self.face_u = np.array([fc.axis_u for fc in faces]).reshape(f, 3)
        self.face_v = np.array([fc.axis_v for fc in faces]).reshape(f, 3)
        self.face_hu = np.array([fc.half_u for fc in faces])
        self.face_hv = np.array([fc.half_v for fc in faces])
        self.face_amp = np.array(
            [materials[fc.material] for fc in faces]
        ) if faces else np.zeros(0)
        # Coplanar face pairs can never form consecutive bounces.
        if f:
            nd = self.face_normal @ self.face_normal.T
            off = np.einsum("ij,ij->i", self.face_center, self.face_normal)
            same_plane = (np.abs(np.abs(nd) - 1.0) < 1e-12) & (
                np.abs(off[:, None] * nd - off[None, :]) < 1e-9
            )
            self._coplanar = same_plane
        else:
            self._coplanar = np.zeros((0, 0), dtype=bool)

    def occluded(self, a, b, exclude=()) -> bool:
        return self.tset.segment_occluded(a, b, exclude)


def _face_sequences(scene: SceneGeometry, order: int) -> np.ndarray:
    """Ordered face-index sequences of the given length, coplanar-pruned."""
    nfaces = len(scene.faces)
    seqs = []
    for seq in itertools.product(range(nfaces), repeat=order):
        if any(scene._coplanar[a, b] for a, b in zip(seq, seq[1:])):
            continue
        seqs.append(seq)
    return np.array(seqs, dtype=int).reshape(len(seqs), order)


def _candidate_chains(scene: SceneGeometry, tx: np.ndarray, rx: np.ndarray,
                      order: int):
    """Vectorized image-method backtracking for one reflection order.

    Yields (points, face_indices) per geometrically valid chain; occlusion
    is not tested here.
    """
    seqs = _face_sequences(scene, order)
    if seqs.shape[0] == 0:
        return
    s = seqs.shape[0]
    images = np.empty((order + 1, s, 3))
    images[0] = tx
    for j in range(order):
        f = seqs[:, j]
        n = scene.face_normal[f]
        d = np.einsum("ij,ij->i", images[j] - scene.face_center[f], n)
        images[j + 1] = images[j] - 2.0 * d[:, None] * n

    pts = np.empty((order + 2, s, 3))
    pts[0] = tx
    pts[-1] = rx
    valid = np.ones(s, dtype=bool)
    for j in range(order, 0, -1):
        f = seqs[:, j - 1]
        n = scene.face_normal[f]
        c = scene.face_center[f]
        img = images[j]
        dvec = pts[j + 1] - img
        denom = np.einsum("ij,ij->i", dvec, n)
        safe = np.abs(denom) > 1e-14
        valid &= safe
        tpar = np.einsum("ij,ij->i", c - img, n) / np.where(safe, denom, 1.0)
        valid &= (tpar > 0.0) & (tpar < 1.0)
        q = img + tpar[:, None] * dvec
        rel = q - c
        valid &= np.abs(np.einsum("ij,ij->i", rel, scene.face_u[f])) \
            <= scene.face_hu[f] + _CONTAIN_TOL
        valid &= np.abs(np.einsum("ij,ij->i", rel, scene.face_v[f])) \
            <= scene.face_hv[f] + _CONTAIN_TOL
        pts[j] = q
    # Both neighbors of every bounce must sit on the outward (front) side.
    for j in range(1, order + 1):
        n = scene.face_normal[seqs[:, j - 1]]
        valid &= np.einsum("ij,ij->i", pts[j - 1] - pts[j], n) > RAY_EPS
        valid &= np.einsum("ij,ij->i", pts[j + 1] - pts[j], n) > RAY_EPS
    for i in np.where(valid)[0]:
        yield pts[:, i, :], seqs[i]


def trace_paths(scene: SceneGeometry, tx, rx, max_reflections: int,
                carrier_ghz: float, exclude=()) -> list[PathComponent]:
    """All unoccluded LOS and specular paths, sorted by (length, bounces).

    ``exclude`` names meshes (the endpoint UEs' own bodies) that never
    occlude. An empty list means outage.
    """
    tx = np.asarray(tx, float)
    rx = np.asarray(rx, float)
    if np.allclose(tx, rx):
        raise ValueError("tx and rx must differ")
    exclude = tuple(exclude)
    paths: list[PathComponent] = []
    if not scene.occluded(tx, rx, exclude):
        paths.append(compute_path_component([tx, rx], [], carrier_ghz))
    for order in range(1, max_reflections + 1):
        for pts, faces in _candidate_chains(scene, tx, rx, order):
            chain = [pts[j] for j in range(order + 2)]
            if any(scene.occluded(a, b, exclude)
                   for a, b in zip(chain, chain[1:])):
                continue
            amps = [scene.face_amp[f] for f in faces]
            paths.append(compute_path_component(chain, amps, carrier_ghz))
    paths.sort(key=lambda p: (p.length_m, p.bounces))
    return paths
