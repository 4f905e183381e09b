"""Shared 3D primitives: meshes, box builders, trajectories, ray casting.

World frame convention (used by every module): right-handed, z up,
azimuth measured in the xy-plane counterclockwise from +x, degrees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Self-intersection guard on ray origins, meters.
RAY_EPS = 1e-6

_MIN_TRIANGLE_AREA = 1e-12


def vec3(x: float, y: float, z: float) -> np.ndarray:
    return np.array([x, y, z], dtype=float)


def normalize(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ValueError("cannot normalize zero vector")
    return v / n


def rot_z_deg(yaw_deg: float) -> np.ndarray:
    c = np.cos(np.radians(yaw_deg))
    s = np.sin(np.radians(yaw_deg))
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def azimuth_deg(d: np.ndarray) -> float:
    """Azimuth of direction d in [0, 360)."""
    return float(np.degrees(np.arctan2(d[1], d[0])) % 360.0)


def elevation_deg(d: np.ndarray) -> float:
    n = float(np.linalg.norm(d))
    return float(np.degrees(np.arcsin(np.clip(d[2] / n, -1.0, 1.0))))


class Mesh:
    """Immutable triangle soup with a single propagation material."""

    def __init__(self, tris, material: str = "metal", check: bool = True):
        tris = np.asarray(tris, dtype=float).reshape(-1, 3, 3)
        if tris.shape[0] == 0:
            raise ValueError("mesh must contain at least one triangle")
        if not np.all(np.isfinite(tris)):
            raise ValueError("mesh vertices must be finite")
        if check:
            areas = _tri_areas(tris)
            if np.any(areas <= _MIN_TRIANGLE_AREA):
                raise ValueError("degenerate triangle (area <= 1e-12 m^2)")
        self.tris = tris
        self.tris.setflags(write=False)
        self.material = material

    def __len__(self) -> int:
        return self.tris.shape[0]

    @property
    def triangles(self) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
        return [tuple(t) for t in self.tris]

    def vertices(self) -> np.ndarray:
        """Unique vertices, shape (V, 3)."""
        flat = self.tris.reshape(-1, 3)
        return np.unique(flat, axis=0)

    def areas(self) -> np.ndarray:
        return _tri_areas(self.tris)

    def translated(self, offset) -> "Mesh":
        return Mesh(self.tris + np.asarray(offset, dtype=float),
                    self.material, check=False)


def _tri_areas(tris: np.ndarray) -> np.ndarray:
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)


_BOX_CORNERS = np.array(
    [[sx, sy, sz] for sx in (-0.5, 0.5) for sy in (-0.5, 0.5) for sz in (-0.5, 0.5)]
)

# Two CCW-wound (outward-facing) triangles per face, indices into _BOX_CORNERS.
_BOX_FACES = [
    (0, 3, 2), (0, 1, 3),  # -x
    (4, 6, 7), (4, 7, 5),  # +x
    (0, 5, 1), (0, 4, 5),  # -y
    (2, 7, 6), (2, 3, 7),  # +y
    (0, 2, 6), (0, 6, 4),  # -z
    (1, 7, 3), (1, 5, 7),  # +z
]


def box_mesh(center, size, yaw_deg: float = 0.0, material: str = "metal") -> Mesh:
    """Closed 12-triangle box, rotated by yaw about the vertical axis."""
    size = np.asarray(size, dtype=float)
    if np.any(size <= 0):
        raise ValueError("box size components must be > 0")
    corners = (_BOX_CORNERS * size) @ rot_z_deg(yaw_deg).T + np.asarray(center, float)
    tris = corners[np.array(_BOX_FACES)]
    return Mesh(tris, material)


# ---------------------------------------------------------------------------
# Trajectories

@dataclass(frozen=True)
class Trajectory:
    """Keyframed position track; frame indices strictly increasing."""

    keyframes: tuple[tuple[int, tuple[float, float, float]], ...]

    def __post_init__(self):
        if not self.keyframes:
            raise ValueError("trajectory requires at least one keyframe")
        frames = [f for f, _ in self.keyframes]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError("keyframe frames must be strictly increasing")


def interpolate_position(traj: Trajectory, frame: float) -> np.ndarray:
    """Linear interpolation between bracketing keyframes, clamped outside."""
    keys = traj.keyframes
    if frame <= keys[0][0]:
        return vec3(*keys[0][1])
    if frame >= keys[-1][0]:
        return vec3(*keys[-1][1])
    for (f0, p0), (f1, p1) in zip(keys, keys[1:]):
        if f0 <= frame <= f1:
            a = (frame - f0) / (f1 - f0)
            return (1.0 - a) * vec3(*p0) + a * vec3(*p1)
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# Ray casting (Moller-Trumbore, vectorized over triangles)

class TriangleSet:
    """Concatenated triangles from several meshes, with per-triangle owner ids."""

    def __init__(self, meshes: list[tuple[str, Mesh]]):
        if meshes:
            v0 = np.concatenate([m.tris[:, 0] for _, m in meshes])
            e1 = np.concatenate([m.tris[:, 1] - m.tris[:, 0] for _, m in meshes])
            e2 = np.concatenate([m.tris[:, 2] - m.tris[:, 0] for _, m in meshes])
            owners = np.concatenate(
                [np.full(len(m), i, dtype=int) for i, (_, m) in enumerate(meshes)]
            )
        else:
            v0 = np.zeros((0, 3))
            e1 = np.zeros((0, 3))
            e2 = np.zeros((0, 3))
            owners = np.zeros(0, dtype=int)
        self.v0 = v0
        self.e1 = e1
        self.e2 = e2
        self.owners = owners
        self.names = [name for name, _ in meshes]
        self.meshes = [m for _, m in meshes]

    def owner_mask(self, exclude: tuple[str, ...]) -> np.ndarray | None:
        """Boolean keep-mask over triangles, or None if nothing is excluded."""
        if not exclude:
            return None
        ids = [i for i, name in enumerate(self.names) if name in exclude]
        if not ids:
            return None
        return ~np.isin(self.owners, ids)

    def _hit_ts(self, origin, direction, mask):
        if self.v0.shape[0] == 0:
            return np.zeros(0), np.zeros(0, dtype=int)
        v0, e1, e2 = self.v0, self.e1, self.e2
        idx = np.arange(v0.shape[0])
        if mask is not None:
            v0, e1, e2, idx = v0[mask], e1[mask], e2[mask], idx[mask]
        p = np.cross(direction[None, :], e2)
        det = np.einsum("ij,ij->i", e1, p)
        ok = np.abs(det) > 1e-14
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        s = origin[None, :] - v0
        u = np.einsum("ij,ij->i", s, p) * inv
        q = np.cross(s, e1)
        v = np.dot(q, direction) * inv
        t = np.einsum("ij,ij->i", e2, q) * inv
        ok &= (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0)
        return np.where(ok, t, -np.inf), idx

    def nearest_hit(self, origin, direction, t_max, exclude=(), t_min=RAY_EPS):
        ts, idx = self._hit_ts(np.asarray(origin, float),
                               np.asarray(direction, float),
                               self.owner_mask(tuple(exclude)))
        valid = (ts > t_min) & (ts < t_max)
        if not np.any(valid):
            return None
        sel = np.where(valid)[0]
        best = sel[np.argmin(ts[sel])]
        t = float(ts[best])
        return Hit(
            t=t,
            point=np.asarray(origin, float) + t * np.asarray(direction, float),
            triangle_index=int(idx[best]),
            owner=self.names[self.owners[idx[best]]],
        )

    def segment_occluded(self, a, b, exclude=()) -> bool:
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        d = b - a
        length = float(np.linalg.norm(d))
        if length <= 2 * RAY_EPS:
            return False
        ts, _ = self._hit_ts(a, d / length, self.owner_mask(tuple(exclude)))
        return bool(np.any((ts > RAY_EPS) & (ts < length - RAY_EPS)))


@dataclass(frozen=True)
class Hit:
    t: float
    point: np.ndarray
    triangle_index: int
    owner: str


def ray_intersect(origin, direction, meshes, t_max: float):
    """Nearest intersection of a ray with a list of meshes.

    Returns a Hit with t in (RAY_EPS, t_max), or None if unobstructed.
    Direction must be unit length.
    """
    tset = TriangleSet([(str(i), m) for i, m in enumerate(meshes)])
    return tset.nearest_hit(origin, direction, t_max)
