"""Rigid transforms, pinhole cameras, rays and intersection primitives.

Frame conventions used throughout the package:

* vehicle-style frames (world, obstacle sensor): x forward, y left, z up
* camera frames: z forward (optical axis), x right, y down
* ``VEHICLE_TO_CAMERA`` is the fixed axis permutation linking the two
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ZeroVector(ValueError):
    """A direction or bearing was requested for a (near-)zero vector."""


class PointBehindCamera(ValueError):
    """Projection was requested for a point at or behind the image plane."""


class OutOfImage(ValueError):
    """Back-projection was requested for a pixel outside the image."""


# Rotation drift control: re-orthonormalize after this many chained composes.
_MAX_COMPOSE_DEPTH = 100

# Fixed-point undistortion parameters.
_UNDISTORT_ITERS = 10
_UNDISTORT_TOL = 1e-8


def _as_vec3(p) -> np.ndarray:
    v = np.asarray(p, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected 3-vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid motion: ``p_out = rotation @ p_in + translation``."""

    rotation: np.ndarray
    translation: np.ndarray
    compose_depth: int = field(default=0, compare=False)

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = _as_vec3(self.translation)
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-6):
            raise ValueError("rotation is not orthonormal")
        if np.linalg.det(r) < 0:
            raise ValueError("rotation has negative determinant (reflection)")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Transform that maps p to self(other(p))."""
        r = self.rotation @ other.rotation
        t = self.rotation @ other.translation + self.translation
        depth = self.compose_depth + other.compose_depth + 1
        if depth > _MAX_COMPOSE_DEPTH:
            r = orthonormalize(r)
            depth = 0
        return RigidTransform(r, t, depth)

    def invert(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation, self.compose_depth)

    def apply(self, p) -> np.ndarray:
        """Map a point: R p + t."""
        return self.rotation @ _as_vec3(p) + self.translation

    def apply_direction(self, d) -> np.ndarray:
        """Rotate a direction (translation-invariant), re-normalized."""
        out = self.rotation @ _as_vec3(d)
        n = np.linalg.norm(out)
        if n < 1e-12:
            raise ZeroVector("cannot normalize zero direction")
        return out / n

    def almost_equal(self, other: "RigidTransform", tol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, atol=tol)
            and np.allclose(self.translation, other.translation, atol=tol)
        )


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    return a.compose(b)


def invert(t: RigidTransform) -> RigidTransform:
    return t.invert()


def transform_point(t: RigidTransform, p) -> np.ndarray:
    return t.apply(p)


def orthonormalize(r: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix in the Frobenius sense (via SVD)."""
    u, _, vt = np.linalg.svd(np.asarray(r, dtype=float))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def rotation_about_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_from_axis_angle(axis, angle: float) -> np.ndarray:
    """Rodrigues formula; axis need not be unit length."""
    a = _as_vec3(axis)
    n = np.linalg.norm(a)
    if n < 1e-15:
        raise ZeroVector("rotation axis is zero")
    a = a / n
    k = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def rotation_angle(r: np.ndarray) -> float:
    """Geodesic magnitude of a rotation matrix, in radians.

    Uses ||R - I||_F = 2*sqrt(2)*sin(theta/2), which stays accurate down to
    machine precision for small angles (acos of the trace does not).
    """
    d = np.linalg.norm(np.asarray(r, dtype=float) - np.eye(3))
    return 2.0 * math.asin(min(1.0, d / (2.0 * math.sqrt(2.0))))


def rotation_geodesic_error(r_a: np.ndarray, r_b: np.ndarray) -> float:
    return rotation_angle(np.asarray(r_a) @ np.asarray(r_b).T)


# Vehicle frame (x fwd, y left, z up) to camera frame (z fwd, x right, y down).
VEHICLE_TO_CAMERA = np.array(
    [
        [0.0, -1.0, 0.0],
        [0.0, 0.0, -1.0],
        [1.0, 0.0, 0.0],
    ]
)


@dataclass(frozen=True)
class Ray:
    """Half-line from ``origin`` along unit ``direction``."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        o = _as_vec3(self.origin)
        d = _as_vec3(self.direction)
        n = np.linalg.norm(d)
        if n < 1e-12:
            raise ZeroVector("ray direction is zero")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d / n)

    def point_at(self, dist: float) -> np.ndarray:
        return self.origin + dist * self.direction


@dataclass(frozen=True)
class Aabb3:
    """Axis-aligned box given by center and strictly positive half-extents."""

    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        c = _as_vec3(self.center)
        h = _as_vec3(self.half_extents)
        if not np.all(h > 0):
            raise ValueError("half-extents must be strictly positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_extents", h)

    def contains(self, p) -> bool:
        return bool(np.all(np.abs(_as_vec3(p) - self.center) <= self.half_extents))

    def corners(self) -> np.ndarray:
        """All 8 corners, shape (8, 3)."""
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
            dtype=float,
        )
        return self.center + signs * self.half_extents


def ray_aabb_intersect(r: Ray, b: Aabb3) -> float | None:
    """Slab test. Returns the smallest non-negative hit distance, 0.0 when the
    origin is inside the box, None on a miss."""
    t_min, t_max = -math.inf, math.inf
    for i in range(3):
        o = r.origin[i] - b.center[i]
        d = r.direction[i]
        h = b.half_extents[i]
        if abs(d) < 1e-15:
            if abs(o) > h:
                return None
            continue
        t1 = (-h - o) / d
        t2 = (h - o) / d
        if t1 > t2:
            t1, t2 = t2, t1
        t_min = max(t_min, t1)
        t_max = min(t_max, t2)
    if t_max < max(t_min, 0.0):
        return None
    return max(t_min, 0.0)


def bearing_elevation(p) -> tuple[float, float]:
    """Egocentric direction of a point in a vehicle-style frame.

    Returns (bearing, elevation) in radians: bearing positive to the left,
    elevation positive upward.
    """
    v = _as_vec3(p)
    if np.linalg.norm(v) < 1e-12:
        raise ZeroVector("cannot take bearing of zero vector")
    bearing = math.atan2(v[1], v[0])
    elevation = math.atan2(v[2], math.hypot(v[0], v[1]))
    return bearing, elevation


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera with optional two-term radial distortion."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    k1: float = 0.0
    k2: float = 0.0

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width):
            raise ValueError("principal point cx outside image")
        if not (0 <= self.cy < self.height):
            raise ValueError("principal point cy outside image")

    def distort(self, x: float, y: float) -> tuple[float, float]:
        """Apply radial distortion to normalized image coordinates."""
        r2 = x * x + y * y
        f = 1.0 + self.k1 * r2 + self.k2 * r2 * r2
        return x * f, y * f

    def project(self, p_cam) -> tuple[float, float]:
        """Project a camera-frame point to pixel coordinates."""
        p = _as_vec3(p_cam)
        if p[2] <= 0:
            raise PointBehindCamera(f"point has non-positive depth z={p[2]:.6g}")
        x, y = self.distort(p[0] / p[2], p[1] / p[2])
        return self.fx * x + self.cx, self.fy * y + self.cy

    def backproject(self, uv) -> Ray:
        """Ray from the camera origin through a pixel.

        Distortion is inverted by fixed-point iteration on the normalized
        coordinates (at most 10 iterations, 1e-8 convergence).
        """
        u, v = float(uv[0]), float(uv[1])
        if not (0 <= u < self.width and 0 <= v < self.height):
            raise OutOfImage(f"pixel ({u:.1f}, {v:.1f}) outside {self.width}x{self.height}")
        xd = (u - self.cx) / self.fx
        yd = (v - self.cy) / self.fy
        x, y = xd, yd
        if self.k1 != 0.0 or self.k2 != 0.0:
            for _ in range(_UNDISTORT_ITERS):
                r2 = x * x + y * y
                f = 1.0 + self.k1 * r2 + self.k2 * r2 * r2
                x_new, y_new = xd / f, yd / f
                if max(abs(x_new - x), abs(y_new - y)) < _UNDISTORT_TOL:
                    x, y = x_new, y_new
                    break
                x, y = x_new, y_new
        return Ray(np.zeros(3), np.array([x, y, 1.0]))


def project(cam: CameraModel, p_cam) -> tuple[float, float]:
    return cam.project(p_cam)


def backproject(cam: CameraModel, uv) -> Ray:
    return cam.backproject(uv)
