"""Monitoring views: top-down bird view and scene-camera overlay.

Pedestrian boxes are blue, vehicle-class boxes green, and the gaze is red: a
line in the bird view, and in the scene view a circle where the gaze meets
the ground (falling back to a line when that point is not visible).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import CameraModel, PointBehindCamera, Ray, RigidTransform
from .perception import ObstacleTrack

COLOR_PEDESTRIAN = (0, 0, 255)
COLOR_VEHICLE = (0, 255, 0)
COLOR_GAZE = (255, 0, 0)

# Corners behind the camera are clamped to this depth before projecting.
NEAR_CLIP_M = 0.05

GAZE_TAG = "gaze"


@dataclass(frozen=True)
class OverlayPrimitive:
    kind: str  # "box2d" | "line2d" | "circle2d"
    coords: tuple[float, ...]  # box/line: (x0, y0, x1, y1); circle: (cx, cy, r)
    color: tuple[int, int, int]
    tag: str

    def to_obj(self) -> dict:
        if self.kind == "box2d":
            body = {"min": list(self.coords[:2]), "max": list(self.coords[2:])}
        elif self.kind == "line2d":
            body = {"a": list(self.coords[:2]), "b": list(self.coords[2:])}
        elif self.kind == "circle2d":
            body = {"center": list(self.coords[:2]), "radius": self.coords[2]}
        else:
            raise ValueError(f"unknown primitive kind {self.kind!r}")
        return {"kind": self.kind, **body, "color": list(self.color), "tag": self.tag}


def class_color(cls: str) -> tuple[int, int, int]:
    return COLOR_PEDESTRIAN if cls == "pedestrian" else COLOR_VEHICLE


def bird_view(
    obstacles: list[ObstacleTrack],
    gaze_ray_M: Ray | None,
    extent_m: float,
) -> list[OverlayPrimitive]:
    """Top-down orthographic primitives in M-frame meters (x forward, y left)."""
    if extent_m <= 0:
        raise ValueError(f"extent must be > 0, got {extent_m}")
    prims = []
    for o in obstacles:
        x, y = float(o.position_M[0]), float(o.position_M[1])
        hx, hy = float(o.half_extents[0]), float(o.half_extents[1])
        prims.append(
            OverlayPrimitive("box2d", (x - hx, y - hy, x + hx, y + hy), class_color(o.cls), o.id)
        )
    if gaze_ray_M is not None:
        dx, dy = float(gaze_ray_M.direction[0]), float(gaze_ray_M.direction[1])
        n = math.hypot(dx, dy)
        if n > 1e-9:
            prims.append(
                OverlayPrimitive(
                    "line2d",
                    (0.0, 0.0, extent_m * dx / n, extent_m * dy / n),
                    COLOR_GAZE,
                    GAZE_TAG,
                )
            )
    return prims


def _project_clamped(cam: CameraModel, p_s: np.ndarray) -> tuple[float, float]:
    z = max(float(p_s[2]), NEAR_CLIP_M)
    return cam.project(np.array([p_s[0], p_s[1], z]))


def _ground_hit(ray_M: Ray) -> np.ndarray | None:
    """Intersection of the gaze ray with the ground plane z=0 in M."""
    dz = float(ray_M.direction[2])
    if abs(dz) < 1e-12:
        return None
    t = -float(ray_M.origin[2]) / dz
    if t <= 0:
        return None
    return ray_M.point_at(t)


def scene_overlay(
    cam_S: CameraModel,
    t_M_to_S: RigidTransform,
    obstacles: list[ObstacleTrack],
    gaze_ray_M: Ray | None,
    gaze_circle_radius_px: float = 10.0,
) -> list[OverlayPrimitive]:
    """Project obstacle boxes and the gaze into the scene camera image.

    Each box is the pixel-axis-aligned hull of its projected corners; boxes
    fully behind the camera are omitted, partially visible ones are clamped
    at the near plane.
    """
    prims = []
    for o in obstacles:
        corners_s = np.array([t_M_to_S.apply(c) for c in o.bbox.corners()])
        if np.all(corners_s[:, 2] <= NEAR_CLIP_M):
            continue
        uv = np.array([_project_clamped(cam_S, c) for c in corners_s])
        u0, v0 = uv.min(axis=0)
        u1, v1 = uv.max(axis=0)
        prims.append(OverlayPrimitive("box2d", (u0, v0, u1, v1), class_color(o.cls), o.id))

    if gaze_ray_M is not None:
        hit = _ground_hit(gaze_ray_M)
        circle = None
        if hit is not None:
            hit_s = t_M_to_S.apply(hit)
            if hit_s[2] > 0:
                try:
                    u, v = cam_S.project(hit_s)
                except PointBehindCamera:
                    u = v = None
                if u is not None and 0 <= u < cam_S.width and 0 <= v < cam_S.height:
                    circle = OverlayPrimitive(
                        "circle2d", (u, v, gaze_circle_radius_px), COLOR_GAZE, GAZE_TAG
                    )
        if circle is not None:
            prims.append(circle)
        else:
            # Fall back to the projected gaze ray path.
            pts = []
            for dist in np.linspace(0.5, 60.0, 40):
                p_s = t_M_to_S.apply(gaze_ray_M.point_at(float(dist)))
                if p_s[2] > NEAR_CLIP_M:
                    pts.append(_project_clamped(cam_S, p_s))
            if len(pts) >= 2:
                (u0, v0), (u1, v1) = pts[0], pts[-1]
                prims.append(
                    OverlayPrimitive("line2d", (u0, v0, u1, v1), COLOR_GAZE, GAZE_TAG)
                )
    return prims
