"""Tunable pipeline constants with JSON-file overrides.

Every threshold that shapes ranking or suppression behavior lives here so
replay runs, live sessions and tests share one set of knobs.  A defaults file
can be pointed to by the ``HAZARDVANE_CONFIG`` environment variable or the
``--config`` CLI flag.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

import numpy as np

from .geometry import VEHICLE_TO_CAMERA, CameraModel, RigidTransform

ENV_CONFIG = "HAZARDVANE_CONFIG"


@dataclass(frozen=True)
class AppConfig:
    # Danger scoring
    ttc_max_s: float = 10.0
    closing_eps_mps: float = 0.1
    stationary_speed_mps: float = 0.2

    # Gaze attention
    dwell_min_s: float = 0.2
    dwell_gap_s: float = 0.3
    considered_window_s: float = 3.0
    eyelid_min: float = 0.2
    max_gaze_skew_s: float = 0.1

    # Vane layout and animation
    max_arrows: int = 4
    height_step: float = 0.22
    spring_omega: float = 8.0
    spring_substep_s: float = 0.00025
    arrow_drop_height: float = 0.02
    pole_anchor_m: tuple[float, float, float] = (2.0, 0.0, 1.2)

    # Monitoring views
    bird_extent_m: float = 60.0
    bird_image_px: int = 240
    scene_render_scale: float = 0.5
    gaze_circle_radius_px: float = 10.0

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["pole_anchor_m"] = list(self.pole_anchor_m)
        return d

    @staticmethod
    def from_dict(data: dict) -> "AppConfig":
        known = {f.name for f in dataclasses.fields(AppConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config field(s): {sorted(unknown)}")
        if "pole_anchor_m" in data:
            data = dict(data)
            data["pole_anchor_m"] = tuple(float(x) for x in data["pole_anchor_m"])
        return AppConfig(**data)

    @staticmethod
    def from_file(path: str) -> "AppConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return AppConfig.from_dict(json.load(fh))

    @staticmethod
    def from_env(explicit_path: str | None = None) -> "AppConfig":
        path = explicit_path or os.environ.get(ENV_CONFIG)
        if path:
            return AppConfig.from_file(path)
        return AppConfig()


def default_scene_camera() -> CameraModel:
    return CameraModel(fx=600.0, fy=600.0, cx=320.0, cy=180.0, width=640, height=360)


def default_scene_pose() -> RigidTransform:
    """Scene camera mounted 1.3 m up, 0.4 m forward of the M-frame origin,
    looking straight ahead.  Returns the M -> camera transform."""
    cam_pos_m = np.array([0.4, 0.0, 1.3])
    return RigidTransform(VEHICLE_TO_CAMERA, -VEHICLE_TO_CAMERA @ cam_pos_m)
