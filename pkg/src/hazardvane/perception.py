"""Obstacle/ego world model and the per-obstacle danger primitives.

The danger score is driven by a line-of-sight time-to-collision: range over
closing speed, with non-approaching obstacles mapped to +inf and scores
normalized into [0, 1] against a saturation horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Aabb3

OBSTACLE_CLASSES = ("pedestrian", "car", "truck", "bicycle", "motorcycle")

# Defaults; the pipeline passes overrides from AppConfig.
TTC_MAX_S = 10.0
CLOSING_EPS_MPS = 0.1
STATIONARY_SPEED_MPS = 0.2


@dataclass(frozen=True)
class ObstacleTrack:
    """One tracked obstacle in the obstacle-sensor frame M.

    ``position_M`` is relative to the ego vehicle; ``velocity_M`` is the
    ground-relative velocity expressed in M-frame axes.
    """

    id: str
    cls: str
    position_M: np.ndarray
    velocity_M: np.ndarray
    half_extents: np.ndarray
    timestamp: float

    def __post_init__(self):
        if self.cls not in OBSTACLE_CLASSES:
            raise ValueError(f"unknown obstacle class {self.cls!r}")
        object.__setattr__(self, "position_M", np.asarray(self.position_M, dtype=float).reshape(3))
        object.__setattr__(self, "velocity_M", np.asarray(self.velocity_M, dtype=float).reshape(3))
        h = np.asarray(self.half_extents, dtype=float).reshape(3)
        if not np.all(h > 0):
            raise ValueError("half_extents must be strictly positive")
        object.__setattr__(self, "half_extents", h)

    @property
    def bbox(self) -> Aabb3:
        return Aabb3(self.position_M, self.half_extents)


@dataclass(frozen=True)
class EgoState:
    speed: float
    yaw_rate: float
    timestamp: float

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError(f"ego speed must be >= 0, got {self.speed}")


@dataclass(frozen=True)
class DangerAssessment:
    obstacle_id: str
    ttc: float
    dangerousness: float
    stationary: bool
    considered: bool
    eligible: bool


def closing_speed(ego: EgoState, o: ObstacleTrack) -> float:
    """Rate of range decrease in m/s; positive means approaching.

    Relative velocity is taken against the ego motion (speed along +x in the
    vehicle frame) and projected on the line of sight.
    """
    r = float(np.linalg.norm(o.position_M))
    if r < 1e-12:
        raise ValueError("obstacle is at the ego origin")
    unit = o.position_M / r
    v_rel = o.velocity_M - np.array([ego.speed, 0.0, 0.0])
    return -float(np.dot(v_rel, unit))


def ttc(ego: EgoState, o: ObstacleTrack, closing_eps_mps: float = CLOSING_EPS_MPS) -> float:
    """Line-of-sight time to collision in seconds; +inf when not approaching."""
    c = closing_speed(ego, o)
    if c <= closing_eps_mps:
        return math.inf
    return float(np.linalg.norm(o.position_M)) / c


def is_stationary(o: ObstacleTrack, threshold_mps: float = STATIONARY_SPEED_MPS) -> bool:
    return float(np.linalg.norm(o.velocity_M)) < threshold_mps


def dangerousness(ttc_value: float, ttc_max_s: float = TTC_MAX_S) -> float:
    """Normalized danger in [0, 1]: 1 at contact, 0 at or beyond the horizon."""
    if math.isinf(ttc_value):
        return 0.0
    if ttc_value < 0:
        raise ValueError(f"ttc must be >= 0, got {ttc_value}")
    return min(1.0, max(0.0, 1.0 - ttc_value / ttc_max_s))
