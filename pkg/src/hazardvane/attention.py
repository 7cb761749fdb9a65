"""Gaze-to-obstacle intersection and the ledger of hazards already seen.

A hazard counts as "considered" once the driver's gaze ray has dwelled on its
bounding box for a minimum continuous time; it then stays suppressed for a
fixed window.  Samples taken during blinks or with nearly closed eyelids are
ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Ray, RigidTransform, ray_aabb_intersect
from .perception import ObstacleTrack

DWELL_MIN_S = 0.2
DWELL_GAP_S = 0.3
CONSIDERED_WINDOW_S = 3.0
EYELID_MIN = 0.2


@dataclass(frozen=True)
class GazeSample:
    """One gaze-tracker output in the tracker frame F."""

    timestamp: float
    gaze_origin_F: np.ndarray
    gaze_dir_F: np.ndarray
    eyelid_opening: float = 1.0
    pupil_diameter_mm: float = 3.5
    blink: bool = False
    head_pose_F: RigidTransform = field(default_factory=RigidTransform.identity)

    def __post_init__(self):
        o = np.asarray(self.gaze_origin_F, dtype=float).reshape(3)
        d = np.asarray(self.gaze_dir_F, dtype=float).reshape(3)
        object.__setattr__(self, "gaze_origin_F", o)
        object.__setattr__(self, "gaze_dir_F", d)
        if abs(np.linalg.norm(d) - 1.0) > 1e-6:
            raise ValueError(f"|gaze_dir| = {np.linalg.norm(d):.8f}, expected 1")
        if not (0.0 <= self.eyelid_opening <= 1.0):
            raise ValueError(f"eyelid_opening must be in [0, 1], got {self.eyelid_opening}")


def sample_valid(g: GazeSample, eyelid_min: float = EYELID_MIN) -> bool:
    """Blinks and nearly closed eyelids invalidate a sample."""
    return not g.blink and g.eyelid_opening >= eyelid_min


def gaze_ray_in_M(g: GazeSample, t_F_to_M: RigidTransform) -> Ray:
    """Gaze ray expressed in the obstacle-sensor frame M."""
    return Ray(t_F_to_M.apply(g.gaze_origin_F), t_F_to_M.apply_direction(g.gaze_dir_F))


@dataclass
class AttentionRecord:
    first_hit_time: float
    last_hit_time: float
    accumulated_dwell: float = 0.0
    considered_until: float = -math.inf


class AttentionLedger:
    """Per-obstacle memory of gaze hits and active suppression windows.

    Single-writer: updates must arrive with non-decreasing timestamps.
    """

    def __init__(
        self,
        dwell_min_s: float = DWELL_MIN_S,
        dwell_gap_s: float = DWELL_GAP_S,
        considered_window_s: float = CONSIDERED_WINDOW_S,
    ):
        self.dwell_min_s = dwell_min_s
        self.dwell_gap_s = dwell_gap_s
        self.considered_window_s = considered_window_s
        self.records: dict[str, AttentionRecord] = {}
        self.last_update_time = -math.inf

    def update(
        self,
        ray_M: Ray | None,
        obstacles: list[ObstacleTrack],
        now: float,
        valid: bool = True,
    ) -> None:
        """Fold one gaze sample into the ledger.

        Continuous dwell accumulates while consecutive hits are closer than
        the gap threshold; reaching the dwell minimum opens (or extends) the
        suppression window.
        """
        if now < self.last_update_time:
            raise ValueError(
                f"timestamps must be monotone: {now} < {self.last_update_time}"
            )
        self.last_update_time = now
        if ray_M is None or not valid:
            return
        for o in obstacles:
            if ray_aabb_intersect(ray_M, o.bbox) is None:
                continue
            rec = self.records.get(o.id)
            if rec is None:
                rec = AttentionRecord(first_hit_time=now, last_hit_time=now)
                self.records[o.id] = rec
            else:
                gap = now - rec.last_hit_time
                if gap <= self.dwell_gap_s:
                    rec.accumulated_dwell += gap
                else:
                    rec.accumulated_dwell = 0.0
                rec.last_hit_time = now
            if rec.accumulated_dwell >= self.dwell_min_s:
                rec.considered_until = now + self.considered_window_s

    def considered(self, obstacle_id: str, now: float) -> bool:
        rec = self.records.get(obstacle_id)
        return rec is not None and now < rec.considered_until

    def considered_ids(self, now: float) -> list[str]:
        return sorted(oid for oid, r in self.records.items() if now < r.considered_until)
