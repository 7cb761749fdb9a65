"""hazardvane: attention-aware ranked hazard display.

Fuses simulated obstacle tracks with driver gaze, scores hazards by
time-to-collision, suppresses hazards the driver has already looked at, and
animates the surviving dangers as ranked arrows on a virtual pole.
"""

from .attention import AttentionLedger, GazeSample, gaze_ray_in_M
from .calibration import (
    GazeLaserSample,
    PointPairSet,
    RegistrationResult,
    register_icp,
    register_kabsch,
    run_calibration_procedure,
)
from .config import AppConfig
from .geometry import Aabb3, CameraModel, Ray, RigidTransform
from .logio import FrameRecord, read_log, synchronize, write_log
from .perception import DangerAssessment, EgoState, ObstacleTrack, dangerousness, ttc
from .pipeline import HazardPipeline
from .sim import Scenario, load_scenario, run
from .vane import WeathervaneState, animate_step, assess_all, target_configuration

__version__ = "0.1.0"

__all__ = [
    "Aabb3",
    "AppConfig",
    "AttentionLedger",
    "CameraModel",
    "DangerAssessment",
    "EgoState",
    "FrameRecord",
    "GazeLaserSample",
    "GazeSample",
    "HazardPipeline",
    "ObstacleTrack",
    "PointPairSet",
    "Ray",
    "RegistrationResult",
    "RigidTransform",
    "Scenario",
    "WeathervaneState",
    "animate_step",
    "assess_all",
    "dangerousness",
    "gaze_ray_in_M",
    "load_scenario",
    "read_log",
    "register_icp",
    "register_kabsch",
    "run",
    "run_calibration_procedure",
    "synchronize",
    "target_configuration",
    "ttc",
    "write_log",
]
