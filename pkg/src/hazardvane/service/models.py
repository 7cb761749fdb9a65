"""Pydantic request/response and websocket message models."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class ControlMessage(BaseModel):
    """Client steering input, applied once per tick at the tick boundary.

    ``gaze_px: null`` clears the gaze override (an absent key changes
    nothing); the same convention applies to ``ego_speed``.
    """

    type: Literal["control"]
    gaze_px: Optional[tuple[float, float]] = None
    ego_speed: Optional[float] = Field(default=None, ge=0.0)
    mode: Optional[Literal["run", "pause", "step"]] = None


class LoadMessage(BaseModel):
    type: Literal["load"]
    scenario: str
    seed: Optional[int] = None


class VaneArrow(BaseModel):
    id: str
    bearing: float
    height: float
    color: tuple[int, int, int]
    symbol: str
    danger: float


class StateMessage(BaseModel):
    type: Literal["state"]
    t: float
    tick: int
    mode: str
    vane: list[VaneArrow]
    bird: list[dict]
    scene: list[dict]
    considered: list[str]


class ErrorMessage(BaseModel):
    type: Literal["error"] = "error"
    error: str
    detail: str = ""


class HealthResponse(BaseModel):
    tick: int


class ScenarioListResponse(BaseModel):
    scenarios: list[str]


class TransformModel(BaseModel):
    rotation: list[list[float]]
    translation: list[float]


class CalibrationSampleModel(BaseModel):
    id: str
    gaze_origin: tuple[float, float, float]
    gaze_dir: tuple[float, float, float]
    laser_distance_m: float


class CalibrateRequest(BaseModel):
    samples: list[CalibrationSampleModel]
    target_points: dict[str, tuple[float, float, float]]
    target_pose_m: TransformModel
    method: Literal["kabsch", "icp"] = "kabsch"


class CalibrateResponse(BaseModel):
    rotation: list[list[float]]
    translation: list[float]
    rms: float
    residuals: list[float]
    iterations: int
    converged: bool


class SimulateRequest(BaseModel):
    scenario: str
    seed: Optional[int] = None
    include_truth: bool = False


class SimulateResponse(BaseModel):
    scenario: str
    seed: int
    records: list[dict]
    truth: Optional[list[dict]] = None
