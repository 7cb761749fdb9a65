"""Live session engine: one simulator + pipeline per named session.

The synchronous :class:`SessionRunner` owns all mutable state and is only
ever touched by its session's tick loop; clients communicate exclusively
through queued control changes applied at tick boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..config import AppConfig
from ..geometry import Ray
from ..logio import FrameRecord
from ..pipeline import HazardPipeline, TickResult, state_message
from ..sim import Scenario, emit_frame, world_at


@dataclass
class ControlChange:
    """One client control, normalized to explicit change flags."""

    set_gaze_px: bool = False
    gaze_px: tuple[float, float] | None = None
    set_ego_speed: bool = False
    ego_speed: float | None = None
    mode: str | None = None


@dataclass
class SessionStepOutput:
    message: dict
    result: TickResult
    record: FrameRecord


class SessionRunner:
    """Deterministic session state machine (no I/O, no clocks).

    With no controls applied, the emitted record stream is identical to
    ``sim.run`` on the same scenario and seed, so the vane sequence matches
    the offline replay pipeline tick for tick.
    """

    def __init__(self, scenario: Scenario, cfg: AppConfig, seed: int | None = None):
        self.scenario = scenario
        self.cfg = cfg
        self.seed = scenario.seed if seed is None else seed
        self.pipeline = HazardPipeline(
            scenario.calibration_F_to_M, cfg, initial_dt=scenario.dt
        )
        self.tick = 0
        self.mode = "run"
        self.pending_steps = 0
        self.gaze_override_ray: Ray | None = None
        self.ego_speed_override: float | None = None
        # Becomes active at the first ego-speed override; integrates from there.
        self._ego_distance_state: float | None = None
        self._t_s_to_m = scenario.scene_pose_M_to_S.invert()

    @property
    def finished(self) -> bool:
        return self.tick >= self.scenario.num_ticks

    def apply_control(self, change: ControlChange) -> None:
        if change.mode is not None:
            if change.mode == "step":
                self.mode = "pause"
                self.pending_steps += 1
            else:
                self.mode = change.mode
                if change.mode == "run":
                    self.pending_steps = 0
        if change.set_gaze_px:
            if change.gaze_px is None:
                self.gaze_override_ray = None
            else:
                self.gaze_override_ray = self._backproject_gaze(change.gaze_px)
        if change.set_ego_speed:
            if change.ego_speed is None:
                self.ego_speed_override = None
            else:
                if self._ego_distance_state is None:
                    t = self.tick / self.scenario.tick_rate_hz
                    self._ego_distance_state = self.scenario.ego_distance_at(t)
                self.ego_speed_override = float(change.ego_speed)

    def _backproject_gaze(self, uv: tuple[float, float]) -> Ray:
        """Scene-view pixel to a gaze ray in the obstacle frame M."""
        ray_s = self.scenario.scene_camera.backproject(uv)
        return Ray(
            self._t_s_to_m.apply(ray_s.origin),
            self._t_s_to_m.apply_direction(ray_s.direction),
        )

    def should_step(self) -> bool:
        if self.finished:
            return False
        if self.mode == "run":
            return True
        if self.pending_steps > 0:
            self.pending_steps -= 1
            return True
        return False

    def step_once(self) -> SessionStepOutput:
        """Advance exactly one tick and build the outbound state message."""
        if self.finished:
            raise RuntimeError("session already finished")
        scenario = self.scenario
        world = world_at(
            scenario,
            self.tick,
            ego_distance=self._ego_distance_state,
            ego_speed=self.ego_speed_override,
        )
        record = emit_frame(world, scenario.noise, self.seed)
        result = self.pipeline.update(record, gaze_ray_override=self.gaze_override_ray)
        # Keep the override integrator moving with this tick's effective speed.
        if self._ego_distance_state is not None:
            self._ego_distance_state += world.ego.speed * scenario.dt
        self.tick += 1
        message = state_message(
            result,
            record,
            self.cfg,
            scenario.scene_camera,
            scenario.scene_pose_M_to_S,
            mode=self.mode,
        )
        return SessionStepOutput(message, result, record)

    def run_headless(self) -> list[dict]:
        """Step the whole scenario without any client; returns state messages."""
        out = []
        while not self.finished:
            out.append(self.step_once().message)
        return out
