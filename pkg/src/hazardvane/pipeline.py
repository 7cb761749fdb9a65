"""Per-tick hazard pipeline shared by offline replay and live sessions.

Each record flows through the same stages: gaze ray into the obstacle frame,
attention ledger update, per-obstacle danger assessment, target vane
configuration, spring animation step.  Replay and the session service both
fold records through :class:`HazardPipeline`, which is what makes their
outputs tick-for-tick identical for identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .attention import AttentionLedger, gaze_ray_in_M, sample_valid
from .config import AppConfig
from .geometry import CameraModel, Ray, RigidTransform
from .logio import FrameRecord, dumps_compact
from .overlay import bird_view, scene_overlay
from .perception import DangerAssessment
from .render import render_bird_px, render_primitives_px, write_ppm
from .vane import WeathervaneState, animate_step, assess_all, target_configuration


@dataclass(frozen=True)
class TickResult:
    tick: int
    t: float
    vane: WeathervaneState
    assessments: list[DangerAssessment]
    considered_ids: list[str]
    gaze_ray_M: Ray | None


class HazardPipeline:
    """Stateful per-tick engine: ledger + animated vane over a record stream."""

    def __init__(
        self,
        calibration_F_to_M: RigidTransform,
        cfg: AppConfig = AppConfig(),
        initial_dt: float = 0.05,
    ):
        self.cfg = cfg
        self.calibration = calibration_F_to_M
        self.ledger = AttentionLedger(
            dwell_min_s=cfg.dwell_min_s,
            dwell_gap_s=cfg.dwell_gap_s,
            considered_window_s=cfg.considered_window_s,
        )
        self.vane = WeathervaneState.empty(cfg)
        self.initial_dt = initial_dt
        self.prev_t: float | None = None
        self.tick = 0

    def update(self, record: FrameRecord, gaze_ray_override: Ray | None = None) -> TickResult:
        """Advance the pipeline by one record.

        ``gaze_ray_override`` (already in frame M) replaces the record's gaze
        when a client is steering; animation dt comes from the record spacing.
        """
        now = record.t
        dt = self.initial_dt if self.prev_t is None else now - self.prev_t
        self.prev_t = now

        ray = None
        valid = True
        if gaze_ray_override is not None:
            ray = gaze_ray_override
        elif record.gaze is not None:
            ray = gaze_ray_in_M(record.gaze, self.calibration)
            valid = sample_valid(record.gaze, self.cfg.eyelid_min)

        self.ledger.update(ray, list(record.obstacles), now, valid=valid)
        assessments = assess_all(
            list(record.obstacles), record.ego, self.ledger, now, self.cfg
        )
        target = target_configuration(assessments, list(record.obstacles), self.cfg, now)
        eligible = {a.obstacle_id for a in assessments if a.eligible}
        if dt > 0:
            self.vane = animate_step(self.vane, target, dt, allowed_ids=eligible, cfg=self.cfg)
        result = TickResult(
            tick=self.tick,
            t=now,
            vane=self.vane,
            assessments=assessments,
            considered_ids=self.ledger.considered_ids(now),
            gaze_ray_M=ray,
        )
        self.tick += 1
        return result


def state_message(
    result: TickResult,
    record: FrameRecord,
    cfg: AppConfig,
    scene_camera: CameraModel,
    scene_pose_M_to_S: RigidTransform,
    mode: str = "run",
) -> dict:
    """The wire-format state document sent to clients and written by replay."""
    vane = [
        {
            "id": a.obstacle_id,
            "bearing": a.current_bearing,
            "height": a.current_height,
            "color": [int(round(c)) for c in a.color],
            "symbol": a.symbol,
            "danger": a.dangerousness,
        }
        for a in result.vane.arrows
    ]
    bird = bird_view(list(record.obstacles), result.gaze_ray_M, cfg.bird_extent_m)
    scene = scene_overlay(
        scene_camera,
        scene_pose_M_to_S,
        list(record.obstacles),
        result.gaze_ray_M,
        cfg.gaze_circle_radius_px,
    )
    return {
        "type": "state",
        "t": result.t,
        "tick": result.tick,
        "mode": mode,
        "vane": vane,
        "bird": [p.to_obj() for p in bird],
        "scene": [p.to_obj() for p in scene],
        "considered": result.considered_ids,
    }


class MetricsAccumulator:
    """Replay metrics: arrow counts, suppression events, TTC histogram."""

    def __init__(self):
        self.frames = 0
        self.arrow_count_hist: dict[int, int] = {}
        self.suppression_events = 0
        self.ttc_hist: dict[str, int] = {}
        self._was_considered: set[str] = set()

    def add(self, result: TickResult) -> None:
        self.frames += 1
        n = len(result.vane.arrows)
        self.arrow_count_hist[n] = self.arrow_count_hist.get(n, 0) + 1
        now_considered = set(result.considered_ids)
        self.suppression_events += len(now_considered - self._was_considered)
        self._was_considered = now_considered
        for a in result.assessments:
            if math.isinf(a.ttc):
                key = "inf"
            elif a.ttc >= 10.0:
                key = "10+"
            else:
                key = f"{int(a.ttc)}-{int(a.ttc) + 1}"
            self.ttc_hist[key] = self.ttc_hist.get(key, 0) + 1

    def to_obj(self) -> dict:
        return {
            "frames": self.frames,
            "arrow_count_hist": {str(k): v for k, v in sorted(self.arrow_count_hist.items())},
            "max_arrows_seen": max(self.arrow_count_hist) if self.arrow_count_hist else 0,
            "suppression_events": self.suppression_events,
            "ttc_hist": {k: self.ttc_hist[k] for k in sorted(self.ttc_hist)},
        }


@dataclass(frozen=True)
class ReplayOutput:
    frames: int
    vane_log_path: Path
    metrics_path: Path | None


def replay_records(
    records: list[FrameRecord],
    calibration_F_to_M: RigidTransform,
    cfg: AppConfig,
) -> list[TickResult]:
    """Offline pipeline over an in-memory record list."""
    pipeline = HazardPipeline(
        calibration_F_to_M, cfg, initial_dt=_initial_dt(records)
    )
    return [pipeline.update(rec) for rec in records]


def _initial_dt(records: list[FrameRecord]) -> float:
    if len(records) >= 2:
        dt = records[1].t - records[0].t
        if dt > 0:
            return dt
    return 0.05


def run_replay(
    records: list[FrameRecord],
    calibration_F_to_M: RigidTransform,
    cfg: AppConfig,
    scene_camera: CameraModel,
    scene_pose_M_to_S: RigidTransform,
    render_dir: Path | None = None,
    metrics_path: Path | None = None,
    vane_log_path: Path | None = None,
    render_every: int = 1,
) -> dict:
    """Full offline replay: vane log, optional PPM frames, metrics document."""
    pipeline = HazardPipeline(calibration_F_to_M, cfg, initial_dt=_initial_dt(records))
    metrics = MetricsAccumulator()
    if render_dir is not None:
        render_dir = Path(render_dir)
        render_dir.mkdir(parents=True, exist_ok=True)
    vane_fh = open(vane_log_path, "w", encoding="utf-8") if vane_log_path else None
    try:
        for i, rec in enumerate(records):
            result = pipeline.update(rec)
            metrics.add(result)
            msg = state_message(result, rec, cfg, scene_camera, scene_pose_M_to_S)
            if vane_fh is not None:
                vane_fh.write(dumps_compact(msg))
                vane_fh.write("\n")
            if render_dir is not None and i % render_every == 0:
                bird = bird_view(list(rec.obstacles), result.gaze_ray_M, cfg.bird_extent_m)
                img = render_bird_px(bird, cfg.bird_extent_m, cfg.bird_image_px)
                write_ppm(render_dir / f"bird_{i:05d}.ppm", img)
                scene = scene_overlay(
                    scene_camera,
                    scene_pose_M_to_S,
                    list(rec.obstacles),
                    result.gaze_ray_M,
                    cfg.gaze_circle_radius_px,
                )
                s = cfg.scene_render_scale
                img = render_primitives_px(
                    scene,
                    int(round(scene_camera.width * s)),
                    int(round(scene_camera.height * s)),
                    scale=s,
                )
                write_ppm(render_dir / f"scene_{i:05d}.ppm", img)
    finally:
        if vane_fh is not None:
            vane_fh.close()
    metrics_obj = metrics.to_obj()
    if metrics_path is not None:
        with open(metrics_path, "w", encoding="utf-8") as fh:
            fh.write(dumps_compact(metrics_obj))
            fh.write("\n")
    return metrics_obj
