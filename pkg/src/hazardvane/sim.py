"""Deterministic scripted scenarios standing in for the live sensors.

A scenario drives the ego vehicle along +x with a piecewise-linear speed
profile and moves actors along waypoint polylines.  Per-tick sensor records
are the ground truth plus Gaussian noise drawn from counter-based RNG streams
keyed on (seed, tick, actor), so emission order never affects the output and
identical seeds give bit-identical logs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attention import GazeSample
from .config import default_scene_camera, default_scene_pose
from .geometry import CameraModel, RigidTransform, rotation_from_axis_angle
from .logio import FrameRecord
from .perception import OBSTACLE_CLASSES, EgoState, ObstacleTrack

# RNG stream ids within a tick.
_GAZE_STREAM = 0
_ACTOR_STREAM_BASE = 1


@dataclass(frozen=True)
class ActorScript:
    id: str
    cls: str
    waypoints: np.ndarray  # (N, 3) world frame
    speeds: np.ndarray  # (N-1,) m/s per segment (single waypoint: empty)
    half_extents: np.ndarray

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "waypoints", wp)
        sp = np.asarray(self.speeds, dtype=float).reshape(-1)
        object.__setattr__(self, "speeds", sp)
        object.__setattr__(
            self, "half_extents", np.asarray(self.half_extents, dtype=float).reshape(3)
        )
        if self.cls not in OBSTACLE_CLASSES:
            raise ValueError(f"actor {self.id!r}: unknown class {self.cls!r}")
        if len(wp) == 0:
            raise ValueError(f"actor {self.id!r}: needs at least one waypoint")
        if len(wp) > 1 and len(sp) != len(wp) - 1:
            raise ValueError(
                f"actor {self.id!r}: {len(wp)} waypoints need {len(wp) - 1} segment speeds"
            )
        if np.any(sp <= 0):
            raise ValueError(f"actor {self.id!r}: segment speeds must be > 0")

    def position_at(self, t: float) -> np.ndarray:
        """Piecewise-linear traversal; holds the final position afterwards."""
        p = self.waypoints
        if len(p) == 1 or t <= 0:
            return p[0].copy()
        elapsed = 0.0
        for i in range(len(p) - 1):
            seg = p[i + 1] - p[i]
            length = float(np.linalg.norm(seg))
            dur = length / self.speeds[i] if length > 0 else 0.0
            if t <= elapsed + dur and dur > 0:
                w = (t - elapsed) / dur
                return p[i] + w * seg
            elapsed += dur
        return p[-1].copy()


@dataclass(frozen=True)
class GazeKeyframe:
    t: float
    dir_F: np.ndarray | None = None  # unit-ish direction in frame F
    look_at_actor: str | None = None  # resolved against actor positions at runtime


@dataclass(frozen=True)
class GazeScript:
    mode: str = "scripted"  # "scripted" | "user"
    origin_F: np.ndarray = field(default_factory=lambda: np.zeros(3))
    keyframes: tuple[GazeKeyframe, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "origin_F", np.asarray(self.origin_F, dtype=float).reshape(3))
        if self.mode not in ("scripted", "user"):
            raise ValueError(f"gaze mode must be 'scripted' or 'user', got {self.mode!r}")
        if self.mode == "scripted" and not self.keyframes:
            raise ValueError("scripted gaze needs at least one keyframe")


@dataclass(frozen=True)
class SensorNoise:
    pos_sigma_m: float = 0.0
    vel_sigma_mps: float = 0.0
    gaze_sigma_rad: float = 0.0

    def __post_init__(self):
        if min(self.pos_sigma_m, self.vel_sigma_mps, self.gaze_sigma_rad) < 0:
            raise ValueError("noise sigmas must be >= 0")


@dataclass(frozen=True)
class Scenario:
    name: str
    duration_s: float
    tick_rate_hz: float
    seed: int
    ego_speed_profile: np.ndarray  # (K, 2) rows of (t, speed)
    actors: tuple[ActorScript, ...]
    gaze: GazeScript
    noise: SensorNoise
    calibration_F_to_M: RigidTransform
    scene_camera: CameraModel
    scene_pose_M_to_S: RigidTransform

    def __post_init__(self):
        prof = np.asarray(self.ego_speed_profile, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "ego_speed_profile", prof)
        object.__setattr__(self, "actors", tuple(self.actors))
        if self.duration_s <= 0:
            raise ValueError(f"duration_s must be > 0, got {self.duration_s}")
        if not (10.0 <= self.tick_rate_hz <= 120.0):
            raise ValueError(f"tick_rate_hz must be in [10, 120], got {self.tick_rate_hz}")
        if len(prof) == 0 or np.any(prof[:, 1] < 0):
            raise ValueError("ego speed profile needs >= 1 knot with speeds >= 0")
        if np.any(np.diff(prof[:, 0]) < 0):
            raise ValueError("ego speed profile knots must be time-sorted")

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_rate_hz

    @property
    def num_ticks(self) -> int:
        return int(round(self.duration_s * self.tick_rate_hz))

    def ego_speed_at(self, t: float) -> float:
        prof = self.ego_speed_profile
        return float(np.interp(t, prof[:, 0], prof[:, 1]))

    def ego_distance_at(self, t: float) -> float:
        """Integral of the speed profile from 0 to t (piecewise trapezoids)."""
        prof = self.ego_speed_profile
        knots = prof[:, 0]
        total = 0.0
        prev_t, prev_v = 0.0, self.ego_speed_at(0.0)
        for kt in knots:
            if kt <= prev_t:
                continue
            if kt >= t:
                break
            kv = self.ego_speed_at(kt)
            total += 0.5 * (prev_v + kv) * (kt - prev_t)
            prev_t, prev_v = kt, kv
        v_t = self.ego_speed_at(t)
        total += 0.5 * (prev_v + v_t) * (t - prev_t)
        return total


@dataclass(frozen=True)
class WorldState:
    """Ground truth at one tick: time, ego, actor tracks in M, gaze in F."""

    tick: int
    time: float
    ego: EgoState
    actors: tuple[ObstacleTrack, ...]
    gaze: GazeSample | None


def _gaze_dir_at(scenario: Scenario, t: float, actor_pos_M: dict[str, np.ndarray]) -> np.ndarray:
    """Resolve the scripted gaze direction in frame F at time t."""
    kfs = scenario.gaze.keyframes
    origin_F = scenario.gaze.origin_F

    def resolve(kf: GazeKeyframe) -> np.ndarray:
        if kf.look_at_actor is not None:
            target_M = actor_pos_M[kf.look_at_actor]
            t_M_to_F = scenario.calibration_F_to_M.invert()
            delta = t_M_to_F.apply(target_M) - origin_F
            n = np.linalg.norm(delta)
            if n < 1e-12:
                raise ValueError(f"gaze target {kf.look_at_actor!r} coincides with the eye")
            return delta / n
        d = np.asarray(kf.dir_F, dtype=float)
        return d / np.linalg.norm(d)

    idx = 0
    for i, kf in enumerate(kfs):
        if kf.t <= t:
            idx = i
        else:
            break
    cur = kfs[idx]
    if idx + 1 < len(kfs):
        nxt = kfs[idx + 1]
        # Interpolate only between two explicit directions; otherwise hold.
        if cur.dir_F is not None and nxt.dir_F is not None and nxt.t > cur.t and t > cur.t:
            w = min(1.0, (t - cur.t) / (nxt.t - cur.t))
            d = (1.0 - w) * resolve(cur) + w * resolve(nxt)
            n = np.linalg.norm(d)
            if n > 1e-12:
                return d / n
    return resolve(cur)


def world_at(
    scenario: Scenario,
    tick: int,
    ego_distance: float | None = None,
    ego_speed: float | None = None,
) -> WorldState:
    """Ground-truth world at a tick; pure function of (scenario, tick).

    ``ego_distance``/``ego_speed`` replace the scripted ego motion when a
    client is overriding the vehicle speed.
    """
    dt = scenario.dt
    t = tick / scenario.tick_rate_hz
    ego_x = scenario.ego_distance_at(t) if ego_distance is None else ego_distance
    ego = EgoState(
        scenario.ego_speed_at(t) if ego_speed is None else ego_speed, 0.0, t
    )

    actors = []
    pos_by_id: dict[str, np.ndarray] = {}
    for a in scenario.actors:
        p_now = a.position_at(t)
        if tick == 0:
            p_prev = a.position_at(0.0)
            p_next = a.position_at(dt)
            vel = (p_next - p_prev) / dt
        else:
            p_prev = a.position_at(t - dt)
            vel = (p_now - p_prev) / dt
        pos_m = p_now - np.array([ego_x, 0.0, 0.0])
        pos_by_id[a.id] = pos_m
        actors.append(
            ObstacleTrack(
                id=a.id,
                cls=a.cls,
                position_M=pos_m,
                velocity_M=vel,
                half_extents=a.half_extents,
                timestamp=t,
            )
        )

    gaze = None
    if scenario.gaze.mode == "scripted":
        direction = _gaze_dir_at(scenario, t, pos_by_id)
        gaze = GazeSample(
            timestamp=t,
            gaze_origin_F=scenario.gaze.origin_F,
            gaze_dir_F=direction,
        )
    return WorldState(tick, t, ego, tuple(actors), gaze)


def step(world: WorldState, scenario: Scenario, dt: float) -> WorldState:
    """Advance one tick.  dt must equal the scenario tick period."""
    if abs(dt - scenario.dt) > 1e-12:
        raise ValueError(f"dt {dt} does not match scenario tick period {scenario.dt}")
    return world_at(scenario, world.tick + 1)


def _stream_rng(seed: int, tick: int, stream: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, 0], counter=[0, 0, tick, stream])
    )


def emit_frame(world: WorldState, noise: SensorNoise, seed: int) -> FrameRecord:
    """Sensor record for one tick: ground truth plus per-stream Gaussian noise."""
    obstacles = []
    for i, o in enumerate(world.actors):
        pos, vel = o.position_M, o.velocity_M
        if noise.pos_sigma_m > 0 or noise.vel_sigma_mps > 0:
            rng = _stream_rng(seed, world.tick, _ACTOR_STREAM_BASE + i)
            if noise.pos_sigma_m > 0:
                pos = pos + rng.normal(0.0, noise.pos_sigma_m, 3)
            if noise.vel_sigma_mps > 0:
                vel = vel + rng.normal(0.0, noise.vel_sigma_mps, 3)
        obstacles.append(
            ObstacleTrack(o.id, o.cls, pos, vel, o.half_extents, o.timestamp)
        )

    gaze = world.gaze
    if gaze is not None and noise.gaze_sigma_rad > 0:
        rng = _stream_rng(seed, world.tick, _GAZE_STREAM)
        angle = float(rng.normal(0.0, noise.gaze_sigma_rad))
        axis = np.cross(gaze.gaze_dir_F, rng.normal(size=3))
        if np.linalg.norm(axis) < 1e-12:
            axis = np.cross(gaze.gaze_dir_F, [1.0, 0.0, 0.0])
        direction = rotation_from_axis_angle(axis, angle) @ gaze.gaze_dir_F
        direction = direction / np.linalg.norm(direction)
        gaze = GazeSample(
            timestamp=gaze.timestamp,
            gaze_origin_F=gaze.gaze_origin_F,
            gaze_dir_F=direction,
            eyelid_opening=gaze.eyelid_opening,
            pupil_diameter_mm=gaze.pupil_diameter_mm,
            blink=gaze.blink,
        )
    return FrameRecord(world.time, world.ego, tuple(obstacles), gaze)


def truth_frame(world: WorldState) -> FrameRecord:
    return FrameRecord(world.time, world.ego, world.actors, world.gaze)


def run(scenario: Scenario, seed: int | None = None) -> tuple[list[FrameRecord], list[FrameRecord]]:
    """Run a full scenario.  Returns (noisy records, ground-truth records)."""
    eff_seed = scenario.seed if seed is None else seed
    noisy, truth = [], []
    for tick in range(scenario.num_ticks):
        world = world_at(scenario, tick)
        noisy.append(emit_frame(world, scenario.noise, eff_seed))
        truth.append(truth_frame(world))
    return noisy, truth


def _transform_from_obj(obj: dict) -> RigidTransform:
    return RigidTransform(np.array(obj["rotation"], dtype=float), np.array(obj["translation"], dtype=float))


def _transform_to_obj(t: RigidTransform) -> dict:
    return {"rotation": t.rotation.tolist(), "translation": t.translation.tolist()}


def _camera_from_obj(obj: dict) -> CameraModel:
    return CameraModel(
        fx=float(obj["fx"]),
        fy=float(obj["fy"]),
        cx=float(obj["cx"]),
        cy=float(obj["cy"]),
        width=int(obj["width"]),
        height=int(obj["height"]),
        k1=float(obj.get("k1", 0.0)),
        k2=float(obj.get("k2", 0.0)),
    )


def scenario_from_dict(obj: dict) -> Scenario:
    """Parse the scenario JSON document (see README for the schema)."""
    actors = []
    for a in obj.get("actors", []):
        wp = np.asarray(a["waypoints"], dtype=float).reshape(-1, 3)
        if "speeds" in a:
            speeds = np.asarray(a["speeds"], dtype=float)
        elif len(wp) > 1:
            speeds = np.full(len(wp) - 1, float(a.get("speed", 1.0)))
        else:
            speeds = np.zeros(0)
        actors.append(
            ActorScript(
                id=str(a["id"]),
                cls=str(a["class"]),
                waypoints=wp,
                speeds=speeds,
                half_extents=np.asarray(a["half_extents"], dtype=float),
            )
        )

    g = obj.get("gaze", {"mode": "user"})
    keyframes = tuple(
        GazeKeyframe(
            t=float(k["t"]),
            dir_F=np.asarray(k["dir"], dtype=float) if "dir" in k else None,
            look_at_actor=k.get("look_at_actor"),
        )
        for k in g.get("keyframes", [])
    )
    gaze = GazeScript(
        mode=g.get("mode", "scripted"),
        origin_F=np.asarray(g.get("origin_f", [0.0, 0.0, 0.0]), dtype=float),
        keyframes=keyframes,
    )

    noise_obj = obj.get("noise", {})
    noise = SensorNoise(
        pos_sigma_m=float(noise_obj.get("pos_sigma_m", 0.0)),
        vel_sigma_mps=float(noise_obj.get("vel_sigma_mps", 0.0)),
        gaze_sigma_rad=float(noise_obj.get("gaze_sigma_rad", 0.0)),
    )

    scene = obj.get("scene_camera", {})
    cam = _camera_from_obj(scene["model"]) if "model" in scene else default_scene_camera()
    pose = _transform_from_obj(scene["pose_m_to_s"]) if "pose_m_to_s" in scene else default_scene_pose()

    return Scenario(
        name=str(obj["name"]),
        duration_s=float(obj["duration_s"]),
        tick_rate_hz=float(obj["tick_rate_hz"]),
        seed=int(obj.get("seed", 0)),
        ego_speed_profile=np.asarray(obj["ego"]["speed_profile"], dtype=float),
        actors=tuple(actors),
        gaze=gaze,
        noise=noise,
        calibration_F_to_M=_transform_from_obj(obj["calibration_f_to_m"]),
        scene_camera=cam,
        scene_pose_M_to_S=pose,
    )


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


def bundled_scenario_dir() -> Path:
    return Path(__file__).resolve().parent / "scenarios"


def list_bundled_scenarios() -> list[str]:
    return sorted(p.stem for p in bundled_scenario_dir().glob("*.json"))


def resolve_scenario(name_or_path: str, scenario_dir: Path | None = None) -> Path:
    """Accept a file path, a name in scenario_dir, or a bundled scenario name."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    candidates = []
    if scenario_dir is not None:
        candidates.append(Path(scenario_dir) / f"{name_or_path}.json")
    candidates.append(bundled_scenario_dir() / f"{name_or_path}.json")
    for c in candidates:
        if c.is_file():
            return c
    raise FileNotFoundError(f"unknown scenario {name_or_path!r}")
