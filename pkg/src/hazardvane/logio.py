"""Canonical JSONL replay log format and stream synchronization.

One record per line::

    {"t": f, "ego": {"speed": f, "yaw_rate": f},
     "obstacles": [{"id": s, "class": s, "pos": [f,f,f], "vel": [f,f,f],
                    "half_extents": [f,f,f]}],
     "gaze": {"origin": [f,f,f], "dir": [f,f,f], "eyelid": f, "pupil_mm": f,
              "blink": b} | null}

Floats are written with 17 significant digits so round-trips are lossless and
output hashes are stable across runs.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass

import numpy as np

from .attention import GazeSample
from .perception import EgoState, ObstacleTrack


class MalformedLine(ValueError):
    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}")


class NonMonotoneTimestamp(ValueError):
    def __init__(self, line_number: int, t: float, prev_t: float):
        self.line_number = line_number
        super().__init__(
            f"line {line_number}: timestamp {t} is before previous {prev_t}"
        )


@dataclass(frozen=True)
class FrameRecord:
    """One fused per-tick snapshot: ego state, obstacle tracks, optional gaze."""

    t: float
    ego: EgoState
    obstacles: tuple[ObstacleTrack, ...]
    gaze: GazeSample | None = None

    def __post_init__(self):
        ids = [o.id for o in self.obstacles]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate obstacle ids in record at t={self.t}")
        object.__setattr__(self, "obstacles", tuple(self.obstacles))


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x}")
    s = format(float(x), ".17g")
    # Keep floats typed as floats on the way back in.
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def dumps_compact(obj) -> str:
    """Deterministic compact JSON with 17-significant-digit floats."""
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{dumps_compact(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(dumps_compact(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def record_to_obj(rec: FrameRecord) -> dict:
    gaze = None
    if rec.gaze is not None:
        gaze = {
            "origin": [float(x) for x in rec.gaze.gaze_origin_F],
            "dir": [float(x) for x in rec.gaze.gaze_dir_F],
            "eyelid": float(rec.gaze.eyelid_opening),
            "pupil_mm": float(rec.gaze.pupil_diameter_mm),
            "blink": bool(rec.gaze.blink),
        }
    return {
        "t": float(rec.t),
        "ego": {"speed": float(rec.ego.speed), "yaw_rate": float(rec.ego.yaw_rate)},
        "obstacles": [
            {
                "id": o.id,
                "class": o.cls,
                "pos": [float(x) for x in o.position_M],
                "vel": [float(x) for x in o.velocity_M],
                "half_extents": [float(x) for x in o.half_extents],
            }
            for o in rec.obstacles
        ],
        "gaze": gaze,
    }


def _vec3(obj, name: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != 3:
        raise ValueError(f"field {name!r} must be a 3-element array")
    return np.array([float(x) for x in obj])


def record_from_obj(obj: dict) -> FrameRecord:
    try:
        t = float(obj["t"])
        ego = EgoState(float(obj["ego"]["speed"]), float(obj["ego"]["yaw_rate"]), t)
        obstacles = [
            ObstacleTrack(
                id=str(o["id"]),
                cls=str(o["class"]),
                position_M=_vec3(o["pos"], "pos"),
                velocity_M=_vec3(o["vel"], "vel"),
                half_extents=_vec3(o["half_extents"], "half_extents"),
                timestamp=t,
            )
            for o in obj["obstacles"]
        ]
        gaze = None
        if obj.get("gaze") is not None:
            g = obj["gaze"]
            gaze = GazeSample(
                timestamp=t,
                gaze_origin_F=_vec3(g["origin"], "origin"),
                gaze_dir_F=_vec3(g["dir"], "dir"),
                eyelid_opening=float(g["eyelid"]),
                pupil_diameter_mm=float(g["pupil_mm"]),
                blink=bool(g["blink"]),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(str(exc)) from exc
    return FrameRecord(t, ego, tuple(obstacles), gaze)


def write_log(records, path) -> None:
    records = list(records)
    prev_t = -math.inf
    for i, rec in enumerate(records, start=1):
        if rec.t < prev_t:
            raise NonMonotoneTimestamp(i, rec.t, prev_t)
        prev_t = rec.t
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps_compact(record_to_obj(rec)))
            fh.write("\n")


def read_log(path) -> list[FrameRecord]:
    records = []
    prev_t = -math.inf
    with open(path, "r", encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(n, f"invalid JSON: {exc.msg}") from exc
            try:
                rec = record_from_obj(obj)
            except ValueError as exc:
                raise MalformedLine(n, str(exc)) from exc
            if rec.t < prev_t:
                raise NonMonotoneTimestamp(n, rec.t, prev_t)
            prev_t = rec.t
            records.append(rec)
    return records


def _interp_gaze(a: GazeSample, b: GazeSample, t: float) -> GazeSample:
    span = b.timestamp - a.timestamp
    w = 0.0 if span <= 0 else (t - a.timestamp) / span
    direction = (1.0 - w) * a.gaze_dir_F + w * b.gaze_dir_F
    n = np.linalg.norm(direction)
    if n < 1e-12:
        # Opposite directions cancelled; fall back to the nearer sample.
        direction = a.gaze_dir_F if w < 0.5 else b.gaze_dir_F
        n = 1.0
    nearer = a if w < 0.5 else b
    return GazeSample(
        timestamp=t,
        gaze_origin_F=(1.0 - w) * a.gaze_origin_F + w * b.gaze_origin_F,
        gaze_dir_F=direction / n,
        eyelid_opening=(1.0 - w) * a.eyelid_opening + w * b.eyelid_opening,
        pupil_diameter_mm=(1.0 - w) * a.pupil_diameter_mm + w * b.pupil_diameter_mm,
        blink=nearer.blink,
    )


def synchronize(
    gaze_stream: list[GazeSample],
    obstacle_stream: list[FrameRecord],
    max_skew_s: float = 0.1,
) -> list[FrameRecord]:
    """Attach gaze to each obstacle record by linear interpolation in time.

    Gaze directions are re-normalized after interpolation.  Records whose
    nearest gaze sample is farther than ``max_skew_s`` get no gaze.  Output
    timestamps are exactly the obstacle-stream timestamps.
    """
    gaze = sorted(gaze_stream, key=lambda g: g.timestamp)
    times = [g.timestamp for g in gaze]

    def resample(g: GazeSample, t: float) -> GazeSample:
        return GazeSample(
            timestamp=t,
            gaze_origin_F=g.gaze_origin_F,
            gaze_dir_F=g.gaze_dir_F,
            eyelid_opening=g.eyelid_opening,
            pupil_diameter_mm=g.pupil_diameter_mm,
            blink=g.blink,
        )

    out = []
    for rec in obstacle_stream:
        attached = None
        if gaze:
            i = bisect.bisect_left(times, rec.t)
            nearest = min(
                abs(times[j] - rec.t) for j in (i - 1, i) if 0 <= j < len(times)
            )
            if nearest <= max_skew_s:
                if i < len(gaze) and times[i] == rec.t:
                    attached = resample(gaze[i], rec.t)
                elif 0 < i < len(gaze):
                    attached = _interp_gaze(gaze[i - 1], gaze[i], rec.t)
                else:
                    # Before the first or after the last sample: clamp to the endpoint.
                    attached = resample(gaze[0] if i == 0 else gaze[-1], rec.t)
        out.append(FrameRecord(rec.t, rec.ego, rec.obstacles, attached))
    return out
