"""Ranked hazard arrows on a virtual pole: filtering, stacking and animation.

Eligible hazards (moving, not currently considered by the driver, danger > 0)
are sorted by danger and rendered as at most ``max_arrows`` arrows whose
height encodes rank, color encodes danger and symbol encodes the obstacle
class via highway-code sign ids.  Arrow motion is smoothed by a critically
damped spring per channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .attention import AttentionLedger
from .config import AppConfig
from .geometry import bearing_elevation
from .perception import (
    DangerAssessment,
    EgoState,
    ObstacleTrack,
    dangerousness,
    is_stationary,
    ttc,
)

# Danger color gradient stops (position, RGB). Interpolation is linear and the
# returned channels are floats; round only at serialization time.
COLOR_STOPS = (
    (0.0, (0.0, 200.0, 0.0)),
    (1.0 / 3.0, (255.0, 215.0, 0.0)),
    (2.0 / 3.0, (255.0, 140.0, 0.0)),
    (1.0, (220.0, 0.0, 0.0)),
)

# French highway-code warning signs per obstacle class.
SYMBOLS = {
    "pedestrian": "A13",
    "car": "A14",
    "truck": "A14",
    "bicycle": "A21",
    "motorcycle": "A14",
}


@dataclass(frozen=True)
class ArrowState:
    obstacle_id: str
    target_bearing: float
    current_bearing: float
    bearing_velocity: float
    target_height: float
    current_height: float
    height_velocity: float
    dangerousness: float
    color: tuple[float, float, float]
    symbol: str
    elevation: float = 0.0


@dataclass(frozen=True)
class WeathervaneState:
    arrows: tuple[ArrowState, ...]
    pole_anchor_M: tuple[float, float, float]
    timestamp: float

    @staticmethod
    def empty(cfg: AppConfig, timestamp: float = 0.0) -> "WeathervaneState":
        return WeathervaneState((), cfg.pole_anchor_m, timestamp)


def symbol_for(cls: str) -> str:
    if cls not in SYMBOLS:
        raise ValueError(f"unknown obstacle class {cls!r}")
    return SYMBOLS[cls]


def color_map(d: float) -> tuple[float, float, float]:
    """Piecewise-linear green/yellow/orange/red gradient over [0, 1]."""
    d = min(1.0, max(0.0, d))
    for (d0, c0), (d1, c1) in zip(COLOR_STOPS, COLOR_STOPS[1:]):
        if d <= d1:
            s = (d - d0) / (d1 - d0)
            return tuple(a + s * (b - a) for a, b in zip(c0, c1))
    return COLOR_STOPS[-1][1]


def assess_all(
    obstacles: list[ObstacleTrack],
    ego: EgoState,
    ledger: AttentionLedger,
    now: float,
    cfg: AppConfig = AppConfig(),
) -> list[DangerAssessment]:
    """Score every obstacle: stationarity, consideration, TTC, danger, eligibility."""
    out = []
    for o in obstacles:
        stationary = is_stationary(o, cfg.stationary_speed_mps)
        considered = ledger.considered(o.id, now)
        t = ttc(ego, o, cfg.closing_eps_mps)
        d = dangerousness(t, cfg.ttc_max_s)
        eligible = (not stationary) and (not considered) and d > 0.0
        out.append(DangerAssessment(o.id, t, d, stationary, considered, eligible))
    return out


def _rank_key(assessment: DangerAssessment, bearing: float):
    return (-assessment.dangerousness, abs(bearing), assessment.obstacle_id)


def target_configuration(
    assessments: list[DangerAssessment],
    obstacles: list[ObstacleTrack],
    cfg: AppConfig = AppConfig(),
    timestamp: float = 0.0,
) -> WeathervaneState:
    """Vane the arrows should converge to: eligible hazards ranked by danger.

    Ties break on smaller absolute bearing, then id.  Rank i gets target
    height 1 - i * height_step; arrows start at their targets (the caller
    animates toward them).
    """
    by_id = {o.id: o for o in obstacles}
    rows = []
    for a in assessments:
        if not a.eligible:
            continue
        o = by_id[a.obstacle_id]
        bearing, elevation = bearing_elevation(o.position_M)
        rows.append((a, bearing, elevation, o))
    rows.sort(key=lambda row: _rank_key(row[0], row[1]))
    rows = rows[: cfg.max_arrows]
    arrows = []
    for rank, (a, bearing, elevation, o) in enumerate(rows):
        height = 1.0 - rank * cfg.height_step
        arrows.append(
            ArrowState(
                obstacle_id=a.obstacle_id,
                target_bearing=bearing,
                current_bearing=bearing,
                bearing_velocity=0.0,
                target_height=height,
                current_height=height,
                height_velocity=0.0,
                dangerousness=a.dangerousness,
                color=color_map(a.dangerousness),
                symbol=symbol_for(o.cls),
                elevation=elevation,
            )
        )
    return WeathervaneState(tuple(arrows), cfg.pole_anchor_m, timestamp)


def _spring_step(x: float, v: float, target: float, omega: float, dt: float, substep: float):
    """Critically damped spring, semi-implicit Euler with fixed substeps."""
    n = max(1, math.ceil(dt / substep))
    h = dt / n
    for _ in range(n):
        a = omega * omega * (target - x) - 2.0 * omega * v
        v += a * h
        x += v * h
    return x, v


def _wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


def animate_step(
    current: WeathervaneState,
    target: WeathervaneState,
    dt: float,
    allowed_ids: set[str] | None = None,
    cfg: AppConfig = AppConfig(),
) -> WeathervaneState:
    """Advance the animated vane one tick toward the target configuration.

    Entering arrows rise from height 0.  Arrows that left the target but are
    still in ``allowed_ids`` shrink to 0 before dropping; arrows whose hazard
    is no longer displayable at all (suppressed, stationary, gone) are removed
    immediately so the display never contradicts the filter rules.
    """
    if not (0.0 < dt <= 0.1):
        raise ValueError(f"dt must be in (0, 0.1], got {dt}")
    omega, sub = cfg.spring_omega, cfg.spring_substep_s
    current_by_id = {a.obstacle_id: a for a in current.arrows}
    out = []

    for tgt in target.arrows:
        cur = current_by_id.pop(tgt.obstacle_id, None)
        if cur is None:
            # New hazard: rise from the pole base, aimed straight at its target.
            h, hv = _spring_step(0.0, 0.0, tgt.target_height, omega, dt, sub)
            out.append(
                replace(
                    tgt,
                    current_bearing=tgt.target_bearing,
                    bearing_velocity=0.0,
                    current_height=h,
                    height_velocity=hv,
                )
            )
        else:
            err = _wrap_angle(tgt.target_bearing - cur.current_bearing)
            b, bv = _spring_step(
                tgt.target_bearing - err, cur.bearing_velocity, tgt.target_bearing, omega, dt, sub
            )
            h, hv = _spring_step(
                cur.current_height, cur.height_velocity, tgt.target_height, omega, dt, sub
            )
            out.append(
                replace(
                    tgt,
                    current_bearing=_wrap_angle(b),
                    bearing_velocity=bv,
                    current_height=h,
                    height_velocity=hv,
                )
            )

    # Arrows no longer in the target: shrink out if still displayable.
    leaving = []
    for cur in current_by_id.values():
        if allowed_ids is not None and cur.obstacle_id not in allowed_ids:
            continue
        h, hv = _spring_step(cur.current_height, cur.height_velocity, 0.0, omega, dt, sub)
        if h <= cfg.arrow_drop_height:
            continue
        leaving.append(replace(cur, target_height=0.0, current_height=h, height_velocity=hv))

    out.extend(leaving)
    out.sort(key=lambda a: (-a.dangerousness, abs(a.target_bearing), a.obstacle_id))
    if len(out) > cfg.max_arrows:
        # Prefer evicting the shrink-out arrows (they are already on the way down).
        keep_ids = {a.obstacle_id for a in target.arrows}
        overflow = len(out) - cfg.max_arrows
        for a in reversed(out):
            if overflow == 0:
                break
            if a.obstacle_id not in keep_ids:
                out.remove(a)
                overflow -= 1
        out = out[: cfg.max_arrows]
    return WeathervaneState(tuple(out), target.pole_anchor_M, target.timestamp)
