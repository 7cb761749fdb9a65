import math

import numpy as np
import pytest

from hazardvane.attention import AttentionLedger
from hazardvane.config import AppConfig
from hazardvane.perception import DangerAssessment, EgoState, ObstacleTrack
from hazardvane.vane import (
    ArrowState,
    WeathervaneState,
    animate_step,
    assess_all,
    color_map,
    symbol_for,
    target_configuration,
)

CFG = AppConfig()


def track(oid, pos, vel, cls="car", half=(0.9, 0.8, 0.7)) -> ObstacleTrack:
    return ObstacleTrack(oid, cls, np.array(pos, dtype=float), np.array(vel, dtype=float), np.array(half), 0.0)


def ego(speed=10.0) -> EgoState:
    return EgoState(speed, 0.0, 0.0)


class TestAssessAll:
    def test_moving_unseen_obstacle_is_eligible(self):
        # TTC 2 s: range 20 m, closing 5 + 5 = 10 m/s head-on.
        o = track("a", [20, 0, 0], [-5, 0, 0])
        (a,) = assess_all([o], ego(5.0), AttentionLedger(), now=0.0, cfg=CFG)
        assert a.eligible
        assert a.ttc == pytest.approx(2.0)
        assert a.dangerousness == pytest.approx(0.8)

    def test_parked_car_ineligible(self):
        o = track("a", [20, 0, 0], [0, 0, 0])
        (a,) = assess_all([o], ego(0.0), AttentionLedger(), now=0.0, cfg=CFG)
        assert a.stationary and not a.eligible

    def test_considered_obstacle_ineligible(self):
        from hazardvane.geometry import Ray

        o = track("a", [20, 0, 0], [0, 0, 0])
        ledger = AttentionLedger()
        ray = Ray(np.zeros(3), np.array([1.0, 0.0, 0.0]))
        for i in range(19):
            ledger.update(ray, [o], i / 60.0)
        (a,) = assess_all([o], ego(10.0), ledger, now=1.0, cfg=CFG)
        assert a.considered and not a.eligible


def assessment(oid, d, ttc=1.0, eligible=True) -> DangerAssessment:
    return DangerAssessment(oid, ttc, d, stationary=False, considered=False, eligible=eligible)


class TestTargetConfiguration:
    def test_filter_and_single_arrow(self):
        obstacles = [
            track("A", [20, 0, 0], [0, 0, 0]),
            track("B", [30, 5, 0], [0, 0, 0]),
            track("C", [40, -5, 0], [0, 0, 0]),
        ]
        assessments = [
            assessment("A", 0.8),
            DangerAssessment("B", 3.0, 0.7, stationary=True, considered=False, eligible=False),
            DangerAssessment("C", 5.0, 0.5, stationary=False, considered=True, eligible=False),
        ]
        vane = target_configuration(assessments, obstacles, CFG, timestamp=0.0)
        assert [a.obstacle_id for a in vane.arrows] == ["A"]
        assert vane.arrows[0].target_height == 1.0

    def test_empty(self):
        vane = target_configuration([], [], CFG, timestamp=0.0)
        assert vane.arrows == ()

    def test_rank_heights_and_truncation(self):
        obstacles = [track(c, [20, i - 2, 0], [0, 0, 0]) for i, c in enumerate("ABCDE")]
        assessments = [
            assessment("A", 0.9),
            assessment("B", 0.8),
            assessment("C", 0.7),
            assessment("D", 0.6),
            assessment("E", 0.5),
        ]
        vane = target_configuration(assessments, obstacles, CFG, timestamp=0.0)
        assert [a.obstacle_id for a in vane.arrows] == ["A", "B", "C", "D"]
        heights = [a.target_height for a in vane.arrows]
        assert heights == pytest.approx([1.0, 0.78, 0.56, 0.34])

    def test_tie_breaks_on_bearing_then_id(self):
        obstacles = [
            track("right", [20, -8, 0], [0, 0, 0]),
            track("ahead", [20, 0.5, 0], [0, 0, 0]),
        ]
        assessments = [assessment("right", 0.7), assessment("ahead", 0.7)]
        vane = target_configuration(assessments, obstacles, CFG, timestamp=0.0)
        assert [a.obstacle_id for a in vane.arrows] == ["ahead", "right"]

    def test_bearing_points_at_obstacle(self):
        o = track("A", [10, 10, 0], [0, 0, 0])
        vane = target_configuration([assessment("A", 0.5)], [o], CFG, timestamp=0.0)
        assert vane.arrows[0].target_bearing == pytest.approx(math.pi / 4)

    def test_symbols_and_colors_assigned(self):
        o = track("A", [20, 0, 0], [0, 0, 0], cls="pedestrian", half=(0.3, 0.3, 0.9))
        vane = target_configuration([assessment("A", 1.0)], [o], CFG, timestamp=0.0)
        assert vane.arrows[0].symbol == "A13"
        assert vane.arrows[0].color == color_map(1.0)


class TestColorMap:
    def test_endpoints(self):
        assert color_map(0.0) == (0.0, 200.0, 0.0)
        assert color_map(1.0) == (220.0, 0.0, 0.0)

    def test_stops(self):
        assert color_map(1 / 3) == pytest.approx((255.0, 215.0, 0.0))
        assert color_map(2 / 3) == pytest.approx((255.0, 140.0, 0.0))

    def test_midpoint_rounds_to_documented_value(self):
        r, g, b = color_map(0.5)
        assert (r, g, b) == pytest.approx((255.0, 177.5, 0.0))
        assert tuple(int(x + 0.5) for x in (r, g, b)) == (255, 178, 0)

    def test_continuity(self, rng):
        for _ in range(2000):
            d = rng.uniform(0, 1 - 1e-6)
            c0, c1 = color_map(d), color_map(d + 1e-6)
            assert max(abs(a - b) for a, b in zip(c0, c1)) < 1.0


class TestSymbols:
    @pytest.mark.parametrize(
        "cls,sign",
        [
            ("pedestrian", "A13"),
            ("car", "A14"),
            ("truck", "A14"),
            ("bicycle", "A21"),
            ("motorcycle", "A14"),
        ],
    )
    def test_mapping(self, cls, sign):
        assert symbol_for(cls) == sign

    def test_unknown_rejected(self):
        with pytest.raises(ValueError):
            symbol_for("unicycle")


def arrow(oid="a", cur_h=1.0, tgt_h=1.0, cur_b=0.0, tgt_b=0.0, d=0.5, hv=0.0, bv=0.0) -> ArrowState:
    return ArrowState(
        obstacle_id=oid,
        target_bearing=tgt_b,
        current_bearing=cur_b,
        bearing_velocity=bv,
        target_height=tgt_h,
        current_height=cur_h,
        height_velocity=hv,
        dangerousness=d,
        color=color_map(d),
        symbol="A14",
    )


def vane_of(*arrows, t=0.0) -> WeathervaneState:
    return WeathervaneState(tuple(arrows), CFG.pole_anchor_m, t)


class TestAnimateStep:
    def test_equilibrium_is_fixed_point(self):
        v = vane_of(arrow())
        out = animate_step(v, v, 1 / 60.0, cfg=CFG)
        a = out.arrows[0]
        assert a.current_height == pytest.approx(1.0, abs=1e-12)
        assert a.current_bearing == pytest.approx(0.0, abs=1e-12)

    def test_converges_within_two_seconds(self):
        cur = vane_of(arrow(cur_h=0.0, tgt_h=1.0, cur_b=-1.0, tgt_b=0.5))
        tgt = vane_of(arrow(cur_h=1.0, tgt_h=1.0, cur_b=0.5, tgt_b=0.5))
        state = cur
        for _ in range(120):
            state = animate_step(state, tgt, 1 / 60.0, cfg=CFG)
        a = state.arrows[0]
        assert abs(a.current_height - 1.0) < 0.01
        assert abs(a.current_bearing - 0.5) < 0.015

    def test_matches_closed_form_critically_damped(self):
        # x(t) = target + (x0 - target)(1 + w t) e^(-w t); offset 1 : at
        # t = 0.25 s the remaining offset is 3 e^-2 ~ 0.406006.
        omega = CFG.spring_omega
        state = vane_of(arrow(cur_h=1.0, tgt_h=0.0, d=0.5))
        tgt = vane_of(arrow(cur_h=0.0, tgt_h=0.0, d=0.5))
        x, steps = None, int(0.25 * 60)
        for _ in range(steps):
            state = animate_step(state, tgt, 1 / 60.0, allowed_ids={"a"}, cfg=CFG)
        x = state.arrows[0].current_height
        t = steps / 60.0
        closed = (1.0 + omega * t) * math.exp(-omega * t)
        assert closed == pytest.approx(0.406006, abs=1e-6)
        assert x == pytest.approx(closed, abs=1e-3)

    def test_matches_closed_form_over_two_seconds(self):
        omega = CFG.spring_omega
        state = vane_of(arrow(cur_h=1.0, tgt_h=0.0, d=0.5))
        tgt = vane_of(arrow(cur_h=0.0, tgt_h=0.0, d=0.5))
        for i in range(1, 121):
            state = animate_step(state, tgt, 1 / 60.0, allowed_ids={"a"}, cfg=CFG)
            t = i / 60.0
            closed = (1.0 + omega * t) * math.exp(-omega * t)
            if not state.arrows:
                break  # dropped once below the drop threshold
            assert state.arrows[0].current_height == pytest.approx(closed, abs=1e-3)

    def test_no_overshoot_for_constant_target(self):
        state = vane_of(arrow(cur_h=0.0, tgt_h=1.0))
        tgt = vane_of(arrow(cur_h=1.0, tgt_h=1.0))
        prev_sign = -1.0
        for _ in range(600):
            state = animate_step(state, tgt, 1 / 60.0, cfg=CFG)
            delta = state.arrows[0].current_height - 1.0
            if delta != 0.0:
                assert math.copysign(1.0, delta) == prev_sign

    def test_entering_arrow_rises_from_zero(self):
        tgt = vane_of(arrow(cur_h=1.0, tgt_h=1.0))
        out = animate_step(vane_of(), tgt, 1 / 60.0, cfg=CFG)
        a = out.arrows[0]
        assert 0.0 < a.current_height < 0.1
        assert a.current_bearing == a.target_bearing

    def test_leaving_arrow_shrinks_then_drops_when_still_allowed(self):
        state = vane_of(arrow(oid="x", cur_h=1.0, tgt_h=1.0))
        empty = vane_of()
        seen_shrinking = False
        for _ in range(240):
            state = animate_step(state, empty, 1 / 60.0, allowed_ids={"x"}, cfg=CFG)
            if state.arrows:
                seen_shrinking = True
                assert state.arrows[0].current_height > 0.0
            else:
                break
        assert seen_shrinking
        assert state.arrows == ()

    def test_disallowed_arrow_drops_immediately(self):
        state = vane_of(arrow(oid="x", cur_h=1.0, tgt_h=1.0))
        out = animate_step(state, vane_of(), 1 / 60.0, allowed_ids=set(), cfg=CFG)
        assert out.arrows == ()

    def test_bearing_takes_shortest_angular_path(self):
        # From +175 deg toward -175 deg: must cross the pi seam, not sweep 350 deg.
        cur = vane_of(arrow(cur_b=math.radians(175), tgt_b=math.radians(-175)))
        tgt = vane_of(arrow(cur_b=math.radians(-175), tgt_b=math.radians(-175)))
        state = cur
        for _ in range(10):
            state = animate_step(state, tgt, 1 / 60.0, cfg=CFG)
        b = state.arrows[0].current_bearing
        assert abs(b) > math.radians(170)

    def test_cap_respected_with_shrinking_arrows(self):
        current = vane_of(*[arrow(oid=f"o{i}", d=0.9 - i * 0.1) for i in range(4)])
        target = vane_of(*[arrow(oid=f"n{i}", d=0.95 - i * 0.1) for i in range(4)])
        out = animate_step(
            current, target, 1 / 60.0,
            allowed_ids={f"o{i}" for i in range(4)} | {f"n{i}" for i in range(4)},
            cfg=CFG,
        )
        assert len(out.arrows) <= CFG.max_arrows
        assert {f"n{i}" for i in range(4)} <= {a.obstacle_id for a in out.arrows}

    def test_dt_bounds(self):
        v = vane_of(arrow())
        with pytest.raises(ValueError):
            animate_step(v, v, 0.0)
        with pytest.raises(ValueError):
            animate_step(v, v, 0.2)
