"""Acceptance gate: one test per release criterion, each printing a
PASS/FAIL line.  Run with ``pytest tests/test_acceptance.py -s``."""

import contextlib
import hashlib
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from hazardvane.calibration import (
    PointPairSet,
    monte_carlo_study,
    register_icp,
    register_kabsch,
)
from hazardvane.cli import main as cli_main
from hazardvane.config import AppConfig
from hazardvane.geometry import (
    RigidTransform,
    rotation_from_axis_angle,
    rotation_geodesic_error,
)
from hazardvane.perception import EgoState, ObstacleTrack, dangerousness, ttc
from hazardvane.pipeline import replay_records
from hazardvane.service.sessions import SessionRunner
from hazardvane.sim import list_bundled_scenarios, load_scenario, resolve_scenario, run
from hazardvane.vane import ArrowState, WeathervaneState, animate_step

from conftest import random_transform

CFG = AppConfig()


@contextlib.contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE FAIL  {name}")
        raise
    print(f"ACCEPTANCE PASS  {name}")


def test_calibration_exact_recovery():
    with criterion("calibration exact recovery (100 trials, <1e-9, <1s)"):
        rng = np.random.default_rng(2024)
        start = time.perf_counter()
        for _ in range(100):
            truth = random_transform(rng)
            pf = rng.uniform(-1.0, 1.0, (10, 3))
            pm = pf @ truth.rotation.T + truth.translation
            est = register_kabsch(
                PointPairSet(pf, pm, tuple(str(i) for i in range(10)))
            ).transform_F_to_M
            assert rotation_geodesic_error(est.rotation, truth.rotation) < 1e-9
            assert np.linalg.norm(est.translation - truth.translation) < 1e-9
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"took {elapsed:.3f}s"


def test_calibration_noise_behavior():
    with criterion("calibration noise behavior (median non-increasing 4->8->16, <30s)"):
        start = time.perf_counter()
        truth = RigidTransform(
            rotation_from_axis_angle([0.05, -0.02, 1.0], math.pi * 0.98),
            np.array([0.7, 0.15, 1.15]),
        )
        target_pose = RigidTransform(
            np.array([[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]),
            np.array([2.5, 0.0, 1.0]),
        )
        study = monte_carlo_study(
            truth,
            target_pose,
            sample_counts=[4, 8, 16],
            trials=200,
            gaze_sigma_rad=np.deg2rad(0.5),
            distance_sigma_m=0.01,
            seed=77,
        )
        medians = [study[n]["rotation_rad_p50"] for n in (4, 8, 16)]
        print(f"    medians (rad): {medians}")
        assert medians[0] >= medians[1] >= medians[2] > 0.0
        # Errors vanish with the noise.
        for scale, bound in ((0.1, None), (0.0, 1e-9)):
            shrunk = monte_carlo_study(
                truth,
                target_pose,
                sample_counts=[8],
                trials=50,
                gaze_sigma_rad=np.deg2rad(0.5) * scale,
                distance_sigma_m=0.01 * scale,
                seed=78,
            )[8]["rotation_rad_p50"]
            if bound is None:
                assert shrunk < medians[1]
                prev = shrunk
            else:
                assert shrunk < bound < prev
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, f"took {elapsed:.1f}s"


def test_icp_kabsch_equivalence():
    with criterion("ICP/Kabsch equivalence (50 clouds, 1e-6)"):
        rng = np.random.default_rng(31)
        for _ in range(50):
            truth = random_transform(rng, trans_scale=0.5)
            pf = rng.uniform(-1.0, 1.0, (16, 3))
            pm = pf @ truth.rotation.T + truth.translation
            init = RigidTransform(
                rotation_from_axis_angle(rng.normal(size=3), np.deg2rad(rng.uniform(0, 10)))
                @ truth.rotation,
                truth.translation + rng.normal(0, 0.05, 3),
            )
            icp = register_icp(pf, pm[rng.permutation(16)], init=init).transform_F_to_M
            kab = register_kabsch(
                PointPairSet(pf, pm, tuple(str(i) for i in range(16)))
            ).transform_F_to_M
            assert rotation_geodesic_error(icp.rotation, kab.rotation) < 1e-6
            assert np.linalg.norm(icp.translation - kab.translation) < 1e-6


def test_ttc_oracle():
    with criterion("TTC vs kinematic integrator (100 cases, 1e-9; receding -> inf)"):
        rng = np.random.default_rng(55)
        for _ in range(100):
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            r0 = rng.uniform(5.0, 80.0)
            closing = rng.uniform(0.5, 25.0)
            ego_speed = rng.uniform(0.0, 15.0)
            pos = r0 * direction
            vel = np.array([ego_speed, 0.0, 0.0]) - closing * direction
            o = ObstacleTrack("o", "car", pos, vel, np.array([1.0, 1.0, 1.0]), 0.0)
            got = ttc(EgoState(ego_speed, 0.0, 0.0), o)

            v_rel = vel - np.array([ego_speed, 0.0, 0.0])

            def range_at(t):
                return float(np.linalg.norm(pos + v_rel * t))

            dt, t = 1e-3, 0.0
            while range_at(t + dt) < range_at(t):
                t += dt
            lo, hi = max(0.0, t - dt), t + dt
            for _ in range(200):
                m1, m2 = lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0
                if range_at(m1) < range_at(m2):
                    hi = m2
                else:
                    lo = m1
            assert got == pytest.approx(0.5 * (lo + hi), abs=1e-9)

        for _ in range(50):
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            pos = rng.uniform(5.0, 80.0) * direction
            vel = np.array([0.0, 0.0, 0.0]) + rng.uniform(0.2, 20.0) * direction
            o = ObstacleTrack("o", "car", pos, vel, np.array([1.0, 1.0, 1.0]), 0.0)
            t = ttc(EgoState(0.0, 0.0, 0.0), o)
            assert math.isinf(t)
            assert dangerousness(t) == 0.0


def test_metaphor_invariant_suite():
    with criterion("metaphor invariants across all bundled scenarios"):
        for name in list_bundled_scenarios():
            sc = load_scenario(resolve_scenario(name))
            noisy, _ = run(sc)
            results = replay_records(noisy, sc.calibration_F_to_M, CFG)
            for r in results:
                flags = {a.obstacle_id: a for a in r.assessments}
                considered = set(r.considered_ids)
                ds = [a.dangerousness for a in r.vane.arrows]
                assert len(r.vane.arrows) <= CFG.max_arrows, name
                assert all(ds[i] >= ds[i + 1] for i in range(len(ds) - 1)), name
                for arrow in r.vane.arrows:
                    a = flags[arrow.obstacle_id]
                    assert not a.stationary, f"{name}: stationary {arrow.obstacle_id} displayed"
                    assert arrow.obstacle_id not in considered, (
                        f"{name}: considered {arrow.obstacle_id} displayed"
                    )
            if name == "multi-hazard":
                for r in results:
                    eligible = [a for a in r.assessments if a.eligible]
                    if not eligible:
                        continue
                    top = min(eligible, key=lambda a: a.ttc)
                    assert r.vane.arrows, "eligible hazards but empty vane"
                    assert r.vane.arrows[0].obstacle_id == top.obstacle_id


def test_animation_oracle():
    with criterion("animation matches closed form (1e-3 over 2s at 60 Hz, no overshoot)"):
        omega = CFG.spring_omega

        def mk(cur_h, tgt_h):
            a = ArrowState(
                obstacle_id="a",
                target_bearing=0.0,
                current_bearing=0.0,
                bearing_velocity=0.0,
                target_height=tgt_h,
                current_height=cur_h,
                height_velocity=0.0,
                dangerousness=0.5,
                color=(0.0, 200.0, 0.0),
                symbol="A14",
            )
            return WeathervaneState((a,), CFG.pole_anchor_m, 0.0)

        # Decay toward 0 from offset 1, against x(t) = (1 + w t) e^{-w t}.
        state, tgt = mk(1.0, 0.0), mk(0.0, 0.0)
        for i in range(1, 121):
            state = animate_step(state, tgt, 1 / 60.0, allowed_ids={"a"}, cfg=CFG)
            t = i / 60.0
            closed = (1.0 + omega * t) * math.exp(-omega * t)
            if not state.arrows:
                assert closed <= CFG.arrow_drop_height + 1e-3
                break
            assert state.arrows[0].current_height == pytest.approx(closed, abs=1e-3)

        # Rise toward 1: never overshoots a constant target.
        state, tgt = mk(0.0, 1.0), mk(1.0, 1.0)
        for i in range(1, 121):
            state = animate_step(state, tgt, 1 / 60.0, cfg=CFG)
            t = i / 60.0
            closed = 1.0 - (1.0 + omega * t) * math.exp(-omega * t)
            assert state.arrows[0].current_height == pytest.approx(closed, abs=1e-3)
            assert state.arrows[0].current_height <= 1.0 + 1e-12


def test_end_to_end_determinism(tmp_path, capsys):
    with criterion("end-to-end determinism (simulate+replay twice, seed 42, <10s)"):
        start = time.perf_counter()
        calib = tmp_path / "calib.json"
        calib.write_text(
            json.dumps(
                {
                    "rotation": [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]],
                    "translation": [0.7, 0.15, 1.15],
                }
            )
        )
        digests = []
        for tag in ("one", "two"):
            base = tmp_path / tag
            base.mkdir()
            log = base / "run.jsonl"
            code = cli_main(
                [
                    "simulate",
                    "--scenario",
                    "crossing-pedestrian",
                    "--seed",
                    "42",
                    "--out",
                    str(log),
                ]
            )
            assert code == 0
            rdir = base / "frames"
            code = cli_main(
                [
                    "replay",
                    "--log",
                    str(log),
                    "--calib",
                    str(calib),
                    "--render",
                    str(rdir),
                    "--metrics",
                    str(base / "metrics.json"),
                    "--scenario",
                    "crossing-pedestrian",
                ]
            )
            assert code == 0
            digest = hashlib.sha256()
            for p in [log, base / "run.truth.jsonl", base / "metrics.json"]:
                digest.update(p.read_bytes())
            ppms = sorted(rdir.glob("*.ppm"))
            assert len(ppms) == 2 * 200  # every frame, both views
            for p in sorted(rdir.iterdir()):
                digest.update(p.name.encode())
                digest.update(p.read_bytes())
            digests.append(digest.hexdigest())
        capsys.readouterr()  # swallow CLI stdout
        assert digests[0] == digests[1]
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"took {elapsed:.2f}s"


def test_service_offline_equivalence():
    with criterion("service/offline equivalence (tick-for-tick on crossing-pedestrian)"):
        sc = load_scenario(resolve_scenario("crossing-pedestrian"))
        runner = SessionRunner(sc, CFG)
        session_msgs = runner.run_headless()

        noisy, _ = run(sc)
        results = replay_records(noisy, sc.calibration_F_to_M, CFG)
        assert len(session_msgs) == len(results) == sc.num_ticks
        for msg, ref in zip(session_msgs, results):
            assert msg["t"] == ref.t
            assert msg["considered"] == ref.considered_ids
            assert len(msg["vane"]) == len(ref.vane.arrows)
            for got, exp in zip(msg["vane"], ref.vane.arrows):
                assert got["id"] == exp.obstacle_id
                assert got["bearing"] == exp.current_bearing
                assert got["height"] == exp.current_height
                assert got["danger"] == exp.dangerousness
                assert got["symbol"] == exp.symbol
