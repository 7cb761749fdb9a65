"""FastAPI service: REST wrappers over the core pipeline plus the live
websocket session endpoint at ``/session``.

Each session runs its own asyncio tick loop; the loop is the sole mutator of
session state and clients only interact through queued controls.  Slow
clients are dropped once their outbound backlog exceeds 64 messages.
"""

from __future__ import annotations

import asyncio
import json
import socket
import uuid
from contextlib import asynccontextmanager
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect
from pydantic import ValidationError

from ..calibration import (
    GazeLaserSample,
    PointPairSet,
    register_icp,
    run_calibration_procedure,
)
from ..config import AppConfig
from ..geometry import OutOfImage, RigidTransform
from ..logio import record_to_obj
from ..sim import list_bundled_scenarios, load_scenario, resolve_scenario, run
from .models import (
    CalibrateRequest,
    CalibrateResponse,
    ControlMessage,
    ErrorMessage,
    HealthResponse,
    LoadMessage,
    ScenarioListResponse,
    SimulateRequest,
    SimulateResponse,
)
from .sessions import ControlChange, SessionRunner

MAX_CLIENT_BACKLOG = 64


class PortInUse(OSError):
    pass


class UnknownScenario(KeyError):
    pass


class _Subscriber:
    def __init__(self):
        self.queue: asyncio.Queue[str] = asyncio.Queue(maxsize=MAX_CLIENT_BACKLOG)
        self.dropped = False


class Session:
    def __init__(self, name: str, runner: SessionRunner):
        self.name = name
        self.runner = runner
        self.controls: asyncio.Queue[ControlChange] = asyncio.Queue()
        self.subscribers: set[_Subscriber] = set()
        self.task: asyncio.Task | None = None

    def broadcast(self, text: str) -> None:
        for sub in list(self.subscribers):
            try:
                sub.queue.put_nowait(text)
            except asyncio.QueueFull:
                sub.dropped = True
                self.subscribers.discard(sub)


class SessionManager:
    def __init__(self, cfg: AppConfig, scenario_dir: Path | None = None):
        self.cfg = cfg
        self.scenario_dir = scenario_dir
        self.sessions: dict[str, Session] = {}
        self.total_ticks = 0

    def load(self, name: str, scenario_name: str, seed: int | None) -> Session:
        try:
            path = resolve_scenario(scenario_name, self.scenario_dir)
        except FileNotFoundError as exc:
            raise UnknownScenario(scenario_name) from exc
        scenario = load_scenario(path)
        runner = SessionRunner(scenario, self.cfg, seed=seed)
        old = self.sessions.get(name)
        if old is not None and old.task is not None:
            old.task.cancel()
        session = Session(name, runner)
        if old is not None:
            session.subscribers = old.subscribers
        self.sessions[name] = session
        session.task = asyncio.get_running_loop().create_task(self._tick_loop(session))
        return session

    async def _tick_loop(self, session: Session) -> None:
        runner = session.runner
        dt = runner.scenario.dt
        while True:
            while not session.controls.empty():
                try:
                    runner.apply_control(session.controls.get_nowait())
                except (ValueError, OutOfImage):
                    pass  # invalid control (e.g. gaze pixel off-image): skip
            if runner.should_step():
                out = runner.step_once()
                self.total_ticks += 1
                session.broadcast(json.dumps(out.message))
                # Burn through queued single-steps without wall-clock pacing.
                await asyncio.sleep(dt if runner.mode == "run" else 0)
            else:
                await asyncio.sleep(min(dt, 0.02))

    def shutdown(self) -> None:
        for session in self.sessions.values():
            if session.task is not None:
                session.task.cancel()


def create_app(
    cfg: AppConfig | None = None, scenario_dir: Path | None = None
) -> FastAPI:
    cfg = cfg or AppConfig()
    manager = SessionManager(cfg, scenario_dir)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        manager.shutdown()

    app = FastAPI(title="hazardvane", version="0.1.0", lifespan=lifespan)
    app.state.manager = manager

    @app.get("/healthz", response_model=HealthResponse)
    def healthz():
        return HealthResponse(tick=manager.total_ticks)

    @app.get("/scenarios", response_model=ScenarioListResponse)
    def scenarios():
        names = set(list_bundled_scenarios())
        if manager.scenario_dir is not None:
            names.update(p.stem for p in Path(manager.scenario_dir).glob("*.json"))
        return ScenarioListResponse(scenarios=sorted(names))

    @app.post("/calibrate", response_model=CalibrateResponse)
    def calibrate(req: CalibrateRequest):
        try:
            samples = [
                GazeLaserSample(
                    np.array(s.gaze_origin),
                    np.array(s.gaze_dir),
                    s.laser_distance_m,
                    s.id,
                )
                for s in req.samples
            ]
            pose = RigidTransform(
                np.array(req.target_pose_m.rotation),
                np.array(req.target_pose_m.translation),
            )
            points = {k: np.array(v) for k, v in req.target_points.items()}
            result = run_calibration_procedure(samples, pose, points)
            if req.method == "icp":
                pairs_f = np.array(
                    [
                        samples[i].gaze_origin_F
                        + samples[i].laser_distance * samples[i].gaze_dir_F
                        for i in range(len(samples))
                    ]
                )
                pairs_m = np.array([pose.apply(points[s.target_point_id]) for s in samples])
                result = register_icp(pairs_f, pairs_m, init=result.transform_F_to_M)
        except (ValueError, KeyError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        t = result.transform_F_to_M
        return CalibrateResponse(
            rotation=t.rotation.tolist(),
            translation=t.translation.tolist(),
            rms=result.rms_residual,
            residuals=[float(r) for r in result.per_point_residuals],
            iterations=result.iterations,
            converged=result.converged,
        )

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest):
        try:
            path = resolve_scenario(req.scenario, manager.scenario_dir)
        except FileNotFoundError as exc:
            raise HTTPException(
                status_code=404, detail=f"UnknownScenario: {req.scenario}"
            ) from exc
        scenario = load_scenario(path)
        seed = scenario.seed if req.seed is None else req.seed
        noisy, truth = run(scenario, seed=seed)
        return SimulateResponse(
            scenario=scenario.name,
            seed=seed,
            records=[record_to_obj(r) for r in noisy],
            truth=[record_to_obj(r) for r in truth] if req.include_truth else None,
        )

    @app.websocket("/session")
    async def session_socket(ws: WebSocket, name: str = Query(default="")):
        await ws.accept()
        session_name = name or uuid.uuid4().hex
        sub = _Subscriber()
        session = manager.sessions.get(session_name)
        if session is not None:
            session.subscribers.add(sub)

        async def pump():
            while not sub.dropped:
                try:
                    text = await asyncio.wait_for(sub.queue.get(), timeout=0.25)
                except asyncio.TimeoutError:
                    continue
                await ws.send_text(text)
            try:
                await ws.close(code=1013)  # backlog overflow: try again later
            except RuntimeError:
                pass

        sender = asyncio.get_running_loop().create_task(pump())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(ErrorMessage(error="BadMessage", detail="invalid JSON").model_dump_json())
                    continue
                msg_type = obj.get("type")
                try:
                    if msg_type == "load":
                        load = LoadMessage.model_validate(obj)
                        session = manager.load(session_name, load.scenario, load.seed)
                        session.subscribers.add(sub)
                    elif msg_type == "control":
                        control = ControlMessage.model_validate(obj)
                        if session is None:
                            await ws.send_text(
                                ErrorMessage(error="NoSession", detail="send a load message first").model_dump_json()
                            )
                            continue
                        if control.gaze_px is not None:
                            cam = session.runner.scenario.scene_camera
                            u, v = control.gaze_px
                            if not (0 <= u < cam.width and 0 <= v < cam.height):
                                await ws.send_text(
                                    ErrorMessage(
                                        error="OutOfImage",
                                        detail=f"gaze_px ({u}, {v}) outside {cam.width}x{cam.height}",
                                    ).model_dump_json()
                                )
                                continue
                        change = ControlChange(
                            set_gaze_px="gaze_px" in control.model_fields_set,
                            gaze_px=control.gaze_px,
                            set_ego_speed="ego_speed" in control.model_fields_set,
                            ego_speed=control.ego_speed,
                            mode=control.mode,
                        )
                        await session.controls.put(change)
                    else:
                        await ws.send_text(
                            ErrorMessage(error="BadMessage", detail=f"unknown type {msg_type!r}").model_dump_json()
                        )
                except UnknownScenario as exc:
                    await ws.send_text(
                        ErrorMessage(error="UnknownScenario", detail=str(exc.args[0])).model_dump_json()
                    )
                except (ValidationError, OutOfImage, ValueError) as exc:
                    await ws.send_text(
                        ErrorMessage(error="BadMessage", detail=str(exc)).model_dump_json()
                    )
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            if session is not None:
                session.subscribers.discard(sub)

    return app


def check_port_free(host: str, port: int) -> None:
    """Raise PortInUse before handing the socket to uvicorn."""
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as s:
        s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            s.bind((host, port))
        except OSError as exc:
            raise PortInUse(f"port {port} on {host} is already in use") from exc


def serve(
    host: str = "127.0.0.1",
    port: int = 8732,
    cfg: AppConfig | None = None,
    scenario_dir: Path | None = None,
) -> None:
    """Run the service until interrupted."""
    import uvicorn

    check_port_free(host, port)
    app = create_app(cfg, scenario_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
