import {
  ClientMessage,
  ErrorMessage,
  Mode,
  ServerMessage,
  StateMessage,
} from "./protocol";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface ControlSink {
  send(msg: ClientMessage): void;
}

const GAZE_SEND_INTERVAL_MS = 1000 / 30;

/**
 * All cockpit state: the latest server message (latest-wins; the render loop
 * samples it at display refresh), connection status, and the local control
 * state. Gaze updates are throttled to <= 30 Hz; call flush() regularly
 * (e.g. from the render loop) to emit the trailing pointer position.
 */
export class CockpitViewModel {
  latest: StateMessage | null = null;
  lastError: ErrorMessage | null = null;
  status: ConnectionStatus = "closed";
  scenario: string | null = null;

  // Local control state (what the user is doing, not what the server says).
  gazePx: [number, number] | null = null;
  speedOverride: number | null = null;
  mode: Mode = "run";

  /** Optional tap for every state message (used by tests and recorders). */
  onState: ((msg: StateMessage) => void) | null = null;

  private lastGazeSentAt = -Infinity;
  private pendingGaze: [number, number] | null = null;

  constructor(
    private sink: ControlSink,
    private now: () => number = () => Date.now(),
  ) {}

  handleMessage(msg: ServerMessage): void {
    if (msg.type === "state") {
      this.latest = msg;
      if (this.onState) this.onState(msg);
    } else {
      this.lastError = msg;
    }
  }

  handleStatus(status: ConnectionStatus): void {
    // On disconnect the last state stays on screen, frozen: the cockpit has
    // no model of its own to keep animating.
    this.status = status;
  }

  load(scenario: string, seed: number | null = null): void {
    this.scenario = scenario;
    this.lastError = null;
    this.sink.send({ type: "load", scenario, seed });
  }

  /** Pointer moved over the scene panel; px is in scene-camera pixels. */
  pointGaze(px: [number, number]): void {
    this.gazePx = px;
    const elapsed = this.now() - this.lastGazeSentAt;
    if (elapsed >= GAZE_SEND_INTERVAL_MS) {
      this.lastGazeSentAt = this.now();
      this.pendingGaze = null;
      this.sink.send({ type: "control", gaze_px: px });
    } else {
      this.pendingGaze = px;
    }
  }

  /** Emit the trailing throttled gaze position, if due. */
  flush(): void {
    if (this.pendingGaze === null) return;
    if (this.now() - this.lastGazeSentAt >= GAZE_SEND_INTERVAL_MS) {
      this.lastGazeSentAt = this.now();
      this.sink.send({ type: "control", gaze_px: this.pendingGaze });
      this.pendingGaze = null;
    }
  }

  /** Pointer left the scene panel: release the gaze override immediately. */
  clearGaze(): void {
    this.gazePx = null;
    this.pendingGaze = null;
    this.sink.send({ type: "control", gaze_px: null });
  }

  setSpeed(speed: number | null): void {
    this.speedOverride = speed;
    this.sink.send({ type: "control", ego_speed: speed });
  }

  setMode(mode: Mode): void {
    this.mode = mode === "step" ? "pause" : mode;
    this.sink.send({ type: "control", mode });
  }

  step(): void {
    this.setMode("step");
  }
}
