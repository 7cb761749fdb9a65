// Wire types for the /session websocket. The cockpit renders exactly what
// the server sends; no hazard logic lives on this side.

export interface VaneArrow {
  id: string;
  bearing: number; // rad, positive left
  height: number; // [0, 1] along the pole
  color: [number, number, number];
  symbol: string; // highway-code sign id
  danger: number; // [0, 1]
}

export type Primitive =
  | { kind: "box2d"; min: [number, number]; max: [number, number]; color: number[]; tag: string }
  | { kind: "line2d"; a: [number, number]; b: [number, number]; color: number[]; tag: string }
  | { kind: "circle2d"; center: [number, number]; radius: number; color: number[]; tag: string };

export interface StateMessage {
  type: "state";
  t: number;
  tick: number;
  mode: string;
  vane: VaneArrow[];
  bird: Primitive[];
  scene: Primitive[];
  considered: string[];
}

export interface ErrorMessage {
  type: "error";
  error: string;
  detail: string;
}

export type ServerMessage = StateMessage | ErrorMessage;

export type Mode = "run" | "pause" | "step";

export interface ControlMessage {
  type: "control";
  gaze_px?: [number, number] | null;
  ego_speed?: number | null;
  mode?: Mode;
}

export interface LoadMessage {
  type: "load";
  scenario: string;
  seed?: number | null;
}

export type ClientMessage = ControlMessage | LoadMessage;

export function parseServerMessage(raw: string): ServerMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const msg = obj as Record<string, unknown>;
  if (msg.type === "state" && Array.isArray(msg.vane) && typeof msg.t === "number") {
    return msg as unknown as StateMessage;
  }
  if (msg.type === "error" && typeof msg.error === "string") {
    return msg as unknown as ErrorMessage;
  }
  return null;
}
