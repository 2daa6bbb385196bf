// Wire protocol shared with the teleop server: JSON text frames over /ws.

export type Vec3 = [number, number, number];

export interface FrameMetrics {
  kappa_max: number;
  head_speed: number;
  B_at_head: number;
  rt_factor: number;
}

export interface FrameMessage {
  type: "frame";
  t: number;
  nodes: Vec3[];
  magnet: { pos: Vec3; axis: Vec3 };
  cargo: { pos: Vec3; vel: Vec3 }[];
  metrics: FrameMetrics;
  paused: boolean;
  recording: boolean;
}

export interface SceneMessage {
  type: "scene";
  id: string;
  sdf_mesh: [number, number][][];
  body_radius: number[];
}

export interface RoleMessage {
  type: "role";
  controlling: boolean;
}

export interface AckMessage {
  type: "ack";
  seq: number;
}

export interface ErrMessage {
  type: "err";
  seq: number;
  msg: string;
}

export interface FatalMessage {
  type: "fatal";
  msg: string;
}

export type ServerMessage =
  | FrameMessage
  | SceneMessage
  | RoleMessage
  | AckMessage
  | ErrMessage
  | FatalMessage;

export interface SetMagnetCommand {
  type: "set_magnet";
  seq: number;
  pos: Vec3;
  axis: Vec3;
}

export type SimpleCommand = { type: "pause" | "resume" | "reset"; seq: number };
export type RecordCommand = { type: "record"; seq: number; on: boolean };
export type ClientCommand = SetMagnetCommand | SimpleCommand | RecordCommand;

const isVec3 = (v: unknown): v is Vec3 =>
  Array.isArray(v) && v.length === 3 && v.every((x) => typeof x === "number" && isFinite(x));

/** Parse a server message; returns null (never throws) on malformed input so a
 * bad frame can be skipped without dropping the connection. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null || !("type" in msg)) return null;
  const m = msg as Record<string, unknown>;
  switch (m.type) {
    case "frame": {
      if (!Array.isArray(m.nodes) || !m.nodes.every(isVec3)) return null;
      const magnet = m.magnet as Record<string, unknown> | undefined;
      if (!magnet || !isVec3(magnet.pos) || !isVec3(magnet.axis)) return null;
      if (typeof m.t !== "number") return null;
      return m as unknown as FrameMessage;
    }
    case "scene":
      if (typeof m.id !== "string" || !Array.isArray(m.sdf_mesh)) return null;
      return m as unknown as SceneMessage;
    case "role":
      return typeof m.controlling === "boolean" ? (m as unknown as RoleMessage) : null;
    case "ack":
      return typeof m.seq === "number" ? (m as unknown as AckMessage) : null;
    case "err":
      return typeof m.seq === "number" && typeof m.msg === "string"
        ? (m as unknown as ErrMessage)
        : null;
    case "fatal":
      return typeof m.msg === "string" ? (m as unknown as FatalMessage) : null;
    default:
      return null;
  }
}

export function encodeCommand(cmd: ClientCommand): string {
  return JSON.stringify(cmd);
}
