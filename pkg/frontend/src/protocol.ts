/**
 * Wire protocol envelopes shared with the supervision hub.
 *
 * Over WebSocket each envelope travels as one JSON text message; over raw
 * TCP the same JSON is framed with a 4-byte big-endian length prefix.
 */

export const PROTOCOL_VERSION = 1;

export const KIND_STATE_UPDATE = "StateUpdate";
export const KIND_COMMAND_REQUEST = "CommandRequest";
export const KIND_COMMAND_ACK = "CommandAck";
export const KIND_CONTROL_GRANT = "ControlGrant";
export const KIND_CONTROL_DENY = "ControlDeny";
export const KIND_DESTINATION_LIST = "DestinationList";
export const KIND_TELEOP = "Teleop";

export interface WireMessage {
  version: number;
  kind: string;
  vehicle_id: string;
  sender: string;
  sequence: number;
  payload: Record<string, unknown>;
}

export interface Pose {
  x: number;
  y: number;
  heading: number;
  speed: number;
  steering: number;
}

export interface ZonePayload {
  shape: string;
  lookahead_m: number;
  clear_outline: [number, number][];
  focus_outline: [number, number][];
}

export interface CameraThumb {
  width: number;
  height: number;
  gray8_b64: string;
}

/** Telemetry body of a StateUpdate; the four capitalized attribute names
 *  are the operator-facing vocabulary and arrive verbatim. */
export interface StateSnapshot {
  "Sensor Validity": string;
  "Mission State": string;
  "Driving Mode": string;
  "Cage State": string;
  cage_mode: string;
  tick: number;
  pose: Pose;
  zone: ZonePayload;
  lidar: [number, number][];
  cameras: Record<string, CameraThumb>;
  camera_validity: Record<string, string>;
  actuator: { kind: string; value: number };
}

export interface Destination {
  id: string;
  name: string;
  x: number;
  y: number;
  status: string; // Available | Active | Reached
}

export const SUMMARY_ATTRIBUTES = [
  "Sensor Validity",
  "Mission State",
  "Driving Mode",
  "Cage State",
] as const;

export const DRIVING_MODES = [
  "Fully Autonomous Driving",
  "Limited Autonomous Driving",
  "Remote Manual Driving",
  "In-Place Manual Driving",
  "Emergency Stop",
] as const;

export function makeMessage(
  kind: string,
  vehicleId: string,
  sender: string,
  sequence: number,
  payload: Record<string, unknown>,
): WireMessage {
  return { version: PROTOCOL_VERSION, kind, vehicle_id: vehicleId, sender, sequence, payload };
}

/** Parse one envelope; returns null instead of throwing on malformed input
 *  so a bad frame degrades to a "stale data" banner, never a crash. */
export function parseMessage(text: string): WireMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const m = obj as Record<string, unknown>;
  if (m.version !== PROTOCOL_VERSION) return null;
  if (typeof m.kind !== "string" || typeof m.vehicle_id !== "string") return null;
  if (typeof m.sender !== "string" || typeof m.sequence !== "number") return null;
  const payload = typeof m.payload === "object" && m.payload !== null ? m.payload : {};
  return {
    version: PROTOCOL_VERSION,
    kind: m.kind,
    vehicle_id: m.vehicle_id,
    sender: m.sender,
    sequence: m.sequence,
    payload: payload as Record<string, unknown>,
  };
}

/** A snapshot is usable only if the four summary attributes and a pose are
 *  present; anything else keeps the last good frame on screen. */
export function isValidSnapshot(payload: Record<string, unknown>): payload is StateSnapshot & Record<string, unknown> {
  for (const attr of SUMMARY_ATTRIBUTES) {
    if (typeof payload[attr] !== "string") return false;
  }
  const pose = payload.pose as Record<string, unknown> | undefined;
  if (!pose || typeof pose.x !== "number" || typeof pose.y !== "number") return false;
  const zone = payload.zone as Record<string, unknown> | undefined;
  if (!zone || !Array.isArray(zone.clear_outline) || !Array.isArray(zone.focus_outline)) return false;
  return true;
}

// ---- TCP framing (node-side tests and tooling) -------------------------------

export function encodeFrame(msg: WireMessage): Uint8Array {
  const body = new TextEncoder().encode(JSON.stringify(msg));
  const out = new Uint8Array(4 + body.length);
  new DataView(out.buffer).setUint32(0, body.length, false);
  out.set(body, 4);
  return out;
}

/** Incremental decoder for the length-prefixed TCP form. */
export class FrameDecoder {
  private buf = new Uint8Array(0);

  feed(data: Uint8Array): WireMessage[] {
    const joined = new Uint8Array(this.buf.length + data.length);
    joined.set(this.buf);
    joined.set(data, this.buf.length);
    this.buf = joined;

    const out: WireMessage[] = [];
    for (;;) {
      if (this.buf.length < 4) return out;
      const length = new DataView(this.buf.buffer, this.buf.byteOffset).getUint32(0, false);
      if (this.buf.length < 4 + length) return out;
      const body = new TextDecoder().decode(this.buf.subarray(4, 4 + length));
      this.buf = this.buf.slice(4 + length);
      const msg = parseMessage(body);
      if (msg) out.push(msg);
    }
  }
}
