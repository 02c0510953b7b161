// Wire protocol: the 22-byte pressure frame record and the telemetry schema.
//
// Record layout: magic 0x47 0x50, version 0x01, flags 0x00, timestamp_us as
// 8-byte little-endian unsigned, four 2-byte little-endian channels
// (lf, lr, rf, rr), CRC-16/CCITT-FALSE over bytes 0..19 big-endian.

export const FRAME_SIZE = 22;
export const CHANNEL_MAX = 4095;
export const FRAME_MAGIC = [0x47, 0x50] as const;
export const FRAME_VERSION = 0x01;

const CRC_TABLE: number[] = (() => {
  const table: number[] = [];
  for (let i = 0; i < 256; i++) {
    let c = i << 8;
    for (let b = 0; b < 8; b++) {
      c = c & 0x8000 ? ((c << 1) ^ 0x1021) & 0xffff : (c << 1) & 0xffff;
    }
    table.push(c);
  }
  return table;
})();

/** CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF); crc("123456789") = 0x29B1. */
export function crc16CcittFalse(data: Uint8Array): number {
  let crc = 0xffff;
  for (const byte of data) {
    crc = ((crc << 8) & 0xffff) ^ CRC_TABLE[((crc >> 8) ^ byte) & 0xff];
  }
  return crc;
}

export interface FrameChannels {
  lf: number;
  lr: number;
  rf: number;
  rr: number;
}

export function encodeFrame(timestampUs: number, ch: FrameChannels): Uint8Array {
  if (!Number.isInteger(timestampUs) || timestampUs < 0) {
    throw new Error(`bad timestamp ${timestampUs}`);
  }
  for (const key of ["lf", "lr", "rf", "rr"] as const) {
    const v = ch[key];
    if (!Number.isInteger(v) || v < 0 || v > CHANNEL_MAX) {
      throw new Error(`channel ${key}=${v} outside [0, ${CHANNEL_MAX}]`);
    }
  }
  const out = new Uint8Array(FRAME_SIZE);
  const view = new DataView(out.buffer);
  out[0] = FRAME_MAGIC[0];
  out[1] = FRAME_MAGIC[1];
  out[2] = FRAME_VERSION;
  out[3] = 0x00;
  view.setBigUint64(4, BigInt(timestampUs), true);
  view.setUint16(12, ch.lf, true);
  view.setUint16(14, ch.lr, true);
  view.setUint16(16, ch.rf, true);
  view.setUint16(18, ch.rr, true);
  view.setUint16(20, crc16CcittFalse(out.subarray(0, 20)), false);
  return out;
}

/** One frame per message on the /ingest-b64 endpoint. */
export function frameToBase64(frame: Uint8Array): string {
  let bin = "";
  for (const byte of frame) bin += String.fromCharCode(byte);
  return btoa(bin);
}

export interface TelemetryRecord {
  t_us: number;
  pose: { x: number; y: number; theta: number };
  twist: { v: number; omega: number };
  u_L: number;
  u_R: number;
  calibrated: boolean;
  latency_us: number;
}

function isNum(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

/** Parse one telemetry line; returns null for anything malformed. */
export function parseTelemetry(line: string): TelemetryRecord | null {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const rec = obj as Record<string, unknown>;
  const pose = rec.pose as Record<string, unknown> | undefined;
  const twist = rec.twist as Record<string, unknown> | undefined;
  if (
    !isNum(rec.t_us) ||
    !pose || !isNum(pose.x) || !isNum(pose.y) || !isNum(pose.theta) ||
    !twist || !isNum(twist.v) || !isNum(twist.omega) ||
    !isNum(rec.u_L) || !isNum(rec.u_R) ||
    typeof rec.calibrated !== "boolean" || !isNum(rec.latency_us)
  ) {
    return null;
  }
  return {
    t_us: rec.t_us,
    pose: { x: pose.x as number, y: pose.y as number, theta: pose.theta as number },
    twist: { v: twist.v as number, omega: twist.omega as number },
    u_L: rec.u_L,
    u_R: rec.u_R,
    calibrated: rec.calibrated,
    latency_us: rec.latency_us,
  };
}

export interface ScenarioOverlay {
  name: string;
  start: { x: number; y: number; theta: number };
  arrival_radius: number;
  waypoints: [number, number][];
  polyline: [number, number][];
}

/** Parse an `ok scenario {...}` control response into an overlay. */
export function parseScenarioAck(line: string): ScenarioOverlay | null {
  if (!line.startsWith("ok scenario ")) return null;
  try {
    return JSON.parse(line.slice("ok scenario ".length)) as ScenarioOverlay;
  } catch {
    return null;
  }
}
