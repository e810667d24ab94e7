/** Wire protocol for the render service.
 *
 * Text frames are JSON control messages and stats; binary frames carry one
 * image: 16-byte header (ASCII "FRME", then width, height, sequence as
 * uint32 little-endian) followed by width*height raw RGBA8 pixels.
 */

import { LUT_SIZE } from "./tf_model.js";

export const INDEX_KINDS = [
  "naive",
  "grid",
  "lbvh",
  "kd-shallow",
  "kd-deep-mls32",
  "kd-deep-mls128",
  "kd-binned-mls32",
  "hybrid",
] as const;

export type IndexKind = (typeof INDEX_KINDS)[number];

export interface CameraState {
  azimuthDeg: number;
  elevationDeg: number;
  zoom: number;
}

export interface Stats {
  occupancyPct: number;
  buildMs: number;
  classifyMs: number;
  nodes: number;
  height: number;
  renderMs: number;
  samples: number;
}

export type ServerText =
  | { type: "stats"; stats: Stats }
  | { type: "pong" }
  | { type: "error"; reason: string };

export interface FrameBlob {
  width: number;
  height: number;
  sequence: number;
  pixels: Uint8ClampedArray;
}

const FRAME_MAGIC = 0x454d5246; // "FRME" read as little-endian uint32
const FRAME_HEADER_BYTES = 16;

export function setTfMessage(lut: number[][]): string {
  if (lut.length !== LUT_SIZE) {
    throw new Error(`lut must have exactly ${LUT_SIZE} entries, got ${lut.length}`);
  }
  for (const row of lut) {
    if (row.length !== 4 || row.some((c) => !Number.isFinite(c) || c < 0 || c > 1)) {
      throw new Error(`lut entries must be 4 values in [0,1], got ${JSON.stringify(row)}`);
    }
  }
  return JSON.stringify({ type: "set_tf", rgba: lut });
}

export function setIndexMessage(kind: IndexKind): string {
  if (!INDEX_KINDS.includes(kind)) {
    throw new Error(`unknown index kind: ${kind}`);
  }
  return JSON.stringify({ type: "set_index", kind });
}

export function setCameraMessage(cam: CameraState): string {
  const { azimuthDeg, elevationDeg, zoom } = cam;
  if (![azimuthDeg, elevationDeg, zoom].every(Number.isFinite) || zoom <= 0) {
    throw new Error("camera needs finite angles and zoom > 0");
  }
  return JSON.stringify({
    type: "set_camera",
    azimuth_deg: azimuthDeg,
    elevation_deg: elevationDeg,
    zoom,
  });
}

export function pingMessage(): string {
  return JSON.stringify({ type: "ping" });
}

export function parseServerText(text: string): ServerText {
  let msg: unknown;
  try {
    msg = JSON.parse(text);
  } catch {
    throw new Error(`unparseable server message: ${text.slice(0, 80)}`);
  }
  if (typeof msg !== "object" || msg === null || !("type" in msg)) {
    throw new Error("server message is not an object with a type");
  }
  const m = msg as Record<string, unknown>;
  if (m.type === "pong") {
    return { type: "pong" };
  }
  if (m.type === "error") {
    return { type: "error", reason: String(m.reason ?? "unknown") };
  }
  if (m.type === "stats") {
    const num = (key: string): number => {
      const v = m[key];
      if (typeof v !== "number" || !Number.isFinite(v)) {
        throw new Error(`stats field ${key} missing or not a number`);
      }
      return v;
    };
    return {
      type: "stats",
      stats: {
        occupancyPct: num("occupancy_pct"),
        buildMs: num("build_ms"),
        classifyMs: num("classify_ms"),
        nodes: num("nodes"),
        height: num("height"),
        renderMs: num("render_ms"),
        samples: num("samples"),
      },
    };
  }
  throw new Error(`unknown server message type: ${String(m.type)}`);
}

export function parseFrame(buf: ArrayBuffer): FrameBlob {
  if (buf.byteLength < FRAME_HEADER_BYTES) {
    throw new Error(`frame too short: ${buf.byteLength} bytes`);
  }
  const view = new DataView(buf);
  if (view.getUint32(0, true) !== FRAME_MAGIC) {
    throw new Error('binary frame does not start with "FRME"');
  }
  const width = view.getUint32(4, true);
  const height = view.getUint32(8, true);
  const sequence = view.getUint32(12, true);
  const expected = FRAME_HEADER_BYTES + width * height * 4;
  if (buf.byteLength !== expected) {
    throw new Error(`frame length ${buf.byteLength} != header+${width}x${height}x4`);
  }
  return {
    width,
    height,
    sequence,
    pixels: new Uint8ClampedArray(buf, FRAME_HEADER_BYTES),
  };
}
