/** DOM-free controller for the viewer.
 *
 * Owns the client-side state (transfer function, index kind, camera),
 * debounces transfer-function edits, resends state after a reconnect, and
 * routes server replies: stats into per-kind histories plus a build-time
 * series, frames into a sink with newest-sequence-wins ordering.
 */

import {
  CameraState,
  FrameBlob,
  IndexKind,
  Stats,
  parseFrame,
  parseServerText,
  setCameraMessage,
  setIndexMessage,
  setTfMessage,
} from "./protocol.js";
import { TfModel } from "./tf_model.js";

export interface SocketLike {
  send(data: string): void;
}

export interface FrameSink {
  draw(frame: FrameBlob): void;
}

export interface ControllerOptions {
  debounceMs?: number;
  sparklineLength?: number;
}

export const DEFAULT_DEBOUNCE_MS = 100;

export class ViewerController {
  tf: TfModel;
  kind: IndexKind;
  camera: CameraState;

  /** Stats grouped by the index kind they were measured under. */
  readonly statsHistory = new Map<IndexKind, Stats[]>();
  /** build_ms of every stats reply in arrival order, for the sparkline. */
  readonly buildSparkline: number[] = [];
  bannerVisible = false;
  lastError: string | null = null;

  private socket: SocketLike | null = null;
  private readonly sink: FrameSink;
  private readonly debounceMs: number;
  private readonly sparklineLength: number;
  private tfTimer: ReturnType<typeof setTimeout> | null = null;
  private lastDrawnSequence = -1;
  private everConnected = false;
  private pendingStatsKinds: IndexKind[] = [];

  constructor(sink: FrameSink, opts: ControllerOptions = {}) {
    this.sink = sink;
    this.debounceMs = opts.debounceMs ?? DEFAULT_DEBOUNCE_MS;
    this.sparklineLength = opts.sparklineLength ?? 120;
    this.tf = TfModel.ramp();
    this.kind = "naive";
    this.camera = { azimuthDeg: 0, elevationDeg: 0, zoom: 1 };
  }

  /** Stage a transfer-function edit; the send fires once edits pause. */
  editTf(model: TfModel): void {
    this.tf = model;
    if (this.tfTimer !== null) {
      clearTimeout(this.tfTimer);
    }
    this.tfTimer = setTimeout(() => {
      this.tfTimer = null;
      this.sendTf();
    }, this.debounceMs);
  }

  /** Send any staged transfer function now (drag end, page unload). */
  flushTf(): void {
    if (this.tfTimer !== null) {
      clearTimeout(this.tfTimer);
      this.tfTimer = null;
      this.sendTf();
    }
  }

  selectIndex(kind: IndexKind): void {
    this.kind = kind;
    if (this.send(setIndexMessage(kind))) {
      this.pendingStatsKinds.push(kind);
    }
  }

  setCamera(cam: CameraState): void {
    this.camera = cam;
    this.send(setCameraMessage(cam));
  }

  handleText(text: string): void {
    let msg;
    try {
      msg = parseServerText(text);
    } catch (e) {
      this.lastError = String(e);
      return;
    }
    if (msg.type === "error") {
      this.lastError = msg.reason;
    } else if (msg.type === "stats") {
      this.recordStats(msg.stats);
    }
  }

  handleBinary(buf: ArrayBuffer): void {
    let frame;
    try {
      frame = parseFrame(buf);
    } catch (e) {
      this.lastError = String(e);
      return;
    }
    if (frame.sequence <= this.lastDrawnSequence) {
      return; // a newer frame already reached the canvas
    }
    this.lastDrawnSequence = frame.sequence;
    this.sink.draw(frame);
  }

  /** A socket opened.  After a drop, push the full client state back so the
   * session resumes where the user left it. */
  handleConnect(socket: SocketLike): void {
    this.socket = socket;
    this.bannerVisible = false;
    if (this.everConnected) {
      this.sendTf();
      this.selectIndex(this.kind);
      this.setCamera(this.camera);
    }
    this.everConnected = true;
  }

  handleDisconnect(): void {
    this.socket = null;
    this.bannerVisible = true;
    this.pendingStatsKinds = [];
  }

  private sendTf(): void {
    if (this.send(setTfMessage(this.tf.rasterize()))) {
      this.pendingStatsKinds.push(this.kind);
    }
  }

  private send(data: string): boolean {
    if (this.socket === null) {
      return false;
    }
    this.socket.send(data);
    return true;
  }

  private recordStats(stats: Stats): void {
    const kind = this.pendingStatsKinds.shift() ?? this.kind;
    let series = this.statsHistory.get(kind);
    if (series === undefined) {
      series = [];
      this.statsHistory.set(kind, series);
    }
    series.push(stats);
    this.buildSparkline.push(stats.buildMs);
    if (this.buildSparkline.length > this.sparklineLength) {
      this.buildSparkline.shift();
    }
  }
}
