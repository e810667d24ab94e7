import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ViewerController } from "../src/app.js";
import { FrameBlob } from "../src/protocol.js";
import { TfModel } from "../src/tf_model.js";
import { makeFrame } from "./util.js";

class FakeSocket {
  sent: string[] = [];

  send(data: string): void {
    this.sent.push(data);
  }

  types(): string[] {
    return this.sent.map((s) => JSON.parse(s).type);
  }
}

class FakeSink {
  frames: FrameBlob[] = [];

  draw(frame: FrameBlob): void {
    this.frames.push(frame);
  }
}

function statsReply(buildMs: number): string {
  return JSON.stringify({
    type: "stats",
    occupancy_pct: 4.1,
    build_ms: buildMs,
    classify_ms: 2.0,
    nodes: 31,
    height: 5,
    render_ms: 10.0,
    samples: 1000,
  });
}

let socket: FakeSocket;
let sink: FakeSink;
let app: ViewerController;

beforeEach(() => {
  vi.useFakeTimers();
  socket = new FakeSocket();
  sink = new FakeSink();
  app = new ViewerController(sink);
  app.handleConnect(socket);
});

afterEach(() => {
  vi.useRealTimers();
});

describe("idle quiescence", () => {
  it("sends nothing without interaction", () => {
    vi.advanceTimersByTime(10_000);
    expect(socket.sent).toEqual([]);
  });
});

describe("debounced transfer-function edits", () => {
  it("a burst of edits produces one set_tf carrying the last state", () => {
    app.editTf(TfModel.constant([1, 1, 1, 0.25]));
    vi.advanceTimersByTime(30);
    app.editTf(TfModel.constant([1, 1, 1, 0.75]));
    vi.advanceTimersByTime(99);
    expect(socket.sent).toEqual([]);
    vi.advanceTimersByTime(1);
    expect(socket.types()).toEqual(["set_tf"]);
    const rgba = JSON.parse(socket.sent[0]).rgba;
    expect(rgba[128][3]).toBeCloseTo(0.75, 12);
  });

  it("flushTf sends a staged edit immediately", () => {
    app.editTf(TfModel.constant([0, 0, 0, 0]));
    app.flushTf();
    expect(socket.types()).toEqual(["set_tf"]);
    app.flushTf(); // nothing staged now
    expect(socket.sent).toHaveLength(1);
  });

  it("every separated edit reaches the wire and its stats reach the panel", () => {
    for (const alpha of [0.2, 0.5, 0.8]) {
      app.editTf(TfModel.constant([1, 1, 1, alpha]));
      vi.advanceTimersByTime(150);
      app.handleText(statsReply(alpha * 100));
    }
    expect(socket.types()).toEqual(["set_tf", "set_tf", "set_tf"]);
    const panel = app.statsHistory.get(app.kind)!;
    expect(panel).toHaveLength(3);
    expect(panel.map((s) => s.buildMs)).toEqual([20, 50, 80]);
    expect(app.buildSparkline).toEqual([20, 50, 80]);
  });
});

describe("immediate controls", () => {
  it("selector changes send set_index at once", () => {
    app.selectIndex("kd-deep-mls32");
    expect(socket.sent).toHaveLength(1);
    expect(JSON.parse(socket.sent[0])).toEqual({
      type: "set_index",
      kind: "kd-deep-mls32",
    });
    expect(app.kind).toBe("kd-deep-mls32");
  });

  it("orbit updates send set_camera at once", () => {
    app.setCamera({ azimuthDeg: 12, elevationDeg: -4, zoom: 1.5 });
    expect(JSON.parse(socket.sent[0])).toEqual({
      type: "set_camera",
      azimuth_deg: 12,
      elevation_deg: -4,
      zoom: 1.5,
    });
  });
});

describe("incoming frames", () => {
  it("draws frames and drops any older than the newest shown", () => {
    app.handleBinary(makeFrame(4, 4, 7));
    app.handleBinary(makeFrame(4, 4, 5));
    app.handleBinary(makeFrame(4, 4, 9));
    expect(sink.frames.map((f) => f.sequence)).toEqual([7, 9]);
  });

  it("keeps running when a frame is garbage", () => {
    app.handleBinary(new ArrayBuffer(3));
    expect(sink.frames).toEqual([]);
    expect(app.lastError).toMatch(/too short/);
    app.handleBinary(makeFrame(4, 4, 1));
    expect(sink.frames).toHaveLength(1);
  });
});

describe("stats routing", () => {
  it("attributes stats to the kind whose request produced them", () => {
    app.selectIndex("lbvh");
    app.selectIndex("hybrid");
    app.handleText(statsReply(1));
    app.handleText(statsReply(2));
    expect(app.statsHistory.get("lbvh")!.map((s) => s.buildMs)).toEqual([1]);
    expect(app.statsHistory.get("hybrid")!.map((s) => s.buildMs)).toEqual([2]);
  });

  it("ignores pong and surfaces error replies", () => {
    app.handleText('{"type":"pong"}');
    expect(app.statsHistory.size).toBe(0);
    app.handleText('{"type":"error","reason":"bad zoom"}');
    expect(app.lastError).toBe("bad zoom");
  });

  it("caps the sparkline series length", () => {
    const short = new ViewerController(sink, { sparklineLength: 4 });
    short.handleConnect(socket);
    for (let i = 0; i < 9; i++) {
      short.handleText(statsReply(i));
    }
    expect(short.buildSparkline).toEqual([5, 6, 7, 8]);
  });
});

describe("reconnection", () => {
  it("shows the banner while down and resends full state on reconnect", () => {
    app.editTf(TfModel.constant([1, 0, 0, 0.5]));
    vi.advanceTimersByTime(200);
    app.selectIndex("grid");
    app.setCamera({ azimuthDeg: 30, elevationDeg: 10, zoom: 2 });
    socket.sent.length = 0;

    app.handleDisconnect();
    expect(app.bannerVisible).toBe(true);

    const next = new FakeSocket();
    app.handleConnect(next);
    expect(app.bannerVisible).toBe(false);
    expect(next.types()).toEqual(["set_tf", "set_index", "set_camera"]);
    const [tfMsg, indexMsg, camMsg] = next.sent.map((s) => JSON.parse(s));
    expect(tfMsg.rgba[0][3]).toBeCloseTo(0.5, 12);
    expect(indexMsg.kind).toBe("grid");
    expect(camMsg.azimuth_deg).toBe(30);
  });

  it("holds edits made while disconnected and replays the result", () => {
    app.handleDisconnect();
    app.editTf(TfModel.constant([0, 1, 0, 0.25]));
    vi.advanceTimersByTime(200); // debounce fires into the void, no throw
    app.selectIndex("lbvh");

    const next = new FakeSocket();
    app.handleConnect(next);
    expect(next.types()).toEqual(["set_tf", "set_index", "set_camera"]);
    expect(JSON.parse(next.sent[0]).rgba[0][3]).toBeCloseTo(0.25, 12);
    expect(JSON.parse(next.sent[1]).kind).toBe("lbvh");
  });

  it("does not replay state on the very first connect", () => {
    const fresh = new ViewerController(new FakeSink());
    const first = new FakeSocket();
    fresh.handleConnect(first);
    expect(first.sent).toEqual([]);
  });
});
