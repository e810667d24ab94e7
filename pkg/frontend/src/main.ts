/** Browser bootstrap: wires the controller to a WebSocket, a frame canvas,
 * the transfer-function editor canvas, the index selector, and the stats
 * panel.  All protocol and state logic lives in app.ts / tf_model.ts. */

import { ViewerController } from "./app.js";
import { FrameBlob, INDEX_KINDS, IndexKind, Stats } from "./protocol.js";
import { Rgba } from "./tf_model.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

const frameCanvas = byId<HTMLCanvasElement>("frame");
const tfCanvas = byId<HTMLCanvasElement>("tf-editor");
const sparkCanvas = byId<HTMLCanvasElement>("sparkline");
const kindSelect = byId<HTMLSelectElement>("index-kind");
const colorInput = byId<HTMLInputElement>("point-color");
const banner = byId<HTMLDivElement>("banner");
const statsPanel = byId<HTMLDivElement>("stats");

for (const kind of INDEX_KINDS) {
  const opt = document.createElement("option");
  opt.value = kind;
  opt.textContent = kind;
  kindSelect.appendChild(opt);
}

const frameCtx = frameCanvas.getContext("2d")!;

const sink = {
  draw(frame: FrameBlob): void {
    if (frameCanvas.width !== frame.width || frameCanvas.height !== frame.height) {
      frameCanvas.width = frame.width;
      frameCanvas.height = frame.height;
    }
    const pixels = new Uint8ClampedArray(frame.pixels); // copy off the socket buffer
    frameCtx.putImageData(new ImageData(pixels, frame.width, frame.height), 0, 0);
  },
};

const controller = new ViewerController(sink);

// -- websocket with auto-reconnect -------------------------------------------

const wsUrl =
  new URLSearchParams(location.search).get("ws") ?? `ws://${location.hostname}:9000`;

function connect(): void {
  const ws = new WebSocket(wsUrl);
  ws.binaryType = "arraybuffer";
  ws.onopen = () => {
    banner.hidden = true;
    controller.handleConnect({ send: (data) => ws.send(data) });
  };
  ws.onmessage = (ev: MessageEvent) => {
    if (ev.data instanceof ArrayBuffer) {
      controller.handleBinary(ev.data);
    } else {
      controller.handleText(String(ev.data));
    }
    renderStats();
  };
  ws.onclose = () => {
    controller.handleDisconnect();
    banner.hidden = false;
    setTimeout(connect, 1000);
  };
}

// -- stats panel and build-time sparkline ------------------------------------

function latestStats(): Stats | undefined {
  const series = controller.statsHistory.get(controller.kind);
  return series?.[series.length - 1];
}

function renderStats(): void {
  const s = latestStats();
  statsPanel.textContent =
    s === undefined
      ? "no stats yet"
      : `${controller.kind}  occupancy ${s.occupancyPct.toFixed(2)}%  ` +
        `build ${s.buildMs.toFixed(1)} ms  classify ${s.classifyMs.toFixed(1)} ms  ` +
        `nodes ${s.nodes}  height ${s.height}  ` +
        `render ${s.renderMs.toFixed(1)} ms  samples ${s.samples}`;
  const ctx = sparkCanvas.getContext("2d")!;
  const { width, height } = sparkCanvas;
  ctx.clearRect(0, 0, width, height);
  const series = controller.buildSparkline;
  if (series.length === 0) {
    return;
  }
  const peak = Math.max(...series, 1e-6);
  ctx.strokeStyle = "#6cf";
  ctx.beginPath();
  series.forEach((v, i) => {
    const x = (i / Math.max(series.length - 1, 1)) * (width - 2) + 1;
    const y = height - 2 - (v / peak) * (height - 4);
    i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
  });
  ctx.stroke();
}

// -- index selector -----------------------------------------------------------

kindSelect.value = controller.kind;
kindSelect.onchange = () => {
  controller.selectIndex(kindSelect.value as IndexKind);
  renderStats();
};

// -- orbit camera on the frame canvas -----------------------------------------

let orbiting = false;
let lastX = 0;
let lastY = 0;

frameCanvas.onpointerdown = (ev: PointerEvent) => {
  orbiting = true;
  lastX = ev.clientX;
  lastY = ev.clientY;
  frameCanvas.setPointerCapture(ev.pointerId);
};
frameCanvas.onpointermove = (ev: PointerEvent) => {
  if (!orbiting) {
    return;
  }
  const cam = controller.camera;
  controller.setCamera({
    azimuthDeg: cam.azimuthDeg + (ev.clientX - lastX) * 0.5,
    elevationDeg: Math.min(Math.max(cam.elevationDeg + (ev.clientY - lastY) * 0.5, -89), 89),
    zoom: cam.zoom,
  });
  lastX = ev.clientX;
  lastY = ev.clientY;
};
frameCanvas.onpointerup = () => {
  orbiting = false;
};
frameCanvas.onwheel = (ev: WheelEvent) => {
  ev.preventDefault();
  const cam = controller.camera;
  const zoom = Math.min(Math.max(cam.zoom * (ev.deltaY < 0 ? 1.1 : 1 / 1.1), 0.1), 32);
  controller.setCamera({ ...cam, zoom });
};

// -- transfer-function editor -------------------------------------------------

function hexToRgb(hex: string): [number, number, number] {
  const v = parseInt(hex.slice(1), 16);
  return [((v >> 16) & 255) / 255, ((v >> 8) & 255) / 255, (v & 255) / 255];
}

function pointAt(px: number, py: number): number {
  const { width, height } = tfCanvas;
  return controller.tf.points.findIndex((p) => {
    const x = p.position * width;
    const y = (1 - p.rgba[3]) * height;
    return Math.hypot(x - px, y - py) < 8;
  });
}

function drawTf(): void {
  const ctx = tfCanvas.getContext("2d")!;
  const { width, height } = tfCanvas;
  ctx.clearRect(0, 0, width, height);
  const lut = controller.tf.rasterize();
  for (let i = 0; i < lut.length; i++) {
    const [r, g, b, a] = lut[i];
    ctx.fillStyle = `rgb(${r * 255},${g * 255},${b * 255})`;
    const x = (i / lut.length) * width;
    ctx.fillRect(x, height - a * height, width / lut.length + 1, a * height);
  }
  ctx.fillStyle = "#fff";
  for (const p of controller.tf.points) {
    ctx.beginPath();
    ctx.arc(p.position * width, (1 - p.rgba[3]) * height, 4, 0, 2 * Math.PI);
    ctx.fill();
  }
}

let dragging = -1;

tfCanvas.onpointerdown = (ev: PointerEvent) => {
  const rect = tfCanvas.getBoundingClientRect();
  const px = ev.clientX - rect.left;
  const py = ev.clientY - rect.top;
  dragging = pointAt(px, py);
  if (dragging < 0) {
    const [r, g, b] = hexToRgb(colorInput.value);
    const alpha = Math.min(Math.max(1 - py / tfCanvas.height, 0), 1);
    controller.editTf(
      controller.tf.withPoint(px / tfCanvas.width, [r, g, b, alpha] as Rgba)
    );
    drawTf();
  }
  tfCanvas.setPointerCapture(ev.pointerId);
};
tfCanvas.onpointermove = (ev: PointerEvent) => {
  if (dragging < 0) {
    return;
  }
  const rect = tfCanvas.getBoundingClientRect();
  const [r, g, b] = hexToRgb(colorInput.value);
  const alpha = Math.min(Math.max(1 - (ev.clientY - rect.top) / tfCanvas.height, 0), 1);
  controller.editTf(
    controller.tf.withMovedPoint(
      dragging,
      (ev.clientX - rect.left) / tfCanvas.width,
      [r, g, b, alpha] as Rgba
    )
  );
  drawTf();
};
tfCanvas.onpointerup = () => {
  dragging = -1;
  controller.flushTf();
};
tfCanvas.ondblclick = (ev: MouseEvent) => {
  const rect = tfCanvas.getBoundingClientRect();
  const hit = pointAt(ev.clientX - rect.left, ev.clientY - rect.top);
  if (hit > 0 && hit < controller.tf.points.length - 1) {
    controller.editTf(controller.tf.withoutPoint(hit));
    controller.flushTf();
    drawTf();
  }
};

drawTf();
renderStats();
connect();
