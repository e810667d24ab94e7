"""Interactive session service: transfer-function editing round trip.

Each WebSocket connection owns one Session holding a volume, the current
transfer function, camera and index kind.  Text frames carry JSON control
and stats messages; rendered images travel as binary frames with a 16-byte
header (ASCII "FRME", then width, height and a strictly increasing sequence
number as little-endian u32) followed by raw premultiplied RGBA8.

Message handling is synchronous and pure at the Session level (a message in,
a list of replies out), which keeps the protocol testable without sockets;
the server runs it on a worker thread, one message at a time per session,
and collapses runs of queued set_tf messages so only the newest rebuild is
ever executed.
"""

from __future__ import annotations

import asyncio
import json
import logging
import struct
import time
from dataclasses import dataclass

import numpy as np

from .bench import INDEX_KINDS, build_index, load_dataset, load_tf, report_stats
from .render import Camera, render_frame
from .volume import TransferFunction, Volume, classify, occupancy

log = logging.getLogger(__name__)

FRAME_MAGIC = b"FRME"
DEFAULT_VIEWPORT = 512


@dataclass
class Reply:
    """One outgoing message: kind "json" (payload dict) or "binary" (bytes)."""

    kind: str
    payload: dict | bytes


def _json(payload: dict) -> Reply:
    return Reply(kind="json", payload=payload)


def _error(reason: str) -> Reply:
    return _json({"type": "error", "reason": reason})


class Session:
    """Server-side state of one connection.

    The built index is always consistent with the current transfer function:
    every tf or kind change rebuilds before the next frame is served.
    """

    def __init__(
        self,
        volume: Volume,
        tf: TransferFunction | None = None,
        kind: str = "naive",
        viewport: int = DEFAULT_VIEWPORT,
        dt: float = 0.5,
    ):
        if kind not in INDEX_KINDS:
            raise ValueError(f"unknown index kind: {kind!r}")
        self.volume = volume
        self.tf = tf if tf is not None else TransferFunction.ramp()
        self.kind = kind
        self.viewport = int(viewport)
        self.dt = float(dt)
        self.azimuth_deg = 0.0
        self.elevation_deg = 0.0
        self.zoom = 1.0
        self.sequence = 0
        self._classify()
        self._build()

    def _classify(self) -> None:
        t0 = time.perf_counter()
        visible = classify(self.volume, self.tf, dilate=False)
        self.occupancy_pct = 100.0 * occupancy(visible)
        self._bits = classify(self.volume, self.tf, dilate=True)
        self.classify_ms = 1000.0 * (time.perf_counter() - t0)

    def _build(self) -> None:
        t0 = time.perf_counter()
        self.index = build_index(self.kind, self._bits)
        self.build_ms = 1000.0 * (time.perf_counter() - t0)

    def _render(self) -> tuple[bytes, float, int]:
        cam = Camera.orbit(
            self.volume.dims,
            azimuth_deg=self.azimuth_deg,
            elevation_deg=self.elevation_deg,
            zoom=self.zoom,
            width=self.viewport,
        )
        t0 = time.perf_counter()
        frame = render_frame(self.volume, self.tf, self.index, cam, dt=self.dt)
        render_ms = 1000.0 * (time.perf_counter() - t0)
        self.sequence += 1
        blob = (
            FRAME_MAGIC
            + struct.pack("<III", frame.width, frame.height, self.sequence)
            + frame.to_raw()
        )
        return blob, render_ms, frame.sample_count

    def _stats_and_frame(self) -> list[Reply]:
        blob, render_ms, samples = self._render()
        stats = {
            "type": "stats",
            "occupancy_pct": self.occupancy_pct,
            "build_ms": self.build_ms,
            "classify_ms": self.classify_ms,
            "nodes": report_stats(self.index)["node_count"],
            "height": report_stats(self.index)["height"],
            "render_ms": render_ms,
            "samples": samples,
        }
        return [_json(stats), Reply(kind="binary", payload=blob)]


def handle_message(s: Session, raw) -> list[Reply]:
    """Apply one protocol message to a session; never raises on bad input."""
    try:
        msg = json.loads(raw) if isinstance(raw, (str, bytes, bytearray)) else raw
    except (ValueError, TypeError) as e:
        return [_error(f"bad json: {e}")]
    if not isinstance(msg, dict) or "type" not in msg:
        return [_error("message must be an object with a 'type' field")]
    mtype = msg["type"]
    try:
        if mtype == "ping":
            return [_json({"type": "pong"})]
        if mtype == "set_tf":
            rgba = np.asarray(msg["rgba"], dtype=np.float32)
            tf = TransferFunction(rgba)  # validates shape and range
            s.tf = tf
            s._classify()
            s._build()
            return s._stats_and_frame()
        if mtype == "set_index":
            kind = msg["kind"]
            if kind not in INDEX_KINDS:
                return [_error(f"unknown index kind: {kind!r}")]
            s.kind = kind
            s.classify_ms = 0.0  # classification reused across kinds
            s._build()
            return s._stats_and_frame()
        if mtype == "set_camera":
            azimuth = float(msg["azimuth_deg"])
            elevation = float(msg["elevation_deg"])
            zoom = float(msg["zoom"])
            if not (zoom > 0.0) or not np.isfinite([azimuth, elevation, zoom]).all():
                return [_error("camera parameters must be finite, zoom > 0")]
            s.azimuth_deg = azimuth
            s.elevation_deg = elevation
            s.zoom = zoom
            blob, _, _ = s._render()
            return [Reply(kind="binary", payload=blob)]
        return [_error(f"unknown message type: {mtype!r}")]
    except (KeyError, ValueError, TypeError) as e:
        return [_error(str(e))]


def _coalesce(batch: list) -> list:
    """Within a run of consecutive set_tf messages only the last matters."""
    out = []
    for raw in batch:
        is_tf = False
        try:
            is_tf = json.loads(raw).get("type") == "set_tf"
        except (ValueError, TypeError, AttributeError):
            pass
        if is_tf and out:
            try:
                if json.loads(out[-1]).get("type") == "set_tf":
                    out.pop()
            except (ValueError, TypeError, AttributeError):
                pass
        out.append(raw)
    return out


async def _pump(ws, session: Session) -> None:
    queue: asyncio.Queue = asyncio.Queue()

    async def reader():
        async for raw in ws:
            await queue.put(raw)
        await queue.put(None)

    reader_task = asyncio.create_task(reader())
    try:
        closed = False
        while not closed:
            batch = [await queue.get()]
            while not queue.empty():
                batch.append(queue.get_nowait())
            if batch[-1] is None:
                closed = True
                batch.pop()
            for raw in _coalesce(batch):
                replies = await asyncio.to_thread(handle_message, session, raw)
                for reply in replies:
                    if reply.kind == "json":
                        await ws.send(json.dumps(reply.payload))
                    else:
                        await ws.send(reply.payload)
    finally:
        reader_task.cancel()


async def serve(
    dataset: str | Volume,
    tf: str | TransferFunction | None = None,
    host: str = "127.0.0.1",
    port: int = 9000,
    viewport: int = DEFAULT_VIEWPORT,
    dt: float = 0.5,
    bound: "asyncio.Future | None" = None,
    stop: "asyncio.Event | None" = None,
) -> None:
    """Run the WebSocket endpoint until cancelled (or `stop` is set).

    `bound`, when provided, resolves to the listening port once the socket
    is open — convenient for tests that bind port 0.
    """
    import websockets

    volume = dataset if isinstance(dataset, Volume) else load_dataset(dataset)
    tf_obj = tf if isinstance(tf, TransferFunction) else load_tf(tf)

    async def handler(ws):
        log.info("session open: %s", ws.remote_address)
        session = await asyncio.to_thread(
            Session, volume, tf_obj, "naive", viewport, dt
        )
        try:
            await _pump(ws, session)
        finally:
            log.info("session closed: %s", ws.remote_address)

    async with websockets.serve(handler, host, port, max_size=None) as server:
        actual = server.sockets[0].getsockname()[1]
        log.info("listening on ws://%s:%d", host, actual)
        if bound is not None and not bound.done():
            bound.set_result(actual)
        if stop is None:
            await asyncio.Future()
        else:
            await stop.wait()
