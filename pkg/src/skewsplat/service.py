"""Interactive render service: camera poses in, frames out, over a WebSocket.

Each connection sends one JSON text message per requested pose and receives
one binary message per rendered frame: an 8-byte header (frame_id u32 LE,
width u16 LE, height u16 LE) followed by raw RGB8 pixels, row-major from
the top-left.  Pixel bytes are identical to what the offline trajectory
renderer writes for the same pose.

A free-flying camera produces poses faster than a CPU rasterizer can draw
them, so each connection owns a depth-1 latest-wins slot between its reader
and its render worker: a newer pose replaces an unrendered older one, and
the response always echoes the frame_id that was actually rendered.  The
scene is loaded once and never mutated while serving.

Invalid requests get a JSON text reply {"frame_id": ..., "error": {"code",
"message"}} and leave the connection open; code is "bad_request" for
malformed messages and "too_large" for oversize frame dimensions.
"""

from __future__ import annotations

import asyncio
import json
import numbers
import struct

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .camera import CameraView
from .dataset import quantize_u8
from .raster.forward import render_forward
from .scene import Scene, load_ply

HEADER = struct.Struct("<IHH")
MAX_DIM = 0xFFFF  # width/height must fit the u16 header fields
MAX_FRAME_ID = 0xFFFFFFFF
DEFAULT_MAX_PIXELS = 4096 * 4096


class RequestError(ValueError):
    def __init__(self, code: str, message: str, frame_id=None):
        super().__init__(message)
        self.code = code
        self.frame_id = frame_id


def _require_int(obj: dict, key: str):
    value = obj.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise RequestError("bad_request", f"{key} must be an integer")
    return value


def parse_request(obj, max_pixels: int) -> tuple[int, CameraView]:
    """Validate one decoded request; raises RequestError on any problem."""
    if not isinstance(obj, dict):
        raise RequestError("bad_request", "request must be a JSON object")
    frame_id = _require_int(obj, "frame_id")
    if not 0 <= frame_id <= MAX_FRAME_ID:
        raise RequestError("bad_request", "frame_id out of range")
    width = _require_int(obj, "width")
    height = _require_int(obj, "height")
    if width < 1 or height < 1:
        raise RequestError("bad_request", "dimensions must be positive",
                           frame_id)
    if width > MAX_DIM or height > MAX_DIM or width * height > max_pixels:
        raise RequestError("too_large",
                           f"{width}x{height} exceeds the frame size cap",
                           frame_id)
    c2w = obj.get("c2w")
    if (not isinstance(c2w, list) or len(c2w) != 16
            or not all(isinstance(v, numbers.Real) for v in c2w)):
        raise RequestError("bad_request", "c2w must be 16 numbers, row-major",
                           frame_id)
    for key in ("convention", "fov_x"):
        if key not in obj:
            raise RequestError("bad_request", f"missing {key}", frame_id)
    try:
        view = CameraView(c2w, obj["convention"], width, height,
                          float(obj["fov_x"]))
    except (ValueError, TypeError) as exc:
        raise RequestError("bad_request", str(exc), frame_id) from exc
    return frame_id, view


class _LatestSlot:
    """Depth-1 hand-off: put() replaces any unconsumed item."""

    def __init__(self):
        self._ready = asyncio.Event()
        self._item = None

    def put(self, item):
        self._item = item
        self._ready.set()

    async def get(self):
        await self._ready.wait()
        self._ready.clear()
        item = self._item
        self._item = None
        return item


def render_frame(scene: Scene, frame_id: int, view: CameraView) -> bytes:
    pixels = quantize_u8(render_forward(scene, view).color)
    return HEADER.pack(frame_id, view.width, view.height) + pixels.tobytes()


async def _render_worker(ws: WebSocket, slot: _LatestSlot, scene: Scene):
    while True:
        frame_id, view = await slot.get()
        # off the event loop so the reader keeps draining stale poses
        payload = await asyncio.to_thread(render_frame, scene, frame_id, view)
        await ws.send_bytes(payload)


def build_app(scene: Scene, max_pixels: int = DEFAULT_MAX_PIXELS) -> FastAPI:
    app = FastAPI(title="skewsplat render service")

    @app.get("/health")
    def health():
        return {"n_primitives": len(scene), "sh_degree": scene.sh_degree}

    @app.websocket("/render")
    async def render_ws(ws: WebSocket):
        await ws.accept()
        slot = _LatestSlot()
        worker = asyncio.create_task(_render_worker(ws, slot, scene))
        try:
            while True:
                text = await ws.receive_text()
                try:
                    try:
                        obj = json.loads(text)
                    except json.JSONDecodeError as exc:
                        raise RequestError("bad_request",
                                           f"invalid JSON: {exc}") from exc
                    slot.put(parse_request(obj, max_pixels))
                except RequestError as exc:
                    await ws.send_json({
                        "frame_id": exc.frame_id,
                        "error": {"code": exc.code, "message": str(exc)},
                    })
        except WebSocketDisconnect:
            pass
        finally:
            worker.cancel()

    return app


def run_service(scene_path, host: str = "127.0.0.1", port: int = 8000,
                max_pixels: int = DEFAULT_MAX_PIXELS):
    """Load a scene PLY and serve it until interrupted."""
    import uvicorn

    app = build_app(load_ply(scene_path), max_pixels=max_pixels)
    uvicorn.run(app, host=host, port=port)
