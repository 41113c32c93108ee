/** Consumes render frames: header decode, RGBA expansion, FPS tracking.
 *
 * parseFrame (protocol.ts) handles the byte layout; this module turns a
 * decoded frame into pixels a canvas can take and keeps the bookkeeping
 * the HUD shows: last frame id, a rolling frames-per-second figure, and a
 * sticky error badge that survives until the next good frame. The clock
 * is injected so tests can drive the FPS window deterministically.
 */

import { Frame, parseFrame, parseServiceText } from "./protocol.js";

export interface SinkStatus {
  lastFrameId: number | null;
  width: number;
  height: number;
  fps: number;
  error: string | null;
  framesReceived: number;
}

const FPS_WINDOW_MS = 2000;

export class FrameSink {
  private readonly now: () => number;
  private arrivals: number[] = [];
  private status: SinkStatus = {
    lastFrameId: null, width: 0, height: 0, fps: 0, error: null,
    framesReceived: 0,
  };

  constructor(now: () => number = () => performance.now()) {
    this.now = now;
  }

  /** Feed one binary websocket message. Returns the frame, or null on error. */
  acceptBinary(data: ArrayBuffer): Frame | null {
    const parsed = parseFrame(data);
    if ("error" in parsed) {
      this.status = { ...this.status, error: parsed.error };
      return null;
    }
    const t = this.now();
    this.arrivals.push(t);
    const cutoff = t - FPS_WINDOW_MS;
    while (this.arrivals.length > 0 && this.arrivals[0] < cutoff) {
      this.arrivals.shift();
    }
    const fps = this.arrivals.length <= 1
      ? this.arrivals.length
      : (this.arrivals.length - 1) * 1000 / (t - this.arrivals[0]);
    this.status = {
      lastFrameId: parsed.frameId,
      width: parsed.width,
      height: parsed.height,
      fps,
      error: null,
      framesReceived: this.status.framesReceived + 1,
    };
    return parsed;
  }

  /** Feed one text websocket message (the server only sends errors as text). */
  acceptText(text: string): void {
    const parsed = parseServiceText(text);
    const message = "error" in parsed
      ? parsed.error
      : `${parsed.code}: ${parsed.message}`;
    this.status = { ...this.status, error: message };
  }

  getStatus(): SinkStatus {
    return this.status;
  }
}

/** Expand tightly packed RGB8 into the RGBA layout ImageData expects. */
export function rgbToRgba(frame: Frame): Uint8ClampedArray<ArrayBuffer> {
  const n = frame.width * frame.height;
  const out = new Uint8ClampedArray(n * 4);
  const src = frame.pixels;
  for (let i = 0; i < n; i++) {
    out[i * 4] = src[i * 3];
    out[i * 4 + 1] = src[i * 3 + 1];
    out[i * 4 + 2] = src[i * 3 + 2];
    out[i * 4 + 3] = 255;
  }
  return out;
}

/** Draw a frame into a 2D context at its native size (caller scales the
 * canvas element with CSS image-rendering: pixelated for the upscale). */
export function drawFrame(ctx: CanvasRenderingContext2D, frame: Frame): void {
  const image = new ImageData(rgbToRgba(frame), frame.width, frame.height);
  if (ctx.canvas.width !== frame.width) ctx.canvas.width = frame.width;
  if (ctx.canvas.height !== frame.height) ctx.canvas.height = frame.height;
  ctx.putImageData(image, 0, 0);
}
