/** Wire protocol of the render service.
 *
 * Outbound: one JSON text message per requested pose.
 * Inbound: one binary message per frame, led by an 8-byte header
 * (frame_id u32 LE, width u16 LE, height u16 LE) and followed by exactly
 * width*height*3 bytes of RGB, row-major from the top-left; or one JSON
 * text message carrying {frame_id, error: {code, message}}.
 */

import type { Mat4 } from "./math.js";

export interface RenderRequest {
  frame_id: number;
  c2w: number[];
  convention: "opengl" | "opencv";
  fov_x: number;
  width: number;
  height: number;
}

export interface Frame {
  frameId: number;
  width: number;
  height: number;
  pixels: Uint8Array;
}

export interface ServiceError {
  frameId: number | null;
  code: string;
  message: string;
}

export const HEADER_BYTES = 8;
export const MAX_FRAME_ID = 0xffffffff;
export const MAX_DIM = 0xffff;

/** Build an outbound request, enforcing the schema the server checks. */
export function buildRequest(
  frameId: number,
  c2w: Mat4,
  fovX: number,
  width: number,
  height: number,
): RenderRequest {
  if (!Number.isInteger(frameId) || frameId < 0 || frameId > MAX_FRAME_ID) {
    throw new Error(`frame_id out of range: ${frameId}`);
  }
  if (!Number.isInteger(width) || !Number.isInteger(height)
      || width < 1 || height < 1 || width > MAX_DIM || height > MAX_DIM) {
    throw new Error(`bad dimensions: ${width}x${height}`);
  }
  if (c2w.length !== 16 || !c2w.every(Number.isFinite)) {
    throw new Error("c2w must be 16 finite numbers");
  }
  const bottom = c2w.slice(12);
  if (Math.abs(bottom[0]) > 1e-6 || Math.abs(bottom[1]) > 1e-6
      || Math.abs(bottom[2]) > 1e-6 || Math.abs(bottom[3] - 1) > 1e-6) {
    throw new Error("c2w bottom row must be (0,0,0,1)");
  }
  if (!(fovX > 0 && fovX < Math.PI)) {
    throw new Error(`fov_x out of range: ${fovX}`);
  }
  return {
    frame_id: frameId,
    c2w: [...c2w],
    convention: "opengl",
    fov_x: fovX,
    width,
    height,
  };
}

/** Parse one inbound binary message. Returns an error for any malformed
 * payload instead of throwing, so a glitch never tears the sink down. */
export function parseFrame(data: ArrayBuffer): Frame | { error: string } {
  if (data.byteLength < HEADER_BYTES) {
    return { error: `message of ${data.byteLength} bytes is shorter than the header` };
  }
  const view = new DataView(data);
  const frameId = view.getUint32(0, true);
  const width = view.getUint16(4, true);
  const height = view.getUint16(6, true);
  const expected = HEADER_BYTES + width * height * 3;
  if (data.byteLength !== expected) {
    return {
      error: `frame ${frameId}: expected ${expected} bytes for `
        + `${width}x${height}, got ${data.byteLength}`,
    };
  }
  if (width === 0 || height === 0) {
    return { error: `frame ${frameId}: zero-sized frame` };
  }
  return { frameId, width, height, pixels: new Uint8Array(data, HEADER_BYTES) };
}

/** Parse one inbound text message (the server's error channel). */
export function parseServiceText(text: string): ServiceError | { error: string } {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    return { error: "unparseable text message from server" };
  }
  if (typeof obj !== "object" || obj === null || !("error" in obj)) {
    return { error: "unexpected text message from server" };
  }
  const payload = obj as { frame_id?: unknown; error: { code?: unknown; message?: unknown } };
  return {
    frameId: typeof payload.frame_id === "number" ? payload.frame_id : null,
    code: String(payload.error.code ?? "unknown"),
    message: String(payload.error.message ?? ""),
  };
}
