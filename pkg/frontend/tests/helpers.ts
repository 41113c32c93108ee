/** Shared builders for the test suites. */

import { Mat4 } from "../src/math.js";

/** Assemble a binary frame message: 8-byte LE header + RGB8 payload. */
export function makeFrameMessage(
  frameId: number, width: number, height: number, pixels?: Uint8Array,
): ArrayBuffer {
  const buf = new ArrayBuffer(8 + width * height * 3);
  const view = new DataView(buf);
  view.setUint32(0, frameId, true);
  view.setUint16(4, width, true);
  view.setUint16(6, height, true);
  const body = new Uint8Array(buf, 8);
  if (pixels !== undefined) {
    body.set(pixels);
  } else {
    for (let i = 0; i < body.length; i++) body[i] = i % 256;
  }
  return buf;
}

/** Largest entry of |R^T R - I| over the rotation block of a row-major c2w. */
export function rotationError(m: Mat4): number {
  let worst = 0;
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      let dot = 0;
      for (let k = 0; k < 3; k++) dot += m[k * 4 + i] * m[k * 4 + j];
      worst = Math.max(worst, Math.abs(dot - (i === j ? 1 : 0)));
    }
  }
  return worst;
}

export function maxAbsDiff(a: number[], b: number[]): number {
  if (a.length !== b.length) return Infinity;
  let worst = 0;
  for (let i = 0; i < a.length; i++) {
    worst = Math.max(worst, Math.abs(a[i] - b[i]));
  }
  return worst;
}
