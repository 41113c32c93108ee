import { describe, expect, it } from "vitest";

import { c2wFrom, lookAtQuat } from "../src/math.js";
import {
  MAX_DIM, MAX_FRAME_ID, buildRequest, parseFrame, parseServiceText,
} from "../src/protocol.js";
import { makeFrameMessage } from "./helpers.js";

const IDENTITY = c2wFrom([1, 0, 0, 0], [0, 0, 0]);

describe("buildRequest", () => {
  it("emits the outbound schema tagged opengl", () => {
    const req = buildRequest(7, IDENTITY, 0.9, 320, 240);
    expect(req).toEqual({
      frame_id: 7,
      c2w: IDENTITY,
      convention: "opengl",
      fov_x: 0.9,
      width: 320,
      height: 240,
    });
    // must survive JSON round-tripping for the wire
    expect(JSON.parse(JSON.stringify(req))).toEqual(req);
  });

  it("accepts the id and size extremes the header can carry", () => {
    expect(buildRequest(MAX_FRAME_ID, IDENTITY, 0.9, MAX_DIM, 1).frame_id)
      .toBe(MAX_FRAME_ID);
    expect(buildRequest(0, IDENTITY, 0.9, 1, MAX_DIM).width).toBe(1);
  });

  it.each([
    ["fractional frame id", () => buildRequest(1.5, IDENTITY, 0.9, 64, 64)],
    ["negative frame id", () => buildRequest(-1, IDENTITY, 0.9, 64, 64)],
    ["frame id past u32", () => buildRequest(MAX_FRAME_ID + 1, IDENTITY, 0.9, 64, 64)],
    ["zero width", () => buildRequest(0, IDENTITY, 0.9, 0, 64)],
    ["width past u16", () => buildRequest(0, IDENTITY, 0.9, MAX_DIM + 1, 64)],
    ["short matrix", () => buildRequest(0, IDENTITY.slice(0, 15), 0.9, 64, 64)],
    ["non-finite entry", () => {
      const bad = [...IDENTITY];
      bad[5] = NaN;
      return buildRequest(0, bad, 0.9, 64, 64);
    }],
    ["bad bottom row", () => {
      const bad = [...IDENTITY];
      bad[12] = 0.5;
      return buildRequest(0, bad, 0.9, 64, 64);
    }],
    ["zero fov", () => buildRequest(0, IDENTITY, 0, 64, 64)],
    ["fov of pi", () => buildRequest(0, IDENTITY, Math.PI, 64, 64)],
  ])("rejects %s", (_name, call) => {
    expect(call).toThrow();
  });

  it("writes the wire text the server parses", async () => {
    // the committed file below is replayed against the real server in its
    // test suite, pinning the outbound schema from this side of the wire
    const eye: [number, number, number] = [2.1, 1.2, 2.4];
    const pose = c2wFrom(lookAtQuat(eye, [0, 0, 0]), eye);
    const text = JSON.stringify(buildRequest(42, pose, 0.9, 24, 16), null, 1);
    await expect(text).toMatchFileSnapshot("./fixtures/pose_request.json");
  });
});

describe("parseFrame", () => {
  it("decodes header fields little-endian and keeps the payload", () => {
    const pixels = new Uint8Array(2 * 3 * 3);
    pixels.forEach((_, i) => { pixels[i] = 10 * i; });
    const parsed = parseFrame(makeFrameMessage(0x01020304, 2, 3, pixels));
    if ("error" in parsed) throw new Error(parsed.error);
    expect(parsed.frameId).toBe(0x01020304);
    expect(parsed.width).toBe(2);
    expect(parsed.height).toBe(3);
    expect(Array.from(parsed.pixels)).toEqual(Array.from(pixels));
  });

  it("reads the raw bytes in the documented order", () => {
    // hand-built: frame_id 258 = 02 01 00 00, width 3, height 1, 9 bytes
    const raw = new Uint8Array([2, 1, 0, 0, 3, 0, 1, 0, 9, 9, 9, 9, 9, 9, 9, 9, 9]);
    const parsed = parseFrame(raw.buffer);
    if ("error" in parsed) throw new Error(parsed.error);
    expect(parsed.frameId).toBe(258);
    expect(parsed.width).toBe(3);
    expect(parsed.height).toBe(1);
  });

  it("flags a message shorter than the header", () => {
    const parsed = parseFrame(new Uint8Array([1, 2, 3]).buffer);
    expect(parsed).toHaveProperty("error");
  });

  it("flags a truncated payload without throwing", () => {
    const whole = makeFrameMessage(5, 4, 4);
    const short = whole.slice(0, whole.byteLength - 7);
    const parsed = parseFrame(short);
    if (!("error" in parsed)) throw new Error("expected an error");
    expect(parsed.error).toContain("expected");
  });

  it("flags a zero-sized frame", () => {
    const parsed = parseFrame(makeFrameMessage(1, 0, 0));
    expect(parsed).toHaveProperty("error");
  });
});

describe("parseServiceText", () => {
  it("decodes a server error payload", () => {
    const text = JSON.stringify({
      frame_id: 12, error: { code: "too_large", message: "frame exceeds cap" },
    });
    const parsed = parseServiceText(text);
    if ("error" in parsed) throw new Error(parsed.error);
    expect(parsed.frameId).toBe(12);
    expect(parsed.code).toBe("too_large");
    expect(parsed.message).toContain("cap");
  });

  it("tolerates a null frame id", () => {
    const parsed = parseServiceText(
      '{"frame_id": null, "error": {"code": "bad_request", "message": "x"}}');
    if ("error" in parsed) throw new Error(parsed.error);
    expect(parsed.frameId).toBeNull();
  });

  it("does not throw on garbage", () => {
    expect(parseServiceText("{not json")).toHaveProperty("error");
    expect(parseServiceText('"just a string"')).toHaveProperty("error");
  });
});
