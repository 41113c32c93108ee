import { describe, expect, it } from "vitest";

import {
  Quat, Vec3,
  c2wFrom, lookAtQuat, qfromAxisAngle, qmul, qnormalize, qrotate, qslerp,
  vcross, vdot, vnormalize,
} from "../src/math.js";
import { maxAbsDiff, rotationError } from "./helpers.js";

function expectVec(actual: Vec3, expected: Vec3, tol = 1e-12): void {
  expect(maxAbsDiff(actual, expected)).toBeLessThan(tol);
}

describe("quaternions", () => {
  it("rotates a vector by the right-hand rule", () => {
    const q = qfromAxisAngle([0, 0, 1], Math.PI / 2);
    expectVec(qrotate(q, [1, 0, 0]), [0, 1, 0]);
    expectVec(qrotate(q, [0, 1, 0]), [-1, 0, 0]);
  });

  it("composes via multiplication", () => {
    const quarter = qfromAxisAngle([0, 1, 0], Math.PI / 2);
    const half = qfromAxisAngle([0, 1, 0], Math.PI);
    const composed = qmul(quarter, quarter);
    expectVec(qrotate(composed, [1, 0, 0]), qrotate(half, [1, 0, 0]));
  });

  it("normalizes and rejects the zero quaternion", () => {
    const q = qnormalize([2, 0, 0, 0]);
    expect(q).toEqual([1, 0, 0, 0]);
    expect(() => qnormalize([0, 0, 0, 0])).toThrow();
  });

  it("slerp hits endpoints and bisects a quarter turn", () => {
    const a: Quat = [1, 0, 0, 0];
    const b = qfromAxisAngle([0, 1, 0], Math.PI / 2);
    expect(maxAbsDiff(qslerp(a, b, 0), a)).toBeLessThan(1e-12);
    expect(maxAbsDiff(qslerp(a, b, 1), b)).toBeLessThan(1e-12);
    const mid = qslerp(a, b, 0.5);
    const expected = qfromAxisAngle([0, 1, 0], Math.PI / 4);
    expect(maxAbsDiff(mid, expected)).toBeLessThan(1e-12);
  });

  it("slerp takes the short way around for negated endpoints", () => {
    const a = qfromAxisAngle([1, 0, 0], 0.3);
    const b = qfromAxisAngle([1, 0, 0], 0.8);
    const negB: Quat = [-b[0], -b[1], -b[2], -b[3]];
    const mid = qslerp(a, negB, 0.5);
    const expected = qfromAxisAngle([1, 0, 0], 0.55);
    // -q is the same rotation, so compare by what it does to a vector
    expectVec(qrotate(mid, [0, 1, 0]), qrotate(expected, [0, 1, 0]));
  });
});

describe("vectors", () => {
  it("cross and dot agree on orthogonality", () => {
    const a: Vec3 = [1, 2, 3];
    const b: Vec3 = [-2, 0.5, 4];
    const c = vcross(a, b);
    expect(Math.abs(vdot(a, c))).toBeLessThan(1e-12);
    expect(Math.abs(vdot(b, c))).toBeLessThan(1e-12);
  });

  it("normalize rejects the zero vector", () => {
    expect(() => vnormalize([0, 0, 0])).toThrow();
  });
});

describe("camera matrices", () => {
  it("c2w carries position in the last column and an exact bottom row", () => {
    const m = c2wFrom(qfromAxisAngle([0, 1, 0], 0.7), [1, -2, 3]);
    expect([m[3], m[7], m[11]]).toEqual([1, -2, 3]);
    expect(m.slice(12)).toEqual([0, 0, 0, 1]);
    expect(rotationError(m)).toBeLessThan(1e-12);
  });

  it("lookAt points the local -Z at the target with +Y up", () => {
    const q = lookAtQuat([0, 0, 5], [0, 0, 0]);
    expectVec(qrotate(q, [0, 0, -1]), [0, 0, -1]);
    expectVec(qrotate(q, [0, 1, 0]), [0, 1, 0]);
    expectVec(qrotate(q, [1, 0, 0]), [1, 0, 0]);

    const side = lookAtQuat([5, 0, 0], [0, 0, 0]);
    expectVec(qrotate(side, [0, 0, -1]), [-1, 0, 0]);
    expectVec(qrotate(side, [0, 1, 0]), [0, 1, 0]);
  });

  it("lookAt survives looking straight down the up axis", () => {
    const q = lookAtQuat([0, 5, 0], [0, 0, 0]);
    expectVec(qrotate(q, [0, 0, -1]), [0, -1, 0]);
    expect(rotationError(c2wFrom(q, [0, 5, 0]))).toBeLessThan(1e-12);
  });

  it("round-trips orientation through the matrix", () => {
    const q = qnormalize([0.4, -0.3, 0.7, 0.2]);
    const m = c2wFrom(q, [0, 0, 0]);
    // columns of the rotation are the camera axes in world coordinates
    expectVec(qrotate(q, [1, 0, 0]), [m[0], m[4], m[8]]);
    expectVec(qrotate(q, [0, 1, 0]), [m[1], m[5], m[9]]);
    expectVec(qrotate(q, [0, 0, 1]), [m[2], m[6], m[10]]);
  });
});
