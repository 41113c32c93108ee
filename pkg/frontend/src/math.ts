/** Minimal vector/quaternion/matrix math for camera work.
 *
 * Conventions match the wire format: matrices are 16 numbers row-major,
 * quaternions are [w, x, y, z] (scalar first), and cameras are OpenGL,
 * looking down their local -Z with +Y up.
 */

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number];
export type Mat4 = number[];

export function vadd(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function vscale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function vdot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function vcross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function vnorm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

export function vnormalize(a: Vec3): Vec3 {
  const n = vnorm(a);
  if (n === 0) throw new Error("cannot normalize a zero vector");
  return vscale(a, 1 / n);
}

export function qnormalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  if (n === 0) throw new Error("cannot normalize a zero quaternion");
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function qmul(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function qfromAxisAngle(axis: Vec3, angle: number): Quat {
  const u = vnormalize(axis);
  const h = angle / 2;
  const s = Math.sin(h);
  return [Math.cos(h), u[0] * s, u[1] * s, u[2] * s];
}

export function qrotate(q: Quat, v: Vec3): Vec3 {
  // v' = q * (0, v) * conj(q)
  const [w, x, y, z] = q;
  const tx = 2 * (y * v[2] - z * v[1]);
  const ty = 2 * (z * v[0] - x * v[2]);
  const tz = 2 * (x * v[1] - y * v[0]);
  return [
    v[0] + w * tx + y * tz - z * ty,
    v[1] + w * ty + z * tx - x * tz,
    v[2] + w * tz + x * ty - y * tx,
  ];
}

/** Shortest-path spherical interpolation; nlerp near parallel. */
export function qslerp(a: Quat, b: Quat, t: number): Quat {
  if (a[0] === b[0] && a[1] === b[1] && a[2] === b[2] && a[3] === b[3]) {
    // bitwise-equal endpoints come back verbatim so a held pose stays held
    return [a[0], a[1], a[2], a[3]];
  }
  let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
  let bb = b;
  if (dot < 0) {
    bb = [-b[0], -b[1], -b[2], -b[3]];
    dot = -dot;
  }
  if (dot > 0.9995) {
    const lerped: Quat = [
      a[0] + t * (bb[0] - a[0]),
      a[1] + t * (bb[1] - a[1]),
      a[2] + t * (bb[2] - a[2]),
      a[3] + t * (bb[3] - a[3]),
    ];
    return qnormalize(lerped);
  }
  const theta = Math.acos(dot);
  const s = Math.sin(theta);
  const wa = Math.sin((1 - t) * theta) / s;
  const wb = Math.sin(t * theta) / s;
  return [
    wa * a[0] + wb * bb[0],
    wa * a[1] + wb * bb[1],
    wa * a[2] + wb * bb[2],
    wa * a[3] + wb * bb[3],
  ];
}

/** Row-major camera-to-world matrix from orientation + position. */
export function c2wFrom(q: Quat, position: Vec3): Mat4 {
  const [w, x, y, z] = qnormalize(q);
  // rotation columns are the camera axes expressed in world coordinates
  const r = [
    1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
    2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
    2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y),
  ];
  return [
    r[0], r[1], r[2], position[0],
    r[3], r[4], r[5], position[1],
    r[6], r[7], r[8], position[2],
    0, 0, 0, 1,
  ];
}

/** Orientation looking from eye toward target (OpenGL: -Z forward). */
export function lookAtQuat(eye: Vec3, target: Vec3, up: Vec3 = [0, 1, 0]): Quat {
  const f = vnormalize([
    target[0] - eye[0], target[1] - eye[1], target[2] - eye[2],
  ]);
  let right: Vec3;
  try {
    right = vnormalize(vcross(f, up));
  } catch {
    right = vnormalize(vcross(f, [0, 0, 1]));
  }
  const trueUp = vcross(right, f);
  // columns: right, up, -forward
  const m = [
    right[0], trueUp[0], -f[0],
    right[1], trueUp[1], -f[1],
    right[2], trueUp[2], -f[2],
  ];
  return qnormalize(quatFromMat3(m));
}

function quatFromMat3(m: number[]): Quat {
  const trace = m[0] + m[4] + m[8];
  if (trace > 0) {
    const s = Math.sqrt(trace + 1) * 2;
    return [s / 4, (m[7] - m[5]) / s, (m[2] - m[6]) / s, (m[3] - m[1]) / s];
  }
  if (m[0] > m[4] && m[0] > m[8]) {
    const s = Math.sqrt(1 + m[0] - m[4] - m[8]) * 2;
    return [(m[7] - m[5]) / s, s / 4, (m[1] + m[3]) / s, (m[2] + m[6]) / s];
  }
  if (m[4] > m[8]) {
    const s = Math.sqrt(1 + m[4] - m[0] - m[8]) * 2;
    return [(m[2] - m[6]) / s, (m[1] + m[3]) / s, s / 4, (m[5] + m[7]) / s];
  }
  const s = Math.sqrt(1 + m[8] - m[0] - m[4]) * 2;
  return [(m[3] - m[1]) / s, (m[2] + m[6]) / s, (m[5] + m[7]) / s, s / 4];
}
