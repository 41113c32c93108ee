/** Keyframed camera paths and their export to the offline renderer.
 *
 * Keyframes are captured poses with a timestamp. Resampling walks the
 * timeline at a fixed frame rate, interpolating position linearly and
 * rotation along the shortest great-circle arc, and emits the same JSON
 * array of camera entries the command line tools read, so an exported
 * file renders offline without translation.
 */

import { Mat4, Quat, Vec3, c2wFrom, qslerp } from "./math.js";

export interface Keyframe {
  t: number;
  position: Vec3;
  orientation: Quat;
  fovX: number;
}

export interface TrajectoryEntry {
  c2w: number[];
  convention: "opengl";
  fov_x: number;
  width: number;
  height: number;
}

/** Append a keyframe, keeping the list strictly time-ordered. */
export function addKeyframe(keyframes: Keyframe[], frame: Keyframe): Keyframe[] {
  if (!Number.isFinite(frame.t)) throw new Error("keyframe time must be finite");
  const last = keyframes[keyframes.length - 1];
  if (last !== undefined && frame.t <= last.t) {
    throw new Error(
      `keyframe times must increase: got ${frame.t} after ${last.t}`);
  }
  return [...keyframes, frame];
}

/** Pose on the path at time t (clamped to the keyframed range). */
export function sampleAt(keyframes: Keyframe[], t: number): Keyframe {
  if (keyframes.length === 0) {
    throw new Error("cannot sample an empty trajectory");
  }
  if (t <= keyframes[0].t) return keyframes[0];
  const last = keyframes[keyframes.length - 1];
  if (t >= last.t) return last;
  let hi = 1;
  while (keyframes[hi].t < t) hi++;
  const a = keyframes[hi - 1];
  const b = keyframes[hi];
  const u = (t - a.t) / (b.t - a.t);
  return {
    t,
    position: [
      a.position[0] + u * (b.position[0] - a.position[0]),
      a.position[1] + u * (b.position[1] - a.position[1]),
      a.position[2] + u * (b.position[2] - a.position[2]),
    ],
    orientation: qslerp(a.orientation, b.orientation, u),
    fovX: a.fovX + u * (b.fovX - a.fovX),
  };
}

/** Resample the whole path at a fixed frame rate. A single keyframe yields
 * a single frame; the final keyframe is always included. */
export function resample(keyframes: Keyframe[], fps: number): Keyframe[] {
  if (keyframes.length === 0) {
    throw new Error("cannot resample an empty trajectory");
  }
  if (!(fps > 0)) throw new Error("frame rate must be positive");
  const t0 = keyframes[0].t;
  const t1 = keyframes[keyframes.length - 1].t;
  const frames: Keyframe[] = [];
  const count = Math.floor((t1 - t0) * fps);
  for (let i = 0; i <= count; i++) {
    frames.push(sampleAt(keyframes, t0 + i / fps));
  }
  const lastEmitted = frames[frames.length - 1];
  if (lastEmitted.t < t1) frames.push(keyframes[keyframes.length - 1]);
  return frames;
}

export function keyframeC2W(frame: Keyframe): Mat4 {
  return c2wFrom(frame.orientation, frame.position);
}

/** Serialize resampled frames as the camera-entry JSON array. */
export function exportTrajectory(
  keyframes: Keyframe[], fps: number, width: number, height: number,
): TrajectoryEntry[] {
  if (!Number.isInteger(width) || !Number.isInteger(height)
      || width <= 0 || height <= 0) {
    throw new Error("export dimensions must be positive integers");
  }
  return resample(keyframes, fps).map((frame) => ({
    c2w: Array.from(keyframeC2W(frame)),
    convention: "opengl" as const,
    fov_x: frame.fovX,
    width,
    height,
  }));
}

export function exportTrajectoryJSON(
  keyframes: Keyframe[], fps: number, width: number, height: number,
): string {
  return JSON.stringify(exportTrajectory(keyframes, fps, width, height), null, 1);
}
