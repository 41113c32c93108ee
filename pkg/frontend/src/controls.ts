/** Camera state machine: orbit and fly modes as a pure event reducer.
 *
 * The DOM layer translates browser events into InputEvents and feeds them
 * through applyEvent; everything here is pure and synchronous, so a
 * recorded event sequence replays to the identical pose sequence. A pose
 * message goes out only when an event actually moved the camera.
 */

import {
  Mat4, Quat, Vec3,
  c2wFrom, lookAtQuat, qfromAxisAngle, qmul, qnormalize, qrotate, vadd, vscale,
} from "./math.js";

export type ControlMode = "orbit" | "fly";

export interface CameraState {
  mode: ControlMode;
  target: Vec3;
  radius: number;
  yaw: number;
  pitch: number;
  position: Vec3;
  orientation: Quat;
  fovX: number;
}

export type InputEvent =
  | { kind: "drag"; dx: number; dy: number }
  | { kind: "wheel"; delta: number }
  | { kind: "look"; dx: number; dy: number }
  | { kind: "move"; key: "w" | "a" | "s" | "d" | "q" | "e"; dt: number }
  | { kind: "setMode"; mode: ControlMode };

export const ROTATE_PER_PX = 0.005;
export const LOOK_PER_PX = 0.0025;
export const ZOOM_PER_TICK = 0.1;
export const MOVE_UNITS_PER_S = 2.0;
const PITCH_LIMIT = Math.PI / 2 - 0.01;
const MIN_RADIUS = 0.05;

export function initialState(fovX = 0.9): CameraState {
  const state: CameraState = {
    mode: "orbit",
    target: [0, 0, 0],
    radius: 4,
    yaw: 0,
    pitch: 0.3,
    position: [0, 0, 0],
    orientation: [1, 0, 0, 0],
    fovX,
  };
  return syncFlyFromOrbit(state);
}

function orbitEye(state: CameraState): Vec3 {
  const cp = Math.cos(state.pitch);
  return vadd(state.target, vscale(
    [cp * Math.sin(state.yaw), Math.sin(state.pitch), cp * Math.cos(state.yaw)],
    state.radius,
  ));
}

function syncFlyFromOrbit(state: CameraState): CameraState {
  const eye = orbitEye(state);
  return {
    ...state,
    position: eye,
    orientation: lookAtQuat(eye, state.target),
  };
}

export function applyEvent(
  state: CameraState,
  event: InputEvent,
): { state: CameraState; poseChanged: boolean } {
  switch (event.kind) {
    case "setMode": {
      if (event.mode === state.mode) return { state, poseChanged: false };
      // entering fly keeps the current orbit pose; returning to orbit
      // re-aims at the stored target from the current position
      if (event.mode === "fly") {
        return { state: { ...syncFlyFromOrbit(state), mode: "fly" }, poseChanged: false };
      }
      const p = state.position;
      const d: Vec3 = [
        p[0] - state.target[0], p[1] - state.target[1], p[2] - state.target[2],
      ];
      const radius = Math.max(MIN_RADIUS, Math.hypot(d[0], d[1], d[2]));
      const pitch = Math.asin(Math.min(1, Math.max(-1, d[1] / radius)));
      const yaw = Math.atan2(d[0], d[2]);
      return {
        state: syncFlyFromOrbit({ ...state, mode: "orbit", radius, pitch, yaw }),
        poseChanged: true,
      };
    }
    case "drag": {
      if (state.mode !== "orbit" || (event.dx === 0 && event.dy === 0)) {
        return { state, poseChanged: false };
      }
      const yaw = state.yaw - event.dx * ROTATE_PER_PX;
      const pitch = Math.min(PITCH_LIMIT, Math.max(
        -PITCH_LIMIT, state.pitch + event.dy * ROTATE_PER_PX));
      return {
        state: syncFlyFromOrbit({ ...state, yaw, pitch }),
        poseChanged: true,
      };
    }
    case "wheel": {
      if (state.mode !== "orbit" || event.delta === 0) {
        return { state, poseChanged: false };
      }
      const radius = Math.max(
        MIN_RADIUS, state.radius * Math.exp(event.delta * ZOOM_PER_TICK));
      return {
        state: syncFlyFromOrbit({ ...state, radius }),
        poseChanged: radius !== state.radius,
      };
    }
    case "look": {
      if (state.mode !== "fly" || (event.dx === 0 && event.dy === 0)) {
        return { state, poseChanged: false };
      }
      // yaw about the world up axis, pitch about the camera's local right;
      // renormalized every step so the rotation stays orthonormal
      const yawQ = qfromAxisAngle([0, 1, 0], -event.dx * LOOK_PER_PX);
      const pitchQ = qfromAxisAngle([1, 0, 0], -event.dy * LOOK_PER_PX);
      const orientation = qnormalize(qmul(yawQ, qmul(state.orientation, pitchQ)));
      return { state: { ...state, orientation }, poseChanged: true };
    }
    case "move": {
      if (state.mode !== "fly" || event.dt <= 0) {
        return { state, poseChanged: false };
      }
      const step = MOVE_UNITS_PER_S * event.dt;
      const local: Record<string, Vec3> = {
        w: [0, 0, -step], s: [0, 0, step],
        a: [-step, 0, 0], d: [step, 0, 0],
        q: [0, -step, 0], e: [0, step, 0],
      };
      const delta = qrotate(state.orientation, local[event.key]);
      return {
        state: { ...state, position: vadd(state.position, delta) },
        poseChanged: true,
      };
    }
  }
}

/** Fold a whole recorded sequence; returns every pose that was emitted. */
export function replay(
  state: CameraState,
  events: InputEvent[],
): { state: CameraState; poses: Mat4[] } {
  const poses: Mat4[] = [];
  for (const event of events) {
    const next = applyEvent(state, event);
    state = next.state;
    if (next.poseChanged) poses.push(cameraC2W(state));
  }
  return { state, poses };
}

/** Current camera-to-world matrix, OpenGL convention, row-major. */
export function cameraC2W(state: CameraState): Mat4 {
  return c2wFrom(state.orientation, state.position);
}
