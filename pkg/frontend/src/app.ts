/** Browser entry point: wires controls, websocket, canvas, and HUD.
 *
 * All logic with observable behavior lives in the imported modules; this
 * file only translates DOM events into InputEvents, schedules the
 * debounced pose sender, and pushes status text into the page. Pose
 * emission is coalesced on a timer so a drag storm produces at most one
 * request per tick; the server additionally keeps only the newest
 * request, so stale frames are never rendered.
 */

import {
  CameraState, InputEvent, applyEvent, cameraC2W, initialState,
} from "./controls.js";
import { FrameSink, drawFrame } from "./frame_sink.js";
import { MAX_FRAME_ID, buildRequest } from "./protocol.js";
import { Keyframe, addKeyframe, exportTrajectoryJSON } from "./trajectory.js";

const POSE_DEBOUNCE_MS = 33;
const RESIZE_DEBOUNCE_MS = 250;
const RECONNECT_MS = 1000;
const RENDER_SCALE = 0.5;
const MAX_RENDER_DIM = 1024;
const EXPORT_FPS = 30;
const MOVE_KEYS = ["w", "a", "s", "d", "q", "e"] as const;

type MoveKey = (typeof MOVE_KEYS)[number];
type Connection = "connecting" | "connected" | "closed";

function isMoveKey(key: string): key is MoveKey {
  return (MOVE_KEYS as readonly string[]).includes(key);
}

class ViewerApp {
  private camera: CameraState = initialState();
  private keyframes: Keyframe[] = [];
  private readonly sink = new FrameSink();
  private ws: WebSocket | null = null;
  private connection: Connection = "closed";
  private nextFrameId = 0;
  private poseDirty = true;
  private resizeTimer: number | null = null;
  private renderWidth = 256;
  private renderHeight = 256;
  private readonly held = new Set<MoveKey>();
  private lastTick = performance.now();
  private dragging = false;
  private toastTimer: number | null = null;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly hud: HTMLElement,
    private readonly toast: HTMLElement,
    private readonly url: string,
  ) {}

  start(): void {
    this.bindInput();
    this.updateRenderSize();
    this.connect();
    const tick = () => {
      this.stepHeldKeys();
      this.renderHud();
      requestAnimationFrame(tick);
    };
    requestAnimationFrame(tick);
    window.setInterval(() => this.flushPose(), POSE_DEBOUNCE_MS);
  }

  private connect(): void {
    this.connection = "connecting";
    const ws = new WebSocket(this.url);
    ws.binaryType = "arraybuffer";
    ws.onopen = () => {
      this.connection = "connected";
      this.poseDirty = true;
    };
    ws.onmessage = (event: MessageEvent) => {
      if (typeof event.data === "string") {
        this.sink.acceptText(event.data);
        return;
      }
      const frame = this.sink.acceptBinary(event.data as ArrayBuffer);
      if (frame !== null) {
        const ctx = this.canvas.getContext("2d");
        if (ctx !== null) drawFrame(ctx, frame);
      }
    };
    ws.onclose = () => {
      this.connection = "closed";
      this.ws = null;
      window.setTimeout(() => this.connect(), RECONNECT_MS);
    };
    this.ws = ws;
  }

  private apply(event: InputEvent): void {
    const next = applyEvent(this.camera, event);
    this.camera = next.state;
    if (next.poseChanged) this.poseDirty = true;
  }

  private flushPose(): void {
    if (!this.poseDirty || this.connection !== "connected" || this.ws === null) {
      return;
    }
    const request = buildRequest(
      this.nextFrameId, cameraC2W(this.camera), this.camera.fovX,
      this.renderWidth, this.renderHeight);
    this.nextFrameId = (this.nextFrameId + 1) % (MAX_FRAME_ID + 1);
    this.ws.send(JSON.stringify(request));
    this.poseDirty = false;
  }

  private stepHeldKeys(): void {
    const now = performance.now();
    const dt = Math.min(0.1, (now - this.lastTick) / 1000);
    this.lastTick = now;
    if (this.camera.mode !== "fly" || this.held.size === 0) return;
    for (const key of this.held) {
      this.apply({ kind: "move", key, dt });
    }
  }

  private updateRenderSize(): void {
    const rect = this.canvas.getBoundingClientRect();
    const w = Math.max(16, Math.min(MAX_RENDER_DIM,
      Math.round(rect.width * RENDER_SCALE)));
    const h = Math.max(16, Math.min(MAX_RENDER_DIM,
      Math.round(rect.height * RENDER_SCALE)));
    if (w !== this.renderWidth || h !== this.renderHeight) {
      this.renderWidth = w;
      this.renderHeight = h;
      this.poseDirty = true;
    }
  }

  private bindInput(): void {
    this.canvas.addEventListener("pointerdown", (e) => {
      this.dragging = true;
      this.canvas.setPointerCapture(e.pointerId);
    });
    this.canvas.addEventListener("pointerup", () => { this.dragging = false; });
    this.canvas.addEventListener("pointermove", (e) => {
      if (!this.dragging) return;
      if (this.camera.mode === "orbit") {
        this.apply({ kind: "drag", dx: e.movementX, dy: e.movementY });
      } else {
        this.apply({ kind: "look", dx: e.movementX, dy: e.movementY });
      }
    });
    this.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.apply({ kind: "wheel", delta: Math.sign(e.deltaY) });
    }, { passive: false });
    window.addEventListener("keydown", (e) => {
      const key = e.key.toLowerCase();
      if (isMoveKey(key)) this.held.add(key);
      if (key === "f") {
        const mode = this.camera.mode === "orbit" ? "fly" : "orbit";
        this.apply({ kind: "setMode", mode });
      }
      if (key === "k") this.captureKeyframe();
      if (key === "x") this.exportKeyframes();
    });
    window.addEventListener("keyup", (e) => {
      const key = e.key.toLowerCase();
      if (isMoveKey(key)) this.held.delete(key);
    });
    window.addEventListener("resize", () => {
      if (this.resizeTimer !== null) window.clearTimeout(this.resizeTimer);
      this.resizeTimer = window.setTimeout(
        () => this.updateRenderSize(), RESIZE_DEBOUNCE_MS);
    });
  }

  private captureKeyframe(): void {
    const t = this.keyframes.length === 0
      ? 0
      : this.keyframes[this.keyframes.length - 1].t + 1;
    this.keyframes = addKeyframe(this.keyframes, {
      t,
      position: this.camera.position,
      orientation: this.camera.orientation,
      fovX: this.camera.fovX,
    });
    this.showToast(`keyframe ${this.keyframes.length} captured`);
  }

  private exportKeyframes(): void {
    let json: string;
    try {
      json = exportTrajectoryJSON(
        this.keyframes, EXPORT_FPS, this.renderWidth, this.renderHeight);
    } catch (err) {
      this.showToast(String(err instanceof Error ? err.message : err));
      return;
    }
    const blob = new Blob([json], { type: "application/json" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = "trajectory.json";
    link.click();
    URL.revokeObjectURL(link.href);
    this.showToast(`exported ${this.keyframes.length} keyframes`);
  }

  private showToast(message: string): void {
    this.toast.textContent = message;
    this.toast.classList.add("visible");
    if (this.toastTimer !== null) window.clearTimeout(this.toastTimer);
    this.toastTimer = window.setTimeout(
      () => this.toast.classList.remove("visible"), 2500);
  }

  private renderHud(): void {
    const status = this.sink.getStatus();
    const parts = [
      `${this.connection}`,
      `mode ${this.camera.mode} (F toggles)`,
      `${status.width}x${status.height}`,
      `fps ${status.fps.toFixed(1)}`,
      status.lastFrameId === null ? "no frames" : `frame ${status.lastFrameId}`,
      `${this.keyframes.length} keyframes (K adds, X exports)`,
    ];
    if (status.error !== null) parts.push(`ERROR: ${status.error}`);
    this.hud.textContent = parts.join(" | ");
    this.hud.classList.toggle("error", status.error !== null);
  }
}

function main(): void {
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const hud = document.getElementById("hud") as HTMLElement;
  const toast = document.getElementById("toast") as HTMLElement;
  const proto = location.protocol === "https:" ? "wss" : "ws";
  // the static files and the render service usually run on different
  // ports; ?service=host:port overrides the default of port 8000 here
  const override = new URLSearchParams(location.search).get("service");
  const host = override
    ?? `${location.hostname === "" ? "127.0.0.1" : location.hostname}:8000`;
  new ViewerApp(canvas, hud, toast, `${proto}://${host}/render`).start();
}

main();
