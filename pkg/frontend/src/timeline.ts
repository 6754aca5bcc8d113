/**
 * Timeline editing model: optimistic local edits with an explicit commit.
 *
 * Invariants maintained here:
 *  - a displayed frame always carries the revision recorded at commit time;
 *  - local validation is a subset of server validation, run before any
 *    server call so breaches surface as inline messages, not round trips.
 */
import { PreviewClient } from "./client.js";
import {
  Camera,
  FrameResponse,
  Keyframe,
  PreviewMode,
  SessionState,
  Trajectory,
} from "./types.js";
import { ValidationIssue, validateTrajectory } from "./validate.js";

export type Quat = [number, number, number, number]; // (w, x, y, z)

export function quatMultiply(a: Quat, b: Quat): Quat {
  return [
    a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
    a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
    a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
    a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
  ];
}

export function axisAngleQuat(axis: [number, number, number], deg: number): Quat {
  const half = (deg * Math.PI) / 360;
  const n = Math.hypot(...axis) || 1;
  const s = Math.sin(half) / n;
  return [Math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s];
}

/** Pose-and-intrinsics controls a keyframe editor exposes. */
export interface KeyframeControls {
  yawDeg?: number; // rotation about camera-up
  pitchDeg?: number; // rotation about camera-right
  rollDeg?: number; // rotation about the view axis
  translate?: [number, number, number]; // camera-space nudge (meters)
  zoom?: number; // focal multiplier, must be > 0
}

export function applyControls(camera: Camera, c: KeyframeControls): Camera {
  let rotation = camera.rotation.slice() as Quat;
  const spins: Array<[[number, number, number], number | undefined]> = [
    [[0, 1, 0], c.yawDeg],
    [[1, 0, 0], c.pitchDeg],
    [[0, 0, 1], c.rollDeg],
  ];
  for (const [axis, deg] of spins) {
    if (deg) rotation = quatMultiply(axisAngleQuat(axis, deg), rotation);
  }
  const translation = camera.translation.slice();
  if (c.translate) {
    for (let i = 0; i < 3; i++) translation[i] += c.translate[i];
  }
  const zoom = c.zoom ?? 1;
  return {
    ...camera,
    rotation,
    translation,
    intrinsics: {
      ...camera.intrinsics,
      fx: camera.intrinsics.fx * zoom,
      fy: camera.intrinsics.fy * zoom,
    },
  };
}

export interface TimelineModel {
  numFrames: number;
  trajectory: Trajectory;
  selectedFrame: number;
  previewMode: PreviewMode;
  pendingEdits: boolean;
  committedRevision: number;
  issues: ValidationIssue[];
}

export interface DisplayedFrame {
  index: number;
  mode: PreviewMode;
  revision: number;
  bytes: Uint8Array;
}

const PREFETCH_RADIUS = 2;

export class Timeline {
  model: TimelineModel;
  displayed: DisplayedFrame | null = null;

  private constructor(
    private client: PreviewClient,
    state: SessionState,
  ) {
    this.model = {
      numFrames: state.num_frames,
      trajectory: state.trajectory,
      selectedFrame: 0,
      previewMode: "composite",
      pendingEdits: false,
      committedRevision: state.revision,
      issues: [],
    };
  }

  static async connect(client: PreviewClient): Promise<Timeline> {
    return new Timeline(client, await client.getState());
  }

  /** Re-validate the current local spec; updates and returns the issues. */
  validate(): ValidationIssue[] {
    this.model.issues = validateTrajectory(
      this.model.trajectory,
      this.model.numFrames,
    );
    return this.model.issues;
  }

  selectFrame(index: number): void {
    if (!Number.isInteger(index) || index < 0 || index >= this.model.numFrames) {
      throw new RangeError(
        `frame ${index} outside [0, ${this.model.numFrames})`,
      );
    }
    this.model.selectedFrame = index;
  }

  setPreviewMode(mode: PreviewMode): void {
    this.model.previewMode = mode;
  }

  private keyframes(): Keyframe[] {
    if (this.model.trajectory.mode !== "keyframes" || !this.model.trajectory.keyframes) {
      throw new Error("trajectory is not in keyframe mode");
    }
    return this.model.trajectory.keyframes;
  }

  /**
   * Apply pose-and-intrinsics controls to the keyframe at `frame`
   * (creating one by copying the nearest earlier keyframe if absent).
   * Validation messages land in model.issues before any server call.
   */
  editKeyframe(frame: number, controls: KeyframeControls): TimelineModel {
    if (frame < 0 || frame >= this.model.numFrames) {
      throw new RangeError(`frame ${frame} outside [0, ${this.model.numFrames})`);
    }
    if (controls.zoom !== undefined && !(controls.zoom > 0)) {
      this.model.issues = [
        { field: "zoom", message: "zoom multiplier must be > 0" },
      ];
      return this.model;
    }
    const kfs = this.keyframes().slice();
    let at = kfs.findIndex((k) => k.index === frame);
    if (at < 0) {
      let src = 0;
      for (let i = 0; i < kfs.length; i++) if (kfs[i].index < frame) src = i;
      const copy: Keyframe = {
        index: frame,
        camera: structuredClone(kfs[src].camera),
      };
      at = kfs.findIndex((k) => k.index > frame);
      if (at < 0) at = kfs.length;
      kfs.splice(at, 0, copy);
    }
    kfs[at] = { index: frame, camera: applyControls(kfs[at].camera, controls) };
    this.model.trajectory = { ...this.model.trajectory, keyframes: kfs };
    this.model.pendingEdits = true;
    this.validate();
    return this.model;
  }

  /** Deleting the mandatory frame-0 keyframe is blocked with a message. */
  deleteKeyframe(frame: number): TimelineModel {
    if (frame === 0) {
      this.model.issues = [
        { field: "keyframes[0]", message: "first keyframe is mandatory" },
      ];
      return this.model;
    }
    const kfs = this.keyframes().filter((k) => k.index !== frame);
    this.model.trajectory = { ...this.model.trajectory, keyframes: kfs };
    this.model.pendingEdits = true;
    this.validate();
    return this.model;
  }

  replaceTrajectory(spec: Trajectory): TimelineModel {
    this.model.trajectory = spec;
    this.model.pendingEdits = true;
    this.validate();
    return this.model;
  }

  /**
   * Submit the local trajectory, record the committed revision, then fetch
   * and display the selected frame and prefetch its +-2 neighbors.
   *
   * Server rejections are surfaced verbatim and leave the model editable
   * (pendingEdits stays true, revision unchanged).
   */
  async commitAndPreview(): Promise<DisplayedFrame> {
    const issues = this.validate();
    if (issues.length > 0) {
      throw new Error(
        `local validation failed: ${issues.map((i) => `${i.field}: ${i.message}`).join("; ")}`,
      );
    }
    let revision: number;
    try {
      revision = await this.client.putTrajectory(this.model.trajectory);
    } catch (err) {
      this.model.issues = [
        { field: "server", message: err instanceof Error ? err.message : String(err) },
      ];
      throw err;
    }
    this.model.committedRevision = revision;
    this.model.pendingEdits = false;
    this.model.issues = [];
    const shown = await this.fetchFrame(this.model.selectedFrame);
    void this.prefetchNeighbors(this.model.selectedFrame);
    return shown;
  }

  /** Scrub to a frame: fetch it for the committed revision and display it. */
  async scrubTo(index: number): Promise<DisplayedFrame> {
    this.selectFrame(index);
    return this.fetchFrame(index);
  }

  private async fetchFrame(index: number): Promise<DisplayedFrame> {
    const frame = await this.client.getFrame(index, this.model.previewMode);
    this.assertRevision(frame, index);
    this.displayed = {
      index,
      mode: this.model.previewMode,
      revision: frame.revision,
      bytes: frame.bytes,
    };
    return this.displayed;
  }

  private assertRevision(frame: FrameResponse, index: number): void {
    if (frame.revision !== this.model.committedRevision) {
      throw new Error(
        `frame ${index} carries revision ${frame.revision}, ` +
          `expected committed revision ${this.model.committedRevision}`,
      );
    }
  }

  /** Idempotent concurrent prefetch of the +-2 neighbor frames. */
  async prefetchNeighbors(center: number): Promise<number[]> {
    const wanted: number[] = [];
    for (let d = -PREFETCH_RADIUS; d <= PREFETCH_RADIUS; d++) {
      const i = center + d;
      if (d !== 0 && i >= 0 && i < this.model.numFrames) wanted.push(i);
    }
    await Promise.all(
      wanted.map(async (i) => {
        const frame = await this.client.getFrame(i, this.model.previewMode);
        this.assertRevision(frame, i);
      }),
    );
    return wanted;
  }
}
