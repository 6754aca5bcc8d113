/**
 * Client-side trajectory validation.
 *
 * Every rule here is a strict subset of what the server enforces, so a
 * spec accepted locally is never rejected remotely except on races.
 * Messages are returned (not thrown) so the UI can render them inline.
 */
import { PRESET_KINDS, Trajectory } from "./types.js";

export interface ValidationIssue {
  field: string;
  message: string;
}

function quatNorm(q: number[]): number {
  return Math.hypot(q[0], q[1], q[2], q[3]);
}

/** Validate a trajectory against the frame count the scene requires. */
export function validateTrajectory(
  spec: Trajectory,
  requiredFrames: number,
): ValidationIssue[] {
  const issues: ValidationIssue[] = [];
  const push = (field: string, message: string) => issues.push({ field, message });

  if (spec.mode === "preset") {
    const p = spec.preset;
    if (!p) {
      push("preset", "preset mode requires a preset");
      return issues;
    }
    if (!(PRESET_KINDS as readonly string[]).includes(p.kind)) {
      push("preset.kind", `unknown preset kind '${p.kind}'`);
    }
    if (!Number.isInteger(p.frames) || p.frames < 1) {
      push("preset.frames", "frame count must be a positive integer");
    }
    if (p.kind === "zoom" && !(p.magnitude > 0)) {
      push("preset.magnitude", "zoom multiplier must be > 0");
    }
    if (!Number.isFinite(p.magnitude)) {
      push("preset.magnitude", "magnitude must be finite");
    }
    if (p.frames !== requiredFrames) {
      push(
        "preset.frames",
        `trajectory must cover ${requiredFrames} frames, got ${p.frames}`,
      );
    }
    return issues;
  }

  const kfs = spec.keyframes;
  if (!kfs || kfs.length === 0) {
    push("keyframes", "keyframe mode requires at least one keyframe");
    return issues;
  }
  if (kfs[0].index !== 0) {
    push("keyframes[0].index", "first keyframe must be at frame 0");
  }
  for (let i = 1; i < kfs.length; i++) {
    if (kfs[i].index <= kfs[i - 1].index) {
      push(`keyframes[${i}].index`, "keyframe indices must be strictly increasing");
    }
  }
  kfs.forEach((kf, i) => {
    const where = `keyframes[${i}]`;
    const cam = kf.camera;
    if (!(cam.intrinsics.fx > 0) || !(cam.intrinsics.fy > 0)) {
      push(`${where}.camera.intrinsics`, "focal lengths must be > 0");
    }
    if (cam.width < 1 || cam.height < 1) {
      push(`${where}.camera`, "image size must be at least 1x1");
    }
    if (cam.rotation.length !== 4 || quatNorm(cam.rotation) < 1e-12) {
      push(`${where}.camera.rotation`, "rotation must be a non-zero quaternion");
    }
    if (cam.translation.length !== 3) {
      push(`${where}.camera.translation`, "translation must be a 3-vector");
    }
  });
  const last = kfs[kfs.length - 1];
  if (last.index + 1 !== requiredFrames) {
    push(
      "keyframes",
      `last keyframe must sit at frame ${requiredFrames - 1}, got ${last.index}`,
    );
  }
  return issues;
}
