/**
 * Wire schema for the preview service, mirrored with zod so every payload
 * is validated at the boundary in both directions.
 *
 * Routes consumed:
 *   GET /state
 *   PUT /trajectory
 *   GET /frame/{index}?mode=&scale=
 */
import { z } from "zod";

export const PRESET_KINDS = ["orbit", "dolly", "truck", "zoom"] as const;
export const MODES = ["pose", "depth", "composite"] as const;
export const CONVENTIONS = ["world_to_camera", "camera_to_world"] as const;

export type PresetKind = (typeof PRESET_KINDS)[number];
export type PreviewMode = (typeof MODES)[number];

export const IntrinsicsSchema = z.object({
  fx: z.number().positive(),
  fy: z.number().positive(),
  cx: z.number(),
  cy: z.number(),
});
export type Intrinsics = z.infer<typeof IntrinsicsSchema>;

export const CameraSchema = z.object({
  width: z.number().int().min(1),
  height: z.number().int().min(1),
  intrinsics: IntrinsicsSchema,
  rotation: z.array(z.number()).length(4), // unit quaternion (w, x, y, z)
  translation: z.array(z.number()).length(3),
});
export type Camera = z.infer<typeof CameraSchema>;

export const PresetSchema = z.object({
  kind: z.enum(PRESET_KINDS),
  magnitude: z.number(),
  frames: z.number().int().min(1),
  anchor: z.array(z.number()).length(3).default([0, 0, 0]),
  up: z.array(z.number()).length(3).default([0, 1, 0]),
});
export type Preset = z.infer<typeof PresetSchema>;

export const KeyframeSchema = z.object({
  index: z.number().int().min(0),
  camera: CameraSchema,
});
export type Keyframe = z.infer<typeof KeyframeSchema>;

export const TrajectorySchema = z.object({
  mode: z.enum(["preset", "keyframes"]),
  convention: z.enum(CONVENTIONS).default("world_to_camera"),
  preset: PresetSchema.nullish(),
  keyframes: z.array(KeyframeSchema).nullish(),
});
export type Trajectory = z.infer<typeof TrajectorySchema>;

export const StateSchema = z.object({
  revision: z.number().int().min(0),
  num_frames: z.number().int().min(1),
  width: z.number().int().min(1),
  height: z.number().int().min(1),
  trajectory: TrajectorySchema,
  parameters: z.record(z.string(), z.unknown()),
});
export type SessionState = z.infer<typeof StateSchema>;

export const RevisionSchema = z.object({
  revision: z.number().int().min(0),
});

/** A fetched frame with the headers the UI's invariants depend on. */
export interface FrameResponse {
  bytes: Uint8Array;
  revision: number;
  digest: string;
  etag: string;
  notModified: boolean;
}
