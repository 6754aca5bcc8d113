"""Camera trajectory generation: cinematic presets and keyframe
interpolation, expanded to per-frame cameras.

Presets: orbit (degrees about the world-up axis through an anchor),
dolly (meters along the initial view direction), truck (meters along the
initial camera-right axis), zoom (focal multiplier, extrinsics fixed).
Time parametrization is linear; easing is a keyframe-mode concern.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidSpec
from .geom import (CameraFrame, Extrinsics, Intrinsics, interpolate_pose,
                   quat_from_matrix, quat_to_matrix)

__all__ = ["PresetSpec", "Keyframe", "TrajectorySpec", "expand",
           "PRESET_KINDS", "DEFAULT_PRESETS", "WORLD_UP"]

PRESET_KINDS = ("orbit", "dolly", "truck", "zoom")

# stand-in default preset set of four common cinematic moves
DEFAULT_PRESETS = {
    "orbit-left": ("orbit", 30.0),
    "orbit-right": ("orbit", -30.0),
    "dolly-in": ("dolly", 1.0),
    "zoom-in": ("zoom", 1.5),
}

# world-up axis used by the orbit preset (+y assumed, configurable per spec)
WORLD_UP = np.array([0.0, 1.0, 0.0])


@dataclass(frozen=True)
class PresetSpec:
    kind: str
    magnitude: float        # degrees (orbit), meters (dolly/truck), multiplier (zoom)
    frames: int
    anchor: np.ndarray = field(default_factory=lambda: np.zeros(3))
    up: np.ndarray = field(default_factory=lambda: WORLD_UP.copy())

    def __post_init__(self):
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=np.float64))
        object.__setattr__(self, "up", np.asarray(self.up, dtype=np.float64))
        if self.kind not in PRESET_KINDS:
            raise InvalidSpec(f"unknown preset kind {self.kind!r}")
        if self.frames < 1:
            raise InvalidSpec("frame count must be >= 1")
        if self.kind == "zoom" and not self.magnitude > 0:
            raise InvalidSpec("zoom multiplier must be positive")


@dataclass(frozen=True)
class Keyframe:
    index: int
    camera: CameraFrame


@dataclass(frozen=True)
class TrajectorySpec:
    mode: str  # "preset" | "keyframes"
    preset: PresetSpec = None
    keyframes: tuple = None

    def __post_init__(self):
        if self.mode == "preset":
            if self.preset is None:
                raise InvalidSpec("preset mode requires a preset")
        elif self.mode == "keyframes":
            kfs = tuple(self.keyframes or ())
            object.__setattr__(self, "keyframes", kfs)
            if not kfs:
                raise InvalidSpec("keyframe mode requires keyframes")
            idx = [k.index for k in kfs]
            if idx[0] != 0:
                raise InvalidSpec("first keyframe must be at frame 0")
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise InvalidSpec("keyframe indices must be strictly increasing")
        else:
            raise InvalidSpec(f"unknown trajectory mode {self.mode!r}")

    @property
    def num_frames(self) -> int:
        if self.mode == "preset":
            return self.preset.frames
        return self.keyframes[-1].index + 1


def _axis_angle_matrix(axis, angle_rad) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    x, y, z = axis
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    C = 1 - c
    return np.array([
        [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
        [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
        [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
    ])


def _orbit_frame(base: CameraFrame, preset: PresetSpec, angle_deg: float) -> CameraFrame:
    """Rotate the camera rigidly about the up axis through the anchor.

    A rigid rotation of the whole pose keeps the anchor's direction in
    camera coordinates fixed, so it projects to the same pixel in every
    frame (the re-aiming the orbit preset promises).
    """
    Q = _axis_angle_matrix(preset.up, np.deg2rad(angle_deg))
    R = base.extrinsics.matrix()
    c = base.extrinsics.camera_center()
    c_new = preset.anchor + Q @ (c - preset.anchor)
    R_new = R @ Q.T
    ext = Extrinsics(quat_from_matrix(R_new), -R_new @ c_new)
    return replace(base, extrinsics=ext)


def _translate_frame(base: CameraFrame, direction_world, distance: float) -> CameraFrame:
    c = base.extrinsics.camera_center() + distance * np.asarray(direction_world)
    R = base.extrinsics.matrix()
    ext = Extrinsics(base.extrinsics.rotation, -R @ c)
    return replace(base, extrinsics=ext)


def expand(spec: TrajectorySpec, base: CameraFrame) -> list:
    """Expand the trajectory to per-frame cameras; frame 0 equals base."""
    T = spec.num_frames
    if spec.mode == "preset":
        p = spec.preset
        out = [base]
        R0 = base.extrinsics.matrix()
        view_dir = R0.T @ np.array([0.0, 0.0, 1.0])
        right_dir = R0.T @ np.array([1.0, 0.0, 0.0])
        for k in range(1, T):
            a = k / (T - 1)
            if p.kind == "orbit":
                out.append(_orbit_frame(base, p, a * p.magnitude))
            elif p.kind == "dolly":
                out.append(_translate_frame(base, view_dir, a * p.magnitude))
            elif p.kind == "truck":
                out.append(_translate_frame(base, right_dir, a * p.magnitude))
            else:  # zoom
                f = 1.0 + a * (p.magnitude - 1.0)
                k_in = base.intrinsics
                intr = Intrinsics(k_in.fx * f, k_in.fy * f, k_in.cx, k_in.cy)
                out.append(replace(base, intrinsics=intr))
        return out

    # keyframes: slerp poses, lerp intrinsics between bracketing keyframes
    kfs = spec.keyframes
    out = []
    seg = 0
    for k in range(T):
        while seg + 1 < len(kfs) and k > kfs[seg + 1].index:
            seg += 1
        if k == kfs[seg].index:
            out.append(kfs[seg].camera)
            continue
        if seg + 1 < len(kfs) and k == kfs[seg + 1].index:
            out.append(kfs[seg + 1].camera)
            continue
        a_kf, b_kf = kfs[seg], kfs[seg + 1]
        alpha = (k - a_kf.index) / (b_kf.index - a_kf.index)
        ext = interpolate_pose(a_kf.camera.extrinsics, b_kf.camera.extrinsics, alpha)
        ia, ib = a_kf.camera.intrinsics, b_kf.camera.intrinsics
        intr = Intrinsics(
            (1 - alpha) * ia.fx + alpha * ib.fx,
            (1 - alpha) * ia.fy + alpha * ib.fy,
            (1 - alpha) * ia.cx + alpha * ib.cx,
            (1 - alpha) * ia.cy + alpha * ib.cy,
        )
        out.append(replace(a_kf.camera, intrinsics=intr, extrinsics=ext))
    return out
