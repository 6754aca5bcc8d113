"""Local preview service: trajectory state and on-demand condition frames.

Routes:
  GET /state                     current spec, revision, sequence geometry
  PUT /trajectory                replace the spec atomically, bump revision
  GET /frame/{index}?mode=&scale= lossless PNG with revision/digest headers

Frames are rendered against one consistent revision (snapshot isolation)
and, at scale 1, are byte-identical to the batch compiler's output.
"""
from __future__ import annotations

import hashlib
import threading
from dataclasses import replace
from typing import Literal, Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from pydantic import BaseModel, Field, field_validator

from . import io_formats
from .errors import CamCondError, InvalidSpec
from .geom import CameraFrame, Extrinsics, Intrinsics
from .pipeline import CompiledScene, prepare_scene, render_scene
from .trajectory import Keyframe, PresetSpec, TrajectorySpec

__all__ = ["create_app", "PreviewSession"]

Mode = Literal["pose", "depth", "composite"]


# ---------------------------------------------------------------------------
# wire models

class IntrinsicsModel(BaseModel):
    fx: float = Field(gt=0)
    fy: float = Field(gt=0)
    cx: float
    cy: float


class CameraModel(BaseModel):
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    intrinsics: IntrinsicsModel
    rotation: list[float] = Field(min_length=4, max_length=4)
    translation: list[float] = Field(min_length=3, max_length=3)

    @classmethod
    def from_domain(cls, cam: CameraFrame) -> "CameraModel":
        return cls(width=cam.width, height=cam.height,
                   intrinsics=IntrinsicsModel(fx=cam.intrinsics.fx,
                                              fy=cam.intrinsics.fy,
                                              cx=cam.intrinsics.cx,
                                              cy=cam.intrinsics.cy),
                   rotation=cam.extrinsics.rotation.tolist(),
                   translation=cam.extrinsics.translation.tolist())

    def to_domain(self, convention: str) -> CameraFrame:
        ext = Extrinsics(np.asarray(self.rotation), np.asarray(self.translation))
        if convention == "camera_to_world":
            ext = ext.inverse()
        k = self.intrinsics
        return CameraFrame(Intrinsics(k.fx, k.fy, k.cx, k.cy), ext,
                           self.width, self.height)


class PresetModel(BaseModel):
    kind: Literal["orbit", "dolly", "truck", "zoom"]
    magnitude: float
    frames: int = Field(ge=1)
    anchor: list[float] = Field(default=[0.0, 0.0, 0.0], min_length=3, max_length=3)
    up: list[float] = Field(default=[0.0, 1.0, 0.0], min_length=3, max_length=3)


class KeyframeModel(BaseModel):
    index: int = Field(ge=0)
    camera: CameraModel


class TrajectoryModel(BaseModel):
    mode: Literal["preset", "keyframes"]
    convention: Literal["world_to_camera", "camera_to_world"] = "world_to_camera"
    preset: Optional[PresetModel] = None
    keyframes: Optional[list[KeyframeModel]] = None

    @field_validator("keyframes")
    @classmethod
    def _first_keyframe_at_zero(cls, v):
        if v is not None:
            if not v:
                raise ValueError("keyframes must not be empty")
            if v[0].index != 0:
                raise ValueError("first keyframe must be at frame 0")
        return v

    @classmethod
    def from_domain(cls, spec: TrajectorySpec) -> "TrajectoryModel":
        if spec.mode == "preset":
            p = spec.preset
            return cls(mode="preset",
                       preset=PresetModel(kind=p.kind, magnitude=p.magnitude,
                                          frames=p.frames,
                                          anchor=p.anchor.tolist(),
                                          up=p.up.tolist()))
        return cls(mode="keyframes", keyframes=[
            KeyframeModel(index=k.index, camera=CameraModel.from_domain(k.camera))
            for k in spec.keyframes
        ])

    def to_domain(self) -> TrajectorySpec:
        if self.mode == "preset":
            if self.preset is None:
                raise InvalidSpec("preset mode requires a preset")
            p = self.preset
            return TrajectorySpec("preset", preset=PresetSpec(
                kind=p.kind, magnitude=p.magnitude, frames=p.frames,
                anchor=np.asarray(p.anchor), up=np.asarray(p.up)))
        if not self.keyframes:
            raise InvalidSpec("keyframe mode requires keyframes")
        return TrajectorySpec("keyframes", keyframes=tuple(
            Keyframe(k.index, k.camera.to_domain(self.convention))
            for k in self.keyframes))


class StateResponse(BaseModel):
    revision: int
    num_frames: int
    width: int
    height: int
    trajectory: TrajectoryModel
    parameters: dict


class RevisionResponse(BaseModel):
    revision: int


# ---------------------------------------------------------------------------
# session

def _scale_camera(cam: CameraFrame, scale: float) -> CameraFrame:
    if scale == 1.0:
        return cam
    w = max(1, round(cam.width * scale))
    h = max(1, round(cam.height * scale))
    sx, sy = w / cam.width, h / cam.height
    k = cam.intrinsics
    return replace(cam, width=w, height=h,
                   intrinsics=Intrinsics(k.fx * sx, k.fy * sy, k.cx * sx, k.cy * sy))


class PreviewSession:
    """Single-writer trajectory state with revision-keyed frame caches."""

    def __init__(self, scene: CompiledScene):
        self.scene = scene
        self._lock = threading.Lock()
        self._spec = scene.spec
        self._revision = 0
        self._signals: dict = {}   # (revision, scale) -> rendered signal dict
        self._frames: dict = {}    # (revision, index, mode, scale) -> png bytes

    def snapshot(self):
        with self._lock:
            return self._spec, self._revision

    def update_trajectory(self, spec: TrajectorySpec) -> int:
        if spec.num_frames != self.scene.motion.num_frames:
            raise InvalidSpec(
                f"trajectory must cover {self.scene.motion.num_frames} frames, "
                f"got {spec.num_frames}")
        with self._lock:
            self._spec = spec
            self._revision += 1
            self._signals.clear()
            self._frames.clear()
            return self._revision

    def _signals_for(self, spec, revision: int, scale: float) -> dict:
        key = (revision, scale)
        with self._lock:
            cached = self._signals.get(key)
        if cached is not None:
            return cached
        scene = self.scene
        if scale != 1.0:
            base = _scale_camera(scene.base_cam, scale)
            if spec.mode == "keyframes":
                spec = TrajectorySpec("keyframes", keyframes=tuple(
                    Keyframe(k.index, _scale_camera(k.camera, scale))
                    for k in spec.keyframes))
            scene = replace(scene, base_cam=base)
        sig = render_scene(scene, spec=spec)
        with self._lock:
            self._signals.setdefault(key, sig)
        return sig

    def frame_png(self, index: int, mode: str, scale: float):
        """Returns (png bytes, revision) for one consistent revision."""
        spec, revision = self.snapshot()
        if not 0 <= index < spec.num_frames:
            raise IndexError(f"frame index {index} outside [0, {spec.num_frames})")
        key = (revision, index, mode, scale)
        with self._lock:
            cached = self._frames.get(key)
        if cached is not None:
            return cached, revision
        sig = self._signals_for(spec, revision, scale)
        png = io_formats.encode_png(sig[mode][index])
        with self._lock:
            self._frames.setdefault(key, png)
        return png, revision


# ---------------------------------------------------------------------------
# app

def create_app(scene: CompiledScene) -> FastAPI:
    app = FastAPI(title="camcond preview service")
    session = PreviewSession(scene)
    app.state.session = session

    @app.get("/state", response_model=StateResponse)
    def get_state():
        spec, revision = session.snapshot()
        b = scene.bundle
        return StateResponse(
            revision=revision,
            num_frames=spec.num_frames,
            width=scene.base_cam.width,
            height=scene.base_cam.height,
            trajectory=TrajectoryModel.from_domain(spec),
            parameters={
                "decay_length": b.decay_length,
                "discontinuity_ratio": b.discontinuity_ratio,
                "depth_fraction": b.depth_fraction,
                "num_steps": b.num_steps,
                "joint_radius": b.joint_radius,
                "limb_thickness": b.limb_thickness,
            },
        )

    @app.put("/trajectory", response_model=RevisionResponse)
    def put_trajectory(model: TrajectoryModel):
        try:
            spec = model.to_domain()
            revision = session.update_trajectory(spec)
        except CamCondError as e:
            raise HTTPException(status_code=422, detail=str(e)) from e
        return RevisionResponse(revision=revision)

    @app.get("/frame/{index}")
    def get_frame(index: int, request: Request, mode: Mode = "composite",
                  scale: float = 1.0):
        if not 0 < scale <= 1.0:
            raise HTTPException(status_code=422, detail="scale must lie in (0, 1]")
        try:
            png, revision = session.frame_png(index, mode, scale)
        except IndexError as e:
            raise HTTPException(status_code=404, detail=str(e)) from e
        except CamCondError as e:
            raise HTTPException(status_code=500, detail=str(e)) from e
        digest = hashlib.sha256(png).hexdigest()
        etag = f'"{revision}-{index}-{mode}-{scale}-{digest[:16]}"'
        headers = {
            "X-Revision": str(revision),
            "X-Content-Digest": digest,
            "ETag": etag,
        }
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304, headers=headers)
        return Response(content=png, media_type="image/png", headers=headers)

    return app


def create_app_from_bundle(bundle_path) -> FastAPI:
    bundle = io_formats.read_bundle(bundle_path)
    return create_app(prepare_scene(bundle))
