"""File formats for every pipeline input and output.

Depth travels as PFM (float, lossless; the transfer math is sensitive to
quantization near the centroids).  Masks and rendered frames are PNG
(lossless; the frames are model inputs).  Motion, keypoints, trajectories,
manifests and bundles are versioned JSON documents.  All writers are
deterministic: identical values produce identical bytes.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import schedule as schedule_mod
from .depthmesh import DEFAULT_DISCONTINUITY_RATIO, DepthRaster
from .errors import IoFailure, MalformedHeader, SchemaViolation
from .geom import CameraFrame, Extrinsics, Intrinsics
from .motion_fit import MotionSequence, Skeleton
from .scene_transfer import DEFAULT_DECAY_LENGTH, CharacterMask
from .trajectory import Keyframe, PresetSpec, TrajectorySpec

__all__ = [
    "read_depth", "write_depth",
    "read_mask", "write_mask",
    "read_motion", "write_motion",
    "read_keypoints",
    "read_trajectory", "write_trajectory",
    "read_manifest", "write_manifest",
    "encode_png", "write_frame_sequence",
    "ProjectBundle", "read_bundle",
]

CONVENTIONS = ("world_to_camera", "camera_to_world")


# ---------------------------------------------------------------------------
# JSON plumbing

def _load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"{path}: not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaViolation(f"{path}: top level must be an object")
    return doc


def _dump_json(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _field(doc, key, kind=None, where="document"):
    if key not in doc:
        raise SchemaViolation(f"{where}: missing field {key!r}")
    v = doc[key]
    if kind is not None and not isinstance(v, kind):
        raise SchemaViolation(f"{where}.{key}: expected {kind}, got {type(v).__name__}")
    return v


def _check_version(doc, where):
    v = _field(doc, "version", int, where)
    if v != 1:
        raise SchemaViolation(f"{where}: unsupported version {v}")


# ---------------------------------------------------------------------------
# PFM depth

def write_depth(raster: DepthRaster, path) -> None:
    """Grayscale PFM, little-endian (negative scale), rows bottom-to-top.

    Invalid pixels are stored as NaN and come back invalid on read.
    """
    vals = raster.values.astype(np.float32)
    vals = np.where(raster.valid, vals, np.float32(np.nan))
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{raster.width} {raster.height}\n".encode())
        f.write(b"-1.0\n")
        f.write(vals[::-1].tobytes())


def read_depth(path) -> DepthRaster:
    """Parse PFM; non-finite and non-positive entries become invalid pixels."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    stream = io.BytesIO(data)

    def token():
        out = b""
        while True:
            ch = stream.read(1)
            if not ch:
                raise MalformedHeader(f"{path}: truncated header")
            if ch.isspace():
                if out:
                    return out
                continue
            out += ch

    magic = token()
    if magic == b"PF":
        raise MalformedHeader(f"{path}: color PFM not supported, expected grayscale 'Pf'")
    if magic != b"Pf":
        raise MalformedHeader(f"{path}: bad magic {magic!r}")
    try:
        w = int(token())
        h = int(token())
        scale = float(token())
    except ValueError as e:
        raise MalformedHeader(f"{path}: bad header field: {e}") from e
    if w < 1 or h < 1 or scale == 0:
        raise MalformedHeader(f"{path}: invalid dimensions or scale")
    payload = stream.read()
    expected = w * h * 4
    if len(payload) < expected:
        raise MalformedHeader(f"{path}: short payload ({len(payload)} < {expected} bytes)")
    endian = "<" if scale < 0 else ">"
    vals = np.frombuffer(payload[:expected], dtype=endian + "f4").reshape(h, w)
    vals = vals[::-1].astype(np.float64)
    if abs(scale) != 1.0:
        vals = vals * abs(scale)
    return DepthRaster.from_array(vals)


# ---------------------------------------------------------------------------
# masks and frames (PNG)

def read_mask(path) -> CharacterMask:
    """8-bit single-channel image; values > 127 mark the character."""
    try:
        img = Image.open(path)
        arr = np.asarray(img.convert("L"))
    except OSError as e:
        raise IoFailure(f"cannot read mask {path}: {e}") from e
    return CharacterMask(arr > 127)


def write_mask(mask: CharacterMask, path) -> None:
    arr = np.where(mask.inside, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def encode_png(frame: np.ndarray) -> bytes:
    """Deterministic lossless PNG bytes for an RGB or grayscale frame."""
    mode = "RGB" if frame.ndim == 3 else "L"
    buf = io.BytesIO()
    Image.fromarray(frame, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def write_frame_sequence(frames, directory) -> list:
    """Zero-padded numbered PNGs plus an index document; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for i, frame in enumerate(frames):
        name = f"{i:05d}.png"
        (directory / name).write_bytes(encode_png(frame))
        names.append(name)
    _dump_json({
        "version": 1,
        "count": len(names),
        "files": names,
        "mode": "RGB" if frames and frames[0].ndim == 3 else "L",
    }, directory / "index.json")
    return [directory / n for n in names]


# ---------------------------------------------------------------------------
# motion / keypoints

def _skeleton_from_doc(doc, where) -> Skeleton:
    sk = _field(doc, "skeleton", dict, where)
    joints = _field(sk, "joints", list, f"{where}.skeleton")
    limbs = _field(sk, "limbs", list, f"{where}.skeleton")
    for i, pair in enumerate(limbs):
        if (not isinstance(pair, list) or len(pair) != 2
                or not all(isinstance(x, int) for x in pair)):
            raise SchemaViolation(f"{where}.skeleton.limbs[{i}]: expected [int, int]")
    try:
        return Skeleton(joints, limbs)
    except ValueError as e:
        raise SchemaViolation(f"{where}.skeleton: {e}") from e


def read_motion(path) -> MotionSequence:
    doc = _load_json(path)
    where = str(path)
    _check_version(doc, where)
    skeleton = _skeleton_from_doc(doc, where)
    fps = float(doc.get("fps", 30.0))
    frames = _field(doc, "frames", list, where)
    if not frames:
        raise SchemaViolation(f"{where}.frames: must not be empty")
    J = len(skeleton.joints)
    out = np.empty((len(frames), J, 3))
    for t, frame in enumerate(frames):
        if not isinstance(frame, list) or len(frame) != J:
            raise SchemaViolation(
                f"{where}.frames[{t}]: expected {J} joints, got "
                f"{len(frame) if isinstance(frame, list) else type(frame).__name__}")
        for j, p in enumerate(frame):
            if not isinstance(p, list) or len(p) != 3:
                raise SchemaViolation(f"{where}.frames[{t}][{j}]: expected [x, y, z]")
            out[t, j] = p
    if not np.all(np.isfinite(out)):
        raise SchemaViolation(f"{where}.frames: coordinates must be finite")
    return MotionSequence(out, skeleton, fps)


def write_motion(seq: MotionSequence, path) -> None:
    _dump_json({
        "version": 1,
        "skeleton": {"joints": list(seq.skeleton.joints),
                     "limbs": [list(l) for l in seq.skeleton.limbs]},
        "fps": seq.fps,
        "frames": seq.joints.tolist(),
    }, path)


def read_keypoints(path):
    """Reference keypoints: mode '3d' ((J,3) world points) or '2d' ((J,2)
    pixels to be lifted through the reference depth).

    Returns (mode, points, valid, skeleton).
    """
    doc = _load_json(path)
    where = str(path)
    _check_version(doc, where)
    skeleton = _skeleton_from_doc(doc, where)
    mode = _field(doc, "mode", str, where)
    if mode not in ("2d", "3d"):
        raise SchemaViolation(f"{where}.mode: expected '2d' or '3d', got {mode!r}")
    dim = 3 if mode == "3d" else 2
    pts_doc = _field(doc, "points", list, where)
    J = len(skeleton.joints)
    if len(pts_doc) != J:
        raise SchemaViolation(f"{where}.points: expected {J} entries, got {len(pts_doc)}")
    pts = np.empty((J, dim))
    for j, p in enumerate(pts_doc):
        if not isinstance(p, list) or len(p) != dim:
            raise SchemaViolation(f"{where}.points[{j}]: expected {dim} coordinates")
        pts[j] = p
    valid = doc.get("valid")
    if valid is None:
        valid = np.ones(J, dtype=bool)
    else:
        if not isinstance(valid, list) or len(valid) != J:
            raise SchemaViolation(f"{where}.valid: expected {J} booleans")
        valid = np.asarray(valid, dtype=bool)
    return mode, pts, valid, skeleton


# ---------------------------------------------------------------------------
# cameras / trajectories

def _camera_to_doc(cam: CameraFrame, convention: str) -> dict:
    ext = cam.extrinsics if convention == "world_to_camera" else cam.extrinsics.inverse()
    return {
        "width": cam.width,
        "height": cam.height,
        "intrinsics": {"fx": cam.intrinsics.fx, "fy": cam.intrinsics.fy,
                       "cx": cam.intrinsics.cx, "cy": cam.intrinsics.cy},
        "rotation": ext.rotation.tolist(),
        "translation": ext.translation.tolist(),
    }


def _camera_from_doc(doc, convention: str, where: str) -> CameraFrame:
    intr_doc = _field(doc, "intrinsics", dict, where)
    try:
        intr = Intrinsics(
            float(_field(intr_doc, "fx", (int, float), f"{where}.intrinsics")),
            float(_field(intr_doc, "fy", (int, float), f"{where}.intrinsics")),
            float(_field(intr_doc, "cx", (int, float), f"{where}.intrinsics")),
            float(_field(intr_doc, "cy", (int, float), f"{where}.intrinsics")),
        )
    except ValueError as e:
        raise SchemaViolation(f"{where}.intrinsics: {e}") from e
    rot = _field(doc, "rotation", list, where)
    tr = _field(doc, "translation", list, where)
    if len(rot) != 4:
        raise SchemaViolation(f"{where}.rotation: expected quaternion [w, x, y, z]")
    if len(tr) != 3:
        raise SchemaViolation(f"{where}.translation: expected 3-vector")
    try:
        ext = Extrinsics(np.asarray(rot, dtype=np.float64),
                         np.asarray(tr, dtype=np.float64))
    except ValueError as e:
        raise SchemaViolation(f"{where}: {e}") from e
    if convention == "camera_to_world":
        ext = ext.inverse()
    w = _field(doc, "width", int, where)
    h = _field(doc, "height", int, where)
    try:
        return CameraFrame(intr, ext, w, h)
    except ValueError as e:
        raise SchemaViolation(f"{where}: {e}") from e


def read_trajectory(path):
    """Parse a trajectory file; returns (TrajectorySpec, base CameraFrame).

    The file declares its extrinsics convention explicitly; camera->world
    poses are inverted to the internal world->camera form at load.
    """
    doc = _load_json(path)
    where = str(path)
    _check_version(doc, where)
    convention = _field(doc, "convention", str, where)
    if convention not in CONVENTIONS:
        raise SchemaViolation(f"{where}.convention: expected one of {CONVENTIONS}")
    base = _camera_from_doc(_field(doc, "base", dict, where), convention, f"{where}.base")
    mode = _field(doc, "mode", str, where)
    from .errors import InvalidSpec
    if mode == "preset":
        p = _field(doc, "preset", dict, where)
        try:
            spec = TrajectorySpec("preset", preset=PresetSpec(
                kind=_field(p, "kind", str, f"{where}.preset"),
                magnitude=float(_field(p, "magnitude", (int, float), f"{where}.preset")),
                frames=_field(p, "frames", int, f"{where}.preset"),
                anchor=np.asarray(p.get("anchor", [0.0, 0.0, 0.0]), dtype=np.float64),
                up=np.asarray(p.get("up", [0.0, 1.0, 0.0]), dtype=np.float64),
            ))
        except InvalidSpec as e:
            raise SchemaViolation(f"{where}.preset: {e}") from e
    elif mode == "keyframes":
        kf_docs = _field(doc, "keyframes", list, where)
        kfs = []
        for i, kd in enumerate(kf_docs):
            idx = _field(kd, "index", int, f"{where}.keyframes[{i}]")
            cam = _camera_from_doc(_field(kd, "camera", dict, f"{where}.keyframes[{i}]"),
                                   convention, f"{where}.keyframes[{i}].camera")
            kfs.append(Keyframe(idx, cam))
        try:
            spec = TrajectorySpec("keyframes", keyframes=tuple(kfs))
        except InvalidSpec as e:
            raise SchemaViolation(f"{where}.keyframes: {e}") from e
    else:
        raise SchemaViolation(f"{where}.mode: expected 'preset' or 'keyframes'")
    return spec, base


def write_trajectory(spec: TrajectorySpec, base: CameraFrame, path,
                     convention: str = "world_to_camera") -> None:
    if convention not in CONVENTIONS:
        raise SchemaViolation(f"unknown convention {convention!r}")
    doc = {
        "version": 1,
        "convention": convention,
        "base": _camera_to_doc(base, convention),
        "mode": spec.mode,
    }
    if spec.mode == "preset":
        p = spec.preset
        doc["preset"] = {"kind": p.kind, "magnitude": p.magnitude,
                         "frames": p.frames, "anchor": p.anchor.tolist(),
                         "up": p.up.tolist()}
    else:
        doc["keyframes"] = [
            {"index": k.index, "camera": _camera_to_doc(k.camera, convention)}
            for k in spec.keyframes
        ]
    _dump_json(doc, path)


# ---------------------------------------------------------------------------
# schedule manifest

def write_manifest(manifest: schedule_mod.ScheduleManifest, path) -> None:
    _dump_json({
        "version": 1,
        "num_steps": manifest.num_steps,
        "depth_fraction": manifest.depth_fraction,
        "t_stop": None if manifest.t_stop == float("-inf") else manifest.t_stop,
        "entries": [
            {"step": e.step, "t": e.t, "condition": e.condition, "frames": e.frames}
            for e in manifest.entries
        ],
    }, path)


def read_manifest(path) -> schedule_mod.ScheduleManifest:
    doc = _load_json(path)
    where = str(path)
    _check_version(doc, where)
    entries = []
    for i, ed in enumerate(_field(doc, "entries", list, where)):
        entries.append(schedule_mod.ScheduleEntry(
            _field(ed, "step", int, f"{where}.entries[{i}]"),
            float(_field(ed, "t", (int, float), f"{where}.entries[{i}]")),
            _field(ed, "condition", str, f"{where}.entries[{i}]"),
            _field(ed, "frames", str, f"{where}.entries[{i}]"),
        ))
    t_stop = doc.get("t_stop")
    manifest = schedule_mod.ScheduleManifest(
        _field(doc, "num_steps", int, where),
        float(_field(doc, "depth_fraction", (int, float), where)),
        float("-inf") if t_stop is None else float(t_stop),
        tuple(entries),
    )
    if len(entries) != manifest.num_steps:
        raise SchemaViolation(f"{where}: entry count != num_steps")
    labels = [e.condition for e in entries]
    for lab in labels:
        if lab not in (schedule_mod.LABEL_DEPTH, schedule_mod.LABEL_POSE):
            raise SchemaViolation(f"{where}: unknown condition label {lab!r}")
    switch = "".join("d" if l == schedule_mod.LABEL_DEPTH else "p" for l in labels)
    if "pd" in switch:
        raise SchemaViolation(f"{where}: labels must be a depth prefix then pose")
    return manifest


# ---------------------------------------------------------------------------
# project bundle

@dataclass
class ProjectBundle:
    """All file inputs and parameters for one compile run."""
    reference_depth: Path
    character_mask: Path
    motion: Path
    trajectory: Path
    output_dir: Path
    background_depth: Path = None         # derived from reference via hole fill if absent
    reference_keypoints: Path = None      # identity fit if absent
    decay_length: float = DEFAULT_DECAY_LENGTH
    discontinuity_ratio: float = DEFAULT_DISCONTINUITY_RATIO
    depth_fraction: float = schedule_mod.DEFAULT_DEPTH_FRACTION
    num_steps: int = 10
    threads: int = 1
    joint_radius: float = 4.0
    limb_thickness: float = 4.0

    def validate(self) -> None:
        for name in ("reference_depth", "character_mask", "motion", "trajectory",
                     "background_depth", "reference_keypoints"):
            p = getattr(self, name)
            if p is not None and not Path(p).is_file():
                raise SchemaViolation(f"bundle.{name}: no such file: {p}")
        if not self.decay_length > 0:
            raise SchemaViolation("bundle.decay_length must be positive")
        if not self.discontinuity_ratio > 0:
            raise SchemaViolation("bundle.discontinuity_ratio must be positive")
        if not 0.0 <= self.depth_fraction <= 1.0:
            raise SchemaViolation("bundle.depth_fraction must lie in [0, 1]")
        if self.num_steps < 1:
            raise SchemaViolation("bundle.num_steps must be >= 1")
        if self.threads < 1:
            raise SchemaViolation("bundle.threads must be >= 1")


def read_bundle(path) -> ProjectBundle:
    doc = _load_json(path)
    where = str(path)
    _check_version(doc, where)
    root = Path(path).parent

    def p(key, required=True):
        if key not in doc or doc[key] is None:
            if required:
                raise SchemaViolation(f"{where}: missing field {key!r}")
            return None
        return root / str(doc[key])

    params = doc.get("parameters", {})
    if not isinstance(params, dict):
        raise SchemaViolation(f"{where}.parameters: expected object")
    style = params.get("style", {})
    bundle = ProjectBundle(
        reference_depth=p("reference_depth"),
        character_mask=p("character_mask"),
        motion=p("motion"),
        trajectory=p("trajectory"),
        output_dir=root / str(_field(doc, "output_dir", str, where)),
        background_depth=p("background_depth", required=False),
        reference_keypoints=p("reference_keypoints", required=False),
        decay_length=float(params.get("decay_length", DEFAULT_DECAY_LENGTH)),
        discontinuity_ratio=float(params.get("discontinuity_ratio",
                                             DEFAULT_DISCONTINUITY_RATIO)),
        depth_fraction=float(params.get("depth_fraction",
                                        schedule_mod.DEFAULT_DEPTH_FRACTION)),
        num_steps=int(params.get("num_steps", 10)),
        threads=int(params.get("threads", 1)),
        joint_radius=float(style.get("joint_radius", 4.0)),
        limb_thickness=float(style.get("limb_thickness", 4.0)),
    )
    bundle.validate()
    return bundle
