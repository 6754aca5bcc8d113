"""End-to-end compilation: bundle file inputs -> rendered condition frame
sequences + schedule manifest.

The same scene preparation backs both the batch CLI and the interactive
preview service, which is what makes batch/serve frame parity possible.
"""
from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import geom, io_formats, schedule
from .depthmesh import DepthRaster, SceneMesh, build_mesh, fill_holes
from .errors import CamCondError, SchemaViolation
from .motion_fit import MotionSequence, fit_to_reference
from .raster import PALETTE, SkeletonStyle, render_signals
from .scene_transfer import TransferParams, align_character_depth, weighted_centroids
from .trajectory import TrajectorySpec, expand

log = logging.getLogger("camcond")


@contextmanager
def _stage(name: str):
    """Log the stage timing; prefix escaping errors with the stage name."""
    t0 = time.perf_counter()
    try:
        yield
    except CamCondError as e:
        raise type(e)(f"[stage {name}] {e}") from e
    finally:
        log.info("stage %-18s %.3fs", name, time.perf_counter() - t0)


@dataclass
class CompiledScene:
    """Immutable scene assets shared by batch rendering and the preview
    service: everything that does not depend on the trajectory."""
    mesh: SceneMesh
    motion: MotionSequence          # fitted
    style: SkeletonStyle
    base_cam: geom.CameraFrame
    spec: TrajectorySpec
    transfer: TransferParams
    bundle: io_formats.ProjectBundle

    @property
    def num_frames(self) -> int:
        return self.spec.num_frames


def _lift_keypoints(mode, pts, valid, d_ref, cam, transfer):
    """Resolve reference keypoints to 3D scene points.

    2D detections are lifted through the reference depth at the detected
    pixel and remapped by the scene-transfer affine so they live in the
    background scene, like the transferred character.
    """
    if mode == "3d":
        return pts, valid
    out = np.zeros((len(pts), 3))
    ok = valid.copy()
    for j, (u, v) in enumerate(pts):
        if not ok[j]:
            continue
        x = int(np.clip(np.floor(u), 0, d_ref.width - 1))
        y = int(np.clip(np.floor(v), 0, d_ref.height - 1))
        if not d_ref.valid[y, x]:
            ok[j] = False
            continue
        z = align_character_depth(d_ref.values[y, x], transfer)
        out[j] = geom.unproject(cam, u, v, z)
    return out, ok


def default_style(skeleton, joint_radius: float = 4.0,
                  limb_thickness: float = 4.0) -> SkeletonStyle:
    """Palette-cycled style for an arbitrary skeleton."""
    return SkeletonStyle(
        limbs=list(skeleton.limbs),
        limb_colors=[PALETTE[i % len(PALETTE)] for i in range(len(skeleton.limbs))],
        joint_colors=[PALETTE[i % len(PALETTE)] for i in range(len(skeleton.joints))],
        joint_radius=joint_radius,
        limb_thickness=limb_thickness,
    )


def prepare_scene(bundle: io_formats.ProjectBundle) -> CompiledScene:
    """Load inputs and build the trajectory-independent scene assets."""
    with _stage("load"):
        bundle.validate()
        d_ref = io_formats.read_depth(bundle.reference_depth)
        mask = io_formats.read_mask(bundle.character_mask)
        motion = io_formats.read_motion(bundle.motion)
        spec, base_cam = io_formats.read_trajectory(bundle.trajectory)
        if mask.inside.shape != d_ref.values.shape:
            raise SchemaViolation("character mask does not match reference depth size")
        if (base_cam.height, base_cam.width) != d_ref.values.shape:
            raise SchemaViolation("trajectory base camera does not match depth size")

    with _stage("background depth"):
        # supplied background depth, or the non-neural hole-fill fallback
        if bundle.background_depth is not None:
            d_bg = io_formats.read_depth(bundle.background_depth)
            if d_bg.values.shape != d_ref.values.shape:
                raise SchemaViolation(
                    "background depth does not match reference depth size")
        else:
            punched = DepthRaster(np.where(mask.inside, 0.0, d_ref.values),
                                  d_ref.valid & ~mask.inside)
            d_bg = fill_holes(punched, mask.inside)

    with _stage("mesh"):
        mesh = build_mesh(d_bg, base_cam, bundle.discontinuity_ratio)
        log.info("mesh: %d triangles", mesh.num_triangles)

    with _stage("scene transfer"):
        transfer = weighted_centroids(d_ref, d_bg, base_cam, mask,
                                      bundle.decay_length)

    with _stage("character fitting"):
        if bundle.reference_keypoints is not None:
            mode, pts, valid, kp_skel = io_formats.read_keypoints(
                bundle.reference_keypoints)
            if kp_skel.joints != motion.skeleton.joints:
                raise SchemaViolation(
                    "keypoint skeleton does not match motion skeleton")
            pts3d, valid = _lift_keypoints(mode, pts, valid, d_ref, base_cam,
                                           transfer)
            motion = fit_to_reference(motion, pts3d, valid)

    style = default_style(motion.skeleton, bundle.joint_radius,
                          bundle.limb_thickness)
    return CompiledScene(mesh, motion, style, base_cam, spec, transfer, bundle)


def render_scene(scene: CompiledScene, spec: TrajectorySpec = None,
                 threads: int = None) -> dict:
    """Expand the trajectory and render all three signal sequences."""
    spec = spec or scene.spec
    threads = threads or scene.bundle.threads
    traj = expand(spec, scene.base_cam)
    if len(traj) != scene.motion.num_frames:
        raise SchemaViolation(
            f"trajectory has {len(traj)} frames but motion has "
            f"{scene.motion.num_frames}")
    return render_signals(scene.mesh, scene.motion, traj, scene.style,
                          threads=threads)


def compile_bundle(bundle: io_formats.ProjectBundle) -> dict:
    """Run the full pipeline and write the output tree.

    Deterministic: re-running with unchanged inputs produces byte-identical
    outputs.  The manifest is written last so no failed run leaves one.
    Returns {"output_dir", "manifest", "frame_dirs"}.
    """
    scene = prepare_scene(bundle)

    with _stage("render"):
        signals = render_scene(scene)

    manifest = schedule.build_schedule(bundle.num_steps, bundle.depth_fraction)

    with _stage("write"):
        out = bundle.output_dir
        out.mkdir(parents=True, exist_ok=True)
        io_formats.write_frame_sequence(signals["pose"], out / "pose")
        io_formats.write_frame_sequence(signals["composite"], out / "pose_depth")
        io_formats.write_frame_sequence(signals["depth"], out / "depth")
        manifest_path = out / "manifest.json"
        io_formats.write_manifest(manifest, manifest_path)
    return {
        "output_dir": out,
        "manifest": manifest_path,
        "frame_dirs": {"pose": out / "pose", "composite": out / "pose_depth",
                       "depth": out / "depth"},
    }
