import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from camcond import io_formats
from camcond.depthmesh import DepthRaster
from camcond.geom import CameraFrame, Extrinsics, Intrinsics
from camcond.motion_fit import MotionSequence, Skeleton
from camcond.scene_transfer import CharacterMask
from camcond.trajectory import PresetSpec, TrajectorySpec


@pytest.fixture
def simple_cam():
    return CameraFrame(Intrinsics(100.0, 100.0, 32.0, 32.0),
                       Extrinsics.identity(), 64, 64)


def random_rotation(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    if q[0] < 0:
        q = -q
    return q


def stick_figure(t: float) -> np.ndarray:
    """Deterministic 18-joint pose at phase t, roughly 1.7 m tall, z ~ 2 m."""
    j = np.zeros((18, 3))
    sway = 0.1 * np.sin(2 * np.pi * t)
    j[0] = [sway, -0.70, 2.0]          # nose
    j[1] = [sway, -0.50, 2.0]          # neck
    j[2] = [sway + 0.20, -0.50, 2.0]   # r-shoulder
    j[3] = [sway + 0.30, -0.25, 2.0]   # r-elbow
    j[4] = [sway + 0.35, 0.0, 2.0]     # r-wrist
    j[5] = [sway - 0.20, -0.50, 2.0]
    j[6] = [sway - 0.30, -0.25, 2.0]
    j[7] = [sway - 0.35, 0.0, 2.0]
    j[8] = [sway + 0.12, 0.10, 2.0]    # r-hip
    j[9] = [sway + 0.14, 0.45, 2.0 + 0.05 * np.sin(2 * np.pi * t)]
    j[10] = [sway + 0.15, 0.80, 2.0]
    j[11] = [sway - 0.12, 0.10, 2.0]
    j[12] = [sway - 0.14, 0.45, 2.0 - 0.05 * np.sin(2 * np.pi * t)]
    j[13] = [sway - 0.15, 0.80, 2.0]
    j[14] = [sway + 0.05, -0.75, 2.0]
    j[15] = [sway - 0.05, -0.75, 2.0]
    j[16] = [sway + 0.10, -0.72, 2.0]
    j[17] = [sway - 0.10, -0.72, 2.0]
    return j


def synthetic_motion(num_frames: int = 8) -> MotionSequence:
    joints = np.stack([stick_figure(t / max(num_frames - 1, 1))
                       for t in range(num_frames)])
    return MotionSequence(joints, Skeleton.body18())


def synthetic_scene_arrays(size: int = 64):
    """Reference depth with a closer character blob, plus its mask."""
    y, x = np.mgrid[0:size, 0:size]
    depth = 3.0 + 0.5 * np.sin(x / 9.0) * np.cos(y / 11.0)
    cy, cx = size / 2, size / 2
    mask = ((x - cx) ** 2 / (size / 6) ** 2 + (y - cy) ** 2 / (size / 3.2) ** 2) <= 1.0
    depth = np.where(mask, 2.0, depth)
    return depth, mask


def write_golden_bundle(root: Path, num_frames: int = 8, size: int = 64) -> Path:
    """The synthetic end-to-end fixture: 64x64 scene, 8-frame motion,
    dolly-in preset, hole-fill fallback for the background depth."""
    root.mkdir(parents=True, exist_ok=True)
    depth, mask = synthetic_scene_arrays(size)
    io_formats.write_depth(DepthRaster.from_array(depth), root / "ref_depth.pfm")
    io_formats.write_mask(CharacterMask(mask), root / "mask.png")

    motion = synthetic_motion(num_frames)
    io_formats.write_motion(motion, root / "motion.json")

    kp = motion.joints[0] * 1.05 + np.array([0.02, -0.01, 0.3])
    (root / "keypoints.json").write_text(json.dumps({
        "version": 1,
        "skeleton": {"joints": list(motion.skeleton.joints),
                     "limbs": [list(l) for l in motion.skeleton.limbs]},
        "mode": "3d",
        "points": kp.tolist(),
    }, indent=2, sort_keys=True) + "\n")

    base = CameraFrame(Intrinsics(float(size), float(size), size / 2, size / 2),
                       Extrinsics.identity(), size, size)
    spec = TrajectorySpec("preset", preset=PresetSpec(
        "dolly", 0.8, num_frames, anchor=np.array([0.0, 0.0, 2.0])))
    io_formats.write_trajectory(spec, base, root / "trajectory.json")

    bundle_path = root / "bundle.json"
    bundle_path.write_text(json.dumps({
        "version": 1,
        "reference_depth": "ref_depth.pfm",
        "character_mask": "mask.png",
        "motion": "motion.json",
        "trajectory": "trajectory.json",
        "reference_keypoints": "keypoints.json",
        "output_dir": "out",
        "parameters": {"num_steps": 10, "depth_fraction": 0.2,
                       "discontinuity_ratio": 0.2,
                       "style": {"joint_radius": 2, "limb_thickness": 2}},
    }, indent=2, sort_keys=True) + "\n")
    return bundle_path


@pytest.fixture
def golden_bundle(tmp_path):
    return write_golden_bundle(tmp_path / "proj")
