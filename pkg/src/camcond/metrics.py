"""Geometric evaluation: mean per-joint position error between motion
sequences and first-order Sampson epipolar error under known cameras.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMatch, ShapeMismatch, ZeroBaseline
from .geom import CameraFrame
from .motion_fit import MotionSequence

__all__ = ["FundamentalMatrix", "mpjpe", "fundamental_from_cameras", "sampson_error"]


@dataclass(frozen=True)
class FundamentalMatrix:
    F: np.ndarray  # 3x3, rank 2, unit Frobenius norm

    def __post_init__(self):
        F = np.asarray(self.F, dtype=np.float64)
        if F.shape != (3, 3):
            raise ShapeMismatch("fundamental matrix must be 3x3")
        if not F.any():
            raise ValueError("fundamental matrix must be non-zero")
        object.__setattr__(self, "F", F)


def mpjpe(a: MotionSequence, b: MotionSequence, align_root: bool = False,
          root_joint: int = 0) -> float:
    """Mean over frames and joints of the per-joint Euclidean error.

    With align_root, each frame of b is translated so its root joint
    coincides with a's before measuring.
    """
    if a.joints.shape != b.joints.shape or a.skeleton != b.skeleton:
        raise ShapeMismatch("sequences must share T, J and skeleton")
    bj = b.joints
    if align_root:
        bj = bj + (a.joints[:, root_joint:root_joint + 1, :]
                   - bj[:, root_joint:root_joint + 1, :])
    return float(np.linalg.norm(a.joints - bj, axis=2).mean())


def _cross_matrix(t) -> np.ndarray:
    return np.array([
        [0.0, -t[2], t[1]],
        [t[2], 0.0, -t[0]],
        [-t[1], t[0], 0.0],
    ])


def fundamental_from_cameras(cam1: CameraFrame, cam2: CameraFrame) -> FundamentalMatrix:
    """F = K2^-T [t_rel]x R_rel K1^-1 from the relative pose, unit Frobenius."""
    c1 = cam1.extrinsics.camera_center()
    c2 = cam2.extrinsics.camera_center()
    if np.linalg.norm(c2 - c1) <= 1e-9:
        raise ZeroBaseline("camera centers coincide; F is undefined")
    R1, R2 = cam1.extrinsics.matrix(), cam2.extrinsics.matrix()
    t1, t2 = cam1.extrinsics.translation, cam2.extrinsics.translation
    R_rel = R2 @ R1.T
    t_rel = t2 - R_rel @ t1
    E = _cross_matrix(t_rel) @ R_rel
    K1, K2 = cam1.intrinsics.matrix(), cam2.intrinsics.matrix()
    F = np.linalg.inv(K2).T @ E @ np.linalg.inv(K1)
    F = F / np.linalg.norm(F)
    return FundamentalMatrix(F)


def sampson_error(F: FundamentalMatrix, matches) -> float:
    """Mean Sampson distance over (x, x') homogeneous pixel correspondences.

    Per match: (x'^T F x)^2 / ((Fx)_1^2 + (Fx)_2^2 + (F^T x')_1^2 + (F^T x')_2^2).
    """
    matches = list(matches)
    if not matches:
        raise ShapeMismatch("need at least one match")
    M = F.F
    total = 0.0
    for x, xp in matches:
        x = np.asarray(x, dtype=np.float64)
        xp = np.asarray(xp, dtype=np.float64)
        Fx = M @ x
        Ftxp = M.T @ xp
        num = float(xp @ Fx) ** 2
        den = Fx[0] ** 2 + Fx[1] ** 2 + Ftxp[0] ** 2 + Ftxp[1] ** 2
        if den == 0.0:
            raise DegenerateMatch("all four Sampson gradient terms vanish")
        total += num / den
    return total / len(matches)
