"""Pinhole camera model, rigid transforms and pose interpolation.

COORDINATE CONVENTIONS:
  World frame: right-handed, +y up (assumed by the orbit preset).
  Camera frame: +x right, +y down, +z forward (standard computer vision).
  Extrinsics are stored world->camera: x_cam = R @ x_world + t.
  Image frame: u right, v down, pixels; pixel (i, j) has its center at
  (i + 0.5, j + 0.5) in continuous image coordinates when geometric
  sampling matters (mesh lifting / triangle coverage).

Rotations are stored as unit quaternions (w, x, y, z); the matrix form is
derived on demand.  All functions are pure.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BehindCamera, NonPositiveDepth

__all__ = [
    "Intrinsics",
    "Extrinsics",
    "CameraFrame",
    "project",
    "unproject",
    "interpolate_pose",
    "quat_normalize",
    "quat_to_matrix",
    "quat_from_matrix",
    "quat_multiply",
    "quat_slerp",
    "quat_rotation_angle",
]

_EPS_Z = 1e-9


# ---------------------------------------------------------------------------
# quaternion helpers (w, x, y, z)

def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q)
    if n < 1e-12:
        raise ValueError("cannot normalize near-zero quaternion")
    return q / n


def quat_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(R) -> np.ndarray:
    """Shepperd's method; stable for all rotation matrices."""
    R = np.asarray(R, dtype=np.float64)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array([(R[2, 1] - R[1, 2]) / s,
                      0.25 * s,
                      (R[0, 1] + R[1, 0]) / s,
                      (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] >= R[2, 2]:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array([(R[0, 2] - R[2, 0]) / s,
                      (R[0, 1] + R[1, 0]) / s,
                      0.25 * s,
                      (R[1, 2] + R[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array([(R[1, 0] - R[0, 1]) / s,
                      (R[0, 2] + R[2, 0]) / s,
                      (R[1, 2] + R[2, 1]) / s,
                      0.25 * s])
    if q[0] < 0:
        q = -q
    return quat_normalize(q)


def quat_slerp(a, b, alpha: float) -> np.ndarray:
    """Shortest-arc spherical interpolation; antipodal pairs sign-flipped."""
    a = quat_normalize(a)
    b = quat_normalize(b)
    if alpha == 0.0:
        return a
    if alpha == 1.0:
        return b
    dot = float(np.dot(a, b))
    if dot < 0.0:
        b = -b
        dot = -dot
    if dot > 1.0 - 1e-12:
        # nearly identical: nlerp is exact enough and avoids 0/0
        return quat_normalize((1.0 - alpha) * a + alpha * b)
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    s = np.sin(theta)
    return quat_normalize(
        (np.sin((1.0 - alpha) * theta) / s) * a + (np.sin(alpha * theta) / s) * b
    )


def quat_rotation_angle(a, b) -> float:
    """Angle in radians of the rotation taking a to b."""
    dot = abs(float(np.dot(quat_normalize(a), quat_normalize(b))))
    return 2.0 * np.arccos(np.clip(dot, -1.0, 1.0))


# ---------------------------------------------------------------------------
# domain types

@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got {self.fx}, {self.fy}")

    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Extrinsics:
    """World->camera rigid transform: x_cam = R @ x_world + t."""
    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        q = quat_normalize(self.rotation)
        t = np.asarray(self.translation, dtype=np.float64)
        if t.shape != (3,):
            raise ValueError("translation must be a 3-vector")
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Extrinsics":
        return cls()

    @classmethod
    def from_matrix(cls, R, t) -> "Extrinsics":
        return cls(quat_from_matrix(R), np.asarray(t, dtype=np.float64))

    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def camera_center(self) -> np.ndarray:
        """Camera position in world coordinates: c = -R^T t."""
        return -self.matrix().T @ self.translation

    def inverse(self) -> "Extrinsics":
        R = self.matrix()
        return Extrinsics.from_matrix(R.T, -R.T @ self.translation)

    def compose(self, other: "Extrinsics") -> "Extrinsics":
        """self ∘ other: apply other first, then self."""
        Ra, Rb = self.matrix(), other.matrix()
        return Extrinsics.from_matrix(Ra @ Rb, Ra @ other.translation + self.translation)

    def transform(self, p) -> np.ndarray:
        """World point(s) -> camera frame.  p: (3,) or (N, 3)."""
        p = np.asarray(p, dtype=np.float64)
        return p @ self.matrix().T + self.translation


@dataclass(frozen=True)
class CameraFrame:
    intrinsics: Intrinsics
    extrinsics: Extrinsics
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be at least 1x1")


# ---------------------------------------------------------------------------
# projection

def project(cam: CameraFrame, p) -> tuple[float, float, float]:
    """Project a world point; returns (u, v, camera-space depth).

    Coordinates may fall outside the image rectangle; the caller clips.
    """
    x, y, z = cam.extrinsics.transform(p)
    if z <= _EPS_Z:
        raise BehindCamera(f"point has camera-space depth {z}")
    k = cam.intrinsics
    return k.fx * (x / z) + k.cx, k.fy * (y / z) + k.cy, z


def project_many(cam: CameraFrame, pts) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection: (N, 3) world points -> (N, 2) pixels, (N,) depths.

    Does not raise on non-positive depth; callers filter on the returned z.
    """
    pc = cam.extrinsics.transform(np.asarray(pts, dtype=np.float64))
    z = pc[:, 2]
    k = cam.intrinsics
    with np.errstate(divide="ignore", invalid="ignore"):
        u = k.fx * (pc[:, 0] / z) + k.cx
        v = k.fy * (pc[:, 1] / z) + k.cy
    return np.stack([u, v], axis=1), z


def unproject(cam: CameraFrame, u: float, v: float, depth: float) -> np.ndarray:
    """Lift pixel (u, v) at camera-space depth to a world point."""
    if not depth > 0:
        raise NonPositiveDepth(f"depth must be positive, got {depth}")
    k = cam.intrinsics
    x = (u - k.cx) / k.fx * depth
    y = (v - k.cy) / k.fy * depth
    cam_pt = np.array([x, y, depth])
    R = cam.extrinsics.matrix()
    return R.T @ (cam_pt - cam.extrinsics.translation)


def unproject_many(cam: CameraFrame, uv, depth) -> np.ndarray:
    """Vectorized unprojection: (N, 2) pixels and (N,) depths -> (N, 3) world."""
    uv = np.asarray(uv, dtype=np.float64)
    d = np.asarray(depth, dtype=np.float64)
    if np.any(d <= 0):
        raise NonPositiveDepth("all depths must be positive")
    k = cam.intrinsics
    x = (uv[:, 0] - k.cx) / k.fx * d
    y = (uv[:, 1] - k.cy) / k.fy * d
    cam_pts = np.stack([x, y, d], axis=1)
    R = cam.extrinsics.matrix()
    return (cam_pts - cam.extrinsics.translation) @ R


def interpolate_pose(a: Extrinsics, b: Extrinsics, alpha: float) -> Extrinsics:
    """Interpolate two camera poses.

    Rotation follows the shortest arc; the camera *center* trajectory is
    linear in world space, then converted back to world->camera form.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 0.0:
        return a
    if alpha == 1.0:
        return b
    q = quat_slerp(a.rotation, b.rotation, alpha)
    center = (1.0 - alpha) * a.camera_center() + alpha * b.camera_center()
    R = quat_to_matrix(q)
    return Extrinsics(q, -R @ center)
