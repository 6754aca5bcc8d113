"""Character 3D fitting: closed-form similarity (s, R, t) between point
sets, applied globally to a motion sequence.

The estimate is the classic centered cross-covariance solution with
reflection correction and a variance-ratio scale.  The 3x3 factorization
is an in-repo one-sided Jacobi routine so results are deterministic across
platforms and BLAS builds.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateConfiguration, ShapeMismatch
from .geom import quat_from_matrix, quat_to_matrix

__all__ = [
    "Skeleton",
    "MotionSequence",
    "SimilarityTransform",
    "svd3",
    "fit_similarity",
    "apply_similarity",
    "fit_to_reference",
    "BODY18_JOINTS",
    "BODY18_LIMBS",
]

# body-18 convention: joint names and limb connectivity (0-indexed pairs)
BODY18_JOINTS = [
    "nose", "neck",
    "r-shoulder", "r-elbow", "r-wrist",
    "l-shoulder", "l-elbow", "l-wrist",
    "r-hip", "r-knee", "r-ankle",
    "l-hip", "l-knee", "l-ankle",
    "r-eye", "l-eye", "r-ear", "l-ear",
]
BODY18_LIMBS = [
    (1, 2), (1, 5), (2, 3), (3, 4), (5, 6), (6, 7),
    (1, 8), (8, 9), (9, 10), (1, 11), (11, 12), (12, 13),
    (1, 0), (0, 14), (14, 15), (0, 16), (16, 17),
]


@dataclass(frozen=True)
class Skeleton:
    joints: tuple
    limbs: tuple  # (a, b) joint-index pairs

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "limbs", tuple(tuple(l) for l in self.limbs))
        J = len(self.joints)
        for a, b in self.limbs:
            if not (0 <= a < J and 0 <= b < J):
                raise ValueError(f"limb ({a},{b}) out of range for {J} joints")

    @classmethod
    def body18(cls) -> "Skeleton":
        return cls(BODY18_JOINTS, BODY18_LIMBS)


@dataclass
class MotionSequence:
    """T x J x 3 joint positions in world meters plus skeleton metadata."""
    joints: np.ndarray
    skeleton: Skeleton
    fps: float = 30.0

    def __post_init__(self):
        self.joints = np.asarray(self.joints, dtype=np.float64)
        if self.joints.ndim != 3 or self.joints.shape[2] != 3:
            raise ShapeMismatch(f"expected (T, J, 3), got {self.joints.shape}")
        if self.joints.shape[0] < 1:
            raise ShapeMismatch("sequence must have at least one frame")
        if self.joints.shape[1] != len(self.skeleton.joints):
            raise ShapeMismatch("joint count does not match skeleton")
        if not np.all(np.isfinite(self.joints)):
            raise ValueError("joint coordinates must be finite")

    @property
    def num_frames(self) -> int:
        return self.joints.shape[0]

    @property
    def num_joints(self) -> int:
        return self.joints.shape[1]


@dataclass(frozen=True)
class SimilarityTransform:
    scale: float = 1.0
    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        q = np.asarray(self.rotation, dtype=np.float64)
        q = q / np.linalg.norm(q)
        object.__setattr__(self, "rotation", q)
        object.__setattr__(self, "translation",
                           np.asarray(self.translation, dtype=np.float64))

    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    def apply(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        return self.scale * (pts @ self.matrix().T) + self.translation

    def compose(self, other: "SimilarityTransform") -> "SimilarityTransform":
        """self ∘ other (other applied first)."""
        R = self.matrix() @ other.matrix()
        t = self.scale * (self.matrix() @ other.translation) + self.translation
        return SimilarityTransform(self.scale * other.scale, quat_from_matrix(R), t)


def _jacobi_rotate(B, V, p, q):
    """One one-sided Jacobi rotation orthogonalizing columns p, q of B."""
    a = B[:, p] @ B[:, p]
    b = B[:, q] @ B[:, q]
    c = B[:, p] @ B[:, q]
    if c == 0.0:
        return 0.0
    zeta = (b - a) / (2.0 * c)
    t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta)) if zeta != 0 \
        else 1.0
    cs = 1.0 / np.sqrt(1.0 + t * t)
    sn = cs * t
    Bp = B[:, p].copy()
    B[:, p] = cs * Bp - sn * B[:, q]
    B[:, q] = sn * Bp + cs * B[:, q]
    Vp = V[:, p].copy()
    V[:, p] = cs * Vp - sn * V[:, q]
    V[:, q] = sn * Vp + cs * V[:, q]
    denom = np.sqrt(a * b)
    return abs(c) / denom if denom > 0 else 0.0


def svd3(A, tol: float = 1e-12, max_sweeps: int = 100):
    """Deterministic SVD of a 3x3 matrix via one-sided Jacobi rotations.

    Returns (U, d, V) with A = U @ diag(d) @ V.T, d sorted descending,
    d >= 0.  Off-diagonal convergence tolerance 1e-12 (relative).
    """
    B = np.array(A, dtype=np.float64)
    if B.shape != (3, 3):
        raise ValueError("svd3 expects a 3x3 matrix")
    V = np.eye(3)
    for _ in range(max_sweeps):
        off = 0.0
        for p, q in ((0, 1), (0, 2), (1, 2)):
            off = max(off, _jacobi_rotate(B, V, p, q))
        if off <= tol:
            break
    d = np.sqrt(np.sum(B * B, axis=0))
    order = np.argsort(-d, kind="stable")
    d = d[order]
    B = B[:, order]
    V = V[:, order]
    U = np.zeros((3, 3))
    for i in range(3):
        if d[i] > 1e-300:
            U[:, i] = B[:, i] / d[i]
    if np.any(d <= 1e-300):
        U = _complete_basis(U, d)
    return U, d, V


def _complete_basis(U, d):
    """Fill zero columns of U with an orthonormal completion."""
    cols = [U[:, i] for i in range(3) if d[i] > 1e-300]
    out = np.zeros((3, 3))
    for i in range(3):
        if d[i] > 1e-300:
            out[:, i] = U[:, i]
    basis = list(cols)
    candidates = [np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0])]
    for i in range(3):
        if d[i] > 1e-300:
            continue
        for c in candidates:
            v = c.copy()
            for b in basis:
                v -= (v @ b) * b
            n = np.linalg.norm(v)
            if n > 1e-6:
                out[:, i] = v / n
                basis.append(out[:, i])
                break
    return out


def fit_similarity(source, target, valid=None) -> SimilarityTransform:
    """Least-squares similarity: argmin over (s, R, t) of sum ||s R x + t - y||^2.

    Centered cross-covariance, 3x3 Jacobi factorization with reflection
    correction (det(R) = +1 always), scale from the variance ratio,
    translation from the centroids.
    """
    source = np.asarray(source, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if source.shape != target.shape or source.ndim != 2 or source.shape[1] != 3:
        raise ShapeMismatch("source/target must both be (J, 3)")
    if valid is None:
        valid = np.ones(len(source), dtype=bool)
    valid = np.asarray(valid, dtype=bool)
    n = int(valid.sum())
    if n < 3:
        raise DegenerateConfiguration(f"need >= 3 valid correspondences, got {n}")
    x = source[valid]
    y = target[valid]
    mu_x = x.mean(axis=0)
    mu_y = y.mean(axis=0)
    dx = x - mu_x
    dy = y - mu_y
    sigma = dy.T @ dx / n
    var_x = float((dx * dx).sum()) / n
    if var_x <= 0:
        raise DegenerateConfiguration("source points are coincident")

    U, d, V = svd3(sigma)
    if d[0] <= 0 or d[1] <= 1e-9 * d[0]:
        raise DegenerateConfiguration("correspondences are collinear")
    S = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(V) < 0:
        S[2, 2] = -1.0
    R = U @ S @ V.T
    s = float((d * np.diag(S)).sum()) / var_x
    if not s > 0:
        raise DegenerateConfiguration("non-positive scale estimate")
    t = mu_y - s * (R @ mu_x)
    return SimilarityTransform(s, quat_from_matrix(R), t)


def apply_similarity(seq: MotionSequence, xf: SimilarityTransform) -> MotionSequence:
    """Map every joint of every frame by p -> s R p + t; metadata unchanged."""
    if xf.scale == 1.0 and np.allclose(xf.rotation, [1, 0, 0, 0]) \
            and not xf.translation.any():
        return replace(seq, joints=seq.joints.copy())
    T, J, _ = seq.joints.shape
    flat = seq.joints.reshape(T * J, 3)
    return replace(seq, joints=xf.apply(flat).reshape(T, J, 3))


def fit_to_reference(seq: MotionSequence, ref_keypoints, valid=None) -> MotionSequence:
    """Fit frame 0 onto the reference keypoints, apply to the whole sequence."""
    ref_keypoints = np.asarray(ref_keypoints, dtype=np.float64)
    if ref_keypoints.shape != (seq.num_joints, 3):
        raise ShapeMismatch("reference keypoints do not match the skeleton")
    xf = fit_similarity(seq.joints[0], ref_keypoints, valid)
    return apply_similarity(seq, xf)
