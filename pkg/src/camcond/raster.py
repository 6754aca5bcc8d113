"""Deterministic software rasterizer for the two control signals.

Coverage semantics (shared by the brute-force test oracle):
  * vertices are projected with the pinhole model; a triangle with any
    vertex at camera-space depth <= 1e-9 is dropped whole;
  * a pixel (x, y) is sampled at its center (x + 0.5, y + 0.5);
  * winding is canonicalized so the doubled signed area
    orient(v0, v1, v2) is positive (v1/v2 swapped otherwise), with
    orient(a, b, p) = (bx-ax)*(py-ay) - (by-ay)*(px-ax);
  * the center is covered iff every edge function is > 0, or == 0 on a
    top or left edge (top: dy == 0 and dx > 0; left: dy < 0);
  * depth is perspective-correct: 1/z interpolated with barycentric
    weights w_i = orient(opposite edge) / doubled area;
  * the z-test keeps the strictly nearest fragment.

Everything is pure; frame-level and triangle-level parallelism merge with
an elementwise min and therefore cannot change output bits.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geom
from .depthmesh import SceneMesh
from .errors import AllUncovered, BehindCamera, DimensionMismatch, LengthMismatch
from .motion_fit import BODY18_LIMBS, MotionSequence

__all__ = [
    "FrameBuffer",
    "SkeletonStyle",
    "rasterize_mesh_depth",
    "normalize_depth",
    "rasterize_skeleton",
    "compose_conditions",
    "render_sequence",
    "render_signals",
    "PALETTE",
]

_EPS_Z = 1e-9

# canonical 17-color palette, cycled over limbs and joints
PALETTE = [
    (255, 0, 0), (255, 85, 0), (255, 170, 0), (255, 255, 0),
    (170, 255, 0), (85, 255, 0), (0, 255, 0), (0, 255, 85),
    (0, 255, 170), (0, 255, 255), (0, 170, 255), (0, 85, 255),
    (0, 0, 255), (85, 0, 255), (170, 0, 255), (255, 0, 255),
    (255, 0, 170),
]


@dataclass
class FrameBuffer:
    width: int
    height: int
    color: np.ndarray = None
    zbuffer: np.ndarray = None

    def __post_init__(self):
        if self.color is None:
            self.color = np.zeros((self.height, self.width, 3), dtype=np.uint8)
        if self.zbuffer is None:
            self.zbuffer = np.full((self.height, self.width), np.inf)


@dataclass
class SkeletonStyle:
    limbs: list
    limb_colors: list
    joint_colors: list
    joint_radius: float = 4.0
    limb_thickness: float = 4.0

    def __post_init__(self):
        if self.limb_thickness < 1:
            raise ValueError("limb thickness must be >= 1")

    @classmethod
    def body18(cls, joint_radius: float = 4.0, limb_thickness: float = 4.0) -> "SkeletonStyle":
        limbs = list(BODY18_LIMBS)
        limb_colors = [PALETTE[i % len(PALETTE)] for i in range(len(limbs))]
        joint_colors = [PALETTE[i % len(PALETTE)] for i in range(18)]
        return cls(limbs, limb_colors, joint_colors, joint_radius, limb_thickness)


def _raster_triangles(verts_px, verts_z, tris, width, height, zbuf):
    """Scanline-free bounding-box fill of the given triangles into zbuf."""
    for i0, i1, i2 in tris:
        p0, p1, p2 = verts_px[i0], verts_px[i1], verts_px[i2]
        z0, z1, z2 = verts_z[i0], verts_z[i1], verts_z[i2]
        if z0 <= _EPS_Z or z1 <= _EPS_Z or z2 <= _EPS_Z:
            continue
        area2 = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
        if area2 < 0:
            p1, p2 = p2, p1
            z1, z2 = z2, z1
            area2 = -area2
        if area2 == 0:
            continue
        xmin = max(int(np.floor(min(p0[0], p1[0], p2[0]) - 0.5)), 0)
        xmax = min(int(np.ceil(max(p0[0], p1[0], p2[0]) - 0.5)), width - 1)
        ymin = max(int(np.floor(min(p0[1], p1[1], p2[1]) - 0.5)), 0)
        ymax = min(int(np.ceil(max(p0[1], p1[1], p2[1]) - 0.5)), height - 1)
        if xmin > xmax or ymin > ymax:
            continue
        px = np.arange(xmin, xmax + 1, dtype=np.float64) + 0.5
        py = np.arange(ymin, ymax + 1, dtype=np.float64) + 0.5
        PX, PY = np.meshgrid(px, py)
        cover, z = coverage_and_depth(p0, p1, p2, z0, z1, z2, area2, PX, PY)
        if not cover.any():
            continue
        sub = zbuf[ymin:ymax + 1, xmin:xmax + 1]
        upd = cover & (z < sub)
        sub[upd] = z[upd]


def coverage_and_depth(p0, p1, p2, z0, z1, z2, area2, PX, PY):
    """Shared inside-test + perspective-correct depth on a pixel-center grid.

    Vertices must already be in canonical (positive-area) winding.
    """
    def edge(a, b):
        e = (b[0] - a[0]) * (PY - a[1]) - (b[1] - a[1]) * (PX - a[0])
        dx, dy = b[0] - a[0], b[1] - a[1]
        top_left = (dy == 0 and dx > 0) or dy < 0
        return e, top_left

    e0, tl0 = edge(p1, p2)  # weight of v0
    e1, tl1 = edge(p2, p0)  # weight of v1
    e2, tl2 = edge(p0, p1)  # weight of v2
    cover = (
        ((e0 > 0) | ((e0 == 0) & tl0))
        & ((e1 > 0) | ((e1 == 0) & tl1))
        & ((e2 > 0) | ((e2 == 0) & tl2))
    )
    l0 = e0 / area2
    l1 = e1 / area2
    l2 = e2 / area2
    inv_z = l0 / z0 + l1 / z1 + l2 / z2
    with np.errstate(divide="ignore", invalid="ignore"):
        z = 1.0 / inv_z
    return cover, z


def rasterize_mesh_depth(mesh: SceneMesh, cam: geom.CameraFrame,
                         threads: int = 1) -> FrameBuffer:
    """Z-buffered depth render of the mesh under the camera.

    `threads` partitions triangles; partial z-buffers merge with an
    elementwise min, so the output is bit-identical for any thread count.
    """
    fb = FrameBuffer(cam.width, cam.height)
    px, z = geom.project_many(cam, mesh.vertices)
    tris = mesh.triangles
    if threads <= 1 or len(tris) < 2 * threads:
        _raster_triangles(px, z, tris, cam.width, cam.height, fb.zbuffer)
        return fb
    chunks = np.array_split(tris, threads)
    bufs = [np.full((cam.height, cam.width), np.inf) for _ in chunks]

    def work(i):
        _raster_triangles(px, z, chunks[i], cam.width, cam.height, bufs[i])

    with ThreadPoolExecutor(max_workers=threads) as ex:
        list(ex.map(work, range(len(chunks))))
    for b in bufs:
        np.minimum(fb.zbuffer, b, out=fb.zbuffer)
    return fb


def normalize_depth(frames: list) -> list:
    """Min-max normalize depth over the *whole* sequence to grayscale.

    Near is bright; uncovered pixels are black; a constant-depth sequence
    maps to 255.  Extrema are global so camera motion reads as a
    brightness change rather than being renormalized away.
    """
    covered = [np.isfinite(fb.zbuffer) for fb in frames]
    if not any(c.any() for c in covered):
        raise AllUncovered("no covered pixel in the whole sequence")
    d_min = min(float(fb.zbuffer[c].min()) for fb, c in zip(frames, covered) if c.any())
    d_max = max(float(fb.zbuffer[c].max()) for fb, c in zip(frames, covered) if c.any())
    out = []
    for fb, c in zip(frames, covered):
        g = np.zeros((fb.height, fb.width), dtype=np.uint8)
        if d_max == d_min:
            g[c] = 255
        else:
            scaled = np.rint(255.0 * (d_max - fb.zbuffer[c]) / (d_max - d_min))
            g[c] = scaled.astype(np.uint8)
        out.append(g)
    return out


def _draw_capsule(img, a, b, radius, color):
    """Fill pixels whose integer coordinates lie within `radius` of segment ab."""
    h, w = img.shape[:2]
    xmin = max(int(np.floor(min(a[0], b[0]) - radius)), 0)
    xmax = min(int(np.ceil(max(a[0], b[0]) + radius)), w - 1)
    ymin = max(int(np.floor(min(a[1], b[1]) - radius)), 0)
    ymax = min(int(np.ceil(max(a[1], b[1]) + radius)), h - 1)
    if xmin > xmax or ymin > ymax:
        return
    xs = np.arange(xmin, xmax + 1, dtype=np.float64)
    ys = np.arange(ymin, ymax + 1, dtype=np.float64)
    X, Y = np.meshgrid(xs, ys)
    ab = np.array([b[0] - a[0], b[1] - a[1]])
    denom = ab @ ab
    if denom == 0:
        t = np.zeros_like(X)
    else:
        t = np.clip(((X - a[0]) * ab[0] + (Y - a[1]) * ab[1]) / denom, 0.0, 1.0)
    dx = X - (a[0] + t * ab[0])
    dy = Y - (a[1] + t * ab[1])
    hit = dx * dx + dy * dy <= radius * radius
    img[ymin:ymax + 1, xmin:xmax + 1][hit] = color


def rasterize_skeleton(joints3d, cam: geom.CameraFrame,
                       style: SkeletonStyle) -> np.ndarray:
    """Render the skeleton on black under the camera.

    Limbs draw in style order (later over earlier); joints as filled
    circles on top; primitives with any endpoint behind the camera are
    dropped whole rather than clipped.
    """
    joints3d = np.asarray(joints3d, dtype=np.float64)
    img = np.zeros((cam.height, cam.width, 3), dtype=np.uint8)
    proj = []
    for p in joints3d:
        try:
            u, v, _ = geom.project(cam, p)
            proj.append((u, v))
        except BehindCamera:
            proj.append(None)
    for (ia, ib), color in zip(style.limbs, style.limb_colors):
        pa, pb = proj[ia], proj[ib]
        if pa is None or pb is None:
            continue
        _draw_capsule(img, pa, pb, style.limb_thickness / 2.0, np.array(color, dtype=np.uint8))
    for p, color in zip(proj, style.joint_colors):
        if p is None:
            continue
        _draw_capsule(img, p, p, style.joint_radius, np.array(color, dtype=np.uint8))
    return img


def compose_conditions(depth_frame: np.ndarray, pose_frame: np.ndarray) -> np.ndarray:
    """Depth grayscale replicated to RGB with the pose drawn strictly on top."""
    if depth_frame.shape[:2] != pose_frame.shape[:2]:
        raise DimensionMismatch(
            f"depth {depth_frame.shape[:2]} vs pose {pose_frame.shape[:2]}")
    out = np.repeat(depth_frame[:, :, None], 3, axis=2).astype(np.uint8)
    drawn = np.any(pose_frame != 0, axis=2)
    out[drawn] = pose_frame[drawn]
    return out


def render_signals(mesh: SceneMesh, motion: MotionSequence, traj: list,
                   style: SkeletonStyle, threads: int = 1) -> dict:
    """Render pose, depth and composite sequences under the trajectory.

    Depth normalization extrema are computed once over the full sequence.
    Returns {"pose": [...], "depth": [...], "composite": [...]}.
    """
    if len(traj) != motion.num_frames:
        raise LengthMismatch(
            f"{len(traj)} cameras vs {motion.num_frames} motion frames")

    def depth_frame(cam):
        return rasterize_mesh_depth(mesh, cam, threads=threads)

    def pose_frame(tau):
        return rasterize_skeleton(motion.joints[tau], traj[tau], style)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            zbufs = list(ex.map(depth_frame, traj))
            poses = list(ex.map(pose_frame, range(motion.num_frames)))
    else:
        zbufs = [depth_frame(c) for c in traj]
        poses = [pose_frame(t) for t in range(motion.num_frames)]

    try:
        grays = normalize_depth(zbufs)
    except AllUncovered:
        # mesh entirely out of view: legal, depth channel stays black
        grays = [np.zeros((c.height, c.width), dtype=np.uint8) for c in traj]
    composites = [compose_conditions(g, p) for g, p in zip(grays, poses)]
    return {"pose": poses, "depth": grays, "composite": composites}


def render_sequence(mesh: SceneMesh, motion: MotionSequence, traj: list,
                    style: SkeletonStyle, threads: int = 1):
    """(c_pose, c_pose_depth): per-frame pose RGB and depth+pose RGB."""
    sig = render_signals(mesh, motion, traj, style, threads=threads)
    return sig["pose"], sig["composite"]
