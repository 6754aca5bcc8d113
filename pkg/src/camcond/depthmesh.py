"""Depth raster -> triangulated scene mesh, plus a non-neural hole fill.

Each 2x2 block of valid pixels yields two triangles split along the
top-left -> bottom-right diagonal.  Triangles whose edges span a large
*relative* depth jump are culled so that depth discontinuities do not
become rubber sheets when the mesh is reprojected.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geom
from .errors import DimensionMismatch, EmptyMesh, NoBoundaryData

__all__ = ["DepthRaster", "SceneMesh", "build_mesh", "fill_holes",
           "DEFAULT_DISCONTINUITY_RATIO"]

DEFAULT_DISCONTINUITY_RATIO = 0.05


@dataclass
class DepthRaster:
    """H x W metric depth with a validity mask.

    Invalid pixels hold a sentinel (0.0) and must never be read as depth.
    """
    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.values.ndim != 2 or self.values.shape != self.valid.shape:
            raise DimensionMismatch(
                f"values {self.values.shape} vs valid {self.valid.shape}")
        v = self.values[self.valid]
        if v.size and (not np.all(np.isfinite(v)) or np.any(v <= 0)):
            raise ValueError("valid depth values must be finite and positive")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_array(cls, values) -> "DepthRaster":
        """Mark non-finite and non-positive entries invalid."""
        values = np.asarray(values, dtype=np.float64)
        valid = np.isfinite(values) & (values > 0)
        out = np.where(valid, values, 0.0)
        return cls(out, valid)


@dataclass
class SceneMesh:
    """Triangulated world-space surface lifted from a depth raster."""
    vertices: np.ndarray        # (N, 3) world meters
    triangles: np.ndarray       # (M, 3) vertex indices
    vertex_source: np.ndarray   # (N, 2) origin pixel (u, v)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        self.vertex_source = np.asarray(self.vertex_source, dtype=np.int64)
        if self.triangles.size:
            if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
                raise ValueError("triangle index out of range")
            t = self.triangles
            if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
                raise ValueError("triangle with repeated vertex")

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)


def build_mesh(depth: DepthRaster, cam: geom.CameraFrame,
               discontinuity_ratio: float = DEFAULT_DISCONTINUITY_RATIO) -> SceneMesh:
    """Lift a depth raster into a world-space mesh under the given camera.

    Vertices sit at pixel centers (u + 0.5, v + 0.5).  A triangle is kept
    only if every edge satisfies |d_a - d_b| / min(d_a, d_b) <= ratio.
    """
    if (depth.height, depth.width) != (cam.height, cam.width):
        raise DimensionMismatch(
            f"depth {depth.width}x{depth.height} vs camera {cam.width}x{cam.height}")
    if not discontinuity_ratio > 0:
        raise ValueError("discontinuity_ratio must be positive")

    H, W = depth.height, depth.width
    d = depth.values
    val = depth.valid

    # quad corners: a=(u,v) b=(u+1,v) c=(u,v+1) e=(u+1,v+1)
    va, vb = val[:-1, :-1], val[:-1, 1:]
    vc, ve = val[1:, :-1], val[1:, 1:]
    da, db = d[:-1, :-1], d[:-1, 1:]
    dc, de = d[1:, :-1], d[1:, 1:]

    def smooth(x, y):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.abs(x - y) / np.minimum(x, y)
        return r <= discontinuity_ratio

    # triangle 1: a, b, e ; triangle 2: a, e, c (diagonal a-e)
    t1 = va & vb & ve & smooth(da, db) & smooth(db, de) & smooth(da, de)
    t2 = va & ve & vc & smooth(da, de) & smooth(de, dc) & smooth(da, dc)

    if not (t1.any() or t2.any()):
        raise EmptyMesh("no triangle survives discontinuity culling")

    # vertices for every valid pixel referenced by a surviving triangle
    used = np.zeros((H, W), dtype=bool)
    for m, offs in ((t1, ((0, 0), (0, 1), (1, 1))),
                    (t2, ((0, 0), (1, 1), (1, 0)))):
        ys, xs = np.nonzero(m)
        for dy, dx in offs:
            used[ys + dy, xs + dx] = True

    vys, vxs = np.nonzero(used)
    index = np.full((H, W), -1, dtype=np.int64)
    index[vys, vxs] = np.arange(len(vys))

    uv = np.stack([vxs + 0.5, vys + 0.5], axis=1).astype(np.float64)
    verts = geom.unproject_many(cam, uv, d[vys, vxs])
    source = np.stack([vxs, vys], axis=1)

    tris = []
    y1, x1 = np.nonzero(t1)
    tris.append(np.stack([index[y1, x1], index[y1, x1 + 1], index[y1 + 1, x1 + 1]], axis=1))
    y2, x2 = np.nonzero(t2)
    tris.append(np.stack([index[y2, x2], index[y2 + 1, x2 + 1], index[y2 + 1, x2]], axis=1))
    # interleave in row-major quad order for a stable, parallelism-independent layout
    all_tris = np.concatenate(tris, axis=0)
    quad_key = np.concatenate([ (y1 * W + x1) * 2, (y2 * W + x2) * 2 + 1 ])
    order = np.argsort(quad_key, kind="stable")
    return SceneMesh(verts, all_tris[order], source)


def fill_holes(depth: DepthRaster, hole: np.ndarray,
               tol: float = 1e-12, max_iters: int = 100000) -> DepthRaster:
    """Fill invalid pixels inside `hole` by harmonic 4-neighbor averaging.

    Pixels outside the hole (and valid pixels inside it) are untouched
    bit-exactly, which makes the operation idempotent on its own output.
    """
    hole = np.asarray(hole, dtype=bool)
    if hole.shape != depth.values.shape:
        raise DimensionMismatch("hole mask does not match raster")
    fill = hole & ~depth.valid
    if not fill.any():
        return DepthRaster(depth.values.copy(), depth.valid.copy())
    if not (depth.valid & ~fill).any():
        raise NoBoundaryData("no valid pixel outside the hole to fill from")

    H, W = depth.values.shape
    vals = depth.values.copy()
    known = depth.valid.copy()

    # BFS-style init: average of already-known 4-neighbors, layer by layer
    remaining = fill.copy()
    while remaining.any():
        nsum = np.zeros((H, W))
        ncnt = np.zeros((H, W))
        for (sy, sx) in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            shifted_known = np.zeros((H, W), dtype=bool)
            shifted_vals = np.zeros((H, W))
            ys = slice(max(sy, 0), H + min(sy, 0))
            yd = slice(max(-sy, 0), H + min(-sy, 0))
            xs = slice(max(sx, 0), W + min(sx, 0))
            xd = slice(max(-sx, 0), W + min(-sx, 0))
            shifted_known[yd, xd] = known[ys, xs]
            shifted_vals[yd, xd] = vals[ys, xs] * known[ys, xs]
            nsum += shifted_vals
            ncnt += shifted_known
        frontier = remaining & (ncnt > 0)
        if not frontier.any():
            raise NoBoundaryData("hole region is disconnected from valid pixels")
        vals[frontier] = nsum[frontier] / ncnt[frontier]
        known |= frontier
        remaining &= ~frontier

    # Jacobi relaxation toward the harmonic solution over the fill region
    fy, fx = np.nonzero(fill)
    boundary_known = depth.valid | fill
    for _ in range(max_iters):
        nsum = np.zeros((H, W))
        ncnt = np.zeros((H, W))
        for (sy, sx) in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ys = slice(max(sy, 0), H + min(sy, 0))
            yd = slice(max(-sy, 0), H + min(-sy, 0))
            xs = slice(max(sx, 0), W + min(sx, 0))
            xd = slice(max(-sx, 0), W + min(-sx, 0))
            k = np.zeros((H, W), dtype=bool)
            v = np.zeros((H, W))
            k[yd, xd] = boundary_known[ys, xs]
            v[yd, xd] = vals[ys, xs] * k[yd, xd]
            nsum += v
            ncnt += k
        new = nsum[fy, fx] / ncnt[fy, fx]
        if np.max(np.abs(new - vals[fy, fx])) <= tol:
            break
        vals[fy, fx] = new

    out_valid = depth.valid | fill
    return DepthRaster(vals, out_valid)
