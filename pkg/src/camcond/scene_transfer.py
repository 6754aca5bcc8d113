"""Scene transfer: re-register the reference character's depth into the
background-only scene.

Pipeline: exact Euclidean distance to the character mask -> exponential
importance weights on the non-masked pixels -> weighted 3D centroids under
both depth maps -> affine depth remap that sends the reference centroid
depth onto the background centroid depth.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geom
from .depthmesh import DepthRaster
from .errors import DimensionMismatch, EmptyMask, NonPositiveResult, ZeroTotalWeight

__all__ = [
    "CharacterMask",
    "TransferParams",
    "distance_transform",
    "squared_distance_transform",
    "importance_weights",
    "weighted_centroids",
    "align_character_depth",
    "transfer_character",
    "DEFAULT_DECAY_LENGTH",
]

DEFAULT_DECAY_LENGTH = 1.0

_INF = 1e20


@dataclass
class CharacterMask:
    inside: np.ndarray  # H x W bool, True on the character

    def __post_init__(self):
        self.inside = np.asarray(self.inside, dtype=bool)
        if self.inside.ndim != 2:
            raise DimensionMismatch("mask must be 2-D")
        if not self.inside.any():
            raise EmptyMask("mask has no character pixel")
        if self.inside.all():
            raise EmptyMask("mask covers the whole image")

    @property
    def height(self) -> int:
        return self.inside.shape[0]

    @property
    def width(self) -> int:
        return self.inside.shape[1]


@dataclass(frozen=True)
class TransferParams:
    p_ref: np.ndarray  # weighted centroid under the reference depth
    p_bg: np.ndarray   # weighted centroid under the background depth

    def __post_init__(self):
        object.__setattr__(self, "p_ref", np.asarray(self.p_ref, dtype=np.float64))
        object.__setattr__(self, "p_bg", np.asarray(self.p_bg, dtype=np.float64))
        if self.p_ref[2] <= 0 or self.p_bg[2] <= 0:
            raise ValueError("centroid depths must be positive")


def _edt_1d(f: np.ndarray) -> np.ndarray:
    """Exact 1-D squared distance transform (lower envelope of parabolas)."""
    n = len(f)
    d = np.empty(n)
    v = np.empty(n, dtype=np.int64)   # parabola sites
    z = np.empty(n + 1)               # envelope breakpoints
    k = 0
    v[0] = 0
    z[0] = -_INF
    z[1] = _INF
    for q in range(1, n):
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2 * q - 2 * v[k])
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2 * q - 2 * v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = _INF
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d[q] = (q - v[k]) ** 2 + f[v[k]]
    return d


def squared_distance_transform(inside: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distance to the nearest True pixel.

    Two-pass separable transform; squared distances are exact integers so
    the result matches a brute-force nearest-pixel scan bit for bit.
    """
    inside = np.asarray(inside, dtype=bool)
    H, W = inside.shape
    g = np.where(inside, 0.0, _INF)
    for x in range(W):
        g[:, x] = _edt_1d(g[:, x])
    out = np.empty((H, W))
    for y in range(H):
        out[y, :] = _edt_1d(g[y, :])
    return out


def distance_transform(mask: CharacterMask) -> np.ndarray:
    """Exact Euclidean pixel distance from every pixel to the mask."""
    return np.sqrt(squared_distance_transform(mask.inside))


def importance_weights(mask: CharacterMask,
                       decay_length: float = DEFAULT_DECAY_LENGTH) -> np.ndarray:
    """w = exp(-dist / decay_length) outside the mask; NaN on masked pixels.

    Masked pixels never enter downstream sums; NaN makes accidental use loud.
    """
    if not decay_length > 0:
        raise ValueError("decay_length must be positive")
    dist = distance_transform(mask)
    w = np.exp(-dist / decay_length)
    w[mask.inside] = np.nan
    return w


def weighted_centroids(d_ref: DepthRaster, d_bg: DepthRaster,
                       cam: geom.CameraFrame, mask: CharacterMask,
                       decay_length: float = DEFAULT_DECAY_LENGTH) -> TransferParams:
    """Importance-weighted 3D centroids of the environment under both depths.

    Sums run row-major over non-masked pixels valid in *both* rasters, so
    the two centroids stay comparable.
    """
    shape = d_ref.values.shape
    if d_bg.values.shape != shape or mask.inside.shape != shape:
        raise DimensionMismatch("raster/mask dimensions differ")
    if (cam.height, cam.width) != shape:
        raise DimensionMismatch("camera does not match raster size")

    contrib = ~mask.inside & d_ref.valid & d_bg.valid
    if not contrib.any():
        raise ZeroTotalWeight("no contributing pixel outside the mask")
    w = importance_weights(mask, decay_length)

    ys, xs = np.nonzero(contrib)          # row-major order
    ww = w[ys, xs]
    total = ww.sum()
    if not total > 0:
        raise ZeroTotalWeight("importance weights sum to zero")
    uv = np.stack([xs + 0.5, ys + 0.5], axis=1).astype(np.float64)
    x_ref = geom.unproject_many(cam, uv, d_ref.values[ys, xs])
    x_bg = geom.unproject_many(cam, uv, d_bg.values[ys, xs])
    p_ref = (ww[:, None] * x_ref).sum(axis=0) / total
    p_bg = (ww[:, None] * x_bg).sum(axis=0) / total
    return TransferParams(p_ref, p_bg)


def align_character_depth(z_ref, params: TransferParams):
    """Affine depth remap: (z - p^z_ref) * (p^z_bg / p^z_ref) + p^z_bg.

    Accepts scalars or arrays.  Raises NonPositiveResult if any remapped
    depth is non-positive (pathological centroids).
    """
    z_ref = np.asarray(z_ref, dtype=np.float64)
    if np.any(z_ref <= 0):
        raise ValueError("reference depths must be positive")
    pz_ref = params.p_ref[2]
    pz_bg = params.p_bg[2]
    out = (z_ref - pz_ref) * (pz_bg / pz_ref) + pz_bg
    if np.any(out <= 0):
        raise NonPositiveResult("aligned depth is non-positive")
    return out if out.ndim else float(out)


def transfer_character(d_ref: DepthRaster, d_bg: DepthRaster,
                       cam: geom.CameraFrame, mask: CharacterMask,
                       decay_length: float = DEFAULT_DECAY_LENGTH):
    """Lift the masked character pixels into the background scene.

    Image-plane coordinates are preserved; only depth is remapped by the
    affine alignment.  Returns (points (N, 3) world, source pixels (N, 2)).
    """
    params = weighted_centroids(d_ref, d_bg, cam, mask, decay_length)
    sel = mask.inside & d_ref.valid
    ys, xs = np.nonzero(sel)
    uv = np.stack([xs + 0.5, ys + 0.5], axis=1).astype(np.float64)
    z = align_character_depth(d_ref.values[ys, xs], params)
    pts = geom.unproject_many(cam, uv, np.atleast_1d(z))
    return pts, np.stack([xs, ys], axis=1)
