"""Front-to-back splat rasterizer emitting per-pixel spatial gradients.

The renderer produces, for every pixel, the blended color I together with
dI/dx, dI/dy, d2I/dxdy and the terminal accumulated alpha A with its three
spatial derivatives. Derivatives are with respect to continuous pixel units
at the render resolution; pixel (i, j) samples location (i + 0.5, j + 0.5).

Rendering at a resolution other than the scene's reference resolution
rescales means and standard deviations by the per-axis ratio, so derivative
channels always come out in "per rendered pixel" units.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (ALPHA_CLAMP, ALPHA_CULL, EARLY_TERMINATION, DimensionError,
                   Scene, logistic)

TILE = 16


@dataclass
class GradientImage:
    """Rendered color plus analytical spatial gradients and alpha state."""

    color: np.ndarray      # (H, W, 3)
    d_dx: np.ndarray       # (H, W, 3)
    d_dy: np.ndarray       # (H, W, 3)
    d_dxdy: np.ndarray     # (H, W, 3)
    alpha: np.ndarray      # (H, W)
    alpha_dx: np.ndarray   # (H, W)
    alpha_dy: np.ndarray   # (H, W)
    alpha_dxdy: np.ndarray  # (H, W)
    contrib_count: np.ndarray  # (H, W) int32

    @property
    def width(self) -> int:
        return self.color.shape[1]

    @property
    def height(self) -> int:
        return self.color.shape[0]

    @classmethod
    def zeros(cls, width: int, height: int) -> "GradientImage":
        shape3 = (height, width, 3)
        shape1 = (height, width)
        return cls(np.zeros(shape3), np.zeros(shape3), np.zeros(shape3),
                   np.zeros(shape3), np.zeros(shape1), np.zeros(shape1),
                   np.zeros(shape1), np.zeros(shape1),
                   np.zeros(shape1, dtype=np.int32))


def sort_by_depth(scene: Scene) -> np.ndarray:
    """Indices ordering splats front to back; ties keep list order."""
    return np.argsort(scene.depths, kind="stable")


@dataclass
class RenderPack:
    """Depth-sorted, render-resolution splat parameters shared by both passes."""

    order: np.ndarray    # (N,) original index of each sorted splat
    means: np.ndarray    # (N, 2) render-resolution pixel units
    conics: np.ndarray   # (N, 3) a, b, c
    sigmas: np.ndarray   # (N,)
    colors: np.ndarray   # (N, 3)
    bboxes: np.ndarray   # (N, 4) int64 half-open pixel ranges x0,x1,y0,y1
    valid: np.ndarray    # (N,) bool, splats whose bbox intersects the image
    kx: float
    ky: float


def prepare_scene(scene: Scene, out_w: int, out_h: int) -> RenderPack:
    """Sort, rescale and bound splats for rendering at out_w x out_h."""
    ref_w, ref_h = scene.reference_resolution
    kx = out_w / ref_w
    ky = out_h / ref_h
    order = sort_by_depth(scene)
    means = scene.means[order] * np.array([kx, ky])
    ls = scene.log_scales[order]
    rot = scene.rotations[order]
    sigmas = logistic(scene.opacity_logits[order])
    colors = scene.colors[order]

    # conic = 0.5 * Sigma_render^-1 built directly from the parametrization:
    # Sigma_render^-1 = D^-1 R diag(e^-2l) R^T D^-1 with D = diag(kx, ky)
    e1 = np.exp(-2.0 * ls[:, 0])
    e2 = np.exp(-2.0 * ls[:, 1])
    cth = np.cos(rot)
    sth = np.sin(rot)
    n00 = e1 * cth * cth + e2 * sth * sth
    n01 = (e1 - e2) * sth * cth
    n11 = e1 * sth * sth + e2 * cth * cth
    conics = np.stack([n00 / (2.0 * kx * kx),
                       n01 / (2.0 * kx * ky),
                       n11 / (2.0 * ky * ky)], axis=1)

    # bbox from the exact cull ellipse a dx^2 + 2b dxdy + c dy^2 = ln(255*sigma),
    # padded one pixel; everything outside has alpha < 1/255 by construction.
    # det(conic) in closed form: a*c - b^2 cancels catastrophically for very
    # anisotropic splats, while e1*e2 never does.
    q = np.log(np.maximum(sigmas / ALPHA_CULL, 1.0))
    det = e1 * e2 / (4.0 * kx * kx * ky * ky)
    rx = np.sqrt(q * conics[:, 2] / det)
    ry = np.sqrt(q * conics[:, 0] / det)
    x0 = np.floor(means[:, 0] - rx).astype(np.int64) - 1
    x1 = np.ceil(means[:, 0] + rx).astype(np.int64) + 1
    y0 = np.floor(means[:, 1] - ry).astype(np.int64) - 1
    y1 = np.ceil(means[:, 1] + ry).astype(np.int64) + 1
    x0 = np.clip(x0, 0, out_w)
    x1 = np.clip(x1, 0, out_w)
    y0 = np.clip(y0, 0, out_h)
    y1 = np.clip(y1, 0, out_h)
    bboxes = np.stack([x0, x1, y0, y1], axis=1)
    valid = (sigmas >= ALPHA_CULL) & (x1 > x0) & (y1 > y0)
    return RenderPack(order=order, means=means, conics=conics, sigmas=sigmas,
                      colors=colors, bboxes=bboxes, valid=valid, kx=kx, ky=ky)


def tile_grid(out_w: int, out_h: int):
    """Half-open pixel ranges of the fixed 16x16 tiles, row-major."""
    tiles = []
    for ty0 in range(0, out_h, TILE):
        for tx0 in range(0, out_w, TILE):
            tiles.append((tx0, min(tx0 + TILE, out_w),
                          ty0, min(ty0 + TILE, out_h)))
    return tiles


def bin_tiles(pack: RenderPack, out_w: int, out_h: int):
    """Per-tile candidate lists (sorted order preserved within each tile)."""
    tiles = tile_grid(out_w, out_h)
    nx = (out_w + TILE - 1) // TILE
    cand = [[] for _ in tiles]
    for i in range(len(pack.order)):
        if not pack.valid[i]:
            continue
        x0, x1, y0, y1 = pack.bboxes[i]
        for ty in range(y0 // TILE, (y1 - 1) // TILE + 1):
            for tx in range(x0 // TILE, (x1 - 1) // TILE + 1):
                cand[ty * nx + tx].append(i)
    lists = [np.array(c, dtype=np.int64) for c in cand]
    return tiles, lists


def render_forward(scene: Scene, out_width: int, out_height: int, *,
                   tiled: bool = True, threads: int = 1) -> GradientImage:
    """Render the scene with analytical image gradients.

    `tiled=False` runs the single-region reference path; the tiled path is
    bit-identical to it and independent of the worker count.
    """
    if out_width <= 0 or out_height <= 0:
        raise DimensionError("output dimensions must be positive")
    img = GradientImage.zeros(out_width, out_height)
    if scene.n == 0:
        img.color[:] = scene.background
        return img
    pack = prepare_scene(scene, out_width, out_height)
    bg = np.ascontiguousarray(scene.background)
    args = (pack.means, pack.conics, pack.sigmas, pack.colors, pack.bboxes, bg,
            img.color, img.d_dx, img.d_dy, img.d_dxdy,
            img.alpha, img.alpha_dx, img.alpha_dy, img.alpha_dxdy,
            img.contrib_count)
    if not tiled:
        cand = np.flatnonzero(pack.valid).astype(np.int64)
        _kernels.forward_region(0, out_width, 0, out_height, cand, *args)
        return img
    tiles, lists = bin_tiles(pack, out_width, out_height)

    def run(i):
        tx0, tx1, ty0, ty1 = tiles[i]
        _kernels.forward_region(tx0, tx1, ty0, ty1, lists[i], *args)

    if threads <= 1:
        for i in range(len(tiles)):
            run(i)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(len(tiles))))
    return img


def render_at_points(scene: Scene, xs, ys, out_width: int, out_height: int, *,
                     with_state: bool = False):
    """Evaluate the blended color at arbitrary continuous positions.

    Applies the same sort, cull, clamp and early-termination rules as
    render_forward so its output is the continuous function the rasterizer
    samples at pixel centers. Used for finite-difference validation.

    With `with_state`, also returns the per-point blend signature (which
    splats blended and which were clamped): the blended color is smooth in
    any neighborhood where that signature is constant.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    ys = np.atleast_1d(np.asarray(ys, dtype=np.float64))
    pack = prepare_scene(scene, out_width, out_height)
    npts = xs.shape[0]
    n = len(pack.order)
    bcol = np.zeros((npts, 3))
    acc = np.zeros(npts)
    done = np.zeros(npts, dtype=bool)
    used = np.zeros((npts, n), dtype=bool)
    clamped = np.zeros((npts, n), dtype=bool)
    for i in range(n):
        if not pack.valid[i]:
            continue
        dx = xs - pack.means[i, 0]
        dy = ys - pack.means[i, 1]
        ca, cb, cc = pack.conics[i]
        expo = -(ca * dx * dx + 2.0 * cb * dx * dy + cc * dy * dy)
        a_raw = pack.sigmas[i] * np.exp(expo)
        alpha = np.minimum(a_raw, ALPHA_CLAMP)
        use = (a_raw >= ALPHA_CULL) & ~done
        used[:, i] = use
        clamped[:, i] = use & (a_raw > ALPHA_CLAMP)
        t = 1.0 - acc
        bcol += np.where(use, t * alpha, 0.0)[:, None] * pack.colors[i]
        acc = np.where(use, acc + alpha * t, acc)
        done |= use & (1.0 - acc < EARLY_TERMINATION)
    out = bcol + (1.0 - acc)[:, None] * scene.background
    if with_state:
        return out, np.concatenate([used, clamped], axis=1)
    return out
