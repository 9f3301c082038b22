"""Reverse-mode pass of the gradient-emitting rasterizer.

Given per-pixel adjoints of all four rendered channels (color and its three
spatial derivatives), produces gradients for every splat parameter. Pixels
are swept back to front; the accumulated-alpha state at each step is
recovered from the stored terminal values by inverting the forward blending
recurrence instead of storing per-splat intermediates.

Gradient accumulation is deterministic: per-tile buffers are reduced in a
fixed tile order regardless of the worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import DimensionError, ParameterError, Scene, logistic
from .raster_forward import GradientImage, bin_tiles, prepare_scene


@dataclass
class PixelAdjoint:
    """Upstream adjoints for each GradientImage channel (all (H, W, 3))."""

    w: np.ndarray
    wx: np.ndarray
    wy: np.ndarray
    wxy: np.ndarray

    @classmethod
    def zeros(cls, width: int, height: int) -> "PixelAdjoint":
        s = (height, width, 3)
        return cls(np.zeros(s), np.zeros(s), np.zeros(s), np.zeros(s))


@dataclass
class SceneGrads:
    """Per-splat parameter gradients, aligned with the scene's storage order."""

    d_means: np.ndarray           # (N, 2)
    d_log_scales: np.ndarray      # (N, 2)
    d_rotations: np.ndarray       # (N,)
    d_opacity_logits: np.ndarray  # (N,)
    d_colors: np.ndarray          # (N, 3)

    @classmethod
    def zeros(cls, n: int) -> "SceneGrads":
        return cls(np.zeros((n, 2)), np.zeros((n, 2)), np.zeros(n),
                   np.zeros(n), np.zeros((n, 3)))


def invert_alpha_state(a_i, ax_i, ay_i, axy_i, alpha, alpha_x, alpha_y, alpha_xy):
    """Step the accumulated-alpha state back across one blended splat.

    Solves the forward recurrence A_i = A_{i-1} + alpha*(1 - A_{i-1}) and its
    derivative recurrences for the pre-blend state.
    """
    om = 1.0 - alpha
    if om < 1e-3:
        raise ParameterError("inversion requires 1 - alpha >= 1e-3")
    a_prev = (a_i - alpha) / om
    t = 1.0 - a_prev
    ax_prev = (ax_i - t * alpha_x) / om
    ay_prev = (ay_i - t * alpha_y) / om
    axy_prev = (axy_i - t * alpha_xy + ax_prev * alpha_y + ay_prev * alpha_x) / om
    return a_prev, ax_prev, ay_prev, axy_prev


def render_backward(scene: Scene, fwd: GradientImage, adj: PixelAdjoint, *,
                    threads: int = 1) -> SceneGrads:
    """Backpropagate channel adjoints to splat parameter gradients.

    `fwd` must come from render_forward on the same scene and resolution;
    the backward pass replays its per-pixel contributor lists exactly.
    """
    h, w = fwd.color.shape[:2]
    for arr in (adj.w, adj.wx, adj.wy, adj.wxy):
        if arr.shape != (h, w, 3):
            raise DimensionError("adjoint dimensions must match the forward image")
        if not np.all(np.isfinite(arr)):
            raise ParameterError("adjoint must be finite")
    grads = SceneGrads.zeros(scene.n)
    if scene.n == 0:
        return grads
    pack = prepare_scene(scene, w, h)
    bg = np.ascontiguousarray(scene.background)
    tiles, lists = bin_tiles(pack, w, h)
    n = scene.n
    buffers = [None] * len(tiles)

    def run(i):
        d_color = np.zeros((n, 3))
        d_sigma = np.zeros(n)
        d_mean = np.zeros((n, 2))
        d_conic = np.zeros((n, 3))
        tx0, tx1, ty0, ty1 = tiles[i]
        _kernels.backward_region(
            tx0, tx1, ty0, ty1, lists[i],
            pack.means, pack.conics, pack.sigmas, pack.colors, pack.bboxes, bg,
            fwd.alpha, fwd.alpha_dx, fwd.alpha_dy, fwd.alpha_dxdy,
            fwd.contrib_count, adj.w, adj.wx, adj.wy, adj.wxy,
            d_color, d_sigma, d_mean, d_conic)
        buffers[i] = (d_color, d_sigma, d_mean, d_conic)

    if threads <= 1:
        for i in range(len(tiles)):
            run(i)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(len(tiles))))

    d_color = np.zeros((n, 3))
    d_sigma = np.zeros(n)
    d_mean = np.zeros((n, 2))
    d_conic = np.zeros((n, 3))
    for buf in buffers:  # fixed tile order keeps the reduction deterministic
        d_color += buf[0]
        d_sigma += buf[1]
        d_mean += buf[2]
        d_conic += buf[3]

    # chain render-space gradients into the stored parametrization
    order = pack.order
    ls = scene.log_scales[order]
    rot = scene.rotations[order]
    sig = pack.sigmas
    kx, ky = pack.kx, pack.ky

    dn00 = d_conic[:, 0] / (2.0 * kx * kx)
    dn01 = d_conic[:, 1] / (2.0 * kx * ky)
    dn11 = d_conic[:, 2] / (2.0 * ky * ky)
    e1 = np.exp(-2.0 * ls[:, 0])
    e2 = np.exp(-2.0 * ls[:, 1])
    cth = np.cos(rot)
    sth = np.sin(rot)
    d_l1 = -2.0 * e1 * (dn00 * cth * cth + dn01 * sth * cth + dn11 * sth * sth)
    d_l2 = -2.0 * e2 * (dn00 * sth * sth - dn01 * sth * cth + dn11 * cth * cth)
    sin2 = 2.0 * sth * cth
    cos2 = cth * cth - sth * sth
    d_rot = (e2 - e1) * sin2 * dn00 + (e1 - e2) * cos2 * dn01 + (e1 - e2) * sin2 * dn11

    grads.d_colors[order] = d_color
    grads.d_opacity_logits[order] = d_sigma * sig * (1.0 - sig)
    grads.d_means[order, 0] = d_mean[:, 0] * kx
    grads.d_means[order, 1] = d_mean[:, 1] * ky
    grads.d_log_scales[order, 0] = d_l1
    grads.d_log_scales[order, 1] = d_l2
    grads.d_rotations[order] = d_rot
    return grads
