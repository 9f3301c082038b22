"""Gradient-based fitting of a splat scene to a target image.

The training loop mirrors the rendering pipeline: render at a reduced
resolution, upscale to the target resolution (optionally), evaluate an
L1 + SSIM loss, and backpropagate analytically through the upscaler and
the rasterizer. Everything is deterministic for a fixed config and seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import psnr, ssim, ssim_with_grad, SSIM_WINDOW
from .core import DimensionError, ParameterError, Scene, logit, logistic
from .raster_backward import PixelAdjoint, render_backward
from .raster_forward import render_forward
from .spline import (fd_gradients, fd_gradients_backward, upscale_backward,
                     upscale_spline)

UPSCALE_MODES = ("spline_analytic", "bicubic_fd", "none")

DEFAULT_LEARNING_RATES = {
    "means": 2e-3,       # in normalized image units; scaled by max(W, H)
    "log_scales": 5e-3,
    "rotations": 1e-3,
    "opacity_logits": 5e-2,
    "colors": 2.5e-2,
}

PARAM_GROUPS = tuple(DEFAULT_LEARNING_RATES)


@dataclass
class FitConfig:
    iterations: int = 1000
    num_gaussians: int = 100
    render_scale: float = 1.0
    upscale_mode: str = "spline_analytic"
    learning_rates: dict = field(default_factory=lambda: dict(DEFAULT_LEARNING_RATES))
    ssim_weight: float = 0.2
    seed: int = 0
    log_every: int = 50
    prune_interval: int = 0      # 0 disables opacity pruning
    prune_opacity: float = 0.005

    def __post_init__(self):
        if self.iterations <= 0:
            raise ParameterError("iterations must be positive")
        if self.num_gaussians <= 0:
            raise ParameterError("num_gaussians must be positive")
        if self.render_scale < 1.0:
            raise ParameterError("render_scale must be >= 1")
        if self.upscale_mode not in UPSCALE_MODES:
            raise ParameterError(f"upscale_mode must be one of {UPSCALE_MODES}")
        if self.render_scale > 1.0 and self.upscale_mode == "none":
            raise ParameterError("render_scale > 1 requires an upscale mode")
        if not 0.0 <= self.ssim_weight <= 1.0:
            raise ParameterError("ssim_weight must be in [0, 1]")


@dataclass
class FitRow:
    iteration: int
    loss: float
    psnr: float
    ssim: float
    t_forward_ms: float
    t_upscale_ms: float
    t_backward_ms: float
    t_opt_ms: float
    t_total_ms: float = 0.0  # whole iteration body; not part of the CSV


CSV_COLUMNS = ("iter", "loss", "psnr", "ssim", "t_forward_ms", "t_upscale_ms",
               "t_backward_ms", "t_opt_ms")


@dataclass
class FitReport:
    rows: list
    scene: Scene

    def write_csv(self, stream):
        stream.write(",".join(CSV_COLUMNS) + "\n")
        for r in self.rows:
            stream.write(f"{r.iteration},{r.loss!r},{r.psnr!r},{r.ssim!r},"
                         f"{r.t_forward_ms!r},{r.t_upscale_ms!r},"
                         f"{r.t_backward_ms!r},{r.t_opt_ms!r}\n")


def loss(pred: np.ndarray, target: np.ndarray, ssim_weight: float):
    """(1 - lambda) * L1 + lambda * (1 - SSIM), with the analytical adjoint."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionError("prediction and target dimensions differ")
    diff = pred - target
    l1 = np.mean(np.abs(diff))
    adj = (1.0 - ssim_weight) * np.sign(diff) / diff.size
    value = (1.0 - ssim_weight) * l1
    if ssim_weight > 0.0:
        s, ds = ssim_with_grad(pred, target)
        value += ssim_weight * (1.0 - s)
        adj -= ssim_weight * ds
    return value, adj


def init_scene(target: np.ndarray, n: int, seed: int) -> Scene:
    """Random splats covering the image, colored by the target underneath."""
    if n <= 0:
        raise ParameterError("need at least one splat")
    target = np.asarray(target, dtype=np.float64)
    h, w = target.shape[:2]
    rng = np.random.default_rng(seed)
    means = np.stack([rng.uniform(0, w, n), rng.uniform(0, h, n)], axis=1)
    # one-sigma footprints tile the image area
    s = np.sqrt(w * h / (np.pi * n))
    log_scales = np.full((n, 2), np.log(s))
    px = np.clip(means[:, 0].astype(np.int64), 0, w - 1)
    py = np.clip(means[:, 1].astype(np.int64), 0, h - 1)
    colors = target[py, px].copy()
    depths = rng.uniform(0.0, 1.0, n)
    return Scene(means=means, log_scales=log_scales, rotations=np.zeros(n),
                 opacity_logits=np.full(n, logit(0.5)), colors=colors,
                 depths=depths, background=np.zeros(3),
                 reference_resolution=(w, h))


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def like(cls, params: dict) -> "AdamState":
        return cls(m={k: np.zeros_like(v) for k, v in params.items()},
                   v={k: np.zeros_like(v) for k, v in params.items()})


def adam_step(params: dict, grads: dict, state: AdamState, lrs: dict,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam update over named parameter groups."""
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    out = {}
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise DimensionError(f"gradient shape mismatch for group {k}")
        state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g
        state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g
        mhat = state.m[k] / bc1
        vhat = state.v[k] / bc2
        out[k] = p - lrs[k] * mhat / (np.sqrt(vhat) + eps)
    return out, state


def _scene_params(scene: Scene) -> dict:
    return {"means": scene.means, "log_scales": scene.log_scales,
            "rotations": scene.rotations, "opacity_logits": scene.opacity_logits,
            "colors": scene.colors}


def fit(target: np.ndarray, cfg: FitConfig, *, threads: int = 1) -> FitReport:
    """Optimize a fresh scene against `target` under the given config."""
    target = np.asarray(target, dtype=np.float64)
    if target.size == 0:
        raise DimensionError("target image is empty")
    h, w = target.shape[:2]
    ssim_ok = h >= SSIM_WINDOW and w >= SSIM_WINDOW
    if cfg.ssim_weight > 0.0 and not ssim_ok:
        raise DimensionError("target too small for the SSIM window; set ssim_weight=0")
    low_w = max(1, int(np.floor(w / cfg.render_scale + 0.5)))
    low_h = max(1, int(np.floor(h / cfg.render_scale + 0.5)))
    upscaling = cfg.upscale_mode != "none" and (low_w, low_h) != (w, h)

    scene = init_scene(target, cfg.num_gaussians, cfg.seed)
    lrs = dict(cfg.learning_rates)
    lrs["means"] = lrs["means"] * max(w, h)
    state = AdamState.like(_scene_params(scene))

    rows = []
    for it in range(cfg.iterations):
        t0 = time.perf_counter()
        fwd = render_forward(scene, low_w, low_h, threads=threads)
        t1 = time.perf_counter()
        if upscaling:
            src = fwd if cfg.upscale_mode == "spline_analytic" else fd_gradients(fwd.color)
            pred = upscale_spline(src, cfg.render_scale, out_size=(w, h))
        else:
            src = fwd
            pred = np.clip(fwd.color, 0.0, 1.0)
        t2 = time.perf_counter()
        value, dpred = loss(pred, target, cfg.ssim_weight)
        if upscaling:
            sadj = upscale_backward(src, cfg.render_scale, dpred, out_size=(w, h))
            if cfg.upscale_mode == "bicubic_fd":
                adj = PixelAdjoint(w=fd_gradients_backward(sadj),
                                   wx=np.zeros_like(sadj.d_dx),
                                   wy=np.zeros_like(sadj.d_dy),
                                   wxy=np.zeros_like(sadj.d_dxdy))
            else:
                adj = PixelAdjoint(w=sadj.d_color, wx=sadj.d_dx,
                                   wy=sadj.d_dy, wxy=sadj.d_dxdy)
        else:
            zero = np.zeros_like(dpred)
            adj = PixelAdjoint(w=dpred, wx=zero, wy=zero.copy(), wxy=zero.copy())
        grads = render_backward(scene, fwd, adj, threads=threads)
        t3 = time.perf_counter()
        params, state = adam_step(
            _scene_params(scene),
            {"means": grads.d_means, "log_scales": grads.d_log_scales,
             "rotations": grads.d_rotations,
             "opacity_logits": grads.d_opacity_logits,
             "colors": grads.d_colors},
            state, lrs)
        for k, v in params.items():
            setattr(scene, k, v)
        if (cfg.prune_interval > 0 and (it + 1) % cfg.prune_interval == 0
                and it + 1 < cfg.iterations):
            keep = logistic(scene.opacity_logits) >= cfg.prune_opacity
            if not np.all(keep) and np.any(keep):
                scene = Scene(scene.means[keep], scene.log_scales[keep],
                              scene.rotations[keep], scene.opacity_logits[keep],
                              scene.colors[keep], scene.depths[keep],
                              scene.background, scene.reference_resolution)
                state = AdamState(m={k: v[keep] for k, v in state.m.items()},
                                  v={k: v[keep] for k, v in state.v.items()},
                                  t=state.t)
        t4 = time.perf_counter()
        if it % cfg.log_every == 0 or it == cfg.iterations - 1:
            rows.append(FitRow(
                iteration=it, loss=float(value), psnr=psnr(pred, target),
                ssim=ssim(pred, target) if ssim_ok else float("nan"),
                t_forward_ms=(t1 - t0) * 1e3, t_upscale_ms=(t2 - t1) * 1e3,
                t_backward_ms=(t3 - t2) * 1e3, t_opt_ms=(t4 - t3) * 1e3,
                t_total_ms=(t4 - t0) * 1e3))
    if not np.isfinite(rows[-1].loss):
        raise ParameterError("fit diverged to a non-finite loss")
    return FitReport(rows=rows, scene=scene)
