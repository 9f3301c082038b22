"""Deterministic synthetic benchmark images and the benchmark scene.

Three small test images in the classic interpolation-benchmark style
(smooth color fields with features a few low-res pixels wide) plus a
procedural splat scene used for timing runs. Generated content is checked
into the package fixtures; these functions rebuild it bit-identically.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .core import Scene, logit

CORPUS_NAMES = ("meadow", "ripple", "dunes")
CORPUS_SIZE = 128
BENCH_SIZE = 256
BENCH_GAUSSIANS = 800


def _grid(size: int):
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    return xs + 0.5, ys + 0.5


def _meadow(size: int) -> np.ndarray:
    xs, ys = _grid(size)
    u, v = xs / size, ys / size
    img = np.stack([0.25 + 0.3 * u, 0.35 + 0.25 * v, 0.5 - 0.2 * u * v], axis=2)
    rng = np.random.default_rng(11)
    for _ in range(14):
        cx, cy = rng.uniform(0.1 * size, 0.9 * size, 2)
        rad = rng.uniform(0.035 * size, 0.16 * size)
        col = rng.uniform(0.05, 0.95, 3)
        amp = rng.uniform(0.5, 0.9)
        d2 = (xs - cx) ** 2 + (ys - cy) ** 2
        wgt = amp * np.exp(-d2 / (2.0 * rad * rad))
        img = img * (1.0 - wgt[:, :, None]) + wgt[:, :, None] * col
    # fine-scale speckles a couple of low-res pixels wide
    for _ in range(12):
        cx, cy = rng.uniform(0.08 * size, 0.92 * size, 2)
        rad = rng.uniform(0.016 * size, 0.035 * size)
        col = rng.uniform(0.05, 0.95, 3)
        amp = rng.uniform(0.6, 0.9)
        d2 = (xs - cx) ** 2 + (ys - cy) ** 2
        wgt = amp * np.exp(-d2 / (2.0 * rad * rad))
        img = img * (1.0 - wgt[:, :, None]) + wgt[:, :, None] * col
    return np.clip(img, 0.03, 0.97)


def _ripple(size: int) -> np.ndarray:
    xs, ys = _grid(size)
    cx, cy = 0.42 * size, 0.55 * size
    r = np.hypot(xs - cx, ys - cy)
    rings = 0.5 + 0.5 * np.sin(r * (2.0 * np.pi / (0.105 * size)))
    fall = np.exp(-r / (0.55 * size))
    base = np.stack([0.25 + 0.45 * xs / size,
                     0.3 + 0.35 * ys / size,
                     0.65 - 0.3 * xs / size], axis=2)
    mod = (rings * fall)[:, :, None] * np.array([0.45, 0.35, 0.5])
    diag = 0.15 * np.sin((xs + ys) * (2.0 * np.pi / (0.4 * size)))
    return np.clip(base + mod + diag[:, :, None] * np.array([0.3, -0.2, 0.25]),
                   0.03, 0.97)


def _dunes(size: int) -> np.ndarray:
    rng = np.random.default_rng(29)
    img = np.empty((size, size, 3))
    shared = gaussian_filter(rng.normal(0, 1, (size, size)), 0.05 * size,
                             mode="reflect")
    for c in range(3):
        own = gaussian_filter(rng.normal(0, 1, (size, size)), 0.025 * size,
                              mode="reflect")
        field = shared + 0.6 * own
        lo, hi = field.min(), field.max()
        img[:, :, c] = 0.08 + 0.84 * (field - lo) / (hi - lo)
    return img


_GENERATORS = {"meadow": _meadow, "ripple": _ripple, "dunes": _dunes}


def corpus_image(name: str, size: int = CORPUS_SIZE) -> np.ndarray:
    return _GENERATORS[name](size)


def bench_scene(n: int = BENCH_GAUSSIANS, size: int = BENCH_SIZE,
                seed: int = 5) -> Scene:
    """A busy random scene sized for timing runs."""
    rng = np.random.default_rng(seed)
    return Scene(
        means=rng.uniform(0, size, (n, 2)),
        log_scales=np.log(rng.uniform(0.01 * size, 0.05 * size, (n, 2))),
        rotations=rng.uniform(-np.pi, np.pi, n),
        opacity_logits=logit(rng.uniform(0.15, 0.85, n)),
        colors=rng.uniform(0.0, 1.0, (n, 3)),
        depths=rng.uniform(0.0, 1.0, n),
        background=np.array([0.12, 0.1, 0.14]),
        reference_resolution=(size, size),
    )
