"""Classical upscalers and image-quality metrics used as comparison anchors.

All upscalers use the same center-aligned output-to-source mapping as the
spline path, so factor 1 is an exact identity for every method.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d

from .core import DimensionError, UnsupportedScaleError

PSNR_CAP_DB = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def _check_factor(factor: float):
    if factor < 1.0:
        raise UnsupportedScaleError(f"upscale factor must be >= 1, got {factor}")


def _source_coords(n_out: int, n_in: int) -> np.ndarray:
    scale = n_out / n_in
    return (np.arange(n_out) + 0.5) / scale - 0.5


def _out_dims(img: np.ndarray, factor: float, out_size=None):
    if out_size is not None:
        return out_size
    h, w = img.shape[:2]
    return int(np.floor(w * factor + 0.5)), int(np.floor(h * factor + 0.5))


def upscale_nearest(img: np.ndarray, factor: float, *, out_size=None) -> np.ndarray:
    _check_factor(factor)
    img = np.asarray(img, dtype=np.float64)
    out_w, out_h = _out_dims(img, factor, out_size)
    ix = np.clip(np.floor(_source_coords(out_w, img.shape[1]) + 0.5),
                 0, img.shape[1] - 1).astype(np.int64)
    iy = np.clip(np.floor(_source_coords(out_h, img.shape[0]) + 0.5),
                 0, img.shape[0] - 1).astype(np.int64)
    return img[np.ix_(iy, ix)]


def _bilinear_axis(img: np.ndarray, n_out: int) -> np.ndarray:
    """Linear interpolation along the leading axis with clamped borders."""
    n_in = img.shape[0]
    s = _source_coords(n_out, n_in)
    i0 = np.floor(s).astype(np.int64)
    t = s - i0
    lo = np.clip(i0, 0, n_in - 1)
    hi = np.clip(i0 + 1, 0, n_in - 1)
    shape = (n_out,) + (1,) * (img.ndim - 1)
    t = t.reshape(shape)
    return (1.0 - t) * img[lo] + t * img[hi]


def upscale_bilinear(img: np.ndarray, factor: float, *, out_size=None) -> np.ndarray:
    _check_factor(factor)
    img = np.asarray(img, dtype=np.float64)
    out_w, out_h = _out_dims(img, factor, out_size)
    out = _bilinear_axis(img, out_h)
    return _bilinear_axis(out.swapaxes(0, 1), out_w).swapaxes(0, 1)


def lanczos_kernel(x: np.ndarray, a: int = 3) -> np.ndarray:
    """Windowed sinc: sinc(x) * sinc(x/a) for |x| < a, else 0."""
    x = np.asarray(x, dtype=np.float64)
    out = np.sinc(x) * np.sinc(x / a)
    return np.where(np.abs(x) < a, out, 0.0)


def _lanczos_axis(img: np.ndarray, n_out: int, a: int) -> np.ndarray:
    n_in = img.shape[0]
    s = _source_coords(n_out, n_in)
    base = np.floor(s).astype(np.int64)
    out = np.zeros((n_out,) + img.shape[1:])
    wsum = np.zeros(n_out)
    taps = []
    for k in range(-a + 1, a + 1):
        idx = base + k
        wk = lanczos_kernel(s - idx, a)
        wsum += wk
        taps.append((np.clip(idx, 0, n_in - 1), wk))
    shape = (n_out,) + (1,) * (img.ndim - 1)
    for idx, wk in taps:  # fixed tap order keeps accumulation deterministic
        out += (wk / wsum).reshape(shape) * img[idx]
    return out


def upscale_lanczos(img: np.ndarray, factor: float, a: int = 3, *,
                    out_size=None) -> np.ndarray:
    _check_factor(factor)
    img = np.asarray(img, dtype=np.float64)
    out_w, out_h = _out_dims(img, factor, out_size)
    out = _lanczos_axis(img, out_h, a)
    return _lanczos_axis(out.swapaxes(0, 1), out_w, a).swapaxes(0, 1)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for data range 1.0, capped at 99."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError("psnr requires equal image dimensions")
    mse = np.mean((a - b) ** 2)
    if mse == 0.0:
        return PSNR_CAP_DB
    return float(min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB))


def _ssim_window() -> np.ndarray:
    half = SSIM_WINDOW // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    w = np.exp(-(x * x) / (2.0 * SSIM_SIGMA * SSIM_SIGMA))
    return w / w.sum()


def _filter2(img: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = correlate1d(img, w, axis=0, mode="constant", cval=0.0)
    return correlate1d(out, w, axis=1, mode="constant", cval=0.0)


def _ssim_channel(x: np.ndarray, y: np.ndarray):
    """Per-pixel SSIM map pieces for one channel (zero-padded filtering)."""
    w = _ssim_window()
    ux = _filter2(x, w)
    uy = _filter2(y, w)
    vx = _filter2(x * x, w)
    vy = _filter2(y * y, w)
    vxy = _filter2(x * y, w)
    sxx = vx - ux * ux
    syy = vy - uy * uy
    sxy = vxy - ux * uy
    n1 = 2.0 * ux * uy + SSIM_C1
    n2 = 2.0 * sxy + SSIM_C2
    d1 = ux * ux + uy * uy + SSIM_C1
    d2 = sxx + syy + SSIM_C2
    return (n1 * n2) / (d1 * d2), (ux, uy, sxx, n1, n2, d1, d2)


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity (Gaussian window 11, sigma 1.5).

    The local map is averaged over the region where the window fits inside
    the image, so constant images reproduce the closed-form value exactly.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError("ssim requires equal image dimensions")
    h, w = a.shape[:2]
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise DimensionError(f"ssim requires images of at least {SSIM_WINDOW} pixels per side")
    if a.ndim == 2:
        a = a[:, :, None]
        b = b[:, :, None]
    half = SSIM_WINDOW // 2
    vals = []
    for c in range(a.shape[2]):
        smap, _ = _ssim_channel(a[:, :, c], b[:, :, c])
        vals.append(np.mean(smap[half:h - half, half:w - half]))
    return float(np.mean(vals))


def ssim_with_grad(pred: np.ndarray, target: np.ndarray):
    """SSIM value plus its analytical gradient with respect to `pred`."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionError("ssim requires equal image dimensions")
    h, w = pred.shape[:2]
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise DimensionError(f"ssim requires images of at least {SSIM_WINDOW} pixels per side")
    half = SSIM_WINDOW // 2
    win = _ssim_window()
    nch = pred.shape[2]
    inner = (h - 2 * half) * (w - 2 * half)
    grad = np.zeros_like(pred)
    vals = []
    for c in range(nch):
        x = pred[:, :, c]
        y = target[:, :, c]
        smap, (ux, uy, sxx, n1, n2, d1, d2) = _ssim_channel(x, y)
        vals.append(np.mean(smap[half:h - half, half:w - half]))
        # d(mean ssim)/d(smap): uniform over the interior crop
        g = np.zeros((h, w))
        g[half:h - half, half:w - half] = 1.0 / (inner * nch)
        p = n1 / d1
        q = n2 / d2
        g_ux = g * (q * (2.0 * uy * d1 - 2.0 * ux * n1) / (d1 * d1)
                    + p * (-2.0 * uy / d2 + 2.0 * ux * n2 / (d2 * d2)))
        g_vx = g * p * (-n2 / (d2 * d2))
        g_vxy = g * p * (2.0 / d2)
        # the window filter is self-adjoint (symmetric kernel, zero padding)
        grad[:, :, c] = (_filter2(g_ux, win)
                         + 2.0 * x * _filter2(g_vx, win)
                         + y * _filter2(g_vxy, win))
    return float(np.mean(vals)), grad
