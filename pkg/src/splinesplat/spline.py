"""Bicubic spline upscaling driven by per-pixel derivative data.

A patch over the unit subdomain between four adjacent source pixel centers
is the bicubic polynomial p(x, y) = sum_ij a_ij x^i y^j whose coefficient
matrix A solves F = C A C^T, where F packs the corner values and x/y/xy
derivatives and C encodes cubic value/slope constraints at 0 and 1.

Derivative data can come from the rasterizer's analytical channels or from
finite differences of a plain image (classical bicubic behaviour).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionError, ParameterError, UnsupportedScaleError
from .raster_forward import GradientImage

_C = np.array([
    [1.0, 0.0, 0.0, 0.0],   # f(0)
    [1.0, 1.0, 1.0, 1.0],   # f(1)
    [0.0, 1.0, 0.0, 0.0],   # f'(0)
    [0.0, 1.0, 2.0, 3.0],   # f'(1)
])
_C_INV = np.array([
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [-3.0, 3.0, -2.0, -1.0],
    [2.0, -2.0, 1.0, 1.0],
])


def cmatrix():
    """The cubic constraint matrix C and its exact inverse."""
    return _C.copy(), _C_INV.copy()


@dataclass(frozen=True)
class CornerData:
    """Values and derivatives at the four corners of one unit subdomain.

    Each field is indexed [x_corner, y_corner] with optional trailing
    channel axes.
    """

    f: np.ndarray
    fx: np.ndarray
    fy: np.ndarray
    fxy: np.ndarray

    def matrix(self) -> np.ndarray:
        """The 4x4 constraint matrix F (channels trailing)."""
        rows0 = np.stack([self.f[0, 0], self.f[0, 1], self.fy[0, 0], self.fy[0, 1]])
        rows1 = np.stack([self.f[1, 0], self.f[1, 1], self.fy[1, 0], self.fy[1, 1]])
        rows2 = np.stack([self.fx[0, 0], self.fx[0, 1], self.fxy[0, 0], self.fxy[0, 1]])
        rows3 = np.stack([self.fx[1, 0], self.fx[1, 1], self.fxy[1, 0], self.fxy[1, 1]])
        return np.stack([rows0, rows1, rows2, rows3])


@dataclass(frozen=True)
class SplinePatch:
    """Coefficients a_ij of one bicubic patch; a_ij multiplies x^i y^j."""

    coeffs: np.ndarray  # (4, 4) with optional trailing channel axes


def solve_patch(corners: CornerData) -> SplinePatch:
    """A = C^-1 F (C^T)^-1; reproduces all 16 corner constraints."""
    f = corners.matrix()
    if not np.all(np.isfinite(f)):
        raise ParameterError("corner data must be finite")
    coeffs = np.einsum("ik,kl...,jl->ij...", _C_INV, f, _C_INV)
    return SplinePatch(coeffs=coeffs)


def eval_patch(patch: SplinePatch, x: float, y: float, derivatives: bool = False):
    """Evaluate p (and optionally dp/dx, dp/dy, d2p/dxdy) at (x, y)."""
    px = np.array([1.0, x, x * x, x * x * x])
    py = np.array([1.0, y, y * y, y * y * y])
    a = patch.coeffs
    val = np.einsum("i,ij...,j->...", px, a, py)
    if not derivatives:
        return val
    dpx = np.array([0.0, 1.0, 2.0 * x, 3.0 * x * x])
    dpy = np.array([0.0, 1.0, 2.0 * y, 3.0 * y * y])
    return (val,
            np.einsum("i,ij...,j->...", dpx, a, py),
            np.einsum("i,ij...,j->...", px, a, dpy),
            np.einsum("i,ij...,j->...", dpx, a, dpy))


def _output_size(in_w: int, in_h: int, factor: float):
    if factor < 1.0:
        raise UnsupportedScaleError(f"upscale factor must be >= 1, got {factor}")
    out_w = int(np.floor(in_w * factor + 0.5))
    out_h = int(np.floor(in_h * factor + 0.5))
    return out_w, out_h


def _axis_map(n_out: int, n_in: int):
    """Center-aligned output-to-source mapping along one axis.

    Returns the lower source pixel index i0 per output pixel and the
    fractional position t in the unit subdomain [i0, i0 + 1].
    """
    scale = n_out / n_in
    s = (np.arange(n_out) + 0.5) / scale - 0.5
    i0 = np.floor(s).astype(np.int64)
    t = s - i0
    return i0, t


def _patch_grid(color, d_dx, d_dy, d_dxdy):
    """Coefficient matrices for every subdomain of the padded source grid.

    Grid cell (jg, ig) covers the subdomain with lower corner pixel
    (jg - 1, ig - 1); out-of-image corners replicate the nearest edge pixel
    including its derivative channels.
    """
    planes = [np.pad(p, ((1, 1), (1, 1), (0, 0)), mode="edge")
              for p in (color, d_dx, d_dy, d_dxdy)]
    f, fx, fy, fxy = planes
    hs = f.shape[0] - 1
    ws = f.shape[1] - 1
    ch = f.shape[2]
    fmat = np.empty((hs, ws, 4, 4, ch))
    # rows of F: value/value/fx/fx at x-corner 0,1,0,1; columns likewise in y.
    # x is the column axis of the image arrays, so the x-corner offset
    # indexes the second array dimension.
    for kx, block_row, plane_pair in ((0, 0, (f, fy)), (1, 1, (f, fy)),
                                      (0, 2, (fx, fxy)), (1, 3, (fx, fxy))):
        val, dyv = plane_pair
        fmat[:, :, block_row, 0] = val[0:hs, kx:ws + kx]
        fmat[:, :, block_row, 1] = val[1:hs + 1, kx:ws + kx]
        fmat[:, :, block_row, 2] = dyv[0:hs, kx:ws + kx]
        fmat[:, :, block_row, 3] = dyv[1:hs + 1, kx:ws + kx]
    # A = C^-1 F C^-T for every cell, contracted one axis at a time (BLAS)
    tmp = np.tensordot(fmat, _C_INV, axes=([2], [1]))   # (h, w, l, c, i)
    a = np.tensordot(tmp, _C_INV, axes=([2], [1]))      # (h, w, c, i, j)
    return np.ascontiguousarray(np.moveaxis(a, (3, 4), (2, 3)))


def _upscale_channels(color, d_dx, d_dy, d_dxdy, out_w: int, out_h: int):
    in_h, in_w = color.shape[:2]
    a_grid = _patch_grid(color, d_dx, d_dy, d_dxdy)
    ix0, tx = _axis_map(out_w, in_w)
    iy0, ty = _axis_map(out_h, in_h)
    px = np.stack([np.ones_like(tx), tx, tx * tx, tx * tx * tx], axis=1)
    py = np.stack([np.ones_like(ty), ty, ty * ty, ty * ty * ty], axis=1)
    out = np.empty((out_h, out_w, color.shape[2]))
    cols = ix0 + 1
    for row in range(out_h):
        # patches for this output row: (n_subdomains_x, 4, 4, ch)
        arow = a_grid[iy0[row] + 1]
        tmp = np.einsum("wijc,j->wic", arow, py[row])
        out[row] = np.einsum("wi,wic->wc", px, tmp[cols])
    return out


def upscale_spline(img: GradientImage, factor: float, *, out_size=None,
                   clamp: bool = True) -> np.ndarray:
    """Upscale using the stored analytical derivative channels.

    `out_size` (width, height) overrides the rounded dimensions when exact
    target dimensions are required (fit pipeline); both axes must still be
    at least as large as the source.
    """
    if out_size is None:
        out_w, out_h = _output_size(img.width, img.height, factor)
    else:
        out_w, out_h = out_size
        if out_w < img.width or out_h < img.height:
            raise UnsupportedScaleError("output must be at least source size")
    out = _upscale_channels(img.color, img.d_dx, img.d_dy, img.d_dxdy,
                            out_w, out_h)
    return np.clip(out, 0.0, 1.0) if clamp else out


@dataclass
class SourceAdjoint:
    """Adjoints of the four upscaler input channels per source pixel."""

    d_color: np.ndarray
    d_dx: np.ndarray
    d_dy: np.ndarray
    d_dxdy: np.ndarray


def upscale_backward(img: GradientImage, factor: float, adjoint: np.ndarray, *,
                     out_size=None) -> SourceAdjoint:
    """Exact transpose of the (linear) upscaling map.

    The output clamp is excluded (straight-through). Scatter order is fixed,
    so accumulation is deterministic.
    """
    if out_size is None:
        out_w, out_h = _output_size(img.width, img.height, factor)
    else:
        out_w, out_h = out_size
    adjoint = np.asarray(adjoint, dtype=np.float64)
    if adjoint.shape != (out_h, out_w, img.color.shape[2]):
        raise DimensionError("adjoint dimensions must match the upscaled output")
    in_h, in_w = img.height, img.width
    ch = img.color.shape[2]
    ix0, tx = _axis_map(out_w, in_w)
    iy0, ty = _axis_map(out_h, in_h)
    px = np.stack([np.ones_like(tx), tx, tx * tx, tx * tx * tx], axis=1)
    py = np.stack([np.ones_like(ty), ty, ty * ty, ty * ty * ty], axis=1)
    rx = px @ _C_INV  # weights on F rows per output column
    ry = py @ _C_INV  # weights on F columns per output row
    hs, ws = in_h + 1, in_w + 1
    df = np.zeros((hs, ws, 4, 4, ch))
    cols = ix0 + 1
    for row in range(out_h):
        contrib = np.einsum("wk,l,wc->wklc", rx, ry[row], adjoint[row])
        np.add.at(df[iy0[row] + 1], cols, contrib)
    # fold F-matrix adjoints back onto the padded corner planes
    padded = [np.zeros((in_h + 2, in_w + 2, ch)) for _ in range(4)]
    dpf, dpfx, dpfy, dpfxy = padded
    for kx in (0, 1):
        for ky in (0, 1):
            block = (slice(ky, ky + in_h + 1), slice(kx, kx + in_w + 1))
            dpf[block] += df[:, :, kx, ky]
            dpfx[block] += df[:, :, 2 + kx, ky]
            dpfy[block] += df[:, :, kx, 2 + ky]
            dpfxy[block] += df[:, :, 2 + kx, 2 + ky]
    return SourceAdjoint(*(_unpad_edge(p) for p in padded))


def _unpad_edge(p: np.ndarray) -> np.ndarray:
    """Transpose of one-pixel edge-replicating padding."""
    out = p[1:-1, 1:-1].copy()
    out[0, :] += p[0, 1:-1]
    out[-1, :] += p[-1, 1:-1]
    out[:, 0] += p[1:-1, 0]
    out[:, -1] += p[1:-1, -1]
    out[0, 0] += p[0, 0]
    out[0, -1] += p[0, -1]
    out[-1, 0] += p[-1, 0]
    out[-1, -1] += p[-1, -1]
    return out


def _diff_x(f: np.ndarray) -> np.ndarray:
    """Central differences along image x (columns), one-sided at borders."""
    out = np.empty_like(f)
    out[:, 1:-1] = 0.5 * (f[:, 2:] - f[:, :-2])
    out[:, 0] = f[:, 1] - f[:, 0]
    out[:, -1] = f[:, -1] - f[:, -2]
    return out


def _diff_x_t(g: np.ndarray) -> np.ndarray:
    out = np.zeros_like(g)
    out[:, 2:] += 0.5 * g[:, 1:-1]
    out[:, :-2] -= 0.5 * g[:, 1:-1]
    out[:, 1] += g[:, 0]
    out[:, 0] -= g[:, 0]
    out[:, -1] += g[:, -1]
    out[:, -2] -= g[:, -1]
    return out


def _diff_y(f: np.ndarray) -> np.ndarray:
    return _diff_x(f.swapaxes(0, 1)).swapaxes(0, 1)


def _diff_y_t(g: np.ndarray) -> np.ndarray:
    return _diff_x_t(g.swapaxes(0, 1)).swapaxes(0, 1)


def fd_gradients(image: np.ndarray) -> GradientImage:
    """Derivative channels estimated from pixel colors (classical bicubic)."""
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape[:2]
    if h < 2 or w < 2:
        raise DimensionError("finite differences need at least 2x2 pixels")
    d_dx = _diff_x(image)
    d_dy = _diff_y(image)
    d_dxdy = _diff_x(d_dy)
    zero = np.zeros((h, w))
    return GradientImage(color=image.copy(), d_dx=d_dx, d_dy=d_dy,
                         d_dxdy=d_dxdy, alpha=zero.copy(),
                         alpha_dx=zero.copy(), alpha_dy=zero.copy(),
                         alpha_dxdy=zero.copy(),
                         contrib_count=np.zeros((h, w), dtype=np.int32))


def fd_gradients_backward(adj: SourceAdjoint) -> np.ndarray:
    """Fold adjoints of FD-estimated channels back onto the color adjoint."""
    out = adj.d_color.copy()
    out += _diff_x_t(adj.d_dx)
    out += _diff_y_t(adj.d_dy)
    out += _diff_y_t(_diff_x_t(adj.d_dxdy))
    return out


def hermite1d(samples, t):
    """Piecewise-cubic interpolation from (t, value, slope) triples.

    Samples must be uniformly spaced in t; slopes are in value-per-t units.
    Queries outside the sampled range raise a domain error.
    """
    pts = np.asarray([s[0] for s in samples], dtype=np.float64)
    vals = np.asarray([s[1] for s in samples], dtype=np.float64)
    slopes = np.asarray([s[2] for s in samples], dtype=np.float64)
    if len(pts) < 2:
        raise ParameterError("need at least two samples")
    h = pts[1] - pts[0]
    if not np.allclose(np.diff(pts), h):
        raise ParameterError("samples must be uniformly spaced")
    tq = np.asarray(t, dtype=np.float64)
    scalar = tq.ndim == 0
    tq = np.atleast_1d(tq)
    if np.any(tq < pts[0]) or np.any(tq > pts[-1]):
        raise ParameterError("query outside the sampled range")
    seg = np.clip(((tq - pts[0]) / h).astype(np.int64), 0, len(pts) - 2)
    s = (tq - pts[seg]) / h
    # constraint vector [f(0), f(1), f'(0), f'(1)] in subdomain units
    con = np.stack([vals[seg], vals[seg + 1], h * slopes[seg],
                    h * slopes[seg + 1]], axis=0)
    coef = _C_INV @ con
    out = coef[0] + s * (coef[1] + s * (coef[2] + s * coef[3]))
    return float(out[0]) if scalar else out
