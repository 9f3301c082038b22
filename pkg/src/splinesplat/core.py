"""Domain types for 2D Gaussian splat scenes and the splat footprint math.

Conventions used throughout the package:

* Pixel (i, j) of an image samples the continuous location (i + 0.5, j + 0.5),
  x running along image width (columns) and y along height (rows).
* A splat's footprint is alpha(x, y) = sigma * exp(G) with
  G = -(a*dx^2 + 2*b*dx*dy + c*dy^2), d = (x - mu_x, y - mu_y), where
  (a, b, c) is the conic, i.e. half the inverse covariance. This makes
  G = -0.5 * d^T Sigma^-1 d.
* Opacity is stored as a logit and per-axis standard deviations as logs so
  every parameter is unconstrained during optimization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Blending constants shared by the forward and backward rasterizer passes.
ALPHA_CLAMP = 0.999          # keeps 1 - alpha >= 1e-3 for the inversion trick
ALPHA_CULL = 1.0 / 255.0     # per-pixel contribution threshold
EARLY_TERMINATION = 1e-4     # stop blending once 1 - A drops below this


class ParameterError(ValueError):
    """Raised when an operation receives out-of-domain parameters."""


class DegenerateCovarianceError(ParameterError):
    """Raised when a covariance matrix is numerically singular."""


class DimensionError(ValueError):
    """Raised on invalid or mismatched image dimensions."""


class UnsupportedScaleError(ValueError):
    """Raised when an upscaling factor below 1 is requested."""


def logistic(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))


def logit(p):
    p = np.asarray(p, dtype=np.float64)
    return np.log(p) - np.log1p(-p)


@dataclass(frozen=True)
class Gaussian2D:
    """A single 2D splat in reference-resolution pixel units."""

    mean: tuple[float, float]
    log_scale: tuple[float, float]
    rotation: float
    opacity_logit: float
    color: tuple[float, float, float]
    depth: float

    def __post_init__(self):
        vals = (*self.mean, *self.log_scale, self.rotation,
                self.opacity_logit, *self.color, self.depth)
        if not all(math.isfinite(v) for v in vals):
            raise ParameterError("Gaussian2D requires finite parameters")

    @property
    def opacity(self) -> float:
        return float(logistic(self.opacity_logit))


@dataclass
class Scene:
    """Ordered collection of splats over a reference-resolution canvas.

    Parameters are stored struct-of-arrays so the whole scene can be updated
    in-place by the optimizer; `gaussians` materializes value objects.
    """

    means: np.ndarray        # (N, 2) float64
    log_scales: np.ndarray   # (N, 2)
    rotations: np.ndarray    # (N,)
    opacity_logits: np.ndarray  # (N,)
    colors: np.ndarray       # (N, 3)
    depths: np.ndarray       # (N,)
    background: np.ndarray = field(default_factory=lambda: np.zeros(3))
    reference_resolution: tuple[int, int] = (64, 64)

    def __post_init__(self):
        self.means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        self.log_scales = np.atleast_2d(np.asarray(self.log_scales, dtype=np.float64))
        self.rotations = np.atleast_1d(np.asarray(self.rotations, dtype=np.float64))
        self.opacity_logits = np.atleast_1d(np.asarray(self.opacity_logits, dtype=np.float64))
        self.colors = np.atleast_2d(np.asarray(self.colors, dtype=np.float64))
        self.depths = np.atleast_1d(np.asarray(self.depths, dtype=np.float64))
        self.background = np.asarray(self.background, dtype=np.float64).reshape(3)
        w, h = self.reference_resolution
        if w <= 0 or h <= 0:
            raise DimensionError("reference_resolution must be positive")
        if not np.all(np.isfinite(self.depths)):
            raise ParameterError("depth keys must be finite")

    @property
    def n(self) -> int:
        return len(self.depths)

    @property
    def gaussians(self) -> list[Gaussian2D]:
        return [self.gaussian(i) for i in range(self.n)]

    def gaussian(self, i: int) -> Gaussian2D:
        return Gaussian2D(
            mean=(float(self.means[i, 0]), float(self.means[i, 1])),
            log_scale=(float(self.log_scales[i, 0]), float(self.log_scales[i, 1])),
            rotation=float(self.rotations[i]),
            opacity_logit=float(self.opacity_logits[i]),
            color=tuple(float(c) for c in self.colors[i]),
            depth=float(self.depths[i]),
        )

    @classmethod
    def from_gaussians(cls, gaussians, background=(0.0, 0.0, 0.0),
                       reference_resolution=(64, 64)) -> "Scene":
        gs = list(gaussians)
        if gs:
            means = np.array([g.mean for g in gs])
            log_scales = np.array([g.log_scale for g in gs])
            rotations = np.array([g.rotation for g in gs])
            logits = np.array([g.opacity_logit for g in gs])
            colors = np.array([g.color for g in gs])
            depths = np.array([g.depth for g in gs])
        else:
            means = np.zeros((0, 2))
            log_scales = np.zeros((0, 2))
            rotations = np.zeros(0)
            logits = np.zeros(0)
            colors = np.zeros((0, 3))
            depths = np.zeros(0)
        return cls(means, log_scales, rotations, logits, colors, depths,
                   np.asarray(background, dtype=np.float64), reference_resolution)

    def copy(self) -> "Scene":
        return Scene(self.means.copy(), self.log_scales.copy(),
                     self.rotations.copy(), self.opacity_logits.copy(),
                     self.colors.copy(), self.depths.copy(),
                     self.background.copy(), self.reference_resolution)


@dataclass(frozen=True)
class Conic:
    """Symmetric quadratic-form matrix [[a, b], [b, c]] = 0.5 * Sigma^-1."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a > 0 and self.c > 0 and self.a * self.c - self.b * self.b > 0):
            raise DegenerateCovarianceError("conic must be positive definite")


@dataclass(frozen=True)
class AlphaSample:
    """Footprint value and its spatial derivatives at one point."""

    alpha: float
    d_dx: float
    d_dy: float
    d_dxdy: float


def covariance_from_params(log_scale, rotation: float) -> np.ndarray:
    """Build Sigma = R(theta) diag(exp(2*log_scale)) R(theta)^T."""
    log_scale = np.asarray(log_scale, dtype=np.float64)
    if not (np.all(np.isfinite(log_scale)) and math.isfinite(rotation)):
        raise ParameterError("log_scale and rotation must be finite")
    c, s = math.cos(rotation), math.sin(rotation)
    r = np.array([[c, -s], [s, c]])
    return r @ np.diag(np.exp(2.0 * log_scale)) @ r.T


# keeps log_scale magnitudes up to 10 invertible (det = exp(-40) ~ 4e-18)
DET_FLOOR = 1e-24


def conic_from_covariance(sigma: np.ndarray) -> Conic:
    """Half the inverse of a 2x2 SPD covariance, as a Conic."""
    sigma = np.asarray(sigma, dtype=np.float64)
    # extended precision: the 2x2 determinant cancels catastrophically for
    # strongly anisotropic matrices (entries ~e^20 with det ~1)
    ext = sigma.astype(np.longdouble)
    det = float(ext[0, 0] * ext[1, 1] - ext[0, 1] * ext[1, 0])
    if not det > DET_FLOOR:
        raise DegenerateCovarianceError(f"covariance determinant {det} <= {DET_FLOOR}")
    inv_det = 1.0 / det
    return Conic(a=0.5 * sigma[1, 1] * inv_det,
                 b=-0.5 * sigma[0, 1] * inv_det,
                 c=0.5 * sigma[0, 0] * inv_det)


def eval_gaussian(mean, conic: Conic, opacity: float, x: float, y: float) -> AlphaSample:
    """Evaluate alpha = opacity * exp(G) and its x/y/xy derivatives.

    Returns the raw (unclamped) footprint; the rasterizer applies the
    0.999 clamp and the 1/255 cull at blend time.
    """
    dx = x - mean[0]
    dy = y - mean[1]
    g = -(conic.a * dx * dx + 2.0 * conic.b * dx * dy + conic.c * dy * dy)
    gx = -(2.0 * conic.a * dx + 2.0 * conic.b * dy)
    gy = -(2.0 * conic.b * dx + 2.0 * conic.c * dy)
    gxy = -2.0 * conic.b
    alpha = opacity * math.exp(g)
    return AlphaSample(alpha=alpha,
                       d_dx=alpha * gx,
                       d_dy=alpha * gy,
                       d_dxdy=alpha * (gx * gy + gxy))
