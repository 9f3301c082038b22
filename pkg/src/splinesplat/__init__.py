"""2D Gaussian splat rendering with analytical image gradients and
gradient-aware bicubic spline upscaling, plus fully differentiable scene
fitting with upscaling inside the optimization loop."""

from .core import (ALPHA_CLAMP, ALPHA_CULL, EARLY_TERMINATION, AlphaSample,
                   Conic, DegenerateCovarianceError, DimensionError,
                   Gaussian2D, ParameterError, Scene, UnsupportedScaleError,
                   conic_from_covariance, covariance_from_params,
                   eval_gaussian, logistic, logit)
from .raster_forward import (GradientImage, render_at_points, render_forward,
                             sort_by_depth)
from .raster_backward import (PixelAdjoint, SceneGrads, invert_alpha_state,
                              render_backward)
from .spline import (CornerData, SourceAdjoint, SplinePatch, cmatrix,
                     eval_patch, fd_gradients, fd_gradients_backward,
                     hermite1d, solve_patch, upscale_backward, upscale_spline)
from .baselines import (psnr, ssim, upscale_bilinear, upscale_lanczos,
                        upscale_nearest)
from .fit import (AdamState, FitConfig, FitReport, adam_step, fit, init_scene,
                  loss)
from .io import (load_gradient_dump, load_scene, read_png, save_gradient_dump,
                 save_scene, write_png)

__version__ = "0.1.0"

__all__ = [
    "ALPHA_CLAMP", "ALPHA_CULL", "EARLY_TERMINATION", "AlphaSample", "Conic",
    "DegenerateCovarianceError", "DimensionError", "Gaussian2D",
    "ParameterError", "Scene", "UnsupportedScaleError",
    "conic_from_covariance", "covariance_from_params", "eval_gaussian",
    "logistic", "logit", "GradientImage", "render_at_points",
    "render_forward", "sort_by_depth", "PixelAdjoint", "SceneGrads",
    "invert_alpha_state", "render_backward", "CornerData", "SourceAdjoint",
    "SplinePatch", "cmatrix", "eval_patch", "fd_gradients",
    "fd_gradients_backward", "hermite1d", "solve_patch", "upscale_backward",
    "upscale_spline", "psnr", "ssim", "upscale_bilinear", "upscale_lanczos",
    "upscale_nearest", "AdamState", "FitConfig", "FitReport", "adam_step",
    "fit", "init_scene", "loss", "load_gradient_dump", "load_scene",
    "read_png", "save_gradient_dump", "save_scene", "write_png",
]
