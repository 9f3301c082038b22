import numpy as np
import pytest

from splinesplat.core import Scene, logit


def smooth_scene(seed: int, n: int, size: int = 64) -> Scene:
    """Random scene whose blend is smooth over the whole canvas.

    Opacities are capped so early termination can never fire, and footprints
    are wide enough that the 1/255 cull ellipse covers every pixel. The
    rendered image is then C-infinity in both pixel position and every scene
    parameter, which makes finite differences trustworthy everywhere.
    """
    rng = np.random.default_rng(seed)
    sig_cap = 1.0 - 1e-3 ** (1.0 / n)
    sig = rng.uniform(0.3 * sig_cap, sig_cap, n)
    means = rng.uniform(0.2 * size, 0.8 * size, (n, 2))
    corner = np.sqrt(2.0) * 0.8 * size
    smin = corner / np.sqrt(2.0 * np.log(255.0 * sig.min()))
    scales = rng.uniform(smin * 1.05, smin * 1.6, (n, 2))
    return Scene(means=means, log_scales=np.log(scales),
                 rotations=rng.uniform(-np.pi, np.pi, n),
                 opacity_logits=logit(sig),
                 colors=rng.uniform(0.0, 1.0, (n, 3)),
                 depths=rng.uniform(0.0, 1.0, n),
                 background=rng.uniform(0.0, 1.0, 3),
                 reference_resolution=(size, size))


def sharp_scene(seed: int, n: int, size: int = 64,
                scale_range=(3.0, 10.0), opacity_range=(0.1, 0.8)) -> Scene:
    """Random scene with realistic mid-size footprints (culling does fire)."""
    rng = np.random.default_rng(seed)
    return Scene(means=rng.uniform(0, size, (n, 2)),
                 log_scales=np.log(rng.uniform(*scale_range, (n, 2))),
                 rotations=rng.uniform(-np.pi, np.pi, n),
                 opacity_logits=logit(rng.uniform(*opacity_range, n)),
                 colors=rng.uniform(0.0, 1.0, (n, 3)),
                 depths=rng.uniform(0.0, 1.0, n),
                 background=rng.uniform(0.0, 1.0, 3),
                 reference_resolution=(size, size))


def reconstruction_target(size: int = 64):
    """The self-reconstruction benchmark: a fixed known 5-splat scene.

    Footprints a few pixels wide keep the quarter-resolution render genuinely
    undersampled, which is the regime the derivative-aware upscaler targets.
    """
    from splinesplat.raster_forward import render_forward

    rng = np.random.default_rng(42)
    n = 5
    scene = Scene(
        means=rng.uniform(12, 52, (n, 2)),
        log_scales=np.log(rng.uniform(2.0, 4.0, (n, 2))),
        rotations=rng.uniform(-np.pi, np.pi, n),
        opacity_logits=logit(rng.uniform(0.5, 0.9, n)),
        colors=rng.uniform(0.1, 0.9, (n, 3)),
        depths=rng.uniform(0.0, 1.0, n),
        background=np.array([0.15, 0.12, 0.2]),
        reference_resolution=(size, size))
    target = np.clip(render_forward(scene, size, size).color, 0.0, 1.0)
    return scene, target


def random_gradient_image(seed: int, w: int, h: int):
    from splinesplat.raster_forward import GradientImage

    rng = np.random.default_rng(seed)
    img = GradientImage.zeros(w, h)
    img.color[:] = rng.normal(0.5, 0.2, (h, w, 3))
    img.d_dx[:] = rng.normal(0, 0.1, (h, w, 3))
    img.d_dy[:] = rng.normal(0, 0.1, (h, w, 3))
    img.d_dxdy[:] = rng.normal(0, 0.05, (h, w, 3))
    return img


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Compile the numba kernels once so per-test timings are meaningful."""
    from splinesplat.raster_forward import render_forward
    from splinesplat.raster_backward import PixelAdjoint, render_backward

    scene = smooth_scene(0, 3, 16)
    img = render_forward(scene, 16, 16)
    render_backward(scene, img, PixelAdjoint.zeros(16, 16))
