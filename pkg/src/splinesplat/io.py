"""File formats: PNG images, scene documents, gradient dumps.

PNG pixel values are 8-bit display-encoded with a plain gamma 2.2 transfer;
all in-memory images are linear float64 in [0, 1]. The gradient dump is a
raw little-endian float32 plane file with a fixed plane order.
"""

from __future__ import annotations

import json
import struct

import numpy as np
from PIL import Image

from .core import ParameterError, Scene
from .raster_forward import GradientImage

GAMMA = 2.2
SCENE_VERSION = 1
DUMP_MAGIC = b"GIMG"

# (H, W) float32 planes in file order; 3-channel fields store R, G, B planes.
DUMP_PLANES = ("color", "d_dx", "d_dy", "d_dxdy",
               "alpha", "alpha_dx", "alpha_dy", "alpha_dxdy")


def encode_display(img: np.ndarray) -> np.ndarray:
    """Linear [0,1] floats to 8-bit gamma-2.2 display values."""
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.round(img ** (1.0 / GAMMA) * 255.0).astype(np.uint8)


def decode_display(raw: np.ndarray) -> np.ndarray:
    return (np.asarray(raw, dtype=np.float64) / 255.0) ** GAMMA


def write_png(path, img: np.ndarray):
    Image.fromarray(encode_display(img), mode="RGB").save(path, format="PNG")


def read_png(path) -> np.ndarray:
    with Image.open(path) as im:
        raw = np.asarray(im.convert("RGB"))
    return decode_display(raw)


def scene_to_dict(scene: Scene) -> dict:
    return {
        "version": SCENE_VERSION,
        "reference_resolution": list(scene.reference_resolution),
        "background": [float(v) for v in scene.background],
        "gaussians": [
            {
                "mean": [float(scene.means[i, 0]), float(scene.means[i, 1])],
                "log_scale": [float(scene.log_scales[i, 0]),
                              float(scene.log_scales[i, 1])],
                "rotation": float(scene.rotations[i]),
                "opacity_logit": float(scene.opacity_logits[i]),
                "color": [float(c) for c in scene.colors[i]],
                "depth": float(scene.depths[i]),
            }
            for i in range(scene.n)
        ],
    }


def scene_from_dict(doc: dict) -> Scene:
    if doc.get("version") != SCENE_VERSION:
        raise ParameterError(f"unsupported scene version {doc.get('version')!r}")
    ref = tuple(int(v) for v in doc["reference_resolution"])
    gs = doc["gaussians"]
    n = len(gs)
    means = np.array([g["mean"] for g in gs], dtype=np.float64).reshape(n, 2)
    log_scales = np.array([g["log_scale"] for g in gs], dtype=np.float64).reshape(n, 2)
    rotations = np.array([g["rotation"] for g in gs], dtype=np.float64)
    logits = np.array([g["opacity_logit"] for g in gs], dtype=np.float64)
    colors = np.array([g["color"] for g in gs], dtype=np.float64).reshape(n, 3)
    depths = np.array([g["depth"] for g in gs], dtype=np.float64)
    vals = np.concatenate([means.ravel(), log_scales.ravel(), rotations,
                           logits, colors.ravel(), depths,
                           np.asarray(doc["background"], dtype=np.float64)])
    if not np.all(np.isfinite(vals)):
        raise ParameterError("scene file contains non-finite values")
    return Scene(means, log_scales, rotations, logits, colors, depths,
                 np.asarray(doc["background"], dtype=np.float64), ref)


def save_scene(path, scene: Scene):
    with open(path, "w") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2)
        fh.write("\n")


def load_scene(path) -> Scene:
    with open(path) as fh:
        return scene_from_dict(json.load(fh))


def _dump_planes(img: GradientImage):
    for name in DUMP_PLANES:
        arr = getattr(img, name)
        if arr.ndim == 3:
            for c in range(arr.shape[2]):
                yield arr[:, :, c]
        else:
            yield arr


def save_gradient_dump(path, img: GradientImage):
    with open(path, "wb") as fh:
        fh.write(DUMP_MAGIC)
        fh.write(struct.pack("<II", img.width, img.height))
        for plane in _dump_planes(img):
            fh.write(np.ascontiguousarray(plane, dtype="<f4").tobytes())


def load_gradient_dump(path) -> GradientImage:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != DUMP_MAGIC:
        raise ParameterError("not a gradient dump (bad magic)")
    w, h = struct.unpack("<II", blob[4:12])
    payload = blob[12:]
    if len(payload) != w * h * 16 * 4:
        raise ParameterError("gradient dump payload has the wrong length")
    planes = np.frombuffer(payload, dtype="<f4").reshape(16, h, w).astype(np.float64)
    img = GradientImage.zeros(w, h)
    img.color[:] = np.moveaxis(planes[0:3], 0, 2)
    img.d_dx[:] = np.moveaxis(planes[3:6], 0, 2)
    img.d_dy[:] = np.moveaxis(planes[6:9], 0, 2)
    img.d_dxdy[:] = np.moveaxis(planes[9:12], 0, 2)
    img.alpha[:] = planes[12]
    img.alpha_dx[:] = planes[13]
    img.alpha_dy[:] = planes[14]
    img.alpha_dxdy[:] = planes[15]
    return img
