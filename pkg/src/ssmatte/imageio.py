"""PNG input/output for images, trimaps and alpha mattes.

All arrays are row-major with shape (height, width[, 3]). The flat pixel
index of z = (x, y) is ``y * width + x``, i.e. what ``ndarray.ravel()``
produces, and every other module relies on that convention.

* image: float64 (H, W, 3), channels in [0, 1]
* trimap: uint8 (H, W) holding ``Label`` values
* matte: float64 (H, W), opacities in [0, 1]
"""
from __future__ import annotations

import os
from enum import IntEnum

import numpy as np
from PIL import Image as PILImage

from .errors import DimensionMismatch, NoKnownPixels, UnsupportedFormat

FG_THRESHOLD = 230
BG_THRESHOLD = 25


class Label(IntEnum):
    BACKGROUND = 0
    FOREGROUND = 1
    UNKNOWN = 2


def pixel_index(x, y, width):
    return y * width + x


def _open(path):
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    try:
        img = PILImage.open(path)
        img.load()
    except (OSError, SyntaxError) as exc:
        raise UnsupportedFormat(f"{path}: cannot decode image ({exc})") from exc
    if img.format != "PNG":
        raise UnsupportedFormat(f"{path}: expected PNG, got {img.format}")
    return img


def _to_uint8(img, path):
    # PIL reports 16-bit greyscale as I;16 / I and palette images as P.
    if img.mode in ("L", "RGB"):
        arr = np.asarray(img, dtype=np.uint8)
    elif img.mode in ("LA", "RGBA"):
        arr = np.asarray(img, dtype=np.uint8)[..., :-1]
        if img.mode == "LA":
            arr = arr[..., 0]
    else:
        raise UnsupportedFormat(f"{path}: unsupported PNG mode {img.mode!r} (need 8-bit L or RGB)")
    return arr


def load_image(path):
    """Read an 8-bit RGB or greyscale PNG as float64 (H, W, 3) in [0, 1]."""
    arr = _to_uint8(_open(path), path)
    if arr.ndim == 2:
        arr = np.repeat(arr[..., None], 3, axis=2)
    return arr.astype(np.float64) / 255.0


def labels_from_gray(gray):
    gray = np.asarray(gray)
    trimap = np.full(gray.shape, Label.UNKNOWN, dtype=np.uint8)
    trimap[gray >= FG_THRESHOLD] = Label.FOREGROUND
    trimap[gray <= BG_THRESHOLD] = Label.BACKGROUND
    return trimap


def load_trimap(path):
    """Read a trimap PNG: white is foreground, black background, grey unknown."""
    arr = _to_uint8(_open(path), path)
    if arr.ndim == 3:
        if not (np.array_equal(arr[..., 0], arr[..., 1]) and np.array_equal(arr[..., 0], arr[..., 2])):
            raise UnsupportedFormat(f"{path}: RGB trimap must have equal channels")
        arr = arr[..., 0]
    trimap = labels_from_gray(arr)
    check_trimap(trimap)
    return trimap


def check_trimap(trimap, image=None):
    if image is not None and trimap.shape != image.shape[:2]:
        raise DimensionMismatch(f"trimap {trimap.shape} does not match image {image.shape[:2]}")
    if not np.any(trimap == Label.FOREGROUND):
        raise NoKnownPixels("trimap has no foreground pixel")
    if not np.any(trimap == Label.BACKGROUND):
        raise NoKnownPixels("trimap has no background pixel")


def trimap_to_gray(trimap):
    gray = np.full(trimap.shape, 128, dtype=np.uint8)
    gray[trimap == Label.FOREGROUND] = 255
    gray[trimap == Label.BACKGROUND] = 0
    return gray


def quantize_alpha(alpha):
    # round half up; np.round would send 0.5*255 to 127
    return np.floor(np.clip(alpha, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def save_alpha(path, matte):
    PILImage.fromarray(quantize_alpha(np.asarray(matte, dtype=np.float64))).save(path, format="PNG")


def save_trimap(path, trimap):
    PILImage.fromarray(trimap_to_gray(trimap)).save(path, format="PNG")


def save_image(path, image):
    rgb = np.floor(np.clip(image, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    PILImage.fromarray(rgb).save(path, format="PNG")


def load_alpha(path):
    """Read a greyscale alpha PNG (e.g. benchmark ground truth) into [0, 1]."""
    arr = _to_uint8(_open(path), path)
    if arr.ndim == 3:
        arr = arr[..., 0]
    return arr.astype(np.float64) / 255.0
