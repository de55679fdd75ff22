"""Synthetic composites with exact ground truth.

Images are built from the compositing model I = a*F + (1 - a)*B with a
straight-edged alpha ramp. The trimap marks a band of given width around
the edge as unknown, so ground truth is exactly 0 or 1 outside it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imageio import Label


@dataclass
class SyntheticCase:
    image: np.ndarray
    trimap: np.ndarray
    alpha: np.ndarray
    name: str = ""


def composite(fg, bg, alpha):
    """Blend per pixel; ``fg``/``bg`` are RGB triples or (H, W, 3) fields."""
    a = np.asarray(alpha, dtype=np.float64)[..., None]
    return a * np.asarray(fg, dtype=np.float64) + (1.0 - a) * np.asarray(bg, dtype=np.float64)


def edge_coordinate(height, width, angle=0.0, offset=0.0):
    """Signed distance (pixels) of each pixel centre from a line through the image centre."""
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    cx = (width - 1) / 2.0 + offset * np.cos(angle)
    cy = (height - 1) / 2.0 + offset * np.sin(angle)
    return (x - cx) * np.cos(angle) + (y - cy) * np.sin(angle)


def ramp_alpha(coord, ramp_width):
    return np.clip(coord / ramp_width + 0.5, 0.0, 1.0)


def band_trimap(coord, band):
    trimap = np.full(coord.shape, Label.UNKNOWN, dtype=np.uint8)
    trimap[coord >= band / 2.0] = Label.FOREGROUND
    trimap[coord <= -band / 2.0] = Label.BACKGROUND
    return trimap


def gray_ramp_case(size=32, ramp_width=6.0, band=8.0):
    """White-over-black horizontal ramp, the plainest possible composite."""
    coord = edge_coordinate(size, size)
    alpha = ramp_alpha(coord, ramp_width)
    image = composite((1.0, 1.0, 1.0), (0.0, 0.0, 0.0), alpha)
    return SyntheticCase(image, band_trimap(coord, band), alpha, f"gray{size}")


def random_case(size, seed, band=6.0, ramp_width=None, noise=0.0, shading=0.0):
    """Composite with a random edge orientation, offset, ramp width and colors.

    With the defaults F and B are constant colors and the image is exactly
    the compositing model. ``shading`` adds a low-frequency sinusoidal color
    variation of that amplitude to F and B; ``noise`` adds Gaussian noise
    with that standard deviation after compositing.
    """
    rng = np.random.default_rng(seed)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    offset = rng.uniform(-size / 8.0, size / 8.0)
    if ramp_width is None:
        ramp_width = rng.uniform(2.0, min(4.0, band))
    coord = edge_coordinate(size, size, angle, offset)
    alpha = ramp_alpha(coord, ramp_width)

    while True:
        f, b = rng.uniform(0.2, 0.8, size=(2, 3))
        if np.linalg.norm(f - b) > 0.35:
            break
    fg = np.broadcast_to(f, (size, size, 3))
    bg = np.broadcast_to(b, (size, size, 3))
    if shading > 0:
        y, x = np.mgrid[0:size, 0:size] / size
        fields = []
        for base in (f, b):
            kx, ky = rng.uniform(-2.0, 2.0, size=(2, 3))
            phase = rng.uniform(0.0, 2.0 * np.pi, 3)
            wave = np.sin(2.0 * np.pi * (kx * x[..., None] + ky * y[..., None]) + phase)
            fields.append(np.clip(base + shading * wave, 0.0, 1.0))
        fg, bg = fields
    image = composite(fg, bg, alpha)
    if noise > 0:
        image = np.clip(image + rng.normal(0.0, noise, size=image.shape), 0.0, 1.0)
    return SyntheticCase(image, band_trimap(coord, band), alpha, f"syn{size}_{seed}")


def suite(sizes=(32, 64), count=10, band=6.0, seed=0, **kwargs):
    """Deterministic list of ``count`` random cases per size."""
    return [random_case(size, seed + 1000 * size + i, band=band, **kwargs)
            for size in sizes for i in range(count)]
