"""Error metrics for alpha mattes."""
from __future__ import annotations

from enum import Enum

import numpy as np

from .errors import DimensionMismatch, EmptyRegion, ZeroBaseline
from .imageio import Label


class Region(str, Enum):
    UNKNOWN_ONLY = "unknown"
    WHOLE_IMAGE = "whole"


def region_mask(region, trimap):
    region = Region(region)
    if region is Region.WHOLE_IMAGE:
        return np.ones(np.shape(trimap), dtype=bool)
    return np.asarray(trimap) == Label.UNKNOWN


def mse(matte, truth, region=None):
    """Mean squared alpha error over the boolean mask ``region`` (all pixels if None)."""
    matte = np.asarray(matte, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if matte.shape != truth.shape:
        raise DimensionMismatch(f"matte {matte.shape} vs truth {truth.shape}")
    if region is None:
        diff = matte - truth
    else:
        region = np.asarray(region, dtype=bool)
        if region.shape != matte.shape:
            raise DimensionMismatch(f"region {region.shape} vs matte {matte.shape}")
        diff = matte[region] - truth[region]
    if diff.size == 0:
        raise EmptyRegion("no pixels selected for MSE")
    return float(np.mean(diff * diff))


def pimp(mse_with_ssl, mse_without_ssl):
    """Relative MSE reduction from refinement, clamped at zero."""
    if mse_without_ssl <= 0:
        raise ZeroBaseline("baseline MSE must be positive")
    v = 1.0 - mse_with_ssl / mse_without_ssl
    return v if v > 0 else 0.0
