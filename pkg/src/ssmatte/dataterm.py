"""Sampling-based data term.

Every unknown pixel gathers nearby foreground and background boundary
samples, scores each (F, B) pair by how well the compositing line through
F and B explains the pixel color, and keeps the best few pairs. The result
is an alpha estimate plus a confidence, which ``data_weights`` turns into
edge weights towards two virtual terminal nodes (alpha = 1 and alpha = 0).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoBackgroundSamples, NoForegroundSamples
from .imageio import Label

DEGENERATE_PAIR = 1e-12
DEGENERATE_DIST = 1e-6
SENTINEL_RATIO = 1e6
WEIGHT_FLOOR = 0.05
# upper bound on pair-array elements held at once by compute_data_term
_CHUNK_ELEMS = 4_000_000


@dataclass(frozen=True)
class SamplingParams:
    n_samples: int = 10
    top_k: int = 3
    sigma: float = 0.1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")


@dataclass
class SampleSet:
    fg_index: np.ndarray
    fg_color: np.ndarray
    bg_index: np.ndarray
    bg_color: np.ndarray


@dataclass
class DataTermField:
    """Per-unknown-pixel estimates, in the order of ``unknown`` (flat indices)."""

    unknown: np.ndarray
    alpha_hat: np.ndarray
    confidence: np.ndarray


def estimate_alpha_pair(I, F, B):
    I, F, B = (np.asarray(v, dtype=np.float64) for v in (I, F, B))
    d = F - B
    denom = np.dot(d, d)
    if denom < DEGENERATE_PAIR:
        return 0.5
    return float(np.clip(np.dot(I - B, d) / denom, 0.0, 1.0))


def pair_distance_ratio(I, F, B, alpha_hat):
    I, F, B = (np.asarray(v, dtype=np.float64) for v in (I, F, B))
    fb = np.linalg.norm(F - B)
    if fb < DEGENERATE_DIST:
        return SENTINEL_RATIO
    return float(np.linalg.norm(I - (alpha_hat * F + (1.0 - alpha_hat) * B)) / fb)


def pair_confidence(ratio, w_f, w_b, sigma):
    return float(np.exp(-(ratio * ratio) * w_f * w_b / (sigma * sigma)))


def boundary_mask(trimap, label):
    """Pixels carrying ``label`` with at least one unknown 4-neighbour."""
    unknown = trimap == Label.UNKNOWN
    near = np.zeros_like(unknown)
    near[1:, :] |= unknown[:-1, :]
    near[:-1, :] |= unknown[1:, :]
    near[:, 1:] |= unknown[:, :-1]
    near[:, :-1] |= unknown[:, 1:]
    return (trimap == label) & near


def _nearest(cand, targets, width, n):
    """For each target flat index, the ``n`` nearest candidate flat indices.

    Squared grid distances are exact integers, so ranking on
    ``d2 * len(cand) + position`` is a total order with ties going to the
    lower pixel index.
    """
    n = min(n, cand.size)
    cy, cx = np.divmod(cand, width)
    ty, tx = np.divmod(targets, width)
    d2 = (ty[:, None] - cy[None, :]) ** 2 + (tx[:, None] - cx[None, :]) ** 2
    key = d2.astype(np.int64) * cand.size + np.arange(cand.size)
    if n < cand.size:
        part = np.argpartition(key, n - 1, axis=1)[:, :n]
    else:
        part = np.broadcast_to(np.arange(cand.size), key.shape)
    order = np.argsort(np.take_along_axis(key, part, axis=1), axis=1)
    return cand[np.take_along_axis(part, order, axis=1)]


def _boundary_candidates(trimap):
    fg = np.flatnonzero(boundary_mask(trimap, Label.FOREGROUND))
    bg = np.flatnonzero(boundary_mask(trimap, Label.BACKGROUND))
    if fg.size == 0:
        raise NoForegroundSamples("trimap has no foreground boundary pixels")
    if bg.size == 0:
        raise NoBackgroundSamples("trimap has no background boundary pixels")
    return fg, bg


def collect_samples(trimap, image, z, n_samples):
    """Nearest foreground/background boundary pixels to unknown pixel ``z``."""
    if trimap.ravel()[z] != Label.UNKNOWN:
        raise ValueError(f"pixel {z} is not unknown")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    fg, bg = _boundary_candidates(trimap)
    width = trimap.shape[1]
    colors = image.reshape(-1, 3)
    target = np.array([z])
    fi = _nearest(fg, target, width, n_samples)[0]
    bi = _nearest(bg, target, width, n_samples)[0]
    return SampleSet(fi, colors[fi], bi, colors[bi])


def _color_weights(I, S):
    # I: (m, 3) pixel colors, S: (m, s, 3) sample colors -> (m, s)
    d2 = np.sum((S - I[:, None, :]) ** 2, axis=2)
    dmin2 = np.maximum(d2.min(axis=1, keepdims=True), DEGENERATE_DIST**2)
    return np.maximum(np.exp(-d2 / dmin2), WEIGHT_FLOOR)


def _score_pairs(I, F, B, wF, wB, sigma):
    """Vectorised estimate_alpha_pair / pair_distance_ratio / pair_confidence.

    I: (m, 3); F: (m, sf, 3); B: (m, sb, 3). Returns alpha and confidence of
    shape (m, sf * sb), pairs enumerated F-major.
    """
    Fp = F[:, :, None, :]
    Bp = B[:, None, :, :]
    Ip = I[:, None, None, :]
    d = Fp - Bp
    dd = np.sum(d * d, axis=3)
    degenerate = dd < DEGENERATE_PAIR
    safe = np.where(degenerate, 1.0, dd)
    alpha = np.clip(np.sum((Ip - Bp) * d, axis=3) / safe, 0.0, 1.0)
    alpha = np.where(degenerate, 0.5, alpha)

    resid = Ip - (alpha[..., None] * Fp + (1.0 - alpha[..., None]) * Bp)
    fb = np.sqrt(dd)
    tiny = fb < DEGENERATE_DIST
    ratio = np.where(tiny, SENTINEL_RATIO, np.linalg.norm(resid, axis=3) / np.where(tiny, 1.0, fb))

    w = wF[:, :, None] * wB[:, None, :]
    conf = np.exp(-(ratio * ratio) * w / (sigma * sigma))
    m = I.shape[0]
    return alpha.reshape(m, -1), conf.reshape(m, -1)


def compute_data_term(image, trimap, params=SamplingParams()):
    unknown = np.flatnonzero(trimap == Label.UNKNOWN)
    if unknown.size == 0:
        return DataTermField(unknown, np.zeros(0), np.zeros(0))
    fg, bg = _boundary_candidates(trimap)
    width = trimap.shape[1]
    colors = image.reshape(-1, 3)

    alpha_hat = np.empty(unknown.size)
    confidence = np.empty(unknown.size)
    per_pixel = max(fg.size, bg.size, params.n_samples**2) * 4
    step = max(1, _CHUNK_ELEMS // per_pixel)
    for start in range(0, unknown.size, step):
        u = unknown[start:start + step]
        fi = _nearest(fg, u, width, params.n_samples)
        bi = _nearest(bg, u, width, params.n_samples)
        I = colors[u]
        F = colors[fi]
        B = colors[bi]
        alpha, conf = _score_pairs(I, F, B, _color_weights(I, F), _color_weights(I, B), params.sigma)

        k = min(params.top_k, conf.shape[1])
        # stable sort on -conf keeps the earlier pair on ties
        top = np.argsort(-conf, axis=1, kind="stable")[:, :k]
        c = np.take_along_axis(conf, top, axis=1)
        a = np.take_along_axis(alpha, top, axis=1)
        csum = c.sum(axis=1)
        mean_a = a.mean(axis=1)
        est = np.divide((c * a).sum(axis=1), csum, out=mean_a, where=csum > 0)
        alpha_hat[start:start + step] = np.clip(est, 0.0, 1.0)
        confidence[start:start + step] = np.clip(c.mean(axis=1), 0.0, 1.0)
    return DataTermField(unknown, alpha_hat, confidence)


def data_weights(field, trimap, gamma_scale=1.0):
    """Terminal edge weights (to alpha=1, to alpha=0) for every pixel, flat order."""
    if gamma_scale <= 0:
        raise ValueError("gamma_scale must be > 0")
    labels = trimap.ravel()
    w_f = np.where(labels == Label.FOREGROUND, gamma_scale, 0.0)
    w_b = np.where(labels == Label.BACKGROUND, gamma_scale, 0.0)
    a = field.alpha_hat
    f = field.confidence
    w_f[field.unknown] = gamma_scale * (f * a + (1.0 - f) * (a > 0.5))
    w_b[field.unknown] = gamma_scale * (f * (1.0 - a) + (1.0 - f) * (a <= 0.5))
    return w_f, w_b
