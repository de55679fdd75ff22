"""Local smooth term: the 3x3-window matting Laplacian."""
from __future__ import annotations

import numpy as np
import scipy.sparse
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ImageTooSmall

WIN = 3
WIN_SIZE = WIN * WIN


def window_indices(height, width):
    """Flat pixel indices of every full 3x3 window, shape (n_windows, 9)."""
    idx = np.arange(height * width).reshape(height, width)
    return sliding_window_view(idx, (WIN, WIN)).reshape(-1, WIN_SIZE)


def window_mask(mask):
    """Windows (centre-indexed) that contain at least one pixel of ``mask``."""
    m = sliding_window_view(np.asarray(mask, dtype=bool), (WIN, WIN))
    return m.any(axis=(2, 3)).ravel()


def matting_laplacian(image, eps=1e-5, active=None):
    """Sparse N x N matting Laplacian of ``image`` over full 3x3 windows.

    ``active`` optionally restricts assembly to windows touching the given
    (H, W) boolean mask. Entries between pixels that never share an active
    window are then zero; rows of pixels inside ``active`` are unaffected.
    """
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape[:2]
    if h < WIN or w < WIN:
        raise ImageTooSmall(f"image must be at least {WIN}x{WIN}, got {w}x{h}")
    if eps <= 0:
        raise ValueError("eps must be > 0")
    n = h * w

    win = window_indices(h, w)
    if active is not None:
        win = win[window_mask(active)]
    if win.shape[0] == 0:
        return scipy.sparse.csr_matrix((n, n))

    colors = image.reshape(n, 3)[win]  # (K, 9, 3)
    mu = colors.mean(axis=1, keepdims=True)
    d = colors - mu
    cov = np.einsum("kai,kaj->kij", d, d) / WIN_SIZE
    inv = np.linalg.inv(cov + (eps / WIN_SIZE) * np.eye(3))
    inv = 0.5 * (inv + np.swapaxes(inv, 1, 2))
    x = np.einsum("kai,kij,kbj->kab", d, inv, d)
    x = 0.5 * (x + np.swapaxes(x, 1, 2))
    vals = np.eye(WIN_SIZE) - (1.0 + x) / WIN_SIZE

    rows = np.repeat(win, WIN_SIZE, axis=1).ravel()
    cols = np.tile(win, (1, WIN_SIZE)).ravel()
    L = scipy.sparse.coo_matrix((vals.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    # (a + b) * 0.5 is bitwise commutative, so the result is exactly symmetric
    L = ((L + L.T) * 0.5).tocsr()
    L.sort_indices()
    return L
