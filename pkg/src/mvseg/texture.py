"""Grayscale texture to SPD(M^2)-valued image.

Every pixel gets the second-moment matrix of the ``M x M`` patch vectors
found in the ``W x W`` window around it::

    C(x, y) = (1 / W^2) * sum_{(u, v) in window} N(u, v) N(u, v)^T + ridge * I

Patches are flattened row-major and are *not* mean-centred.  Outside the
image, intensities are extended by edge replication.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidArgumentError
from .geometry import SPD
from .image import ManifoldImage

RIDGE_FACTOR = 1e-6


@dataclass(frozen=True)
class TextureFeatureParams:
    """``patch_size`` M and ``window_size`` W (both odd, ``3 <= M <= W``).

    ``ridge=None`` means ``1e-6`` times the mean diagonal entry over the image.
    """

    patch_size: int = 5
    window_size: int = 13
    ridge: Optional[float] = None

    def __post_init__(self):
        m, w = self.patch_size, self.window_size
        if m < 3 or m % 2 == 0:
            raise InvalidArgumentError("patch_size must be odd and >= 3")
        if w < m or w % 2 == 0:
            raise InvalidArgumentError("window_size must be odd and >= patch_size")
        if self.ridge is not None and self.ridge < 0:
            raise InvalidArgumentError("ridge must be non-negative")


def _gray(img):
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise InvalidArgumentError("texture input must be a 2-D grayscale array")
    return img


def patch_vector(img, x, y, patch_size):
    """Row-major ``M x M`` neighbourhood of pixel ``(x, y)`` (edge replicated)."""
    img = _gray(img)
    h = patch_size // 2
    rows = np.clip(np.arange(x - h, x + h + 1), 0, img.shape[0] - 1)
    cols = np.clip(np.arange(y - h, y + h + 1), 0, img.shape[1] - 1)
    return img[np.ix_(rows, cols)].ravel()


def _patches(img, patch_size, margin):
    """Patch vectors for the image grown by ``margin`` pixels on each side."""
    pad = patch_size // 2 + margin
    padded = np.pad(img, pad, mode="edge")
    win = sliding_window_view(padded, (patch_size, patch_size))
    return win.reshape(win.shape[:2] + (patch_size * patch_size,))


def _box_sum(a, size, axis):
    """Sum of ``size`` consecutive slices along ``axis`` (valid positions only)."""
    n = a.shape[axis] - size + 1
    out = np.zeros(a.shape[:axis] + (n,) + a.shape[axis + 1:])
    for k in range(size):
        out += np.take(a, np.arange(k, k + n), axis=axis)
    return out


def second_moment_field(img, params=TextureFeatureParams()):
    """Ridge-free matrices ``(1 / W^2) sum N N^T``, shape ``(H, W, M^2, M^2)``."""
    img = _gray(img)
    half = params.window_size // 2
    P = _patches(img, params.patch_size, half)
    outer = P[..., :, None] * P[..., None, :]
    acc = _box_sum(outer, params.window_size, 0)
    acc = _box_sum(acc, params.window_size, 1)
    return acc / float(params.window_size ** 2)


def resolve_ridge(moments, params):
    if params.ridge is not None:
        return float(params.ridge)
    diag = np.diagonal(moments, axis1=-2, axis2=-1)
    return RIDGE_FACTOR * float(diag.mean())


def local_covariance(img, x, y, params=TextureFeatureParams(), ridge=None):
    """Second-moment matrix at one pixel, by direct summation over the window.

    ``ridge`` overrides ``params.ridge``; when both are ``None`` the automatic
    ridge is computed from the whole image, matching :func:`texture_to_mvi`.
    """
    img = _gray(img)
    if ridge is None:
        ridge = params.ridge
    if ridge is None:
        ridge = resolve_ridge(second_moment_field(img, params), params)
    half = params.window_size // 2
    n = params.patch_size ** 2
    C = np.zeros((n, n))
    # clamped indices read the edge-replicated image, also for window pixels
    # that fall outside it
    for u in range(x - half, x + half + 1):
        for v in range(y - half, y + half + 1):
            N = patch_vector(img, u, v, params.patch_size)
            C += np.outer(N, N)
    return C / float(params.window_size ** 2) + ridge * np.eye(n)


def texture_to_mvi(img, params=TextureFeatureParams()):
    """SPD(M^2)-valued image of local patch second moments."""
    img = _gray(img)
    w = params.window_size
    if img.shape[0] < w or img.shape[1] < w:
        raise InvalidArgumentError(f"image {img.shape} smaller than the {w}x{w} window")
    C = second_moment_field(img, params)
    ridge = resolve_ridge(C, params)
    n = params.patch_size ** 2
    C += ridge * np.eye(n)
    return ManifoldImage(SPD(n), C)
