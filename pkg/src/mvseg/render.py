"""Raster previews of manifold-valued images.

* S1, S2: direction maps, hue from the in-plane angle (S2 darkens towards
  the south pole).
* SO3: axis-angle colouring, ``0.5 + 0.5 * axis * angle / pi`` per channel.
* SPD(3): one ellipse glyph per pixel, the planar (row, column) projection
  of the ellipsoid whose semi-axes are the eigenvectors scaled by their
  eigenvalues, coloured by principal direction.
* everything else: grayscale of a per-pixel scalar.

A mask contour can be overlaid in red.
"""

import numpy as np

from .geometry import SO3, SPD, Euclidean, Sphere1, Sphere2
from .levelset import GRAD_FLOOR

RED = np.array([255, 0, 0], dtype=np.uint8)
DEFAULT_CELL = 9


def hsv_to_rgb(h, s, v):
    """Vectorised HSV to RGB, all channels in ``[0, 1]``."""
    h = np.mod(h, 1.0) * 6.0
    i = np.floor(h).astype(int) % 6
    f = h - np.floor(h)
    p = v * (1 - s)
    q = v * (1 - s * f)
    t = v * (1 - s * (1 - f))
    table = [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)]
    out = np.zeros(np.shape(h) + (3,))
    for k, (r, g, b) in enumerate(table):
        sel = i == k
        out[sel] = np.stack([np.broadcast_to(c, np.shape(h))[sel] for c in (r, g, b)], axis=-1)
    return out


def _to_u8(rgb):
    return np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)


def _normalise(a):
    lo, hi = float(a.min()), float(a.max())
    if hi - lo <= 0:
        return np.zeros_like(a) if hi == 0 else np.full_like(a, 0.5)
    return (a - lo) / (hi - lo)


def _gray(scalar):
    return np.repeat(_normalise(scalar)[..., None], 3, axis=-1)


def direction_colours(img):
    """Per-pixel RGB in ``[0, 1]`` for every kind except the SPD(3) glyphs."""
    m, d = img.manifold, img.data
    if isinstance(m, Sphere1):
        h = np.arctan2(d[..., 1], d[..., 0]) / (2 * np.pi)
        one = np.ones(h.shape)
        return hsv_to_rgb(h, one, one)
    if isinstance(m, Sphere2):
        h = np.arctan2(d[..., 1], d[..., 0]) / (2 * np.pi)
        s = np.clip(np.hypot(d[..., 0], d[..., 1]), 0, 1)
        v = 0.6 + 0.4 * d[..., 2]
        return hsv_to_rgb(h, s, v)
    if isinstance(m, SO3):
        rot = np.stack([d[..., 2, 1] - d[..., 1, 2], d[..., 0, 2] - d[..., 2, 0], d[..., 1, 0] - d[..., 0, 1]], -1)
        s = 0.5 * np.linalg.norm(rot, axis=-1)
        c = 0.5 * (np.trace(d, axis1=-2, axis2=-1) - 1)
        theta = np.arctan2(s, c)
        axis = rot / np.maximum(2 * s, GRAD_FLOOR)[..., None]
        return 0.5 + 0.5 * axis * (theta / np.pi)[..., None]
    if isinstance(m, Euclidean):
        scalar = d[..., 0] if m.n == 1 else np.linalg.norm(d, axis=-1)
        return _gray(scalar)
    if isinstance(m, SPD):
        # log-determinant as a size proxy
        return _gray(np.linalg.slogdet(d)[1])
    raise TypeError(f"cannot render {m}")


def ellipse_glyphs(data, cell=DEFAULT_CELL):
    """SPD(3) field as a ``(H*cell, W*cell, 3)`` float raster of ellipse glyphs.

    The ellipsoid of a pixel has semi-axes ``lambda_i e_i``, i.e. shape
    matrix ``P^2``; its shadow on the (row, column) plane is the ellipse with
    shape matrix equal to the upper-left 2x2 block of ``P^2``.  Glyphs are
    scaled so the largest eigenvalue in the image fills half a cell.
    """
    H, W = data.shape[:2]
    w, v = np.linalg.eigh(data)
    lam_max = float(np.max(w))
    scale = (cell / 2.0 - 0.5) / lam_max if lam_max > 0 else 0.0
    sq = np.einsum("...ik,...k,...jk->...ij", v, (w * scale) ** 2, v)
    block = sq[..., :2, :2]
    det = block[..., 0, 0] * block[..., 1, 1] - block[..., 0, 1] ** 2
    det = np.maximum(det, GRAD_FLOOR)
    inv00 = block[..., 1, 1] / det
    inv11 = block[..., 0, 0] / det
    inv01 = -block[..., 0, 1] / det
    colour = np.abs(v[..., :, -1])  # principal eigenvector, DTI-style
    off = np.arange(cell) - (cell - 1) / 2.0
    du, dv = np.meshgrid(off, off, indexing="ij")
    q = (
        inv00[:, :, None, None] * du**2
        + 2 * inv01[:, :, None, None] * du * dv
        + inv11[:, :, None, None] * dv**2
    )
    inside = q <= 1.0
    out = np.where(inside[..., None], colour[:, :, None, None, :], 0.0)
    return out.transpose(0, 2, 1, 3, 4).reshape(H * cell, W * cell, 3)


def mask_boundary(mask):
    """Pixels of ``mask`` with a 4-neighbour outside it (image border excluded)."""
    mask = np.asarray(mask, dtype=bool)
    p = np.pad(mask, 1, mode="edge")
    interior = p[:-2, 1:-1] & p[2:, 1:-1] & p[1:-1, :-2] & p[1:-1, 2:]
    return mask & ~interior


def render(img, mask=None, cell=DEFAULT_CELL):
    """RGB ``uint8`` raster of ``img`` with an optional red mask contour."""
    if isinstance(img.manifold, SPD) and img.manifold.n == 3:
        rgb = ellipse_glyphs(img.data, cell)
        factor = cell
    else:
        rgb = direction_colours(img)
        factor = 1
    out = _to_u8(rgb)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != img.shape:
            raise ValueError(f"mask shape {mask.shape} does not match image {img.shape}")
        if factor > 1:
            mask = np.kron(mask, np.ones((factor, factor), dtype=bool))
        out[mask_boundary(mask)] = RED
    return out
