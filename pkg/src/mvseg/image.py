"""Manifold-valued images and their gradient magnitude.

Axis convention: ``x`` is the row index (axis 0) and ``y`` the column index
(axis 1), so ``I_x(p, q) = Log_{I(p, q)} I(p + 1, q)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .geometry import Manifold


@dataclass
class ManifoldImage:
    """An ``H x W`` grid of points on one manifold.

    ``data`` has shape ``(H, W, *manifold.point_shape)``.
    """

    manifold: Manifold
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        shape = self.manifold.point_shape
        if self.data.ndim != 2 + len(shape) or self.data.shape[2:] != shape:
            raise InvalidArgumentError(
                f"{self.manifold.name} image needs shape (H, W, *{shape}), got {self.data.shape}"
            )
        if self.height < 1 or self.width < 1:
            raise InvalidArgumentError("image must be at least 1x1")

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape[:2]

    def pixels(self):
        """Flat ``(H*W, *point_shape)`` view, row-major."""
        return self.data.reshape((-1,) + self.manifold.point_shape)

    def validate(self):
        ok = self.manifold.is_point(self.data)
        if not np.all(ok):
            r, c = np.argwhere(~ok)[0]
            raise InvalidArgumentError(
                f"pixel ({r}, {c}) is not a valid {self.manifold.name} point"
            )

    @classmethod
    def from_grayscale(cls, gray):
        from .geometry import Euclidean

        gray = np.asarray(gray, dtype=float)
        return cls(Euclidean(1), gray[..., None])


@dataclass
class Differences:
    """Forward Log differences along rows (``ix``) and columns (``iy``)."""

    ix: np.ndarray
    iy: np.ndarray
    cut_locus_count: int = 0
    flagged: np.ndarray = field(default=None, repr=False)


def _forward_log(img, axis):
    m = img.manifold
    d = img.data
    n = d.shape[axis]
    out = np.zeros(d.shape[:2] + m.tangent_shape)
    bad = np.zeros(d.shape[:2], dtype=bool)
    if n == 1:
        return out, bad
    head = [slice(None)] * d.ndim
    nxt = [slice(None)] * d.ndim
    head[axis] = slice(0, n - 1)
    nxt[axis] = slice(1, n)
    v, b = m.log_or_zero(d[tuple(head)], d[tuple(nxt)])
    out[tuple(head[:2])] = v
    bad[tuple(head[:2])] = b
    # last line: negated Log towards the backward neighbour
    last = [slice(None)] * d.ndim
    prev = [slice(None)] * d.ndim
    last[axis] = slice(n - 1, n)
    prev[axis] = slice(n - 2, n - 1)
    v, b = m.log_or_zero(d[tuple(last)], d[tuple(prev)])
    out[tuple(last[:2])] = -v
    bad[tuple(last[:2])] = b
    return out, bad


def differences(img):
    """Log-map forward differences for every pixel.

    Cut-locus neighbour pairs get a zero tangent vector; their number is
    reported in ``cut_locus_count``.
    """
    ix, bx = _forward_log(img, 0)
    iy, by = _forward_log(img, 1)
    flagged = bx | by
    return Differences(ix, iy, int(bx.sum() + by.sum()), flagged)


def finite_difference_x(img, p, q):
    """Tangent vector ``I_x`` at pixel ``(p, q)``; raises on the cut locus."""
    _check_pixel(img, p, q)
    m = img.manifold
    if p + 1 < img.height:
        return m.log(img.data[p, q], img.data[p + 1, q])
    if img.height == 1:
        return m.zero_tangent(img.data[p, q])
    return -m.log(img.data[p, q], img.data[p - 1, q])


def finite_difference_y(img, p, q):
    """Tangent vector ``I_y`` at pixel ``(p, q)``; raises on the cut locus."""
    _check_pixel(img, p, q)
    m = img.manifold
    if q + 1 < img.width:
        return m.log(img.data[p, q], img.data[p, q + 1])
    if img.width == 1:
        return m.zero_tangent(img.data[p, q])
    return -m.log(img.data[p, q], img.data[p, q - 1])


def _check_pixel(img, p, q):
    if not (0 <= p < img.height and 0 <= q < img.width):
        raise InvalidArgumentError(f"pixel ({p}, {q}) outside {img.height}x{img.width} image")


@dataclass(frozen=True)
class StructureTensor:
    """Gram matrix ``[[a11, a12], [a12, a22]]`` of ``I_x, I_y``."""

    a11: float
    a12: float
    a22: float

    def matrix(self):
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])


def structure_tensor_field(img, diffs=None):
    """Arrays ``(a11, a12, a22)`` of Riemannian inner products, shape ``(H, W)``."""
    diffs = diffs if diffs is not None else differences(img)
    m, base = img.manifold, img.data
    a11 = m.inner(base, diffs.ix, diffs.ix)
    a12 = m.inner(base, diffs.ix, diffs.iy)
    a22 = m.inner(base, diffs.iy, diffs.iy)
    return a11, a12, a22


def structure_tensor(img, p, q):
    _check_pixel(img, p, q)
    m, base = img.manifold, img.data[p, q]
    ix = finite_difference_x(img, p, q)
    iy = finite_difference_y(img, p, q)
    return StructureTensor(
        float(m.inner(base, ix, ix)), float(m.inner(base, ix, iy)), float(m.inner(base, iy, iy))
    )


def lambda_max(a11, a12, a22):
    """Largest eigenvalue of symmetric PSD 2x2 matrices, closed form."""
    t = a11 + a22
    det = np.maximum(a11 * a22 - a12 * a12, 0.0)
    disc = np.sqrt(np.maximum(t * t - 4.0 * det, 0.0))
    return 0.5 * (t + disc)


def gradient_magnitude(img, return_count=False):
    """Manifold gradient magnitude: ``sqrt(lambda_max(A))`` per pixel.

    ``A`` is the structure tensor of the Log-map differences; the result is the
    largest Riemannian norm of ``a I_x + b I_y`` over unit ``(a, b)``.
    """
    diffs = differences(img)
    grad = np.sqrt(np.maximum(lambda_max(*structure_tensor_field(img, diffs)), 0.0))
    if return_count:
        return grad, diffs.cut_locus_count
    return grad


def stopping_function(grad):
    """Edge-stopping weight ``1 / (1 + grad)``."""
    grad = np.asarray(grad, dtype=float)
    if np.any(grad < 0):
        raise InvalidArgumentError("gradient magnitude must be non-negative")
    return 1.0 / (1.0 + grad)
