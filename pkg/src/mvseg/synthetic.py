"""Seeded synthetic test images.

Noise comes from NumPy's PCG64 bit generator (``numpy.random.default_rng``),
drawn in a fixed order: one standard Gaussian tangent vector per pixel in
row-major order.
"""

import numpy as np

from .errors import InvalidArgumentError
from .geometry import SO3, SPD, Euclidean, Sphere1, Sphere2
from .image import ManifoldImage


def region_mask(height, width, shape):
    """Closed-region membership (signed distance ``<= 0``)."""
    return shape.signed_distance(height, width) <= 0


def generate_synthetic(manifold, height, width, region, inside, outside, noise_sigma=0.0, seed=0):
    """Two-region image with tangent-space Gaussian noise.

    Each pixel is ``Exp_base(noise_sigma * v)`` with ``base`` the inside or
    outside point and ``v`` a standard Gaussian tangent vector at ``base``.

    Returns
    -------
    (ManifoldImage, ndarray of bool)
        The image and its exact region-membership mask.
    """
    inside = np.asarray(inside, dtype=float).reshape(manifold.point_shape)
    outside = np.asarray(outside, dtype=float).reshape(manifold.point_shape)
    for name, pt in (("inside", inside), ("outside", outside)):
        if not manifold.is_point(pt):
            raise InvalidArgumentError(f"{name} point is not on {manifold.name}")
    if noise_sigma < 0:
        raise InvalidArgumentError("noise_sigma must be non-negative")
    mask = region_mask(height, width, region)
    sel = mask.reshape(mask.shape + (1,) * len(manifold.point_shape))
    base = np.where(sel, inside, outside)
    if noise_sigma == 0:
        return ManifoldImage(manifold, base.copy()), mask
    rng = np.random.default_rng(seed)
    v = manifold.random_tangent(base, rng)
    return ManifoldImage(manifold, manifold.exp(base, noise_sigma * v)), mask


def default_points(manifold):
    """Inside/outside pairs used by the demos and acceptance tests."""
    if isinstance(manifold, Euclidean):
        return np.ones(manifold.n), np.zeros(manifold.n)
    if isinstance(manifold, Sphere1):
        return np.array([1.0, 0.0]), np.array([0.0, 1.0])
    if isinstance(manifold, Sphere2):
        return np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])
    if isinstance(manifold, SO3):
        from .geometry import rotation_exp

        return np.eye(3), rotation_exp(np.array([0.0, 0.0, np.pi / 2]))
    if isinstance(manifold, SPD):
        a = np.ones(manifold.n)
        b = np.ones(manifold.n)
        a[0] = 4.0
        b[-1] = 4.0
        return np.diag(a), np.diag(b)
    raise InvalidArgumentError(f"no default points for {manifold}")


def stripe_montage(height=96, width=96, period=6.0, noise=0.05, seed=0):
    """Grayscale texture pair: horizontal stripes left, vertical stripes right.

    Returns ``(image, mask)`` with intensities clipped to ``[0, 1]`` and the
    mask true on the right (vertical-stripe) half.
    """
    x, y = np.meshgrid(np.arange(height, dtype=float), np.arange(width, dtype=float), indexing="ij")
    horizontal = 0.5 + 0.35 * np.sin(2 * np.pi * x / period)
    vertical = 0.5 + 0.35 * np.sin(2 * np.pi * y / period)
    mask = y >= width // 2
    img = np.where(mask, vertical, horizontal)
    if noise > 0:
        img = img + noise * np.random.default_rng(seed).standard_normal(img.shape)
    return np.clip(img, 0.0, 1.0), mask
