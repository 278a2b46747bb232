import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_delta
from mvseg.errors import CutLocusError, InvalidArgumentError
from mvseg.geometry import SO3, SPD, Euclidean, Sphere1, Sphere2
from mvseg.image import (
    ManifoldImage,
    differences,
    finite_difference_x,
    finite_difference_y,
    gradient_magnitude,
    lambda_max,
    stopping_function,
    structure_tensor,
)
from mvseg.levelset import Rectangle
from mvseg.synthetic import default_points, generate_synthetic


def _noisy(m, seed=0, size=12, sigma=0.3):
    inside, outside = default_points(m)
    img, _ = generate_synthetic(m, size, size, Rectangle(3, 3, 8, 8), inside, outside, sigma, seed)
    return img


def test_image_rejects_wrong_pixel_shape():
    with pytest.raises(InvalidArgumentError):
        ManifoldImage(Sphere2(), np.zeros((4, 4, 2)))


def test_euclidean_forward_differences():
    gray = np.arange(20.0).reshape(4, 5) ** 1.5
    img = ManifoldImage.from_grayscale(gray)
    assert finite_difference_x(img, 1, 2)[0] == pytest.approx(gray[2, 2] - gray[1, 2])
    assert finite_difference_y(img, 1, 2)[0] == pytest.approx(gray[1, 3] - gray[1, 2])
    # last row / column fall back to the backward neighbour
    assert finite_difference_x(img, 3, 0)[0] == pytest.approx(gray[3, 0] - gray[2, 0])
    assert finite_difference_y(img, 0, 4)[0] == pytest.approx(gray[0, 4] - gray[0, 3])


def test_euclidean_structure_tensor_is_outer_product():
    gray = np.array([[0.0, 3.0], [2.0, 0.0]])
    st_ = structure_tensor(ManifoldImage.from_grayscale(gray), 0, 0)
    a, b = 2.0, 3.0
    np.testing.assert_allclose(st_.matrix(), [[a * a, a * b], [a * b, b * b]])


def test_euclidean_gradient_is_classical_norm():
    rng = np.random.default_rng(0)
    gray = rng.random((16, 20))
    ix = np.vstack([np.diff(gray, axis=0), gray[-1:] - gray[-2:-1]])
    iy = np.hstack([np.diff(gray, axis=1), gray[:, -1:] - gray[:, -2:-1]])
    grad = gradient_magnitude(ManifoldImage.from_grayscale(gray))
    np.testing.assert_allclose(grad, np.hypot(ix, iy), atol=1e-10)


def test_constant_image_has_zero_gradient_and_unit_stopping():
    img = ManifoldImage(SPD(2), np.broadcast_to(np.diag([2.0, 3.0]), (5, 6, 2, 2)).copy())
    grad = gradient_magnitude(img)
    np.testing.assert_allclose(grad, 0.0, atol=1e-12)
    np.testing.assert_allclose(stopping_function(grad), 1.0)


def test_sphere2_step_edge_gradient_is_angle():
    data = np.zeros((4, 4, 3))
    data[:2] = [0, 0, 1]
    data[2:] = [1, 0, 0]
    grad = gradient_magnitude(ManifoldImage(Sphere2(), data))
    np.testing.assert_allclose(grad[1], np.pi / 2, atol=1e-12)
    np.testing.assert_allclose(grad[0], 0.0, atol=1e-12)


def test_lambda_max_matches_eigvalsh():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(100, 2, 3))
    gram = a @ np.swapaxes(a, 1, 2)
    got = lambda_max(gram[:, 0, 0], gram[:, 0, 1], gram[:, 1, 1])
    np.testing.assert_allclose(got, np.linalg.eigvalsh(gram)[:, -1], rtol=1e-12)


@pytest.mark.parametrize("m", [Euclidean(2), Sphere1(), Sphere2(), SO3(), SPD(3)], ids=str)
def test_gradient_matches_direction_sweep(m):
    img = _noisy(m)
    diffs = differences(img)
    grad = gradient_magnitude(img)
    rng = np.random.default_rng(2)
    for _ in range(15):
        p, q = rng.integers(0, 12, size=2)
        ref = brute_force_delta(m, img.data[p, q], diffs.ix[p, q], diffs.iy[p, q])
        assert abs(grad[p, q] - ref) <= 1e-4 * max(ref, 1e-12)


def test_cut_locus_neighbours_are_counted_and_zeroed():
    data = np.zeros((3, 3, 3))
    data[...] = [0, 0, 1]
    data[1, 1] = [0, 0, -1]
    img = ManifoldImage(Sphere2(), data)
    grad, count = gradient_magnitude(img, return_count=True)
    # per axis: two forward differences plus the backward one on the last line
    assert count == 6
    assert np.all(np.isfinite(grad))
    with pytest.raises(CutLocusError):
        finite_difference_x(img, 0, 1)


def test_stopping_function_rejects_negative():
    with pytest.raises(InvalidArgumentError):
        stopping_function(np.array([-1.0]))


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1e6, allow_nan=False))
def test_stopping_function_in_unit_interval(x):
    g = stopping_function(np.array([x]))[0]
    assert 0 < g <= 1


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gradient_non_negative_and_rotation_invariant_on_so3(seed):
    """Left-multiplying every pixel by a fixed rotation leaves the gradient unchanged."""
    rng = np.random.default_rng(seed)
    img = _noisy(SO3(), seed=seed, size=8)
    r = SO3().random_point(rng)
    rotated = ManifoldImage(SO3(), r @ img.data)
    g1, g2 = gradient_magnitude(img), gradient_magnitude(rotated)
    assert np.all(g1 >= 0)
    np.testing.assert_allclose(g1, g2, atol=1e-8)
