import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvseg import levelset as ls
from mvseg.errors import InvalidArgumentError


def test_circle_corner_distance():
    phi = ls.init_shape(100, 100, ls.Circle(50, 50, 10))
    assert phi[0, 0] == pytest.approx(np.hypot(50, 50) - 10)
    assert phi[50, 50] == pytest.approx(-10)
    assert phi[50, 60] == pytest.approx(0)


def test_rectangle_signed_distance():
    phi = ls.init_shape(20, 20, ls.Rectangle(5, 5, 14, 14))
    assert phi[10, 10] == pytest.approx(-4.0)
    assert phi[5, 10] == pytest.approx(0.0)
    assert phi[2, 10] == pytest.approx(3.0)
    assert phi[2, 2] == pytest.approx(np.hypot(3, 3))


def test_init_rejects_shape_outside_grid():
    with pytest.raises(InvalidArgumentError):
        ls.init_shape(20, 20, ls.Circle(5, 5, 6))
    with pytest.raises(InvalidArgumentError):
        ls.Circle(5, 5, 0)
    with pytest.raises(InvalidArgumentError):
        ls.Rectangle(5, 5, 5, 9)


def test_parse_and_format_shapes():
    c = ls.parse_shape("circle:31.5,20,7")
    assert c == ls.Circle(31.5, 20, 7)
    assert ls.parse_shape(ls.format_shape(c)) == c
    r = ls.parse_shape("rect:1,2,3,4")
    assert ls.parse_shape(ls.format_shape(r)) == r
    for bad in ("circle:1,2", "blob:1,2,3", "rect:a,b,c,d"):
        with pytest.raises(InvalidArgumentError):
            ls.parse_shape(bad)


def test_dice_values():
    a = np.zeros((4, 4), bool)
    a[:2] = True
    b = np.zeros((4, 4), bool)
    b[1:3] = True
    assert ls.dice(a, a) == 1.0
    assert ls.dice(a, b) == pytest.approx(0.5)
    assert ls.dice(a, ~a) == 0.0
    assert ls.dice(np.zeros((2, 2)), np.zeros((2, 2))) == 1.0


@pytest.mark.parametrize("r", [5, 10, 20])
def test_curvature_of_circle_is_inverse_radius(r):
    """Measured on the pixels nearest the zero set; tolerance grows for small r."""
    phi = ls.init_shape(64, 64, ls.Circle(32, 32, r))
    kappa = ls.curvature_divergence(phi)
    ring = np.abs(phi) < 0.5
    assert np.mean(kappa[ring]) * r == pytest.approx(1.0, abs=0.05)


def test_curvature_of_plane_is_zero():
    x, y = np.meshgrid(np.arange(20.0), np.arange(30.0), indexing="ij")
    np.testing.assert_allclose(ls.curvature_divergence(0.6 * x - 0.8 * y + 3), 0.0, atol=1e-12)


def test_dirac_peak_and_mass():
    eps = 1.5
    assert ls.dirac_eps(np.array(0.0), eps) == pytest.approx(1 / (np.pi * eps))
    s = np.linspace(-2000, 2000, 400001)
    assert np.trapezoid(ls.dirac_eps(s, eps), s) == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(InvalidArgumentError):
        ls.dirac_eps(s, 0.0)


def test_godunov_norm_of_signed_distance_is_one():
    phi = ls.init_shape(40, 40, ls.Circle(20, 20, 8))
    for sign in (1.0, -1.0):
        g = ls.godunov_norm(phi, sign)
        # outside the disc, clear of the first-order error near the apex
        ring = (phi > 2) & (phi < 10)
        assert np.abs(g[ring] - 1).max() < 0.05


def test_reinit_keeps_planar_distance_field_fixed():
    x, y = np.meshgrid(np.arange(32.0), np.arange(32.0), indexing="ij")
    phi = 0.6 * x + 0.8 * y - 20.3
    np.testing.assert_allclose(ls.reinitialize(phi, 10), phi, atol=1e-12)


def test_reinit_restores_unit_gradient_of_steep_field():
    phi = 5 * ls.init_shape(64, 64, ls.Circle(32, 32, 15))
    out = ls.reinitialize(phi, 20)
    band = np.abs(out) < 3
    grad = ls.gradient_norm(out)
    assert np.mean(np.abs(grad[band] - 1) < 0.2) > 0.95
    assert ls.dice(out < 0, phi < 0) == 1.0


def test_reinit_requires_positive_iterations():
    with pytest.raises(InvalidArgumentError):
        ls.reinitialize(np.zeros((4, 4)), 0)


@settings(max_examples=15, deadline=None)
@given(
    cx=st.floats(20, 44), cy=st.floats(20, 44), r=st.floats(6, 15),
    scale=st.floats(0.3, 4.0),
)
def test_reinit_preserves_inside_region(cx, cy, r, scale):
    phi = scale * ls.init_shape(64, 64, ls.Circle(cx, cy, r))
    out = ls.reinitialize(phi, 10)
    assert ls.dice(out < 0, phi < 0) >= 0.99


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dice_is_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.random((2, 8, 8)) < 0.4
    d = ls.dice(a, b)
    assert 0 <= d <= 1
    assert d == ls.dice(b, a)
