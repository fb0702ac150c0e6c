import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pdeinpaint.grid import (
    as_image,
    as_mask,
    central_gradient,
    density,
    gaussian_kernel,
    gaussian_smooth,
    mse,
    target_count,
)

images = arrays(
    np.float64,
    st.tuples(st.integers(1, 12), st.integers(1, 12)),
    # grey values away from the subnormal range, where squared differences underflow
    elements=st.one_of(st.just(0.0), st.floats(1e-6, 255)),
)


def test_mse_identity():
    f = np.arange(12.0).reshape(3, 4)
    assert mse(f, f) == 0.0


def test_mse_constant_offset():
    assert mse([[1.0, 1.0]], [[0.0, 0.0]]) == 1.0


def test_mse_hand_value():
    assert mse([0, 3, 4], [0, 2, 4]) == pytest.approx(1 / 3, abs=1e-15)


def test_mse_dimension_mismatch():
    with pytest.raises(ValueError):
        mse(np.zeros((2, 3)), np.zeros((3, 2)))


@given(images, images)
def test_mse_nonnegative_zero_iff_equal(u, f):
    if u.shape != f.shape:
        return
    value = mse(u, f)
    assert value >= 0
    assert (value == 0) == bool(np.array_equal(u, f))


def test_as_image_rejects_nonfinite():
    with pytest.raises(ValueError):
        as_image([[0.0, np.nan]])


def test_one_dimensional_signal_is_single_row():
    assert as_image([1, 2, 3]).shape == (1, 3)


def test_mask_shape_check():
    with pytest.raises(ValueError):
        as_mask(np.ones((2, 2), bool), (3, 3))


def test_target_count_rounds_half_up():
    assert target_count(0.25, 10) == 3
    assert target_count(0.04, 4096) == 164


def test_density():
    assert density(np.array([[1, 0, 0, 1]], bool)) == 0.5


def test_kernel_radius_and_mass():
    k = gaussian_kernel(1.6)
    assert k.size == 2 * 5 + 1
    assert k.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(k, k[::-1])


def test_smooth_constant_image():
    f = np.full((7, 5), 42.0)
    assert np.allclose(gaussian_smooth(f, 2.3), 42.0, atol=1e-12)


def test_smooth_sigma_zero_is_bit_identical():
    f = np.random.default_rng(0).uniform(0, 255, (6, 9))
    out = gaussian_smooth(f, 0.0)
    assert np.array_equal(out, f)


def test_smooth_negative_sigma():
    with pytest.raises(ValueError):
        gaussian_smooth(np.zeros((3, 3)), -1.0)


def _direct_smooth(f, sigma):
    # brute-force convolution with an explicit mirror index map
    k = gaussian_kernel(sigma)
    r = k.size // 2

    def mirror(i, n):
        period = 2 * n
        i %= period
        return i if i < n else period - 1 - i

    h, w = f.shape
    tmp = np.zeros_like(f)
    for y in range(h):
        for x in range(w):
            tmp[y, x] = sum(k[j + r] * f[y, mirror(x + j, w)] for j in range(-r, r + 1))
    out = np.zeros_like(f)
    for y in range(h):
        for x in range(w):
            out[y, x] = sum(k[j + r] * tmp[mirror(y + j, h), x] for j in range(-r, r + 1))
    return out


@pytest.mark.parametrize("sigma", [0.5, 1.0, 1.6, 3.0])
def test_smooth_matches_direct_summation(sigma):
    f = np.random.default_rng(1).uniform(0, 255, (9, 11))
    assert np.allclose(gaussian_smooth(f, sigma), _direct_smooth(f, sigma), atol=1e-10)


@given(images, st.floats(0.1, 4.0))
def test_smooth_preserves_mean(f, sigma):
    assert abs(gaussian_smooth(f, sigma).mean() - f.mean()) <= 1e-12 * max(1.0, np.abs(f).max())


@given(images, st.floats(0.1, 4.0))
def test_smooth_stays_within_range(f, sigma):
    out = gaussian_smooth(f, sigma)
    tol = 1e-12 * max(1.0, np.abs(f).max())
    assert out.min() >= f.min() - tol
    assert out.max() <= f.max() + tol


def test_central_gradient_of_ramp():
    x = np.tile(np.arange(6.0), (4, 1))
    gx, gy = central_gradient(2 * x)
    assert np.allclose(gx[:, 1:-1], 2.0)
    assert np.allclose(gy, 0.0)
