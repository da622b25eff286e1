import numpy as np
import pytest

from mrfcs.wavelets import WaveletTransform2D, daubechies_filter, quadrature_mirror


def test_order2_matches_closed_form():
    h = daubechies_filter(2)
    s3, s2 = np.sqrt(3.0), 4.0 * np.sqrt(2.0)
    expected = np.array([(1 + s3) / s2, (3 + s3) / s2, (3 - s3) / s2, (1 - s3) / s2])
    np.testing.assert_allclose(h, expected, atol=1e-14)


@pytest.mark.parametrize("order", [1, 2, 3, 4, 6, 8])
def test_filter_orthonormality(order):
    h = daubechies_filter(order)
    assert abs(np.dot(h, h) - 1.0) < 1e-12
    assert abs(h.sum() - np.sqrt(2.0)) < 1e-12
    for lag in range(1, order):
        assert abs(np.dot(h[2 * lag:], h[:len(h) - 2 * lag])) < 1e-12
    g = quadrature_mirror(h)
    assert abs(np.dot(g, h)) < 1e-12


@pytest.mark.parametrize("order,levels,shape", [
    (4, 4, (64, 64)),
    (4, 4, (16, 16)),
    (2, 4, (32, 48)),
    (1, 3, (24, 24)),
    (4, 2, (12, 20)),
])
def test_round_trip(order, levels, shape):
    rng = np.random.default_rng(0)
    w = WaveletTransform2D(order, levels)
    x = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    back = w.inverse(w.forward(x))
    assert np.max(np.abs(back - x)) < 1e-10


def test_round_trip_batched_matches_per_image():
    rng = np.random.default_rng(1)
    w = WaveletTransform2D(4, 4)
    batch = rng.normal(size=(5, 32, 32))
    stacked = w.forward(batch)
    for i in range(5):
        np.testing.assert_allclose(stacked[i], w.forward(batch[i]), atol=1e-12)
    np.testing.assert_allclose(w.inverse(stacked), batch, atol=1e-11)


def test_orthogonality_preserves_inner_products():
    rng = np.random.default_rng(2)
    w = WaveletTransform2D(4, 4)
    x = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    y = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    assert abs(np.vdot(w.forward(x), w.forward(y)) - np.vdot(x, y)) < 1e-10


def test_adjoint_equals_inverse():
    rng = np.random.default_rng(3)
    w = WaveletTransform2D(4, 3)
    x = rng.normal(size=(16, 16))
    c = rng.normal(size=(16, 16))
    lhs = np.vdot(w.forward(x), c)
    rhs = np.vdot(x, w.inverse(c))
    assert abs(lhs - rhs) < 1e-10


def test_linearity():
    rng = np.random.default_rng(4)
    w = WaveletTransform2D(2, 2)
    x = rng.normal(size=(16, 16))
    y = rng.normal(size=(16, 16))
    np.testing.assert_allclose(w.forward(2.0 * x - 3.0 * y),
                               2.0 * w.forward(x) - 3.0 * w.forward(y), atol=1e-12)


def test_level_cap_by_dyadic_valuation():
    w = WaveletTransform2D(4, 4)
    assert w.levels_for(64, 64) == 4
    assert w.levels_for(8, 8) == 3
    assert w.levels_for(24, 64) == 3
    assert w.levels_for(12, 12) == 2


def test_odd_sides_rejected():
    w = WaveletTransform2D(2, 1)
    with pytest.raises(ValueError):
        w.forward(np.zeros((7, 8)))


def test_invalid_parameters():
    with pytest.raises(ValueError):
        daubechies_filter(0)
    with pytest.raises(ValueError):
        WaveletTransform2D(2, 0)
