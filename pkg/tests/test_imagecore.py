import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from guided_depth.imagecore import (
    ColorImage,
    DepthMap,
    DimensionError,
    GridShape,
    InputRangeError,
    Neighborhood,
    bicubic_upsample,
    clamp_coord,
    cubic_weights,
    denormalize_depth,
    normalize_depth,
)

from oracles import bicubic_pixel, keys_cubic


@pytest.mark.parametrize("coord, expected", [((-3, 5), (0, 5)), ((4, 4), (4, 4)), ((12, -1), (9, 0))])
def test_clamp_coord(coord, expected):
    assert clamp_coord(coord, GridShape(10, 10)) == expected


def test_neighborhood_keeps_clamped_duplicates():
    nb = Neighborhood.around((0, 0), 1)
    coords = nb.resolve(GridShape(5, 5))
    assert len(coords) == 9
    assert coords.count((0, 0)) == 4


@pytest.mark.parametrize("raw, max_code, expected", [(255, 255, 1.0), (0, 65535, 0.0), (128, 255, 128 / 255)])
def test_normalize_depth(raw, max_code, expected):
    assert normalize_depth(np.array([[raw]]), max_code).values[0, 0] == expected


def test_normalize_rejects_out_of_range_codes():
    with pytest.raises(InputRangeError):
        normalize_depth(np.array([[256]]), 255)
    with pytest.raises(InputRangeError):
        normalize_depth(np.array([[-1]]), 255)


def test_depthmap_validation():
    with pytest.raises(InputRangeError):
        DepthMap(np.array([[1.5]]))
    with pytest.raises(InputRangeError):
        DepthMap(np.array([[np.nan]]))
    with pytest.raises(DimensionError):
        DepthMap(np.zeros((0, 3)))
    with pytest.raises(DimensionError):
        ColorImage(np.zeros((2, 2)))


def test_depthmap_is_read_only():
    d = DepthMap(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        d.values[0, 0] = 1.0


def test_half_up_quantization():
    d = DepthMap(np.array([[0.5, 1.0, 0.0]]))
    assert denormalize_depth(d, 255).tolist() == [[128, 255, 0]]


@given(arrays(np.int64, (3, 4), elements=st.integers(0, 65535)))
def test_gray16_code_round_trip(codes):
    assert np.array_equal(denormalize_depth(normalize_depth(codes, 65535), 65535), codes)


def test_cubic_weights_at_half():
    assert np.allclose(cubic_weights(0.5), [-0.0625, 0.5625, 0.5625, -0.0625], atol=0, rtol=1e-15)


@given(st.floats(0, 1))
def test_cubic_weights_partition_of_unity(t):
    assert abs(cubic_weights(t).sum() - 1.0) < 1e-14


@pytest.mark.parametrize("factor", [1, 2, 3, 4, 8])
def test_bicubic_constant(factor):
    out = bicubic_upsample(DepthMap(np.full((5, 6), 0.4)), factor)
    assert out.shape == (5 * factor, 6 * factor)
    assert np.max(np.abs(out.values - 0.4)) < 1e-15


def test_bicubic_factor_one_is_identity():
    d = DepthMap(np.random.default_rng(0).uniform(0, 1, (4, 4)))
    assert bicubic_upsample(d, 1) is d


def test_bicubic_reproduces_affine_ramps_in_the_interior():
    h, w, f = 12, 12, 4
    y, x = np.mgrid[0:h, 0:w]
    src = DepthMap(0.1 + 0.02 * x + 0.03 * y)
    out = bicubic_upsample(src, f).values
    yy, xx = np.mgrid[0:h * f, 0:w * f]
    expected = 0.1 + 0.02 * ((xx + 0.5) / f - 0.5) + 0.03 * ((yy + 0.5) / f - 0.5)
    # two source pixels at each border see clamped taps
    band = 2 * f
    inner = (slice(band, -band), slice(band, -band))
    assert np.max(np.abs(out[inner] - expected[inner])) < 1e-13


def test_bicubic_matches_direct_evaluation():
    src = np.random.default_rng(1).uniform(0, 1, (5, 7))
    out = bicubic_upsample(DepthMap(src), 3).values
    for y, x in [(0, 0), (7, 11), (14, 20), (3, 19)]:
        assert abs(out[y, x] - bicubic_pixel(src, 3, y, x)) < 1e-14


def test_keys_kernel_oracle_agrees():
    for t in np.linspace(0, 1, 11):
        ref = [keys_cubic(1 + t), keys_cubic(t), keys_cubic(1 - t), keys_cubic(2 - t)]
        assert np.allclose(cubic_weights(t), ref, rtol=0, atol=1e-15)


@settings(max_examples=50)
@given(arrays(np.float64, (4, 5), elements=st.floats(0, 1)))
def test_bicubic_output_stays_in_unit_range(vals):
    out = bicubic_upsample(DepthMap(vals), 4).values
    assert out.min() >= 0.0 and out.max() <= 1.0
