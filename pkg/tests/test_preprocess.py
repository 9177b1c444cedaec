import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_raster
from wetmap.preprocess import (FEATURE_BAND_ORDER, FeatureImage,
                               build_feature_image, median_composite, msavi2,
                               ndvi, ndwi)
from wetmap.raster import DatedRaster, ImageStack

NODATA = -9999.0


def _stack_from_series(series):
    """One stack whose single pixel runs through `series` over time."""
    items = []
    for k, v in enumerate(series):
        r = make_raster(np.full((1, 1), v), nodata=NODATA)
        items.append(DatedRaster(r, dt.date(2019, 1, 1) + dt.timedelta(k)))
    return ImageStack(items)


def _sorted_median_oracle(values, nodata=NODATA):
    vals = sorted(v for v in values if v != nodata and math.isfinite(v))
    if not vals:
        return None
    n = len(vals)
    if n % 2:
        return vals[n // 2]
    return (vals[n // 2 - 1] + vals[n // 2]) / 2.0


def test_median_odd_count():
    out = median_composite(_stack_from_series([3.0, 1.0, 2.0]))
    assert out.bands[0, 0, 0] == 2.0


def test_median_even_count_averages_middle_pair():
    out = median_composite(_stack_from_series([1.0, 2.0, 3.0, 4.0]))
    assert out.bands[0, 0, 0] == _sorted_median_oracle([1, 2, 3, 4]) == 2.5


def test_median_skips_nodata():
    out = median_composite(_stack_from_series([1.0, NODATA, 3.0]))
    assert out.bands[0, 0, 0] == 2.0


def test_median_all_invalid_gives_nodata():
    out = median_composite(_stack_from_series([NODATA, np.nan]))
    assert out.bands[0, 0, 0] == NODATA


def test_median_empty_stack_errors():
    with pytest.raises(ValueError, match="empty"):
        median_composite(ImageStack([]))


def test_median_inherits_layout():
    r = make_raster(np.zeros((2, 3, 2)), band_names=["x", "y"])
    stack = ImageStack([DatedRaster(r, dt.date(2020, 1, 1))])
    out = median_composite(stack)
    assert out.band_names == ("x", "y")
    assert out.transform == r.transform


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=9),
       st.randoms(use_true_random=False))
@settings(max_examples=60, deadline=None)
def test_median_permutation_invariant_and_bounded(series, rnd):
    shuffled = list(series)
    rnd.shuffle(shuffled)
    a = median_composite(_stack_from_series(series)).bands[0, 0, 0]
    b = median_composite(_stack_from_series(shuffled)).bands[0, 0, 0]
    assert a == b
    assert min(series) <= a <= max(series)
    oracle = _sorted_median_oracle(series)
    assert abs(a - oracle) <= 1e-12


# --- spectral indices -------------------------------------------------------

def test_ndvi_hand_values():
    assert float(ndvi(0.6, 0.2)) == pytest.approx(0.5, abs=1e-12)
    assert float(ndvi(0.3, 0.3)) == 0.0
    assert np.isnan(float(ndvi(0.0, 0.0)))


def test_ndvi_propagates_invalid():
    out = ndvi(np.array([0.5, np.nan]), np.array([0.1, 0.2]))
    assert np.isfinite(out[0]) and np.isnan(out[1])


def test_ndwi_conventions():
    assert float(ndwi(0.4, 0.1)) == pytest.approx(0.6, abs=1e-12)
    assert float(ndwi(0.4, 0.1, "mcfeeters")) == pytest.approx(-0.6, abs=1e-12)
    assert float(ndwi(0.25, 0.25)) == 0.0
    assert float(ndwi(0.25, 0.25, "mcfeeters")) == 0.0
    with pytest.raises(ValueError, match="convention"):
        ndwi(0.4, 0.1, "gao")


def test_msavi2_hand_value():
    expected = (2 * 0.4 + 1 - math.sqrt((2 * 0.4 + 1) ** 2
                                        - 8 * (0.4 - 0.1))) / 2
    assert expected == pytest.approx(0.441742, abs=1e-6)
    assert float(msavi2(0.4, 0.1)) == pytest.approx(expected, abs=1e-9)


def test_msavi2_invalid_input():
    assert np.isnan(float(msavi2(np.nan, 0.1)))


def test_msavi2_clamps_negative_discriminant():
    # discriminant (2n+1)^2 - 8(n-r) dips below zero only for r < 0
    value = float(msavi2(0.5, -0.3))
    assert value == (2 * 0.5 + 1) / 2  # sqrt clamped to 0


@given(st.floats(0.0, 2.0))
@settings(max_examples=200, deadline=None)
def test_msavi2_zero_identity_when_bands_equal(r):
    assert float(msavi2(r, r)) == 0.0


@given(st.floats(0.001, 1.5), st.floats(0.001, 1.5))
@settings(max_examples=200, deadline=None)
def test_normalized_differences_bounded_for_positive_reflectance(a, b):
    for value in (float(ndvi(a, b)), float(ndwi(a, b)),
                  float(ndwi(a, b, "mcfeeters"))):
        assert -1.0 <= value <= 1.0


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
@settings(max_examples=200, deadline=None)
def test_msavi2_bounded_on_unit_reflectance(a, b):
    # msavi2 >= -1 holds iff red <= 2*nir + 1, always true on [0, 1]
    assert -1.0 - 1e-12 <= float(msavi2(a, b)) <= 1.0 + 1e-12


# --- feature image ----------------------------------------------------------

def _composite(h=3, w=3, extra_bands=9, seed=0):
    rng = np.random.default_rng(seed)
    names = ["B2", "B3", "B4", "B8"] + [f"X{i}" for i in range(extra_bands)]
    vals = rng.uniform(0.05, 0.6, (h, w, len(names)))
    return make_raster(vals, nodata=NODATA, band_names=names)


def test_build_feature_image_layout():
    comp = _composite()
    fi = build_feature_image(comp)
    assert fi.raster.band_names == FEATURE_BAND_ORDER
    assert fi.raster.band_count == 7
    assert np.array_equal(fi.raster.band("B2"), comp.band("B2"))
    nirv, redv = comp.band("B8"), comp.band("B4")
    assert np.allclose(fi.raster.band("NDVI"), (nirv - redv) / (nirv + redv))


def test_build_feature_image_uniform_mask():
    comp_vals = np.random.default_rng(1).uniform(0.05, 0.6, (3, 3, 4))
    comp_vals[1, 1, 2] = NODATA  # kill B4 only
    comp = make_raster(comp_vals, nodata=NODATA,
                       band_names=["B2", "B3", "B4", "B8"])
    fi = build_feature_image(comp)
    assert not fi.raster.valid_mask()[1, 1]
    assert (fi.raster.bands[1, 1] == NODATA).all()
    # mask equals the conjunction of the four input-band masks
    conj = np.ones((3, 3), bool)
    for name in ("B2", "B3", "B4", "B8"):
        conj &= comp.valid_mask(name)
    assert np.array_equal(fi.raster.valid_mask(), conj)


def test_build_feature_image_missing_role_errors():
    comp = make_raster(np.full((2, 2, 3), 0.2),
                       band_names=["B2", "B3", "B4"])
    with pytest.raises(ValueError, match="missing role band"):
        build_feature_image(comp)


def test_build_feature_image_ndwi_convention_flag():
    comp = _composite()
    default = build_feature_image(comp).raster.band("NDWI")
    flipped = build_feature_image(
        comp, ndwi_convention="mcfeeters").raster.band("NDWI")
    assert np.allclose(default, -flipped)


def test_feature_image_validates_band_order():
    r = make_raster(np.full((2, 2, 7), 0.2),
                    band_names=list(reversed(FEATURE_BAND_ORDER)))
    with pytest.raises(ValueError, match="feature image needs bands"):
        FeatureImage(r)


def test_feature_image_validates_index_range():
    vals = np.full((2, 2, 7), 0.2)
    vals[:, :, 4] = 1.5  # NDVI out of range
    r = make_raster(vals, band_names=list(FEATURE_BAND_ORDER))
    with pytest.raises(ValueError, match="outside"):
        FeatureImage(r)
