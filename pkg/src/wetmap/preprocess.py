"""Temporal median compositing, spectral indices, and assembly of the 7-band
feature image used by segmentation and classification.

Feature band order is a fixed contract: B2, B3, B4, B8, NDVI, NDWI, MSAVI2.
"""

from __future__ import annotations

import warnings

import numpy as np

from .raster import Raster, ImageStack, SENTINEL2_ROLES

FEATURE_BAND_ORDER = ("B2", "B3", "B4", "B8", "NDVI", "NDWI", "MSAVI2")

# normalized-difference denominators below this magnitude are masked out
EPS_DIV = 1e-12

NDWI_CONVENTIONS = ("nir_minus_green", "mcfeeters")


class FeatureImage:
    """Validated 7-band feature raster (fixed band order, indices in [-1, 1],
    one uniform validity mask shared by all bands)."""

    def __init__(self, raster: Raster):
        if raster.band_names != FEATURE_BAND_ORDER:
            raise ValueError(
                f"feature image needs bands {list(FEATURE_BAND_ORDER)}, "
                f"got {list(raster.band_names)}")
        for name in ("NDVI", "NDWI", "MSAVI2"):
            band = raster.band(name)
            valid = np.isfinite(band) & (band != raster.nodata)
            if valid.any():
                lo, hi = band[valid].min(), band[valid].max()
                if lo < -1.0 - 1e-9 or hi > 1.0 + 1e-9:
                    raise ValueError(f"{name} values outside [-1, 1]: "
                                     f"range [{lo}, {hi}]")
        self.raster = raster

    @property
    def transform(self):
        return self.raster.transform


def median_composite(stack: ImageStack) -> Raster:
    """Per-pixel, per-band median across time, ignoring invalid values.

    Even counts average the two middle values; pixels with no valid value in
    any epoch come out as nodata. Transform and band names are inherited.
    """
    if len(stack) == 0:
        raise ValueError("cannot composite an empty stack")
    arrs = np.stack([it.raster.bands for it in stack.items], axis=0)
    valid = np.isfinite(arrs)
    for k, it in enumerate(stack.items):
        valid[k] &= arrs[k] != it.raster.nodata
    work = np.where(valid, arrs, np.nan)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN slices
        med = np.nanmedian(work, axis=0)
    first = stack.items[0].raster
    out = np.where(np.isnan(med), first.nodata, med)
    return Raster(out, first.nodata, first.transform, list(first.band_names))


def _as_float(a) -> np.ndarray:
    return np.asarray(a, dtype=np.float64)


def ndvi(nir, red) -> np.ndarray:
    """(NIR - Red) / (NIR + Red); NaN where inputs are invalid or the
    denominator is below EPS_DIV."""
    nir, red = _as_float(nir), _as_float(red)
    denom = nir + red
    ok = np.isfinite(nir) & np.isfinite(red) & (np.abs(denom) >= EPS_DIV)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = (nir - red) / denom
    return np.where(ok, value, np.nan)


def ndwi(nir, green, convention: str = "nir_minus_green") -> np.ndarray:
    """Water index over the NIR/Green pair.

    The default orientation is (NIR - Green) / (NIR + Green); the
    "mcfeeters" convention flips it to the McFeeters (1996) definition
    (Green - NIR) / (Green + NIR).
    """
    if convention not in NDWI_CONVENTIONS:
        raise ValueError(f"unknown ndwi convention {convention!r}")
    value = ndvi(nir, green)
    return -value if convention == "mcfeeters" else value


def msavi2(nir, red) -> np.ndarray:
    """(2*NIR + 1 - sqrt((2*NIR + 1)^2 - 8*(NIR - Red))) / 2, with a negative
    discriminant clamped to zero. Exactly 0 whenever NIR == Red."""
    nir, red = _as_float(nir), _as_float(red)
    ok = np.isfinite(nir) & np.isfinite(red)
    t = 2.0 * nir + 1.0
    with np.errstate(invalid="ignore"):
        disc = t * t - 8.0 * (nir - red)
        value = (t - np.sqrt(np.maximum(disc, 0.0))) / 2.0
    return np.where(ok, value, np.nan)


def build_feature_image(composite: Raster, roles=None,
                        ndwi_convention: str = "nir_minus_green") -> FeatureImage:
    """Assemble the 7-band feature image from a composite holding the four
    role bands. A pixel invalid in any source band (or failing an index
    denominator guard) is nodata in all seven output bands."""
    roles = dict(SENTINEL2_ROLES if roles is None else roles)
    source = {}
    for role_name in ("NIR", "Red", "Green", "Blue"):
        if role_name not in roles:
            raise ValueError(f"missing role {role_name!r} in band role mapping")
        band_name = roles[role_name].band_name
        if band_name not in composite.band_names:
            raise ValueError(
                f"missing role band: {role_name} -> {band_name!r} "
                f"not in {list(composite.band_names)}")
        source[role_name] = composite.band(band_name)

    valid = np.ones(source["NIR"].shape, dtype=bool)
    masked = {}
    for role_name, arr in source.items():
        v = np.isfinite(arr) & (arr != composite.nodata)
        valid &= v
        masked[role_name] = np.where(v, arr, np.nan)

    nir, red, green, blue = (masked[r] for r in ("NIR", "Red", "Green", "Blue"))
    index_bands = [ndvi(nir, red), ndwi(nir, green, ndwi_convention),
                   msavi2(nir, red)]
    for band in index_bands:
        valid &= np.isfinite(band)

    nodata = composite.nodata
    stackees = [blue, green, red, nir] + index_bands
    out = np.stack([np.where(valid, b, nodata) for b in stackees], axis=2)
    raster = Raster(out, nodata, composite.transform, list(FEATURE_BAND_ORDER))
    return FeatureImage(raster)
