import datetime as dt

import numpy as np
import pytest

from wetmap.preprocess import FEATURE_BAND_ORDER, FeatureImage
from wetmap.raster import GridTransform, Raster


def make_transform(px=10.0, origin_x=0.0, origin_y=1000.0, crs="EPSG:32735"):
    return GridTransform(origin_x, origin_y, px, px, crs)


def make_raster(values, nodata=-9999.0, band_names=None, px=10.0,
                origin_y=None):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 2:
        values = values[:, :, np.newaxis]
    if band_names is None:
        band_names = [f"B{i + 1}" for i in range(values.shape[2])]
    origin_y = values.shape[0] * px if origin_y is None else origin_y
    return Raster(values, nodata, make_transform(px=px, origin_y=origin_y),
                  band_names)


def make_feature_image(bands7, nodata=-9999.0, px=10.0):
    """Wrap a (h, w, 7) array as a FeatureImage on a px-meter grid."""
    return FeatureImage(make_raster(bands7, nodata=nodata,
                                    band_names=list(FEATURE_BAND_ORDER),
                                    px=px))


def constant_feature_image(h, w, value=0.3, nodata=-9999.0, px=10.0):
    return make_feature_image(np.full((h, w, 7), value), nodata=nodata, px=px)


def quad_ring(x0, y0, x1, y1):
    return [[(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]]


def dates(n, start=dt.date(2016, 1, 1), step_days=30):
    return [start + dt.timedelta(days=step_days * k) for k in range(n)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
