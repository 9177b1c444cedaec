"""Georeferenced raster containers and the stack/band plumbing built on them.

Conventions used throughout the package:

* north-up grids only, no rotation or shear;
* band arrays are float64 with shape (height, width, band_count);
* a pixel is valid in a band iff its value is finite and != nodata;
* all inputs to a multi-raster operation must share one CRS and grid.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

DEFAULT_NODATA = -9999.0


@dataclass(frozen=True)
class GridTransform:
    """North-up affine grid: map coordinates of the top-left corner plus
    positive pixel sizes in map units (meters, projected CRS). Rows increase
    southward, columns eastward."""

    origin_x: float
    origin_y: float
    pixel_size_x: float
    pixel_size_y: float
    crs_tag: str = ""

    def __post_init__(self):
        if not (self.pixel_size_x > 0 and self.pixel_size_y > 0):
            raise ValueError("pixel sizes must be positive")

    def pixel_center(self, row: int, col: int) -> tuple[float, float]:
        x = self.origin_x + (col + 0.5) * self.pixel_size_x
        y = self.origin_y - (row + 0.5) * self.pixel_size_y
        return x, y

    def index_of(self, x: float, y: float) -> tuple[int, int]:
        """Row/col of the pixel containing map point (x, y)."""
        col = int(np.floor((x - self.origin_x) / self.pixel_size_x))
        row = int(np.floor((self.origin_y - y) / self.pixel_size_y))
        return row, col

    def shifted(self, row0: int, col0: int) -> "GridTransform":
        """Transform of a window whose top-left pixel is (row0, col0)."""
        return GridTransform(
            self.origin_x + col0 * self.pixel_size_x,
            self.origin_y - row0 * self.pixel_size_y,
            self.pixel_size_x,
            self.pixel_size_y,
            self.crs_tag,
        )

    def extent(self, width: int, height: int) -> tuple[float, float, float, float]:
        """(min_x, min_y, max_x, max_y) of a width x height grid."""
        return (
            self.origin_x,
            self.origin_y - height * self.pixel_size_y,
            self.origin_x + width * self.pixel_size_x,
            self.origin_y,
        )


class Raster:
    """Immutable multi-band float64 raster with nodata semantics.

    ``bands`` has shape (height, width, band_count); a 2-D array is accepted
    and treated as a single band. The array is frozen (writeable=False) after
    construction so rasters can be shared across workers safely.
    """

    __slots__ = ("bands", "nodata", "transform", "band_names")

    def __init__(self, bands, nodata: float, transform: GridTransform,
                 band_names: list[str]):
        # copy so freezing never aliases (and never mutates) caller arrays
        arr = np.array(bands, dtype=np.float64, copy=True)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise ValueError("bands must be a 2-D or 3-D array")
        h, w, bc = arr.shape
        if h < 1 or w < 1 or bc < 1:
            raise ValueError("raster must have width, height and band_count >= 1")
        names = [str(n) for n in band_names]
        if len(names) != bc:
            raise ValueError(f"{bc} bands but {len(names)} band names")
        if len(set(names)) != bc:
            raise ValueError("band names must be unique")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self.bands = arr
        self.nodata = float(nodata)
        self.transform = transform
        self.band_names = tuple(names)

    @property
    def height(self) -> int:
        return self.bands.shape[0]

    @property
    def width(self) -> int:
        return self.bands.shape[1]

    @property
    def band_count(self) -> int:
        return self.bands.shape[2]

    def band_index(self, name: str) -> int:
        try:
            return self.band_names.index(name)
        except ValueError:
            raise KeyError(f"unknown band name {name!r}") from None

    def band(self, name: str) -> np.ndarray:
        """2-D view of one band, selected by name."""
        return self.bands[:, :, self.band_index(name)]

    def valid_mask(self, band: int | str | None = None) -> np.ndarray:
        """Boolean validity mask; with band=None, the per-band conjunction."""
        if band is None:
            a = self.bands
            return np.all(np.isfinite(a) & (a != self.nodata), axis=2)
        idx = self.band_index(band) if isinstance(band, str) else int(band)
        a = self.bands[:, :, idx]
        return np.isfinite(a) & (a != self.nodata)

    def same_grid(self, other: "Raster") -> bool:
        return (self.width == other.width and self.height == other.height
                and self.transform == other.transform)


@dataclass(frozen=True)
class DatedRaster:
    raster: Raster
    date: dt.date

    def __post_init__(self):
        if not isinstance(self.date, dt.date) or isinstance(self.date, dt.datetime):
            raise ValueError("date must be a datetime.date")


@dataclass
class ImageStack:
    """Ordered, co-registered collection of dated rasters awaiting a temporal
    reduction. Co-registration (same grid, band layout) is checked eagerly."""

    items: list[DatedRaster] = field(default_factory=list)

    def __post_init__(self):
        self.items = list(self.items)
        if not self.items:
            return
        first = self.items[0].raster
        for it in self.items[1:]:
            r = it.raster
            if not (r.same_grid(first) and r.band_count == first.band_count
                    and r.band_names == first.band_names):
                raise ValueError("stack items are not co-registered "
                                 "(grid or band layout differs)")

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class BandRole:
    """Binds a spectral role to a concrete band name (Sentinel-2 style)."""

    role: str  # one of NIR, Red, Green, Blue
    band_name: str
    center_wavelength_nm: float

    def __post_init__(self):
        if self.role not in ("NIR", "Red", "Green", "Blue"):
            raise ValueError(f"unknown band role {self.role!r}")


# Sentinel-2 defaults: B8/B4/B3/B2 centered at 842/665/560/490 nm.
SENTINEL2_ROLES = {
    "NIR": BandRole("NIR", "B8", 842.0),
    "Red": BandRole("Red", "B4", 665.0),
    "Green": BandRole("Green", "B3", 560.0),
    "Blue": BandRole("Blue", "B2", 490.0),
}


class BoundsPolygon:
    """Polygon in the raster CRS, exterior ring first, even-odd membership."""

    def __init__(self, rings):
        rings = [[(float(x), float(y)) for x, y in ring] for ring in rings]
        if not rings:
            raise ValueError("polygon needs at least an exterior ring")
        for ring in rings:
            if len(ring) < 4:
                raise ValueError("each ring needs >= 4 vertices (closed)")
            if ring[0] != ring[-1]:
                raise ValueError("rings must be closed (first == last vertex)")
        self.rings = rings

    @classmethod
    def from_geojson(cls, geom: dict) -> "BoundsPolygon":
        if geom.get("type") != "Polygon":
            raise ValueError("expected a GeoJSON Polygon geometry")
        return cls(geom["coordinates"])

    def to_geojson(self) -> dict:
        return {"type": "Polygon",
                "coordinates": [[list(p) for p in ring] for ring in self.rings]}

    def bbox(self) -> tuple[float, float, float, float]:
        xs = [x for ring in self.rings[:1] for x, _ in ring]
        ys = [y for ring in self.rings[:1] for _, y in ring]
        return min(xs), min(ys), max(xs), max(ys)

    def contains_mask(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Even-odd ray-casting over all rings, vectorized over points."""
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        inside = np.zeros(np.broadcast(xs, ys).shape, dtype=bool)
        for ring in self.rings:
            pts = np.asarray(ring)
            for i in range(len(pts) - 1):
                x1, y1 = pts[i]
                x2, y2 = pts[i + 1]
                straddles = (y1 > ys) != (y2 > ys)
                if not straddles.any():
                    continue
                with np.errstate(divide="ignore", invalid="ignore"):
                    x_cross = (x2 - x1) * (ys - y1) / (y2 - y1) + x1
                inside ^= straddles & (xs < x_cross)
        return inside

    def contains(self, x: float, y: float) -> bool:
        return bool(self.contains_mask(np.float64(x), np.float64(y)))


def filter_by_date(stack: ImageStack, start: dt.date, end: dt.date) -> ImageStack:
    """Keep items with start <= date <= end (inclusive), order preserved."""
    if start > end:
        raise ValueError(f"start {start} is after end {end}")
    return ImageStack([it for it in stack.items if start <= it.date <= end])


def select_bands(raster: Raster, names: list[str]) -> Raster:
    """Subset/reorder bands to match `names` exactly."""
    idx = [raster.band_index(n) for n in names]
    return Raster(raster.bands[:, :, idx], raster.nodata, raster.transform,
                  list(names))


def concat_bands(a: Raster, b: Raster) -> Raster:
    """Stack b's bands after a's. Grids must match and names stay unique."""
    if not a.same_grid(b):
        raise ValueError("cannot concat bands: grid mismatch")
    if a.nodata != b.nodata and not (np.isnan(a.nodata) and np.isnan(b.nodata)):
        raise ValueError("cannot concat bands: nodata sentinel mismatch")
    dup = set(a.band_names) & set(b.band_names)
    if dup:
        raise ValueError(f"duplicate band names: {sorted(dup)}")
    merged = np.concatenate([a.bands, b.bands], axis=2)
    return Raster(merged, a.nodata, a.transform,
                  list(a.band_names) + list(b.band_names))


def clip_to_bounds(raster: Raster, bounds: BoundsPolygon) -> Raster:
    """Crop to the minimal pixel-aligned window of the polygon; pixels whose
    centers fall outside the polygon become nodata in every band."""
    t = raster.transform
    minx, miny, maxx, maxy = bounds.bbox()
    ext_minx, ext_miny, ext_maxx, ext_maxy = t.extent(raster.width, raster.height)
    if minx >= ext_maxx or maxx <= ext_minx or miny >= ext_maxy or maxy <= ext_miny:
        raise ValueError("bounds polygon does not intersect the raster extent")

    col0 = max(0, int(np.floor((minx - t.origin_x) / t.pixel_size_x)))
    col1 = min(raster.width - 1,
               int(np.ceil((maxx - t.origin_x) / t.pixel_size_x)) - 1)
    row0 = max(0, int(np.floor((t.origin_y - maxy) / t.pixel_size_y)))
    row1 = min(raster.height - 1,
               int(np.ceil((t.origin_y - miny) / t.pixel_size_y)) - 1)
    if col1 < col0 or row1 < row0:
        raise ValueError("bounds polygon does not intersect the raster extent")

    window = np.array(raster.bands[row0:row1 + 1, col0:col1 + 1, :])
    rows = np.arange(row0, row1 + 1)
    cols = np.arange(col0, col1 + 1)
    ys = t.origin_y - (rows + 0.5) * t.pixel_size_y
    xs = t.origin_x + (cols + 0.5) * t.pixel_size_x
    mask = bounds.contains_mask(xs[np.newaxis, :], ys[:, np.newaxis])
    window[~mask, :] = raster.nodata
    return Raster(window, raster.nodata, t.shifted(row0, col0),
                  list(raster.band_names))
