"""GeoTIFF reading and writing (north-up, float64 samples, nodata tag,
band descriptions). Backed by tifffile; the georeferencing, nodata and
band-name metadata use the standard GeoTIFF/GDAL tag conventions so files
interoperate with GDAL-based stacks.

Tag layout written:
  33550 ModelPixelScale, 33922 ModelTiepoint   - the north-up affine
  34735 GeoKeyDirectory, 34737 GeoAsciiParams  - CRS tag as citation (+EPSG)
  42112 GDAL_METADATA                          - per-band descriptions
  42113 GDAL_NODATA                            - nodata sentinel
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET

import numpy as np
import tifffile

from .raster import DEFAULT_NODATA, GridTransform, Raster

_TAG_PIXEL_SCALE = 33550
_TAG_TIEPOINT = 33922
_TAG_TRANSFORMATION = 34264
_TAG_GEO_KEYS = 34735
_TAG_GEO_ASCII = 34737
_TAG_GDAL_METADATA = 42112
_TAG_GDAL_NODATA = 42113

_EPSG_RE = re.compile(r"^EPSG:(\d{1,5})$", re.IGNORECASE)


def _gdal_band_metadata(band_names) -> str:
    root = ET.Element("GDALMetadata")
    for i, name in enumerate(band_names):
        item = ET.SubElement(root, "Item", name="DESCRIPTION",
                             sample=str(i), role="description")
        item.text = str(name)
    return ET.tostring(root, encoding="unicode")


def _parse_band_names(xml_text: str, band_count: int) -> list[str] | None:
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError:
        return None
    names: dict[int, str] = {}
    for item in root.iter("Item"):
        if item.get("role") == "description" and item.get("sample") is not None:
            names[int(item.get("sample"))] = item.text or ""
    if len(names) != band_count:
        return None
    return [names[i] for i in range(band_count)]


def _geo_tags(transform: GridTransform) -> list[tuple]:
    t = transform
    citation = t.crs_tag or ""
    ascii_params = citation + "|"
    keys = [1, 1, 0, 0,
            1024, 0, 1, 1,   # model type: projected
            1025, 0, 1, 1,   # raster type: pixel-is-area
            1026, _TAG_GEO_ASCII, len(ascii_params), 0]
    m = _EPSG_RE.match(citation)
    if m:
        keys += [3072, 0, 1, int(m.group(1))]
    keys[3] = (len(keys) - 4) // 4
    return [
        (_TAG_PIXEL_SCALE, "d", 3, (t.pixel_size_x, t.pixel_size_y, 0.0)),
        (_TAG_TIEPOINT, "d", 6, (0.0, 0.0, 0.0, t.origin_x, t.origin_y, 0.0)),
        (_TAG_GEO_KEYS, "H", len(keys), tuple(keys)),
        (_TAG_GEO_ASCII, "s", None, ascii_params),
    ]


def _write_array(array: np.ndarray, transform: GridTransform,
                 band_names, nodata: float, path) -> None:
    extratags = _geo_tags(transform)
    extratags.append((_TAG_GDAL_METADATA, "s", None, _gdal_band_metadata(band_names)))
    if np.issubdtype(array.dtype, np.integer):
        nodata_text = str(int(nodata))
    else:
        nodata_text = repr(float(nodata))
    extratags.append((_TAG_GDAL_NODATA, "s", None, nodata_text))
    kwargs = {}
    if array.ndim == 3:
        if array.shape[2] == 1:
            array = array[:, :, 0]
        else:
            kwargs["planarconfig"] = "contig"
    tifffile.imwrite(path, array, photometric="minisblack",
                     extratags=extratags, **kwargs)


def write_geotiff(raster: Raster, path) -> None:
    """Write a Raster as a float64 GeoTIFF with nodata and band descriptions."""
    _write_array(np.asarray(raster.bands), raster.transform,
                 raster.band_names, raster.nodata, path)


def write_int_geotiff(values: np.ndarray, transform: GridTransform,
                      path, band_name: str = "labels", nodata: int = -1) -> None:
    """Single-band int32 GeoTIFF (used for segment label images)."""
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ValueError("expected a single-band 2-D integer array")
    _write_array(arr.astype(np.int32), transform, [band_name], float(nodata), path)


def _read_transform(page) -> GridTransform:
    crs_tag = ""
    geo_ascii = page.tags.get(_TAG_GEO_ASCII)
    keys_tag = page.tags.get(_TAG_GEO_KEYS)
    if geo_ascii is not None and keys_tag is not None:
        ascii_val = geo_ascii.value
        keys = keys_tag.value
        for k in range(4, len(keys), 4):
            key_id, loc, count, off = keys[k:k + 4]
            if key_id == 1026 and loc == _TAG_GEO_ASCII:
                crs_tag = ascii_val[off:off + count].rstrip("|")
            elif key_id == 3072 and loc == 0 and not crs_tag:
                crs_tag = f"EPSG:{off}"

    matrix = page.tags.get(_TAG_TRANSFORMATION)
    if matrix is not None:
        m = matrix.value
        if m[1] != 0.0 or m[4] != 0.0:
            raise ValueError("unsupported transform: rotation/shear present")
        if m[0] <= 0.0 or m[5] >= 0.0:
            raise ValueError("unsupported transform: not north-up")
        return GridTransform(m[3], m[7], m[0], -m[5], crs_tag)

    scale = page.tags.get(_TAG_PIXEL_SCALE)
    tiepoint = page.tags.get(_TAG_TIEPOINT)
    if scale is None or tiepoint is None:
        raise ValueError("not a GeoTIFF: georeferencing tags missing")
    sx, sy = float(scale.value[0]), float(scale.value[1])
    i, j, _, x, y = (float(v) for v in tiepoint.value[:5])
    if sx <= 0 or sy <= 0:
        raise ValueError("unsupported transform: nonpositive pixel scale")
    return GridTransform(x - i * sx, y + j * sy, sx, sy, crs_tag)


def read_geotiff(path) -> Raster:
    """Read a north-up GeoTIFF into a float64 Raster.

    A declared GDAL nodata value is preserved; files without one get the
    package default sentinel (-9999). Rotated/sheared files are rejected.
    """
    with tifffile.TiffFile(path) as tif:
        page = tif.pages[0]
        series = tif.series[0]
        arr = series.asarray()
        axes = series.axes
        if axes == "YX":
            arr = arr[:, :, np.newaxis]
        elif axes == "YXS":
            pass
        elif axes in ("SYX", "CYX", "ZYX", "QYX", "IYX"):
            arr = np.moveaxis(arr, 0, -1)
        else:
            raise ValueError(f"unsupported TIFF layout {axes!r}")
        if arr.size == 0 or arr.shape[2] == 0:
            raise ValueError("file has zero bands")

        transform = _read_transform(page)

        nodata = DEFAULT_NODATA
        nodata_tag = page.tags.get(_TAG_GDAL_NODATA)
        if nodata_tag is not None:
            nodata = float(str(nodata_tag.value).strip())

        band_names = None
        meta_tag = page.tags.get(_TAG_GDAL_METADATA)
        if meta_tag is not None:
            band_names = _parse_band_names(str(meta_tag.value), arr.shape[2])
        if band_names is None:
            band_names = [f"band_{i + 1}" for i in range(arr.shape[2])]

    return Raster(arr.astype(np.float64), nodata, transform, band_names)
