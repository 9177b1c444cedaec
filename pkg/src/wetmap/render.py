"""Colormapped PNG rendering of class rasters with a JSON legend sidecar."""

from __future__ import annotations

import json

import numpy as np
from PIL import Image

from .raster import Raster
from .sampling import ClassScheme

# fixed qualitative palette; class_id indexes it directly
PALETTE = (
    (31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40),
    (148, 103, 189), (140, 86, 75), (227, 119, 194), (127, 127, 127),
    (188, 189, 34), (23, 190, 207), (174, 199, 232), (255, 187, 120),
)


def class_color(class_id: int) -> tuple[int, int, int]:
    return PALETTE[class_id % len(PALETTE)]


def render_class_map(class_raster: Raster, scheme: ClassScheme,
                     png_path, legend_path=None) -> None:
    """Write an RGBA PNG (nodata transparent) and, optionally, a legend JSON
    mapping class ids to names and colors."""
    if class_raster.band_count != 1:
        raise ValueError("class raster must be single-band")
    values = class_raster.bands[:, :, 0]
    valid = class_raster.valid_mask(0)
    ids = np.rint(values).astype(np.int64)
    present = np.unique(ids[valid])
    for cid in present:
        if not 0 <= cid < len(scheme):
            raise ValueError(f"class id {cid} not in the class scheme")

    rgba = np.zeros(values.shape + (4,), dtype=np.uint8)
    for cid in present:
        sel = valid & (ids == cid)
        rgba[sel, :3] = class_color(int(cid))
        rgba[sel, 3] = 255
    Image.fromarray(rgba, mode="RGBA").save(png_path, format="PNG")

    if legend_path is not None:
        legend = {str(cid): {"name": name, "color": list(class_color(cid))}
                  for cid, name in scheme}
        with open(legend_path, "w") as fh:
            json.dump(legend, fh, indent=2, sort_keys=True)
            fh.write("\n")
