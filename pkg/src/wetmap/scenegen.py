"""Synthetic multi-temporal scene generation with exact ground truth.

Scenes are built from class regions (polygons tiling the extent), per-class
per-band Gaussian reflectance, and a per-date fraction of pixels replaced by
bright cloud-like outliers. Every output is a pure function of the SceneSpec
(seed included); per-date noise streams are derived independently so dates
can be generated in parallel.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass

import numpy as np

from .raster import (BoundsPolygon, DatedRaster, GridTransform, ImageStack,
                     Raster)
from .rng import mix_seed
from .sampling import ClassScheme, GroundTruthPoint

# cloud outliers: uniform reflectance draw near saturation
CLOUD_REFLECTANCE = (0.9, 1.0)

TRUTH_NODATA = -9999.0

_POINT_STREAM = 0x706F696E74  # distinct stream index for point sampling


@dataclass
class SceneSpec:
    width: int
    height: int
    pixel_size_m: float
    class_names: list[str]
    regions: list[tuple[list, int]]      # (polygon rings, class_id)
    class_band_means: np.ndarray         # (K, B)
    class_band_sigmas: np.ndarray        # (K, B)
    dates: list[dt.date]
    cloud_fraction: float | list[float] = 0.0
    points_per_class: int = 20
    seed: int = 0
    band_names: tuple = ("B2", "B3", "B4", "B8")
    crs_tag: str = "EPSG:32735"
    origin_x: float = 0.0

    def __post_init__(self):
        self.class_band_means = np.asarray(self.class_band_means, dtype=np.float64)
        self.class_band_sigmas = np.broadcast_to(
            np.asarray(self.class_band_sigmas, dtype=np.float64),
            self.class_band_means.shape).copy()
        K, B = self.class_band_means.shape
        if K != len(self.class_names):
            raise ValueError("class_band_means rows must match class_names")
        if B != len(self.band_names):
            raise ValueError("class_band_means columns must match band_names")
        if (self.class_band_sigmas < 0).any():
            raise ValueError("sigmas must be nonnegative")
        for f in self.cloud_fractions():
            if not 0.0 <= f < 1.0:
                raise ValueError("cloud fraction must be in [0, 1)")
        if not self.dates:
            raise ValueError("need at least one date")
        if self.points_per_class < 1:
            raise ValueError("points_per_class must be >= 1")

    def cloud_fractions(self) -> list[float]:
        if isinstance(self.cloud_fraction, (int, float)):
            return [float(self.cloud_fraction)] * len(self.dates)
        fractions = [float(f) for f in self.cloud_fraction]
        if len(fractions) != len(self.dates):
            raise ValueError("per-date cloud fractions must match dates")
        return fractions

    def transform(self) -> GridTransform:
        return GridTransform(self.origin_x,
                             self.height * self.pixel_size_m,
                             self.pixel_size_m, self.pixel_size_m,
                             self.crs_tag)

    def scheme(self) -> ClassScheme:
        return ClassScheme(self.class_names)

    def to_doc(self) -> dict:
        return {
            "width": self.width, "height": self.height,
            "pixel_size_m": self.pixel_size_m,
            "class_names": list(self.class_names),
            "regions": [{"rings": [[list(p) for p in ring] for ring in rings],
                         "class_id": cid} for rings, cid in self.regions],
            "class_band_means": self.class_band_means.tolist(),
            "class_band_sigmas": self.class_band_sigmas.tolist(),
            "dates": [d.isoformat() for d in self.dates],
            "cloud_fraction": self.cloud_fraction if isinstance(
                self.cloud_fraction, (int, float)) else list(self.cloud_fraction),
            "points_per_class": self.points_per_class,
            "seed": self.seed,
            "band_names": list(self.band_names),
            "crs_tag": self.crs_tag,
            "origin_x": self.origin_x,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SceneSpec":
        return cls(
            width=int(doc["width"]), height=int(doc["height"]),
            pixel_size_m=float(doc["pixel_size_m"]),
            class_names=list(doc["class_names"]),
            regions=[(r["rings"], int(r["class_id"])) for r in doc["regions"]],
            class_band_means=doc["class_band_means"],
            class_band_sigmas=doc["class_band_sigmas"],
            dates=[dt.date.fromisoformat(d) for d in doc["dates"]],
            cloud_fraction=doc.get("cloud_fraction", 0.0),
            points_per_class=int(doc.get("points_per_class", 20)),
            seed=int(doc.get("seed", 0)),
            band_names=tuple(doc.get("band_names", ("B2", "B3", "B4", "B8"))),
            crs_tag=doc.get("crs_tag", "EPSG:32735"),
            origin_x=float(doc.get("origin_x", 0.0)),
        )

    @classmethod
    def from_json(cls, path) -> "SceneSpec":
        with open(path) as fh:
            return cls.from_doc(json.load(fh))

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_doc(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _rasterize_regions(spec: SceneSpec) -> np.ndarray:
    t = spec.transform()
    rows = np.arange(spec.height)
    cols = np.arange(spec.width)
    ys = t.origin_y - (rows + 0.5) * t.pixel_size_y
    xs = t.origin_x + (cols + 0.5) * t.pixel_size_x
    truth = np.full((spec.height, spec.width), -1, dtype=np.int64)
    for rings, cid in spec.regions:
        if not 0 <= cid < len(spec.class_names):
            raise ValueError(f"region class_id {cid} outside the scheme")
        poly = BoundsPolygon(rings)
        mask = poly.contains_mask(xs[np.newaxis, :], ys[:, np.newaxis])
        truth[(truth == -1) & mask] = cid
    if (truth == -1).any():
        raise ValueError("degenerate regions: extent is not fully tiled")
    return truth


def generate_scene(spec: SceneSpec):
    """Returns (ImageStack, truth class Raster, ground-truth points).

    Per date, each pixel draws class mean + Gaussian noise per band; a seeded
    per-pixel fraction is overwritten with bright cloud outliers. Points are
    sampled stratified within the truth regions at pixel centers, so every
    point's class matches the truth raster at its pixel.
    """
    truth = _rasterize_regions(spec)
    t = spec.transform()
    B = len(spec.band_names)
    means = spec.class_band_means[truth]    # (h, w, B)
    sigmas = spec.class_band_sigmas[truth]

    items = []
    for d_idx, (date, cloud) in enumerate(zip(spec.dates, spec.cloud_fractions())):
        rng = np.random.default_rng(mix_seed(spec.seed, d_idx))
        values = means + rng.normal(0.0, 1.0, means.shape) * sigmas
        np.maximum(values, 0.0, out=values)  # reflectance is nonnegative
        if cloud > 0.0:
            mask = rng.random((spec.height, spec.width)) < cloud
            n_cloud = int(mask.sum())
            if n_cloud:
                values[mask] = rng.uniform(*CLOUD_REFLECTANCE, size=(n_cloud, B))
        items.append(DatedRaster(
            Raster(values, TRUTH_NODATA, t, list(spec.band_names)), date))

    truth_raster = Raster(truth.astype(np.float64), TRUTH_NODATA, t, ["class"])

    rng_points = np.random.default_rng(mix_seed(spec.seed, _POINT_STREAM))
    points = []
    for cid, name in enumerate(spec.class_names):
        rows, cols = np.nonzero(truth == cid)
        if len(rows) < spec.points_per_class:
            raise ValueError(
                f"class {name!r} covers {len(rows)} pixels; cannot sample "
                f"{spec.points_per_class} points")
        chosen = rng_points.choice(len(rows), size=spec.points_per_class,
                                   replace=False)
        for k in chosen:
            x, y = t.pixel_center(int(rows[k]), int(cols[k]))
            points.append(GroundTruthPoint(x, y, cid, name))

    return ImageStack(items), truth_raster, points
