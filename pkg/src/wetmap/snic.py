"""SNIC superpixel segmentation and per-segment statistics.

Region growing runs a single global best-first queue seeded on a regular
grid. The candidate priority is

    d^2 = d_spatial^2 / s^2  +  d_color^2 / m^2

with s the seed spacing, m the compactness knob, d_spatial the Euclidean
pixel distance to the segment's running centroid and d_color the Euclidean
distance in per-band z-scored feature space. Larger m discounts color and
yields more compact (grid-like) segments.

Determinism contract: seeds are enumerated row-major over grid cells,
neighbors are pushed in N, W, E, S order, and queue ties break on insertion
sequence, so identical inputs always produce identical label arrays.
"""

from __future__ import annotations

import csv
import heapq
from collections import deque
from dataclasses import dataclass

import numpy as np

from .geotiff import write_int_geotiff, read_geotiff
from .preprocess import FeatureImage
from .raster import GridTransform, Raster

_NEIGHBORS = ((-1, 0), (0, -1), (0, 1), (1, 0))  # N, W, E, S


@dataclass(frozen=True)
class SnicParams:
    seed_spacing: int = 5
    compactness: float = 1.0
    # connectivity is fixed to the 4-neighborhood

    def __post_init__(self):
        if int(self.seed_spacing) != self.seed_spacing or self.seed_spacing < 2:
            raise ValueError("seed_spacing must be an integer >= 2")
        if not self.compactness > 0:
            raise ValueError("compactness must be positive")


@dataclass
class SegmentMap:
    """Dense segment labeling: valid pixels carry ids in [0, segment_count),
    nodata pixels carry -1. Each segment is 4-connected."""

    labels: np.ndarray
    segment_count: int
    transform: GridTransform

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int32)
        if self.labels.ndim != 2:
            raise ValueError("labels must be a 2-D array")
        if self.labels.min(initial=0) < -1:
            raise ValueError("labels below -1 are not allowed")
        if self.segment_count > 0 and self.labels.max(initial=-1) >= self.segment_count:
            raise ValueError("label exceeds segment_count")


@dataclass
class SegmentStats:
    """Per-segment spectral means and pixel geometry (areas in m^2)."""

    band_names: tuple
    means: np.ndarray        # (segment_count, band_count)
    pixel_count: np.ndarray  # (segment_count,)
    area_m2: np.ndarray
    perimeter_m: np.ndarray
    centroid: np.ndarray     # (segment_count, 2) as (row, col)

    @property
    def segment_count(self) -> int:
        return len(self.pixel_count)


def _zscore_bands(bands: np.ndarray, valid: np.ndarray) -> np.ndarray:
    z = np.zeros_like(bands)
    for b in range(bands.shape[2]):
        vals = bands[:, :, b][valid]
        mean = vals.mean()
        std = vals.std()
        if std < 1e-12:
            std = 1.0
        z[:, :, b] = (bands[:, :, b] - mean) / std
    return z


def _place_seeds(valid: np.ndarray, spacing: int) -> list[tuple[int, int]]:
    """One seed per spacing x spacing grid cell, nominally at the cell center,
    relocated to the nearest valid pixel of the cell (row-major tie-break),
    dropped when the cell holds no valid pixel."""
    h, w = valid.shape
    seeds = []
    half = spacing // 2
    for cell_r in range((h + spacing - 1) // spacing):
        r_lo = cell_r * spacing
        r_hi = min(r_lo + spacing, h)
        r_nom = min(r_lo + half, h - 1)
        for cell_c in range((w + spacing - 1) // spacing):
            c_lo = cell_c * spacing
            c_hi = min(c_lo + spacing, w)
            c_nom = min(c_lo + half, w - 1)
            if valid[r_nom, c_nom]:
                seeds.append((r_nom, c_nom))
                continue
            best = None
            best_d = None
            for r in range(r_lo, r_hi):
                for c in range(c_lo, c_hi):
                    if not valid[r, c]:
                        continue
                    d = (r - r_nom) ** 2 + (c - c_nom) ** 2
                    if best_d is None or d < best_d:
                        best_d = d
                        best = (r, c)
            if best is not None:
                seeds.append(best)
    return seeds


def snic_segment(image: FeatureImage, params: SnicParams) -> SegmentMap:
    """Segment the feature image into superpixels; see module docstring for
    the distance model and determinism contract."""
    raster = image.raster
    valid = raster.valid_mask()
    if not valid.any():
        raise ValueError("no valid pixels to segment")
    seeds = _place_seeds(valid, params.seed_spacing)
    if not seeds:
        raise ValueError("no seeds placeable")

    h, w, nb = raster.bands.shape
    z = _zscore_bands(np.where(valid[:, :, np.newaxis], raster.bands, 0.0), valid)
    zflat = z.reshape(-1, nb).tolist()
    valid_flat = valid.ravel().tolist()
    labels = [-1] * (h * w)

    inv_s2 = 1.0 / float(params.seed_spacing) ** 2
    inv_m2 = 1.0 / float(params.compactness) ** 2
    band_range = range(nb)

    n_seeds = len(seeds)
    cnt = [0] * n_seeds
    sum_r = [0.0] * n_seeds
    sum_c = [0.0] * n_seeds
    sum_z = [[0.0] * nb for _ in range(n_seeds)]

    heap = []
    seq = 0
    for k, (r, c) in enumerate(seeds):
        heap.append((0.0, seq, r, c, k))
        seq += 1
    heapq.heapify(heap)  # already ordered, but keep the invariant explicit

    push = heapq.heappush
    pop = heapq.heappop
    while heap:
        _, _, r, c, k = pop(heap)
        i = r * w + c
        if labels[i] != -1:
            continue
        labels[i] = k
        n = cnt[k] + 1
        cnt[k] = n
        sr = sum_r[k] + r
        sc = sum_c[k] + c
        sum_r[k] = sr
        sum_c[k] = sc
        sz = sum_z[k]
        zi = zflat[i]
        for b in band_range:
            sz[b] += zi[b]
        inv_n = 1.0 / n
        cen_r = sr * inv_n
        cen_c = sc * inv_n
        mean_z = [v * inv_n for v in sz]
        for dr, dc in _NEIGHBORS:
            rr = r + dr
            cc = c + dc
            if rr < 0 or rr >= h or cc < 0 or cc >= w:
                continue
            j = rr * w + cc
            if labels[j] != -1 or not valid_flat[j]:
                continue
            dy = rr - cen_r
            dx = cc - cen_c
            d_color = 0.0
            zj = zflat[j]
            for b in band_range:
                t = zj[b] - mean_z[b]
                d_color += t * t
            d2 = (dy * dy + dx * dx) * inv_s2 + d_color * inv_m2
            push(heap, (d2, seq, rr, cc, k))
            seq += 1

    # valid pixels enclosed by nodata can stay unreached by every seed; give
    # each such 4-connected component its own fresh segment id
    next_id = n_seeds
    for start in range(h * w):
        if labels[start] != -1 or not valid_flat[start]:
            continue
        queue = deque([start])
        labels[start] = next_id
        while queue:
            i = queue.popleft()
            r, c = divmod(i, w)
            for dr, dc in _NEIGHBORS:
                rr = r + dr
                cc = c + dc
                if rr < 0 or rr >= h or cc < 0 or cc >= w:
                    continue
                j = rr * w + cc
                if labels[j] == -1 and valid_flat[j]:
                    labels[j] = next_id
                    queue.append(j)
        next_id += 1

    label_arr = np.asarray(labels, dtype=np.int32).reshape(h, w)
    return SegmentMap(label_arr, next_id, raster.transform)


def compute_segment_stats(image: FeatureImage, segmap: SegmentMap) -> SegmentStats:
    """Per-segment band means plus pixel-geometry area, perimeter and
    centroid. Perimeter counts every exposed 4-neighbor edge (other segment,
    nodata, or image border) at its pixel-edge length."""
    raster = image.raster
    if segmap.labels.shape != (raster.height, raster.width):
        raise ValueError("segment map shape does not match the image")
    if segmap.transform != raster.transform:
        raise ValueError("segment map grid does not match the image")
    labels = segmap.labels
    n = segmap.segment_count
    member = labels >= 0

    counts = np.bincount(labels[member], minlength=n)
    if n > 0 and counts.min(initial=1) == 0:
        raise ValueError("segment ids are not dense")

    nb = raster.band_count
    means = np.zeros((n, nb))
    flat_labels = labels[member]
    for b in range(nb):
        sums = np.bincount(flat_labels, weights=raster.bands[:, :, b][member],
                           minlength=n)
        means[:, b] = sums / np.maximum(counts, 1)

    rows, cols = np.nonzero(member)
    centroid = np.stack([
        np.bincount(flat_labels, weights=rows, minlength=n) / np.maximum(counts, 1),
        np.bincount(flat_labels, weights=cols, minlength=n) / np.maximum(counts, 1),
    ], axis=1)

    psx = raster.transform.pixel_size_x
    psy = raster.transform.pixel_size_y
    perim = np.zeros(n)

    def _expose(edge_labels: np.ndarray, length: float):
        sel = edge_labels[edge_labels >= 0]
        if sel.size:
            perim[:] += np.bincount(sel, minlength=n) * length

    # image border edges
    _expose(labels[0, :], psx)
    _expose(labels[-1, :], psx)
    _expose(labels[:, 0], psy)
    _expose(labels[:, -1], psy)
    # interior edges between horizontally adjacent pixels (vertical edges)
    a, b_ = labels[:, :-1], labels[:, 1:]
    diff = a != b_
    _expose(np.where(diff, a, -1), psy)
    _expose(np.where(diff, b_, -1), psy)
    # interior edges between vertically adjacent pixels (horizontal edges)
    a, b_ = labels[:-1, :], labels[1:, :]
    diff = a != b_
    _expose(np.where(diff, a, -1), psx)
    _expose(np.where(diff, b_, -1), psx)

    return SegmentStats(
        band_names=tuple(raster.band_names),
        means=means,
        pixel_count=counts.astype(np.int64),
        area_m2=counts * psx * psy,
        perimeter_m=perim,
        centroid=centroid,
    )


def rasterize_segment_means(stats: SegmentStats, segmap: SegmentMap,
                            nodata: float = -9999.0) -> Raster:
    """Spread each segment's mean vector back over its pixels."""
    labels = segmap.labels
    if labels.max(initial=-1) >= stats.segment_count:
        raise ValueError("segment map references unknown segment ids")
    member = labels >= 0
    safe = np.where(member, labels, 0)
    out = stats.means[safe]  # (h, w, nb)
    out[~member] = nodata
    return Raster(out, nodata, segmap.transform, list(stats.band_names))


def write_segment_map(segmap: SegmentMap, path) -> None:
    write_int_geotiff(segmap.labels, segmap.transform, path,
                      band_name="segment_id", nodata=-1)


def read_segment_map(path) -> SegmentMap:
    raster = read_geotiff(path)
    if raster.band_count != 1:
        raise ValueError("segment map file must be single-band")
    labels = np.rint(raster.bands[:, :, 0]).astype(np.int32)
    count = int(labels.max(initial=-1)) + 1
    return SegmentMap(labels, count, raster.transform)


def write_segment_stats_csv(stats: SegmentStats, path) -> None:
    """CSV with one row per segment; floats are written with full precision."""
    header = (["segment_id"] + list(stats.band_names)
              + ["pixel_count", "area_m2", "perimeter_m"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(stats.segment_count):
            row = [k] + [repr(float(v)) for v in stats.means[k]]
            row += [int(stats.pixel_count[k]),
                    repr(float(stats.area_m2[k])),
                    repr(float(stats.perimeter_m[k]))]
            writer.writerow(row)
