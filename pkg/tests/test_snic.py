import csv

import numpy as np
import pytest

from conftest import constant_feature_image, make_feature_image, make_transform
from wetmap.snic import (SegmentMap, SnicParams, compute_segment_stats,
                         rasterize_segment_means, read_segment_map,
                         snic_segment, write_segment_map,
                         write_segment_stats_csv)

NODATA = -9999.0


def segments_are_connected(labels):
    """Union-find oracle: every segment must form one 4-connected component."""
    h, w = labels.shape
    parent = list(range(h * w))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for r in range(h):
        for c in range(w):
            i = r * w + c
            if labels[r, c] < 0:
                continue
            if c + 1 < w and labels[r, c + 1] == labels[r, c]:
                union(i, i + 1)
            if r + 1 < h and labels[r + 1, c] == labels[r, c]:
                union(i, i + w)
    roots = {}
    for r in range(h):
        for c in range(w):
            k = labels[r, c]
            if k < 0:
                continue
            roots.setdefault(k, set()).add(find(r * w + c))
    return all(len(s) == 1 for s in roots.values())


def check_partition(segmap, valid_mask):
    labels = segmap.labels
    assert ((labels >= 0) == valid_mask).all()
    if segmap.segment_count:
        present = np.unique(labels[labels >= 0])
        assert present.min() == 0
        assert present.max() == segmap.segment_count - 1
        assert len(present) == segmap.segment_count  # dense ids
    assert segments_are_connected(labels)


def boundary_crossings(labels, class_map):
    """Count 4-neighbor pairs sharing a segment but not a class."""
    same_seg_h = labels[:, :-1] == labels[:, 1:]
    diff_cls_h = class_map[:, :-1] != class_map[:, 1:]
    same_seg_v = labels[:-1, :] == labels[1:, :]
    diff_cls_v = class_map[:-1, :] != class_map[1:, :]
    return int((same_seg_h & diff_cls_h).sum() + (same_seg_v & diff_cls_v).sum())


def test_constant_image_grid_partition():
    fi = constant_feature_image(20, 20)
    segmap = snic_segment(fi, SnicParams(seed_spacing=5, compactness=1.0))
    assert segmap.segment_count == 16
    check_partition(segmap, np.ones((20, 20), bool))
    sizes = np.bincount(segmap.labels.ravel())
    assert sizes.sum() == 400
    assert sizes.min() >= 20 and sizes.max() <= 30  # ~25 pixels each


def test_two_tone_halves_never_cross():
    vals = np.full((20, 20, 7), 0.2)
    vals[10:, :, :] = 0.8  # enormous gap relative to zero within-class spread
    fi = make_feature_image(vals)
    segmap = snic_segment(fi, SnicParams(5, 1.0))
    class_map = np.zeros((20, 20), int)
    class_map[10:, :] = 1
    assert boundary_crossings(segmap.labels, class_map) == 0
    check_partition(segmap, np.ones((20, 20), bool))


def test_all_nodata_errors():
    fi = constant_feature_image(8, 8, value=NODATA)
    with pytest.raises(ValueError, match="no valid pixels"):
        snic_segment(fi, SnicParams(4, 1.0))


def test_determinism():
    rng = np.random.default_rng(99)
    vals = rng.uniform(0.1, 0.9, (30, 31, 7)) * 0.5
    fi = make_feature_image(vals)
    a = snic_segment(fi, SnicParams(5, 1.0))
    b = snic_segment(fi, SnicParams(5, 1.0))
    assert np.array_equal(a.labels, b.labels)
    assert a.segment_count == b.segment_count


def test_compactness_leaves_constant_partition_unchanged():
    fi = constant_feature_image(20, 20)
    base = snic_segment(fi, SnicParams(5, 1.0)).labels
    for m in (0.25, 4.0):
        assert np.array_equal(snic_segment(fi, SnicParams(5, m)).labels, base)


def test_small_compactness_respects_color_boundaries_more():
    rng = np.random.default_rng(5)
    vals = rng.normal(0.3, 0.02, (24, 24, 7))
    vals[:, 12:, :] += 0.2
    vals = np.clip(vals, 0.0, 0.9)
    fi = make_feature_image(vals)
    class_map = np.zeros((24, 24), int)
    class_map[:, 12:] = 1
    crossings_tight = boundary_crossings(
        snic_segment(fi, SnicParams(6, 0.05)).labels, class_map)
    crossings_loose = boundary_crossings(
        snic_segment(fi, SnicParams(6, 1.0)).labels, class_map)
    assert crossings_tight <= crossings_loose


def test_partition_with_nodata_holes():
    rng = np.random.default_rng(17)
    vals = rng.uniform(0.1, 0.7, (40, 33, 7))
    holes = rng.random((40, 33)) < 0.25
    vals[holes] = NODATA
    fi = make_feature_image(vals)
    segmap = snic_segment(fi, SnicParams(5, 1.0))
    check_partition(segmap, ~holes)


def test_mean_preservation():
    rng = np.random.default_rng(23)
    vals = rng.uniform(0.05, 0.95, (32, 32, 7)) * 0.8
    fi = make_feature_image(vals)
    segmap = snic_segment(fi, SnicParams(5, 1.0))
    stats = compute_segment_stats(fi, segmap)
    weighted = (stats.means * stats.pixel_count[:, None]).sum(axis=0)
    weighted /= stats.pixel_count.sum()
    image_mean = vals.reshape(-1, 7).mean(axis=0)
    assert np.abs(weighted - image_mean).max() < 1e-9


# --- statistics -------------------------------------------------------------

def _manual_segmap(labels, px=10.0):
    labels = np.asarray(labels, dtype=np.int32)
    count = int(labels.max()) + 1
    t = make_transform(px=px, origin_y=labels.shape[0] * px)
    return SegmentMap(labels, count, t)


def test_stats_constant_segment_mean():
    vals = np.full((2, 5, 7), 0.3)
    fi = make_feature_image(vals)
    segmap = _manual_segmap(np.zeros((2, 5), dtype=int))
    stats = compute_segment_stats(fi, segmap)
    assert stats.pixel_count[0] == 10
    assert np.allclose(stats.means[0], 0.3)


def test_stats_single_pixel_geometry():
    fi = constant_feature_image(1, 1, px=10.0)
    stats = compute_segment_stats(fi, _manual_segmap([[0]]))
    assert stats.area_m2[0] == 100.0
    assert stats.perimeter_m[0] == 40.0


def test_stats_square_segment_geometry():
    # 2x2 segment inside a 4x4 frame of another segment
    labels = np.ones((4, 4), dtype=int)
    labels[1:3, 1:3] = 0
    fi = constant_feature_image(4, 4, px=10.0)
    stats = compute_segment_stats(fi, _manual_segmap(labels))
    assert stats.area_m2[0] == 400.0
    assert stats.perimeter_m[0] == 80.0  # 8 exposed edges x 10 m
    # frame: 16 border edges + 8 edges against the inner square
    assert stats.perimeter_m[1] == 240.0
    assert stats.pixel_count.sum() == 16


def test_stats_centroid():
    labels = np.zeros((3, 3), dtype=int)
    fi = constant_feature_image(3, 3)
    stats = compute_segment_stats(fi, _manual_segmap(labels))
    assert tuple(stats.centroid[0]) == (1.0, 1.0)


def test_stats_grid_mismatch_errors():
    fi = constant_feature_image(4, 4)
    with pytest.raises(ValueError, match="match"):
        compute_segment_stats(fi, _manual_segmap(np.zeros((3, 3), int)))


def test_perimeter_floor():
    rng = np.random.default_rng(2)
    vals = rng.uniform(0.1, 0.9, (16, 16, 7)) * 0.7
    fi = make_feature_image(vals)
    segmap = snic_segment(fi, SnicParams(4, 1.0))
    stats = compute_segment_stats(fi, segmap)
    assert (stats.perimeter_m >= 4 * 10.0 - 1e-9).all()
    assert (stats.area_m2 > 0).all()


# --- rasterize / export -----------------------------------------------------

def test_rasterize_single_segment_constant():
    fi = constant_feature_image(3, 4, value=0.42)
    segmap = _manual_segmap(np.zeros((3, 4), int))
    stats = compute_segment_stats(fi, segmap)
    out = rasterize_segment_means(stats, segmap)
    assert np.allclose(out.bands, 0.42)
    assert out.band_names == fi.raster.band_names


def test_rasterize_two_segments_two_vectors():
    vals = np.full((2, 4, 7), 0.2)
    vals[:, 2:, :] = 0.6
    fi = make_feature_image(vals)
    labels = np.zeros((2, 4), int)
    labels[:, 2:] = 1
    segmap = _manual_segmap(labels)
    stats = compute_segment_stats(fi, segmap)
    out = rasterize_segment_means(stats, segmap)
    distinct = np.unique(out.bands.reshape(-1, 7), axis=0)
    assert len(distinct) == 2


def test_rasterize_keeps_nodata():
    labels = np.zeros((2, 2), int)
    labels[0, 0] = -1
    segmap = SegmentMap(labels, 1, make_transform(origin_y=20.0))
    vals = np.full((2, 2, 7), 0.3)
    vals[0, 0, :] = NODATA
    fi = make_feature_image(vals)
    stats = compute_segment_stats(fi, segmap)
    out = rasterize_segment_means(stats, segmap)
    assert (out.bands[0, 0] == out.nodata).all()
    assert np.allclose(out.bands[1, 1], 0.3)


def test_rasterize_unknown_ids_error():
    segmap = _manual_segmap(np.array([[0, 1], [1, 2]]))
    fi = constant_feature_image(2, 2)
    small = compute_segment_stats(fi, _manual_segmap(np.zeros((2, 2), int)))
    with pytest.raises(ValueError, match="unknown segment"):
        rasterize_segment_means(small, segmap)


def test_segment_map_file_roundtrip(tmp_path):
    fi = constant_feature_image(12, 10)
    segmap = snic_segment(fi, SnicParams(4, 1.0))
    path = tmp_path / "segments.tif"
    write_segment_map(segmap, path)
    back = read_segment_map(path)
    assert np.array_equal(back.labels, segmap.labels)
    assert back.segment_count == segmap.segment_count


def test_stats_csv_layout(tmp_path):
    fi = constant_feature_image(6, 6, value=0.25)
    segmap = snic_segment(fi, SnicParams(3, 1.0))
    stats = compute_segment_stats(fi, segmap)
    path = tmp_path / "stats.csv"
    write_segment_stats_csv(stats, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["segment_id", "B2", "B3", "B4", "B8", "NDVI", "NDWI",
                       "MSAVI2", "pixel_count", "area_m2", "perimeter_m"]
    assert len(rows) == stats.segment_count + 1
    assert float(rows[1][1]) == 0.25
