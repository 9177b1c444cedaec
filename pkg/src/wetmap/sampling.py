"""Ground-truth point ingestion, seeded stratified splitting, and per-segment
sample tables for training/validation."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .snic import SegmentMap, SegmentStats

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroundTruthPoint:
    x: float
    y: float
    class_id: int
    class_name: str


class ClassScheme:
    """Ordered (class_id, class_name) pairs; ids contiguous from 0."""

    def __init__(self, names):
        names = [str(n) for n in names]
        if not names:
            raise ValueError("class scheme cannot be empty")
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique")
        self.names = names
        self._ids = {n: i for i, n in enumerate(names)}

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        return iter(enumerate(self.names))

    def id_of(self, name: str) -> int:
        if name not in self._ids:
            raise KeyError(f"unknown class_name {name!r}")
        return self._ids[name]

    def name_of(self, class_id: int) -> str:
        return self.names[class_id]


@dataclass(frozen=True)
class SampleRow:
    features: tuple
    class_id: int
    segment_id: int
    provenance: int  # index of the source point
    role: str        # "train" | "validation"


class SampleTable:
    """Labeled per-segment feature vectors with train/validation role tags."""

    def __init__(self, band_names, rows=()):
        self.band_names = tuple(band_names)
        self.rows = list(rows)

    def extend(self, rows):
        self.rows.extend(rows)

    def rows_for(self, role: str) -> list[SampleRow]:
        return [r for r in self.rows if r.role == role]

    def feature_matrix(self, role: str | None = None) -> np.ndarray:
        rows = self.rows if role is None else self.rows_for(role)
        return np.array([r.features for r in rows], dtype=np.float64)

    def labels(self, role: str | None = None) -> np.ndarray:
        rows = self.rows if role is None else self.rows_for(role)
        return np.array([r.class_id for r in rows], dtype=np.int64)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["role", "class_id", "segment_id"]
                            + list(self.band_names))
            for r in self.rows:
                writer.writerow([r.role, r.class_id, r.segment_id]
                                + [repr(float(v)) for v in r.features])

    @classmethod
    def from_csv(cls, path, band_names) -> "SampleTable":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            expected = ["role", "class_id", "segment_id"] + list(band_names)
            if header != expected:
                raise ValueError(f"unexpected sample table header {header}")
            rows = []
            for i, rec in enumerate(reader):
                rows.append(SampleRow(
                    features=tuple(float(v) for v in rec[3:]),
                    class_id=int(rec[1]),
                    segment_id=int(rec[2]),
                    provenance=i,
                    role=rec[0],
                ))
        return cls(band_names, rows)


def load_points(path, scheme: ClassScheme) -> list[GroundTruthPoint]:
    """Read ground-truth points from CSV (`x,y,class_name`) or GeoJSON Point
    features carrying a `class_name` property. Unknown class names raise with
    the offending row identified."""
    with open(path) as fh:
        text = fh.read()
    if not text.strip():
        raise ValueError(f"{path}: empty ground-truth file")
    if text.lstrip().startswith("{"):
        return _points_from_geojson(text, scheme, path)
    return _points_from_csv(text, scheme, path)


def _resolve(scheme, name, where):
    try:
        return scheme.id_of(name)
    except KeyError:
        raise ValueError(f"{where}: unknown class_name {name!r}") from None


def _points_from_csv(text, scheme, path) -> list[GroundTruthPoint]:
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["x", "y", "class_name"]:
        raise ValueError(f"{path}: expected CSV header 'x,y,class_name'")
    points = []
    for i, rec in enumerate(reader):
        if not rec:
            continue
        if len(rec) != 3:
            raise ValueError(f"{path} row {i + 1}: expected 3 fields")
        name = rec[2].strip()
        cid = _resolve(scheme, name, f"{path} row {i + 1}")
        points.append(GroundTruthPoint(float(rec[0]), float(rec[1]), cid, name))
    if not points:
        raise ValueError(f"{path}: no points found")
    return points


def _points_from_geojson(text, scheme, path) -> list[GroundTruthPoint]:
    doc = json.loads(text)
    if doc.get("type") != "FeatureCollection":
        raise ValueError(f"{path}: expected a GeoJSON FeatureCollection")
    points = []
    for i, feat in enumerate(doc.get("features", [])):
        geom = feat.get("geometry") or {}
        if geom.get("type") != "Point":
            raise ValueError(f"{path} feature {i}: geometry must be Point")
        x, y = geom["coordinates"][:2]
        name = (feat.get("properties") or {}).get("class_name")
        if name is None:
            raise ValueError(f"{path} feature {i}: missing class_name property")
        cid = _resolve(scheme, str(name), f"{path} feature {i}")
        points.append(GroundTruthPoint(float(x), float(y), cid, str(name)))
    if not points:
        raise ValueError(f"{path}: no points found")
    return points


def _round_half_away(value: Fraction) -> int:
    whole, rem = divmod(value.numerator, value.denominator)
    if 2 * rem >= value.denominator:
        whole += 1
    return whole


def stratified_split(points, train_fraction: float, seed: int):
    """Per class, send round(train_fraction * n_c) points to train (half away
    from zero, at least one point on each side), chosen by a seeded shuffle.

    Returns (train, validation) lists; together they partition the input.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    frac = Fraction(str(train_fraction))
    by_class: dict[int, list[int]] = {}
    for i, p in enumerate(points):
        by_class.setdefault(p.class_id, []).append(i)
    for cid, idx in sorted(by_class.items()):
        if len(idx) < 2:
            raise ValueError(
                f"class {cid} has {len(idx)} point(s); need >= 2 to split")

    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    val_idx: list[int] = []
    for cid in sorted(by_class):
        idx = np.array(by_class[cid])
        n_c = len(idx)
        n_train = _round_half_away(frac * n_c)
        n_train = min(max(n_train, 1), n_c - 1)
        perm = rng.permutation(n_c)
        train_idx.extend(idx[perm[:n_train]].tolist())
        val_idx.extend(idx[perm[n_train:]].tolist())

    train = [points[i] for i in sorted(train_idx)]
    validation = [points[i] for i in sorted(val_idx)]
    return train, validation


def build_sample_table(points, segmap: SegmentMap, stats: SegmentStats,
                       role: str = "train") -> SampleTable:
    """Map each point to the segment containing its pixel and attach that
    segment's mean vector as the row features.

    When points of different classes share a segment, the segment keeps the
    majority class (ties to the lowest class_id) and the minority rows are
    dropped (count logged).
    """
    t = segmap.transform
    h, w = segmap.labels.shape
    located = []  # (point index, segment id)
    for i, p in enumerate(points):
        row, col = t.index_of(p.x, p.y)
        if not (0 <= row < h and 0 <= col < w):
            raise ValueError(
                f"point {i} at ({p.x}, {p.y}) falls outside the raster extent")
        seg = int(segmap.labels[row, col])
        if seg < 0:
            raise ValueError(
                f"point {i} at ({p.x}, {p.y}) falls on a nodata pixel")
        located.append((i, seg))

    by_segment: dict[int, list[int]] = {}
    for i, seg in located:
        by_segment.setdefault(seg, []).append(i)

    keep: dict[int, int] = {}  # point index -> segment id
    dropped = 0
    for seg, idxs in by_segment.items():
        classes = [points[i].class_id for i in idxs]
        counts: dict[int, int] = {}
        for c in classes:
            counts[c] = counts.get(c, 0) + 1
        best = min(counts, key=lambda c: (-counts[c], c))
        for i in idxs:
            if points[i].class_id == best:
                keep[i] = seg
            else:
                dropped += 1
    if dropped:
        logger.info("dropped %d point(s) with minority class labels inside "
                    "shared segments", dropped)

    rows = []
    for i in sorted(keep):
        seg = keep[i]
        rows.append(SampleRow(
            features=tuple(float(v) for v in stats.means[seg]),
            class_id=points[i].class_id,
            segment_id=seg,
            provenance=i,
            role=role,
        ))
    return SampleTable(stats.band_names, rows)
