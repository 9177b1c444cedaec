"""Accuracy assessment (confusion matrix, overall/producer's/user's accuracy),
per-class areas in hectares, and Gaussian class separability via the
Bhattacharyya distance B and its bounded transform JM = 2(1 - exp(-B)).

Undefined producer's/user's accuracies (empty reference row / predicted
column) are reported as None, never silently as zero; report writers can
optionally render them as 0.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .raster import Raster
from .sampling import ClassScheme, SampleTable

BHATTACHARYYA_FORMS = ("standard", "unhalved_sum")


@dataclass
class ConfusionMatrix:
    """counts[r][p]: reference class r, predicted class p."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise ValueError("counts must be a square matrix")
        if (self.counts < 0).any():
            raise ValueError("counts must be nonnegative")

    @property
    def class_count(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(reference, predicted, class_count: int) -> ConfusionMatrix:
    reference = np.asarray(reference, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if reference.shape != predicted.shape or reference.ndim != 1:
        raise ValueError("reference and predicted must be 1-D and equal length")
    if len(reference) == 0:
        raise ValueError("cannot build a confusion matrix from empty inputs")
    for name, arr in (("reference", reference), ("predicted", predicted)):
        if arr.min() < 0 or arr.max() >= class_count:
            raise ValueError(f"{name} labels outside [0, {class_count})")
    counts = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(counts, (reference, predicted), 1)
    return ConfusionMatrix(counts)


def overall_accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    return float(np.trace(cm.counts)) / cm.total


def producers_accuracy(cm: ConfusionMatrix, c: int) -> float | None:
    """Reference-row recall for class c; None when the row is empty."""
    row = cm.counts[c].sum()
    if row == 0:
        return None
    return float(cm.counts[c, c]) / float(row)


def users_accuracy(cm: ConfusionMatrix, c: int) -> float | None:
    """Predicted-column precision for class c; None when the column is empty."""
    col = cm.counts[:, c].sum()
    if col == 0:
        return None
    return float(cm.counts[c, c]) / float(col)


def class_areas(class_raster: Raster, class_ids=None) -> dict[int, float]:
    """Hectares per class: pixel count x pixel area / 10^4. Nodata pixels are
    skipped; ids listed in class_ids are reported even when absent (0 ha)."""
    if class_raster.band_count != 1:
        raise ValueError("class raster must be single-band")
    t = class_raster.transform
    values = class_raster.bands[:, :, 0]
    valid = class_raster.valid_mask(0)
    ids = np.rint(values[valid]).astype(np.int64)
    if ids.size and ids.min() < 0:
        raise ValueError("negative class ids in class raster")
    pixel_ha = t.pixel_size_x * t.pixel_size_y / 10_000.0
    counts = np.bincount(ids) if ids.size else np.zeros(0, dtype=np.int64)
    areas = {int(c): float(counts[c]) * pixel_ha
             for c in range(len(counts)) if counts[c] > 0}
    if class_ids is not None:
        for c in class_ids:
            areas.setdefault(int(c), 0.0)
    return areas


@dataclass
class ClassDistribution:
    mean: np.ndarray
    covariance: np.ndarray
    sample_count: int

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        self.covariance = np.asarray(self.covariance, dtype=np.float64)
        d = len(self.mean)
        if self.covariance.shape != (d, d):
            raise ValueError("covariance shape does not match the mean")
        if not np.allclose(self.covariance, self.covariance.T, atol=0, rtol=0):
            raise ValueError("covariance must be symmetric")


def estimate_distribution(features) -> ClassDistribution:
    """Population-covariance Gaussian fit of (n, d) feature rows."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or len(X) < 2:
        raise ValueError("need at least two sample rows")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / len(X)
    cov = (cov + cov.T) / 2.0
    return ClassDistribution(mean, cov, len(X))


def _regularize(cov: np.ndarray) -> np.ndarray:
    d = cov.shape[0]
    lam = max(1e-6 * float(np.trace(cov)) / d, 1e-12)
    return cov + lam * np.eye(d)


def bhattacharyya(di: ClassDistribution, dj: ClassDistribution,
                  form: str = "standard") -> float:
    """Bhattacharyya distance between two Gaussians.

    The standard form uses the halved pooled covariance (Sigma_i+Sigma_j)/2
    in both the quadratic and the log-determinant term, so identical
    distributions give exactly 0. The "unhalved_sum" variant keeps
    det(Sigma_i+Sigma_j) inside the log (a variant seen in some separability
    write-ups); it offsets B by (d/2)ln2 at identical covariances and is kept
    for auditing only.
    """
    if form not in BHATTACHARYYA_FORMS:
        raise ValueError(f"unknown bhattacharyya form {form!r}")
    if di.mean.shape != dj.mean.shape:
        raise ValueError("distribution dimensions differ")
    si = _regularize(di.covariance)
    sj = _regularize(dj.covariance)
    pooled = (si + sj) / 2.0
    diff = di.mean - dj.mean
    try:
        solved = np.linalg.solve(pooled, diff)
    except np.linalg.LinAlgError:
        raise ValueError("pooled covariance is singular after regularization")
    quad = 0.125 * float(diff @ solved)

    sign_i, logdet_i = np.linalg.slogdet(si)
    sign_j, logdet_j = np.linalg.slogdet(sj)
    target = (si + sj) if form == "unhalved_sum" else pooled
    sign_t, logdet_t = np.linalg.slogdet(target)
    if sign_i <= 0 or sign_j <= 0 or sign_t <= 0:
        raise ValueError("covariance not positive definite after regularization")
    return float(quad + 0.5 * (logdet_t - 0.5 * (logdet_i + logdet_j)))


def jm_distance(b: float) -> float:
    """JM = 2(1 - exp(-B)); in [0, 2), saturating at 2 as B grows."""
    if b < 0:
        raise ValueError("Bhattacharyya distance must be nonnegative")
    return float(2.0 * (1.0 - np.exp(-b)))


@dataclass(frozen=True)
class SeparabilityEntry:
    class_a: int
    class_b: int
    subset: str
    b: float
    jm: float


class SeparabilityReport:
    def __init__(self, entries, scheme: ClassScheme):
        self.entries = list(entries)
        self.scheme = scheme

    def lookup(self, class_a: int, class_b: int, subset: str) -> SeparabilityEntry:
        a, b = sorted((class_a, class_b))
        for e in self.entries:
            if (e.class_a, e.class_b, e.subset) == (a, b, subset):
                return e
        raise KeyError((class_a, class_b, subset))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["pair", "subset", "B", "JM"])
            for e in self.entries:
                pair = (f"{self.scheme.name_of(e.class_a)} & "
                        f"{self.scheme.name_of(e.class_b)}")
                writer.writerow([pair, e.subset, repr(e.b), repr(e.jm)])

    def to_doc(self) -> list[dict]:
        return [{"class_a": self.scheme.name_of(e.class_a),
                 "class_b": self.scheme.name_of(e.class_b),
                 "subset": e.subset, "B": e.b, "JM": e.jm}
                for e in self.entries]


def default_feature_subsets(band_names) -> list[tuple[str, list[int]]]:
    """The per-band singletons plus the full set labeled ALL."""
    subsets = [(name, [i]) for i, name in enumerate(band_names)]
    subsets.append(("ALL", list(range(len(band_names)))))
    return subsets


def separability_report(samples: SampleTable, scheme: ClassScheme,
                        feature_subsets=None,
                        form: str = "standard") -> SeparabilityReport:
    """B and JM for every unordered class pair and every feature subset,
    estimated from the table's training rows."""
    rows = samples.rows_for("train") or samples.rows
    by_class: dict[int, list] = {}
    for r in rows:
        by_class.setdefault(r.class_id, []).append(r.features)
    present = sorted(by_class)
    for cid in present:
        if len(by_class[cid]) < 2:
            raise ValueError(f"class {cid} has fewer than 2 sample rows")
    feats = {cid: np.array(by_class[cid]) for cid in present}
    if feature_subsets is None:
        feature_subsets = default_feature_subsets(samples.band_names)

    entries = []
    for i, a in enumerate(present):
        for b in present[i + 1:]:
            for subset_name, cols in feature_subsets:
                da = estimate_distribution(feats[a][:, cols])
                db = estimate_distribution(feats[b][:, cols])
                bd = bhattacharyya(da, db, form=form)
                entries.append(SeparabilityEntry(a, b, subset_name, bd,
                                                 jm_distance(bd)))
    return SeparabilityReport(entries, scheme)


def write_assessment_csv(cm: ConfusionMatrix, scheme: ClassScheme, path,
                         zeros_for_undefined: bool = False) -> None:
    """Per-class producer's/user's accuracy rows plus an overall-accuracy
    summary row."""

    def render(value):
        if value is None:
            return "0" if zeros_for_undefined else ""
        return repr(value)

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "producers", "users"])
        for cid, name in scheme:
            writer.writerow([name, render(producers_accuracy(cm, cid)),
                             render(users_accuracy(cm, cid))])
        writer.writerow(["overall", repr(overall_accuracy(cm)), ""])


def assessment_doc(cm: ConfusionMatrix, scheme: ClassScheme,
                   areas_ha: dict[int, float] | None = None,
                   separability: SeparabilityReport | None = None) -> dict:
    doc = {
        "overall_accuracy": overall_accuracy(cm),
        "confusion_matrix": cm.counts.tolist(),
        "classes": [
            {"class_id": cid, "name": name,
             "producers_accuracy": producers_accuracy(cm, cid),
             "users_accuracy": users_accuracy(cm, cid),
             **({"area_ha": areas_ha.get(cid, 0.0)} if areas_ha is not None else {})}
            for cid, name in scheme
        ],
    }
    if separability is not None:
        doc["separability"] = separability.to_doc()
    return doc


def write_assessment_json(doc: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
