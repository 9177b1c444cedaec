"""Training data container shared by all classifiers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Dataset:
    features: np.ndarray  # (n, F) float64
    labels: np.ndarray    # (n,) ints in [0, class_count)
    class_count: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or len(self.features) < 1:
            raise ValueError("features must be a non-empty (n, F) matrix")
        if len(self.labels) != len(self.features):
            raise ValueError("labels and features disagree on n")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")
        if self.class_count < 1 or self.labels.min() < 0 \
                or self.labels.max() >= self.class_count:
            raise ValueError("labels must lie in [0, class_count)")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def feature_count(self) -> int:
        return self.features.shape[1]


def check_vector(x, feature_count: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (feature_count,):
        raise ValueError(f"expected a feature vector of length {feature_count}")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature vector contains non-finite values")
    return x
