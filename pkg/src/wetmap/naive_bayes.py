"""Gaussian naive Bayes: empirical class priors, per-class per-feature
Gaussian likelihoods with a floored population variance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, check_vector

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class NBModel:
    priors: np.ndarray     # (K,)
    means: np.ndarray      # (K, F)
    variances: np.ndarray  # (K, F), >= var_floor
    var_floor: float
    feature_count: int
    class_count: int


def default_var_floor(features: np.ndarray) -> float:
    """1e-9 of the largest per-feature population variance, floored at 1e-12."""
    max_var = float(np.max(features.var(axis=0))) if len(features) > 1 else 0.0
    return max(1e-9 * max_var, 1e-12)


def train_nb(data: Dataset, var_floor: float | None = None) -> NBModel:
    if var_floor is None:
        var_floor = default_var_floor(data.features)
    K, F = data.class_count, data.feature_count
    priors = np.bincount(data.labels, minlength=K) / data.n
    means = np.zeros((K, F))
    variances = np.full((K, F), var_floor)
    for c in range(K):
        rows = data.features[data.labels == c]
        if len(rows) == 0:
            continue
        means[c] = rows.mean(axis=0)
        variances[c] = np.maximum(rows.var(axis=0), var_floor)
    return NBModel(priors=priors, means=means, variances=variances,
                   var_floor=float(var_floor), feature_count=F, class_count=K)


def predict_nb(model: NBModel, x) -> int:
    """argmax over classes of log prior + sum of per-feature Gaussian
    log-likelihoods; ties go to the lowest class_id."""
    x = check_vector(x, model.feature_count)
    with np.errstate(divide="ignore"):  # empty classes carry prior 0
        scores = np.log(model.priors)
    scores = scores - 0.5 * np.sum(
        _LOG_2PI + np.log(model.variances)
        + (x - model.means) ** 2 / model.variances, axis=1)
    return int(np.argmax(scores))
