"""Random forest of CART trees with bootstrap sampling and per-split feature
subsampling. With tree_count=1, mtry=F and bootstrap off, the forest's
prediction function coincides exactly with a plain CART."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cart import TreeNode, grow_tree, predict_tree
from .dataset import Dataset, check_vector
from .rng import mix_seed


@dataclass
class ForestModel:
    trees: list[TreeNode]
    tree_count: int
    mtry: int
    seed: int
    tree_seeds: list[int]
    bootstrap: bool
    feature_count: int
    class_count: int
    max_depth: int | None = None
    min_samples_split: int = 2


def train_rf(data: Dataset, tree_count: int = 100, mtry: int | None = None,
             seed: int = 0, bootstrap: bool = True,
             max_depth: int | None = None,
             min_samples_split: int = 2) -> ForestModel:
    """Train `tree_count` trees, each on a bootstrap resample drawn from a
    per-tree derived seed; each split considers a fresh random subset of
    `mtry` features (default floor(sqrt(F)))."""
    F = data.feature_count
    if mtry is None:
        mtry = max(1, int(np.sqrt(F)))
    if not 1 <= mtry <= F:
        raise ValueError(f"mtry must be in [1, {F}]")
    if tree_count < 1:
        raise ValueError("tree_count must be >= 1")

    all_features = range(F)
    trees = []
    tree_seeds = []
    for t in range(tree_count):
        ts = mix_seed(seed, t)
        tree_seeds.append(ts)
        rng = np.random.default_rng(ts)
        if bootstrap:
            idx = rng.integers(0, data.n, size=data.n)
            X, y = data.features[idx], data.labels[idx]
        else:
            X, y = data.features, data.labels
        if mtry == F:
            chooser = lambda: all_features  # no rng draw: matches plain CART
        else:
            chooser = lambda: np.sort(rng.choice(F, size=mtry, replace=False))
        trees.append(grow_tree(X, y, data.class_count, max_depth,
                               min_samples_split, chooser))
    return ForestModel(trees=trees, tree_count=tree_count, mtry=mtry,
                       seed=seed, tree_seeds=tree_seeds, bootstrap=bootstrap,
                       feature_count=F, class_count=data.class_count,
                       max_depth=max_depth, min_samples_split=min_samples_split)


def predict_forest(model: ForestModel, x) -> int:
    """Majority vote over trees; ties go to the lowest class_id."""
    x = check_vector(x, model.feature_count)
    votes = np.zeros(model.class_count, dtype=np.int64)
    for tree in model.trees:
        votes[predict_tree(tree, x)] += 1
    return int(np.argmax(votes))
