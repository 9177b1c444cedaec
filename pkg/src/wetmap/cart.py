"""Greedy Gini-impurity classification tree (CART).

Candidate thresholds are midpoints of consecutive distinct sorted feature
values. Equal-impurity ties break to the lowest feature index, then the
lowest threshold; leaf majorities tie to the lowest class_id. Routing is
`value <= threshold -> left`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, check_vector


@dataclass
class TreeNode:
    """Split node (feature_index, threshold, left, right) or leaf
    (class_id, class_histogram). The training root also records
    feature_count and class_count for downstream validation."""

    class_id: int | None = None
    class_histogram: list[int] | None = None
    feature_index: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    feature_count: int | None = None
    class_count: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature_index is None


def _leaf(labels: np.ndarray, class_count: int) -> TreeNode:
    hist = np.bincount(labels, minlength=class_count)
    return TreeNode(class_id=int(np.argmax(hist)),
                    class_histogram=hist.tolist())


def _best_split(X: np.ndarray, y: np.ndarray, class_count: int,
                feature_indices) -> tuple[int, float] | None:
    """Lowest weighted Gini impurity over the candidate features; None when
    no candidate feature admits a split (all values constant)."""
    n = len(y)
    best = None
    best_impurity = np.inf
    for f in feature_indices:
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        sy = y[order]
        cut = np.nonzero(sv[:-1] != sv[1:])[0]
        if len(cut) == 0:
            continue
        one_hot = np.zeros((n, class_count))
        one_hot[np.arange(n), sy] = 1.0
        cum = np.cumsum(one_hot, axis=0)
        left_counts = cum[cut]
        total = cum[-1]
        right_counts = total - left_counts
        n_left = (cut + 1).astype(np.float64)
        n_right = n - n_left
        gini_left = 1.0 - np.sum((left_counts / n_left[:, None]) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right_counts / n_right[:, None]) ** 2, axis=1)
        impurity = (n_left * gini_left + n_right * gini_right) / n
        pos = int(np.argmin(impurity))  # first minimum -> lowest threshold
        if impurity[pos] < best_impurity:
            best_impurity = impurity[pos]
            threshold = (sv[cut[pos]] + sv[cut[pos] + 1]) / 2.0
            best = (int(f), float(threshold))
    return best


def grow_tree(X, y, class_count, max_depth, min_samples_split,
              feature_chooser) -> TreeNode:
    """Shared recursion for CART and random-forest member trees;
    feature_chooser picks the candidate feature indices for each split."""

    def build(Xs, ys, depth):
        if (len(np.unique(ys)) == 1
                or (max_depth is not None and depth >= max_depth)
                or len(ys) < min_samples_split):
            return _leaf(ys, class_count)
        split = _best_split(Xs, ys, class_count, feature_chooser())
        if split is None:
            return _leaf(ys, class_count)
        f, threshold = split
        go_left = Xs[:, f] <= threshold
        node = TreeNode(feature_index=f, threshold=threshold)
        node.left = build(Xs[go_left], ys[go_left], depth + 1)
        node.right = build(Xs[~go_left], ys[~go_left], depth + 1)
        return node

    root = build(X, y, 0)
    root.feature_count = X.shape[1]
    root.class_count = class_count
    return root


def train_cart(data: Dataset, max_depth: int | None = None,
               min_samples_split: int = 2) -> TreeNode:
    """Grow an unpruned tree until pure, depth-limited, or under-sampled."""
    all_features = range(data.feature_count)
    return grow_tree(data.features, data.labels, data.class_count,
                     max_depth, min_samples_split, lambda: all_features)


def predict_tree(model: TreeNode, x) -> int:
    if model.feature_count is not None:
        x = check_vector(x, model.feature_count)
    else:
        x = np.asarray(x, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValueError("feature vector contains non-finite values")
    node = model
    while not node.is_leaf:
        node = node.left if x[node.feature_index] <= node.threshold else node.right
    return node.class_id
