"""Uniform training/prediction dispatch over the four classifiers, JSON
model persistence (bit-exact reload), and rasterized segment classification."""

from __future__ import annotations

import json

import numpy as np

from .cart import TreeNode, predict_tree, train_cart
from .dataset import Dataset
from .forest import ForestModel, predict_forest, train_rf
from .naive_bayes import NBModel, predict_nb, train_nb
from .raster import Raster
from .snic import SegmentMap, SegmentStats
from .svm import PairMachine, SVMModel, predict_svm, train_svm

ALGORITHMS = ("cart", "rf", "nb", "svm")

CLASS_NODATA = -9999.0


def train_model(algorithm: str, data: Dataset, params: dict | None = None):
    params = dict(params or {})
    if algorithm == "cart":
        return train_cart(data, **params)
    if algorithm == "rf":
        return train_rf(data, **params)
    if algorithm == "nb":
        return train_nb(data, **params)
    if algorithm == "svm":
        return train_svm(data, **params)
    raise ValueError(f"unknown algorithm {algorithm!r}; pick from {ALGORITHMS}")


def model_predict(model, x) -> int:
    if isinstance(model, TreeNode):
        return predict_tree(model, x)
    if isinstance(model, ForestModel):
        return predict_forest(model, x)
    if isinstance(model, NBModel):
        return predict_nb(model, x)
    if isinstance(model, SVMModel):
        return predict_svm(model, x)
    raise TypeError(f"not a trained model: {type(model).__name__}")


def model_feature_count(model) -> int:
    for attr in ("feature_count",):
        count = getattr(model, attr, None)
        if count is not None:
            return int(count)
    raise TypeError(f"not a trained model: {type(model).__name__}")


def predict_matrix(model, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.array([model_predict(model, x) for x in X], dtype=np.int64)


def classify_segments(model, stats: SegmentStats, segmap: SegmentMap) -> Raster:
    """Single-band class raster: every pixel takes the predicted class of its
    segment's mean feature vector; nodata where the segment label is -1."""
    expected = model_feature_count(model)
    if stats.means.shape[1] != expected:
        raise ValueError(f"model expects {expected} features, segment stats "
                         f"carry {stats.means.shape[1]}")
    if segmap.labels.max(initial=-1) >= stats.segment_count:
        raise ValueError("segment map references unknown segment ids")
    per_segment = predict_matrix(model, stats.means)
    member = segmap.labels >= 0
    safe = np.where(member, segmap.labels, 0)
    out = per_segment[safe].astype(np.float64)
    out[~member] = CLASS_NODATA
    return Raster(out, CLASS_NODATA, segmap.transform, ["class"])


# ---------------------------------------------------------------------------
# JSON persistence. Floats survive a json round-trip bit-exactly (shortest
# repr), so a reloaded model predicts identically to the saved one.

def _tree_to_doc(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"class_id": node.class_id,
                "class_histogram": node.class_histogram}
    return {"feature_index": node.feature_index,
            "threshold": node.threshold,
            "left": _tree_to_doc(node.left),
            "right": _tree_to_doc(node.right)}


def _tree_from_doc(doc: dict) -> TreeNode:
    if "class_id" in doc:
        return TreeNode(class_id=int(doc["class_id"]),
                        class_histogram=[int(v) for v in doc["class_histogram"]])
    return TreeNode(feature_index=int(doc["feature_index"]),
                    threshold=float(doc["threshold"]),
                    left=_tree_from_doc(doc["left"]),
                    right=_tree_from_doc(doc["right"]))


def model_to_doc(model) -> dict:
    if isinstance(model, TreeNode):
        return {"model_type": "cart",
                "feature_count": model.feature_count,
                "class_count": model.class_count,
                "tree": _tree_to_doc(model)}
    if isinstance(model, ForestModel):
        return {"model_type": "rf",
                "params": {"tree_count": model.tree_count, "mtry": model.mtry,
                           "seed": model.seed, "bootstrap": model.bootstrap,
                           "max_depth": model.max_depth,
                           "min_samples_split": model.min_samples_split},
                "tree_seeds": list(model.tree_seeds),
                "feature_count": model.feature_count,
                "class_count": model.class_count,
                "trees": [_tree_to_doc(t) for t in model.trees]}
    if isinstance(model, NBModel):
        return {"model_type": "nb",
                "var_floor": model.var_floor,
                "feature_count": model.feature_count,
                "class_count": model.class_count,
                "priors": model.priors.tolist(),
                "means": model.means.tolist(),
                "variances": model.variances.tolist()}
    if isinstance(model, SVMModel):
        return {"model_type": "svm",
                "params": {"C": model.C, "gamma": model.gamma,
                           "tol": model.tol, "max_iter": model.max_iter,
                           "seed": model.seed},
                "feature_count": model.feature_count,
                "class_count": model.class_count,
                "standardization": {"mean": model.mean.tolist(),
                                    "sigma": model.sigma.tolist()},
                "machines": [{"class_a": m.class_a, "class_b": m.class_b,
                              "support_vectors": m.support_vectors.tolist(),
                              "dual_coef": m.dual_coef.tolist(),
                              "bias": m.bias} for m in model.machines]}
    raise TypeError(f"not a trained model: {type(model).__name__}")


def model_from_doc(doc: dict):
    kind = doc.get("model_type")
    if kind == "cart":
        root = _tree_from_doc(doc["tree"])
        root.feature_count = int(doc["feature_count"])
        root.class_count = int(doc["class_count"])
        return root
    if kind == "rf":
        p = doc["params"]
        return ForestModel(
            trees=[_tree_from_doc(t) for t in doc["trees"]],
            tree_count=int(p["tree_count"]), mtry=int(p["mtry"]),
            seed=int(p["seed"]), tree_seeds=[int(s) for s in doc["tree_seeds"]],
            bootstrap=bool(p["bootstrap"]),
            feature_count=int(doc["feature_count"]),
            class_count=int(doc["class_count"]),
            max_depth=p["max_depth"],
            min_samples_split=int(p["min_samples_split"]))
    if kind == "nb":
        return NBModel(priors=np.array(doc["priors"]),
                       means=np.array(doc["means"]),
                       variances=np.array(doc["variances"]),
                       var_floor=float(doc["var_floor"]),
                       feature_count=int(doc["feature_count"]),
                       class_count=int(doc["class_count"]))
    if kind == "svm":
        p = doc["params"]
        machines = [PairMachine(
            class_a=int(m["class_a"]), class_b=int(m["class_b"]),
            support_vectors=np.array(m["support_vectors"], dtype=np.float64)
                .reshape(len(m["dual_coef"]), int(doc["feature_count"])),
            dual_coef=np.array(m["dual_coef"], dtype=np.float64),
            bias=float(m["bias"])) for m in doc["machines"]]
        return SVMModel(machines=machines,
                        mean=np.array(doc["standardization"]["mean"]),
                        sigma=np.array(doc["standardization"]["sigma"]),
                        C=float(p["C"]), gamma=float(p["gamma"]),
                        tol=float(p["tol"]), max_iter=int(p["max_iter"]),
                        seed=int(p["seed"]),
                        feature_count=int(doc["feature_count"]),
                        class_count=int(doc["class_count"]))
    raise ValueError(f"unknown model_type {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_doc(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        return model_from_doc(json.load(fh))
