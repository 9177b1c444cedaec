import numpy as np
import pytest

from wetmap.dataset import Dataset
from wetmap.svm import (PairMachine, SVMModel, decision_value, predict_svm,
                        train_svm)


def _blobs(seed=0, per_class=25, centers=((4, 0), (-4, 0), (0, 4)), spread=0.3):
    rng = np.random.default_rng(seed)
    X, y = [], []
    for cid, center in enumerate(centers):
        X.append(rng.normal(0, spread, (per_class, len(center))) + center)
        y += [cid] * per_class
    return Dataset(np.vstack(X), np.array(y), len(centers))


def test_separable_blobs_train_to_perfect_accuracy():
    data = _blobs()
    model = train_svm(data, C=1.0)
    assert all(predict_svm(model, x) == t
               for x, t in zip(data.features, data.labels))


def test_one_class_rejected():
    data = Dataset(np.array([[0.0], [1.0]]), np.array([0, 0]), 1)
    with pytest.raises(ValueError, match="two classes"):
        train_svm(data)


def test_training_is_deterministic():
    data = _blobs(seed=3)
    a = train_svm(data, seed=0)
    b = train_svm(data, seed=0)
    assert len(a.machines) == len(b.machines)
    for ma, mb in zip(a.machines, b.machines):
        assert np.array_equal(ma.support_vectors, mb.support_vectors)
        assert np.array_equal(ma.dual_coef, mb.dual_coef)
        assert ma.bias == mb.bias
    rng = np.random.default_rng(1)
    probes = rng.normal(0, 3, (40, 2))
    assert [predict_svm(a, x) for x in probes] == \
        [predict_svm(b, x) for x in probes]


def test_two_class_prediction_equals_machine_sign():
    data = _blobs(centers=((3, 0), (-3, 0)))
    model = train_svm(data)
    assert len(model.machines) == 1
    machine = model.machines[0]
    rng = np.random.default_rng(2)
    for x in rng.normal(0, 3, (50, 2)):
        want = machine.class_a if decision_value(model, machine, x) >= 0 \
            else machine.class_b
        assert predict_svm(model, x) == want


def test_three_way_vote_tie_breaks_to_lowest_class():
    sv = np.zeros((0, 2))
    coef = np.zeros(0)
    machines = [PairMachine(0, 1, sv, coef, bias=1.0),    # votes 0
                PairMachine(1, 2, sv, coef, bias=1.0),    # votes 1
                PairMachine(0, 2, sv, coef, bias=-1.0)]   # votes 2
    model = SVMModel(machines=machines, mean=np.zeros(2), sigma=np.ones(2),
                     C=1.0, gamma=0.5, tol=1e-3, max_iter=100, seed=0,
                     feature_count=2, class_count=3)
    assert predict_svm(model, np.zeros(2)) == 0


def test_dual_coefficients_bounded_by_c():
    for C in (0.5, 1.0, 10.0):
        model = train_svm(_blobs(seed=5, spread=1.5), C=C)
        for machine in model.machines:
            assert np.all(np.abs(machine.dual_coef) <= C + 1e-12)


def test_support_vector_deep_in_region_predicts_its_class():
    data = _blobs(seed=8)
    model = train_svm(data)
    centers = ((4, 0), (-4, 0), (0, 4))
    for cid, center in enumerate(centers):
        assert predict_svm(model, np.array(center, dtype=float)) == cid


def test_feature_scaling_absorbed_by_standardization():
    data = _blobs(seed=9)
    scaled = Dataset(data.features * np.array([4.0, 1.0]), data.labels,
                     data.class_count)
    base = train_svm(data, seed=0)
    other = train_svm(scaled, seed=0)
    rng = np.random.default_rng(3)
    probes = rng.normal(0, 3, (60, 2))
    for x in probes:
        assert predict_svm(base, x) == predict_svm(other, x * [4.0, 1.0])


def test_non_finite_probe_rejected():
    model = train_svm(_blobs())
    with pytest.raises(ValueError, match="finite"):
        predict_svm(model, np.array([np.nan, 0.0]))
