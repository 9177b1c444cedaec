"""Soft-margin RBF SVM trained by sequential minimal optimization, multiclass
via one-vs-one voting.

Features are standardized once (training mean/sigma over the whole training
set) and every pairwise machine is solved in that space. The positive label
of a pair machine is the lower class_id, so a decision value >= 0 votes for
it; overall vote ties also break to the lowest class_id.

The SMO solver picks the maximal-violating pair each iteration (first-order
working-set selection with an incrementally maintained gradient) and stops
when the KKT violation gap falls below `tol` or after `max_iter` pair
updates. Selection ties resolve to the lowest index, so training is fully
deterministic; the `seed` parameter is recorded in the model but does not
influence the solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, check_vector

# absolute variance floor for the standardization sigmas
_VAR_FLOOR = 1e-12


@dataclass
class PairMachine:
    class_a: int                 # positive label (lower id)
    class_b: int
    support_vectors: np.ndarray  # (m, F), standardized space
    dual_coef: np.ndarray        # (m,) alpha_i * y_i, |coef| <= C
    bias: float


@dataclass
class SVMModel:
    machines: list[PairMachine]
    mean: np.ndarray
    sigma: np.ndarray
    C: float
    gamma: float
    tol: float
    max_iter: int
    seed: int
    feature_count: int
    class_count: int


def _rbf_matrix(X: np.ndarray, gamma: float) -> np.ndarray:
    sq = np.sum(X ** 2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int):
    """Solve min 1/2 a^T Q a - e^T a, 0 <= a <= C, y^T a = 0 with
    Q = (y y^T) * K. Returns (alphas, bias) for f(x) = sum a_t y_t k(x_t, x)
    + bias."""
    n = len(y)
    yf = y.astype(np.float64)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # Q a - e at a = 0
    diag = np.ascontiguousarray(np.diag(K))
    pos = yf > 0

    for _ in range(max_iter):
        neg_yg = -yf * grad
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        if not up.any() or not low.any():
            break
        up_vals = np.where(up, neg_yg, -np.inf)
        low_vals = np.where(low, neg_yg, np.inf)
        i = int(np.argmax(up_vals))
        j = int(np.argmin(low_vals))
        if up_vals[i] - low_vals[j] <= tol:
            break

        quad = diag[i] + diag[j] - 2.0 * K[i, j]
        if quad <= 0.0:
            quad = 1e-12
        ai_old, aj_old = alpha[i], alpha[j]
        if yf[i] != yf[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0 and aj < 0:
                ai, aj = diff, 0.0
            elif diff <= 0 and ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0 and ai > C:
                ai, aj = C, C - diff
            elif diff <= 0 and aj > C:
                ai, aj = C + diff, C
        else:
            delta = (grad[i] - grad[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > C and ai > C:
                ai, aj = C, total - C
            elif total <= C and aj < 0:
                ai, aj = total, 0.0
            if total > C and aj > C:
                ai, aj = total - C, C
            elif total <= C and ai < 0:
                ai, aj = 0.0, total

        alpha[i], alpha[j] = ai, aj
        dai = ai - ai_old
        daj = aj - aj_old
        if dai != 0.0:
            grad += (yf[i] * dai) * (yf * K[:, i])
        if daj != 0.0:
            grad += (yf[j] * daj) * (yf * K[:, j])

    # bias from the KKT conditions: free SVs average, else bound midpoint
    yg = yf * grad
    free = (alpha > 0.0) & (alpha < C)
    if free.any():
        rho = float(yg[free].mean())
    else:
        at_upper = alpha >= C
        at_lower = alpha <= 0.0
        ub_mask = (at_upper & ~pos) | (at_lower & pos)
        lb_mask = (at_upper & pos) | (at_lower & ~pos)
        ub = float(yg[ub_mask].min()) if ub_mask.any() else np.inf
        lb = float(yg[lb_mask].max()) if lb_mask.any() else -np.inf
        rho = (ub + lb) / 2.0
    return alpha, -rho


def train_svm(data: Dataset, C: float = 1.0, gamma: float | None = None,
              tol: float = 1e-3, max_iter: int = 10000,
              seed: int = 0) -> SVMModel:
    if data.class_count < 2 or len(np.unique(data.labels)) < 2:
        raise ValueError("SVM training needs at least two classes")
    F = data.feature_count
    if gamma is None:
        gamma = 1.0 / F

    mean = data.features.mean(axis=0)
    sigma = np.sqrt(np.maximum(data.features.var(axis=0), _VAR_FLOOR))
    Xs = (data.features - mean) / sigma

    machines = []
    for a in range(data.class_count):
        for b in range(a + 1, data.class_count):
            sel = (data.labels == a) | (data.labels == b)
            if not sel.any():
                continue
            X_ab = Xs[sel]
            y_ab = np.where(data.labels[sel] == a, 1, -1)
            if len(np.unique(y_ab)) < 2:
                continue
            K = _rbf_matrix(X_ab, gamma)
            alphas, bias = _smo(K, y_ab, C, tol, max_iter)
            sv = alphas > 0.0
            machines.append(PairMachine(
                class_a=a, class_b=b,
                support_vectors=X_ab[sv],
                dual_coef=alphas[sv] * y_ab[sv],
                bias=float(bias),
            ))
    return SVMModel(machines=machines, mean=mean, sigma=sigma, C=C,
                    gamma=float(gamma), tol=tol, max_iter=max_iter, seed=seed,
                    feature_count=F, class_count=data.class_count)


def decision_value(model: SVMModel, machine: PairMachine, x) -> float:
    """Pairwise decision function in standardized space; >= 0 votes class_a."""
    xs = (check_vector(x, model.feature_count) - model.mean) / model.sigma
    d2 = np.sum((machine.support_vectors - xs) ** 2, axis=1)
    return float(machine.dual_coef @ np.exp(-model.gamma * d2)) + machine.bias


def predict_svm(model: SVMModel, x) -> int:
    votes = np.zeros(model.class_count, dtype=np.int64)
    for machine in model.machines:
        if decision_value(model, machine, x) >= 0.0:
            votes[machine.class_a] += 1
        else:
            votes[machine.class_b] += 1
    return int(np.argmax(votes))
