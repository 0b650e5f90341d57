"""Downstream evaluation: linear SVM on embeddings, repeated splits, metrics.

Molecule embeddings are frozen and classified with a linear SVM trained
by projected stochastic subgradient descent (Pegasos) on the objective

    (1/n) sum_i max(0, 1 - y_i (w.x_i + b)) + ||w||^2 / (2 C n)

returning the averaged iterate.  The evaluation protocol repeats a
shuffled train/test split, standardizes features on the training fold
only, and reports mean accuracy with the population standard deviation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .rng import Xoshiro256StarStar


@dataclass
class SvmConfig:
    C: float = 1.0
    iterations: int = 10000
    seed: int = 0

    def __post_init__(self):
        if self.C <= 0:
            raise ConfigError(f"C must be > 0, got {self.C}")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")


def svm_objective(w, b, X, y, C):
    """Regularized mean hinge loss; y in {-1, +1}."""
    margins = y * (X @ w + b)
    hinge = np.maximum(0.0, 1.0 - margins).mean()
    n = len(y)
    return hinge + float(w @ w) / (2.0 * C * n)


def train_linear_svm(X, y, cfg):
    """Projected stochastic subgradient descent with an unregularized bias.

    Iterates are projected onto the ||w|| <= 1/sqrt(lambda) ball that
    contains the optimum, and the returned (w, b) averages the second half
    of the trajectory, which converges much faster than the full average.
    X: (n, d) float features, y: (n,) labels in {-1, +1}.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError(f"X shape {X.shape} incompatible with y shape {y.shape}")
    if set(np.unique(y)) != {-1.0, 1.0}:
        raise DataError("labels must contain both -1 and +1")
    n, d = X.shape
    lam = 1.0 / (cfg.C * n)
    radius = 1.0 / np.sqrt(lam)
    rng = Xoshiro256StarStar(cfg.seed, stream=11)
    w = np.zeros(d)
    b = 0.0
    w_sum = np.zeros(d)
    b_sum = 0.0
    avg_from = cfg.iterations // 2
    for t in range(1, cfg.iterations + 1):
        i = rng.randrange(n)
        eta = 1.0 / (lam * t)
        margin = y[i] * (X[i] @ w + b)
        w *= 1.0 - eta * lam
        if margin < 1.0:
            w += eta * y[i] * X[i]
            b += eta * y[i]
        norm = np.sqrt(w @ w)
        if norm > radius:
            w *= radius / norm
        if t > avg_from:
            w_sum += w
            b_sum += b
    n_avg = cfg.iterations - avg_from
    return w_sum / n_avg, b_sum / n_avg


def svm_predict(w, b, X):
    """Signed labels; ties (exact zero) go to +1."""
    return np.where(np.asarray(X) @ w + b >= 0.0, 1.0, -1.0)


def standardize_fit(X):
    """Per-feature mean/std from training data; std floored at 1e-12."""
    X = np.asarray(X, dtype=np.float64)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    return mean, np.maximum(std, 1e-12)


def standardize_apply(X, mean, std):
    return (np.asarray(X, dtype=np.float64) - mean) / std


def evaluate_protocol(X, y01, repeats=10, test_fraction=0.1, seed=0, svm_cfg=None):
    """Repeated shuffled-split linear-SVM accuracy on frozen embeddings.

    y01 holds 0/1 labels.  Each repeat reshuffles with its own stream; a
    split whose training fold is single-class is redrawn (up to 20
    attempts, then DataError).  Returns (mean, population std, per-repeat
    accuracies).
    """
    X = np.asarray(X, dtype=np.float64)
    y01 = np.asarray(y01, dtype=np.float64)
    if X.shape[0] != y01.shape[0]:
        raise DataError(f"{X.shape[0]} embeddings but {y01.shape[0]} labels")
    if not 0 < test_fraction < 1:
        raise ConfigError(f"test fraction must be in (0,1), got {test_fraction}")
    n = X.shape[0]
    n_test = int(test_fraction * n)
    if n_test == 0 or n_test == n:
        raise ConfigError(f"fraction {test_fraction} yields an empty side for n={n}")
    if svm_cfg is None:
        svm_cfg = SvmConfig()
    y_signed = np.where(y01 == 1.0, 1.0, -1.0)
    accuracies = []
    for r in range(1, repeats + 1):
        order = None
        for attempt in range(20):
            cand = list(range(n))
            Xoshiro256StarStar(seed + r, stream=attempt).shuffle(cand)
            train_idx = cand[n_test:]
            if len(set(y_signed[train_idx])) == 2:
                order = cand
                break
        if order is None:
            raise DataError("could not draw a two-class training fold in 20 attempts")
        test_idx, train_idx = order[:n_test], order[n_test:]
        mean, std = standardize_fit(X[train_idx])
        Xtr = standardize_apply(X[train_idx], mean, std)
        Xte = standardize_apply(X[test_idx], mean, std)
        w, b = train_linear_svm(Xtr, y_signed[train_idx], svm_cfg)
        acc = float(np.mean(svm_predict(w, b, Xte) == y_signed[test_idx]))
        accuracies.append(acc)
    arr = np.array(accuracies)
    return float(arr.mean()), float(arr.std()), accuracies


def regression_metrics(predictions, labels):
    """(RMSE, MAE) over aligned prediction/label sequences."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(labels, dtype=np.float64)
    if p.shape != t.shape:
        raise DataError(f"prediction shape {p.shape} != label shape {t.shape}")
    if p.size == 0:
        raise DataError("no predictions to score")
    err = p - t
    return float(np.sqrt(np.mean(err ** 2))), float(np.mean(np.abs(err)))
