"""Fingerprint readout and supervised prediction head.

The fingerprint of a molecule is the sum, over every level and atom, of
softmax(W h[l][v]): a soft histogram of substructure features whose
entries sum to levels * n_atoms and which is invariant to atom
renumbering.  A two-layer network maps the fingerprint to a scalar;
classification passes it through a sigmoid and trains with binary
cross-entropy, regression trains with squared error.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericsError, ShapeError
from .ingest import BINARY_CLASSIFICATION, REGRESSION
from .rng import Xoshiro256StarStar


@dataclass
class ReadoutParams:
    """Fingerprint projection plus the two-layer prediction head."""

    W: np.ndarray        # (d_fp, d)
    layer1_W: np.ndarray  # (n_hidden, d_fp)
    layer1_b: np.ndarray  # (n_hidden,)
    layer2_W: np.ndarray  # (1, n_hidden)
    layer2_b: np.ndarray  # (1,)
    task: str

    @property
    def d_fp(self):
        return self.W.shape[0]

    def as_dict(self):
        return {"W": self.W, "layer1_W": self.layer1_W, "layer1_b": self.layer1_b,
                "layer2_W": self.layer2_W, "layer2_b": self.layer2_b}

    def copy(self):
        return ReadoutParams(self.W.copy(), self.layer1_W.copy(), self.layer1_b.copy(),
                             self.layer2_W.copy(), self.layer2_b.copy(), self.task)


def init_readout(seed, d, task, d_fp=64, n_hidden=100):
    """Uniform(-0.1, 0.1) weights, zero biases; deterministic per seed."""
    if task not in (BINARY_CLASSIFICATION, REGRESSION):
        raise ConfigError(f"unknown task {task!r}")
    if d_fp < 1 or n_hidden < 1:
        raise ConfigError("d_fp and n_hidden must be >= 1")
    rng = Xoshiro256StarStar(seed, stream=3)

    def fill(shape):
        a = np.empty(shape, dtype=np.float64)
        for i in range(a.size):
            a.flat[i] = rng.uniform(-0.1, 0.1)
        return a

    return ReadoutParams(fill((d_fp, d)), fill((n_hidden, d_fp)),
                         np.zeros(n_hidden), fill((1, n_hidden)), np.zeros(1), task)


def _softmax(z):
    e = np.exp(z - np.max(z))
    return e / e.sum()


def fingerprint(features, W):
    """Sum of softmax(W h) over all (level, atom) pairs; entries sum to
    levels * n_atoms."""
    h = features.h
    levels, n, d = h.shape
    if W.shape[1] != d:
        raise ShapeError(f"W expects d={W.shape[1]}, features have d={d}")
    fp = np.zeros(W.shape[0], dtype=np.float64)
    for lvl in range(levels):
        for v in range(n):
            fp += _softmax(W @ h[lvl, v])
    return fp


def predict_from_fingerprint(fp, rparams):
    """Scalar prediction from a fingerprint; sigmoid applied for
    classification."""
    hidden = np.maximum(0.0, rparams.layer1_W @ fp + rparams.layer1_b)
    z = float((rparams.layer2_W @ hidden + rparams.layer2_b)[0])
    if rparams.task == BINARY_CLASSIFICATION:
        if z >= 0:
            return 1.0 / (1.0 + np.exp(-z))
        e = np.exp(z)
        return e / (1.0 + e)
    return z


def predict(features, rparams):
    return predict_from_fingerprint(fingerprint(features, rparams.W), rparams)


def supervised_loss(prediction, label, task):
    """Binary cross-entropy (clamped at 1e-12) or squared error."""
    if task == BINARY_CLASSIFICATION:
        if not 0.0 <= prediction <= 1.0:
            raise NumericsError(f"classification output {prediction} outside [0, 1]")
        p = min(max(prediction, 1e-12), 1.0 - 1e-12)
        return -(label * np.log(p) + (1.0 - label) * np.log1p(-p))
    if task == REGRESSION:
        return (prediction - label) ** 2
    raise ConfigError(f"unknown task {task!r}")


def supervised_grads(features, rparams, label):
    """Loss, exact gradients for every readout parameter, and the upstream
    gradient w.r.t. the level features (for backpropagation into the
    message-passing parameters).

    For classification the sigmoid and cross-entropy are fused, so the
    pre-activation gradient is simply (p - y).
    """
    h = features.h
    levels, n, d = h.shape
    W = rparams.W
    caches = []
    fp = np.zeros(rparams.d_fp, dtype=np.float64)
    for lvl in range(levels):
        for v in range(n):
            y = _softmax(W @ h[lvl, v])
            caches.append((lvl, v, y))
            fp += y
    pre1 = rparams.layer1_W @ fp + rparams.layer1_b
    hidden = np.maximum(0.0, pre1)
    z = float((rparams.layer2_W @ hidden + rparams.layer2_b)[0])

    if rparams.task == BINARY_CLASSIFICATION:
        p = 1.0 / (1.0 + np.exp(-z)) if z >= 0 else np.exp(z) / (1.0 + np.exp(z))
        loss = supervised_loss(p, label, rparams.task)
        dz = p - label
    else:
        loss = (z - label) ** 2
        dz = 2.0 * (z - label)

    g_layer2_W = dz * hidden[None, :]
    g_layer2_b = np.array([dz])
    d_hidden = dz * rparams.layer2_W[0]
    d_pre1 = d_hidden * (pre1 > 0)
    g_layer1_W = np.outer(d_pre1, fp)
    g_layer1_b = d_pre1
    d_fp = rparams.layer1_W.T @ d_pre1

    g_W = np.zeros_like(W)
    upstream = np.zeros_like(h)
    for lvl, v, y in caches:
        # softmax Jacobian applied to d_fp
        dzv = y * (d_fp - float(y @ d_fp))
        g_W += np.outer(dzv, h[lvl, v])
        upstream[lvl, v] = W.T @ dzv

    grads = {"W": g_W, "layer1_W": g_layer1_W, "layer1_b": g_layer1_b,
             "layer2_W": g_layer2_W, "layer2_b": g_layer2_b}
    return loss, grads, upstream
