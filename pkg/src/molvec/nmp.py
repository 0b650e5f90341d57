"""Level-wise neural message passing: forward, reverse-mode, optimizer.

Level 1 is the raw atom embedding; each further level applies one round
of message passing (a per-bond-type linear map summed over neighbors)
followed by a sigmoid update, so h[l][v] summarizes the rooted
substructure of radius l-1 around atom v.

Everything is double precision and pure: forward/backward never mutate
their inputs, and the optimizer mutates only the arrays it is handed.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericsError, ShapeError, VocabError
from .molgraph import BondType
from .rng import Xoshiro256StarStar

N_BOND_TYPES = len(BondType)


@dataclass
class EmbedParams:
    """Trainable message-passing parameters.

    atom_embed: |vocab| x d rows of level-1 features.
    bond_mats: (4, d, d), one matrix per BondType code.
    """

    atom_embed: np.ndarray
    bond_mats: np.ndarray

    @property
    def d(self):
        return self.atom_embed.shape[1]

    def as_dict(self):
        out = {"atom_embed": self.atom_embed}
        for t in BondType:
            out[f"bond_{t.name.lower()}"] = self.bond_mats[int(t)]
        return out

    def copy(self):
        return EmbedParams(self.atom_embed.copy(), self.bond_mats.copy())


@dataclass
class LevelFeatures:
    """h: (L, n_atoms, d) tensor of per-level node features."""

    h: np.ndarray

    @property
    def levels(self):
        return self.h.shape[0]


def init_params(seed, d, vocab):
    """Near-identity initialization, deterministic for a fixed seed.

    Atom embedding entries are Uniform(-0.1, 0.1); each bond matrix is the
    identity plus Uniform(-0.01, 0.01) noise, filled row-major, bond types
    in code order.
    """
    if d < 1:
        raise ConfigError(f"feature dimension must be >= 1, got {d}")
    rng = Xoshiro256StarStar(seed)
    atom_embed = np.empty((len(vocab), d), dtype=np.float64)
    for i in range(atom_embed.size):
        atom_embed.flat[i] = rng.uniform(-0.1, 0.1)
    bond_mats = np.empty((N_BOND_TYPES, d, d), dtype=np.float64)
    for t in range(N_BOND_TYPES):
        for i in range(d * d):
            bond_mats[t].flat[i] = rng.uniform(-0.01, 0.01)
        bond_mats[t] += np.eye(d)
    return EmbedParams(atom_embed, bond_mats)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def forward_levels(graph, params, levels):
    """Compute h[l][v] for l = 1..levels.

    h[1][v] is the embedding row of atom v's type; thereafter
    h[l+1][v] = sigmoid(h[l][v] + sum_w H_{e(v,w)} h[l][w]) with the
    neighbor sum taken in ascending atom-index order.
    """
    if levels < 1:
        raise ConfigError(f"level count must be >= 1, got {levels}")
    n = graph.n_atoms
    d = params.d
    for a in graph.atoms:
        if not 0 <= a < params.atom_embed.shape[0]:
            raise VocabError(f"atom type id {a} outside vocabulary "
                             f"of size {params.atom_embed.shape[0]}")
    h = np.empty((levels, n, d), dtype=np.float64)
    if n:
        h[0] = params.atom_embed[list(graph.atoms)]
    for lvl in range(1, levels):
        prev = h[lvl - 1]
        for v in range(n):
            m = np.zeros(d, dtype=np.float64)
            for w, t in graph.adjacency[v]:  # ascending neighbor index
                m += params.bond_mats[int(t)] @ prev[w]
            h[lvl, v] = _sigmoid(prev[v] + m)
    return LevelFeatures(h)


def backward_levels(graph, params, features, upstream):
    """Exact gradients of a scalar loss w.r.t. EmbedParams.

    ``upstream`` holds d(loss)/d(h[l][v]) for every level and atom; the
    sigmoid derivative is recovered from the stored activations as
    h(1-h).  Returns a dict shaped like ``params.as_dict()``.
    """
    h = features.h
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != h.shape:
        raise ShapeError(f"upstream shape {upstream.shape} != features shape {h.shape}")
    levels, n, d = h.shape
    atom_grad = np.zeros_like(params.atom_embed)
    bond_grad = np.zeros_like(params.bond_mats)
    grad_h = upstream[levels - 1].copy()
    for lvl in range(levels - 1, 0, -1):
        nxt = h[lvl]
        prev = h[lvl - 1]
        pre = grad_h * nxt * (1.0 - nxt)  # gradient at the sigmoid input
        new_grad = upstream[lvl - 1] + pre  # identity path h[l] -> h[l+1]
        for v in range(n):
            pv = pre[v]
            for w, t in graph.adjacency[v]:
                bond_grad[int(t)] += np.outer(pv, prev[w])
                new_grad[w] += params.bond_mats[int(t)].T @ pv
        grad_h = new_grad
    for v in range(n):
        atom_grad[graph.atoms[v]] += grad_h[v]
    out = {"atom_embed": atom_grad}
    for t in BondType:
        out[f"bond_{t.name.lower()}"] = bond_grad[int(t)]
    return out


@dataclass
class AdamState:
    """Per-parameter Adam moments with lazily created, per-name step counts.

    Lazy per-name counters keep sparse updates (e.g. individual molecule
    vector rows) correctly bias-corrected.
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    slots: dict = field(default_factory=dict)  # name -> [m, v, t]


def adam_update(params, grads, state):
    """One Adam step over a dict of named arrays; mutates params and state.

    Raises NumericsError naming the parameter if its gradient is not
    finite; the step is aborted before any array is touched.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericsError(f"non-finite gradient for parameter {name!r}")
        if name not in params:
            raise ShapeError(f"gradient for unknown parameter {name!r}")
        if params[name].shape != np.shape(g):
            raise ShapeError(f"parameter {name!r}: shape {params[name].shape} "
                             f"vs gradient {np.shape(g)}")
    for name, g in grads.items():
        slot = state.slots.get(name)
        if slot is None:
            slot = [np.zeros_like(params[name]), np.zeros_like(params[name]), 0]
            state.slots[name] = slot
        m, v, t = slot
        t += 1
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        params[name] -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        slot[2] = t
    return params, state


@dataclass
class SgdState:
    """Plain stochastic gradient descent, available by configuration."""

    lr: float = 1e-3


def sgd_update(params, grads, state):
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericsError(f"non-finite gradient for parameter {name!r}")
        params[name] -= state.lr * g
    return params, state


def make_optimizer(kind, lr):
    if kind == "adam":
        return AdamState(lr=lr), adam_update
    if kind == "sgd":
        return SgdState(lr=lr), sgd_update
    raise ConfigError(f"unknown optimizer {kind!r}")
