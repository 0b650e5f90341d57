"""Unsupervised training with a negative-sampling objective.

Each molecule owns a trainable vector u_m; every (atom, level) feature
h_v^l of the molecule is a positive example for u_m, while features of
other randomly drawn molecules act as negatives.  A candidate negative is
rejected when its WL code equals the anchor's, so negatives are always
structurally distinct substructures.  The per-anchor objective

    log sigmoid(gamma * u.h) + sum_neg log sigmoid(-gamma * u.h')

is maximized; the trainer descends on its negation.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .molgraph import wl_node_hash
from .nmp import backward_levels, forward_levels, init_params, make_optimizer
from .rng import Xoshiro256StarStar


@dataclass
class MoleculeVectorTable:
    """One trainable row per corpus molecule, indexed by graph id."""

    u: np.ndarray
    row_of: dict  # graph id -> row index

    def row(self, graph_id):
        return self.u[self.row_of[graph_id]]

    @staticmethod
    def init(graph_ids, d, seed):
        rng = Xoshiro256StarStar(seed, stream=1)
        u = np.empty((len(graph_ids), d), dtype=np.float64)
        for i in range(u.size):
            u.flat[i] = rng.uniform(-0.1, 0.1)
        return MoleculeVectorTable(u, {gid: i for i, gid in enumerate(graph_ids)})


@dataclass
class NegSamplingConfig:
    k: int = 10
    gamma: float = 0.5
    max_reject: int = 50

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"negative count k must be >= 1, got {self.k}")
        if self.gamma <= 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if self.max_reject < 1:
            raise ConfigError(f"max_reject must be >= 1, got {self.max_reject}")


@dataclass
class TrainConfig:
    """Unsupervised training settings.

    The molecule vectors (u_lr) train much faster than the message-passing
    parameters (lr): the features the vectors score against need to stay
    nearly stationary within an epoch or the vectors chase moving targets
    and lose their discriminative structure.
    """

    epochs: int
    seed: int
    d: int = 100
    levels: int = 3
    lr: float = 1e-4
    u_lr: float = 2e-2
    anchor_fraction: float = 1.0
    optimizer: str = "adam"

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.d < 1 or self.levels < 1:
            raise ConfigError("d and levels must be >= 1")
        if self.lr <= 0 or self.u_lr <= 0:
            raise ConfigError("learning rates must be > 0")
        if not 0 < self.anchor_fraction <= 1:
            raise ConfigError("anchor fraction must be in (0, 1]")


def compute_wl_codes(dataset, levels):
    """WL codes for every corpus molecule, keyed by graph id."""
    return {g.id: wl_node_hash(g, levels) for g in dataset.graphs}


def sample_negative(anchor, dataset, wl_codes, neg_cfg, rng):
    """Draw one accepted negative for (molecule, atom, level), or None.

    The candidate molecule is uniform over the corpus (the anchor's own
    molecule included), the atom uniform within it; candidates whose WL
    code at the anchor's level equals the anchor's are rejected and
    redrawn, up to max_reject consecutive rejections.
    """
    m_id, v, level = anchor
    anchor_code = wl_codes[m_id].at(level, v)
    n = len(dataset.graphs)
    for _ in range(neg_cfg.max_reject):
        cand = dataset.graphs[rng.randrange(n)]
        if cand.n_atoms == 0:
            continue
        v2 = rng.randrange(cand.n_atoms)
        if wl_codes[cand.id].at(level, v2) != anchor_code:
            return cand.id, v2
    return None


def _log_sigmoid(x):
    # stable log(1/(1+e^-x))
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def ns_loss_and_grads(u_m, h_anchor, negatives, gamma):
    """Per-anchor negative-sampling objective and its exact gradients.

    Returns (value, grad_u, grad_h_anchor, [grad per negative]).  The value
    is the maximized quantity; callers minimizing must negate everything.
    """
    u_m = np.asarray(u_m, dtype=np.float64)
    h_anchor = np.asarray(h_anchor, dtype=np.float64)
    if u_m.shape != h_anchor.shape:
        raise ShapeError(f"u shape {u_m.shape} != anchor shape {h_anchor.shape}")
    pos = gamma * float(u_m @ h_anchor)
    value = _log_sigmoid(pos)
    # d/dx log sigmoid(x) = sigmoid(-x)
    coeff = gamma * _sigmoid(-pos)
    grad_u = coeff * h_anchor
    grad_h = coeff * u_m
    grad_negs = []
    for h_neg in negatives:
        h_neg = np.asarray(h_neg, dtype=np.float64)
        if h_neg.shape != u_m.shape:
            raise ShapeError(f"negative shape {h_neg.shape} != u shape {u_m.shape}")
        z = gamma * float(u_m @ h_neg)
        value += _log_sigmoid(-z)
        c = gamma * _sigmoid(z)
        grad_u -= c * h_neg
        grad_negs.append(-c * u_m)
    return value, grad_u, grad_h, grad_negs


def _anchor_iter(graph, levels, fraction, rng):
    """Yield (level, atom) anchors, optionally subsampled."""
    for level in range(1, levels + 1):
        for v in range(graph.n_atoms):
            if fraction >= 1.0 or rng.random() < fraction:
                yield level, v


def train_unsupervised(dataset, neg_cfg, train_cfg, params=None, u_table=None):
    """Joint training of EmbedParams and the molecule vector table.

    Per epoch, molecules are visited in shuffled order.  Visiting a
    molecule refreshes its cached features, updates u_m once per anchor,
    and applies one optimizer step on EmbedParams accumulating all of the
    molecule's anchor gradients (plus any gradient contributions buffered
    for it while it served as a negative).  Fully deterministic per seed.
    """
    if dataset.n_graphs == 0:
        raise ConfigError("cannot train on an empty dataset")
    graphs = {g.id: g for g in dataset.graphs}
    ids = sorted(graphs)
    if params is None:
        params = init_params(train_cfg.seed, train_cfg.d, dataset.vocab)
    if u_table is None:
        u_table = MoleculeVectorTable.init(ids, params.d, train_cfg.seed)
    levels = train_cfg.levels
    wl = compute_wl_codes(dataset, levels)
    opt_state, opt_step = make_optimizer(train_cfg.optimizer, train_cfg.lr)
    u_state, u_step = make_optimizer(train_cfg.optimizer, train_cfg.u_lr)
    embed_dict = params.as_dict()

    features = {gid: forward_levels(graphs[gid], params, levels).h for gid in ids}
    # gradient w.r.t. a molecule's features accumulated while it served as
    # a negative; flushed into its next visit's backward pass
    pending = {gid: None for gid in ids}

    history = []
    for epoch in range(train_cfg.epochs):
        rng = Xoshiro256StarStar(train_cfg.seed, stream=epoch + 2)
        order = list(ids)
        rng.shuffle(order)
        loss_sum = 0.0
        n_anchors = 0
        for m_id in order:
            graph = graphs[m_id]
            feats = forward_levels(graph, params, levels)
            features[m_id] = feats.h
            upstream = np.zeros_like(feats.h)
            if pending[m_id] is not None:
                upstream += pending[m_id]
                pending[m_id] = None
            u_row = u_table.row(m_id)
            for level, v in _anchor_iter(graph, levels, train_cfg.anchor_fraction, rng):
                negatives = []
                neg_refs = []
                for _ in range(neg_cfg.k):
                    hit = sample_negative((m_id, v, level), dataset, wl, neg_cfg, rng)
                    if hit is None:
                        continue
                    nm, nv = hit
                    negatives.append(features[nm][level - 1, nv])
                    neg_refs.append(hit)
                value, g_u, g_h, g_negs = ns_loss_and_grads(
                    u_row, feats.h[level - 1, v], negatives, neg_cfg.gamma)
                loss_sum += value
                n_anchors += 1
                # descend on the negation of the maximized objective
                upstream[level - 1, v] -= g_h
                for (nm, nv), g_neg in zip(neg_refs, g_negs):
                    if pending[nm] is None:
                        pending[nm] = np.zeros_like(features[nm])
                    pending[nm][level - 1, nv] -= g_neg
                name = f"u_{m_id}"
                u_step({name: u_row}, {name: -g_u}, u_state)
            grads = backward_levels(graph, params, feats, upstream)
            opt_step(embed_dict, grads, opt_state)
        history.append(loss_sum / max(n_anchors, 1))
    return params, u_table, history


def mean_objective(dataset, params, u_table, neg_cfg, levels, seed):
    """Mean per-anchor objective over the corpus, without updates.

    Uses its own sampling stream so it can be called before and after
    training for a like-for-like comparison.
    """
    wl = compute_wl_codes(dataset, levels)
    rng = Xoshiro256StarStar(seed, stream=997)
    total = 0.0
    count = 0
    features = {g.id: forward_levels(g, params, levels).h for g in dataset.graphs}
    for g in dataset.graphs:
        u_row = u_table.row(g.id)
        for level in range(1, levels + 1):
            for v in range(g.n_atoms):
                negatives = []
                for _ in range(neg_cfg.k):
                    hit = sample_negative((g.id, v, level), dataset, wl, neg_cfg, rng)
                    if hit is not None:
                        nm, nv = hit
                        negatives.append(features[nm][level - 1, nv])
                value, _, _, _ = ns_loss_and_grads(
                    u_row, features[g.id][level - 1, v], negatives, neg_cfg.gamma)
                total += value
                count += 1
    return total / max(count, 1)
