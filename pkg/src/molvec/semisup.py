"""Semi-supervised property prediction.

The training objective is the supervised loss over the labeled molecules
plus lambda times a regularizer over the whole (mostly unlabeled) corpus;
the regularizer is the negated per-molecule negative-sampling objective,
so minimizing it keeps the message-passing features predictive of
molecule identity while the labels shape the readout.  Held-out test
molecules must not be part of the corpus passed here.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .nmp import backward_levels, forward_levels, init_params, make_optimizer
from .pvns import (MoleculeVectorTable, NegSamplingConfig, compute_wl_codes,
                   ns_loss_and_grads, sample_negative)
from .readout import init_readout, predict, supervised_grads
from .rng import Xoshiro256StarStar


@dataclass
class SemiConfig:
    epochs: int
    seed: int
    lam: float = 0.5
    d: int = 100
    levels: int = 3
    lr: float = 1e-3
    u_lr: float = 2e-2  # molecule vectors must outpace the features they score
    batch_size: int = 16
    d_fp: int = 64
    n_hidden: int = 100
    anchor_fraction: float = 1.0
    optimizer: str = "adam"

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if self.lr <= 0 or self.u_lr <= 0:
            raise ConfigError("learning rates must be > 0")
        if not 0 < self.anchor_fraction <= 1:
            raise ConfigError("anchor fraction must be in (0, 1]")


def draw_negatives(corpus, wl, neg_cfg, levels, rng, anchor_fraction=1.0):
    """Fix one negative assignment for every corpus anchor.

    Returns {graph id: [(level, atom, [(neg graph id, neg atom), ...])]}.
    Freezing the draw makes the objective below a deterministic,
    differentiable function of the parameters.
    """
    out = {}
    for g in corpus.graphs:
        anchors = []
        for level in range(1, levels + 1):
            for v in range(g.n_atoms):
                if anchor_fraction < 1.0 and rng.random() >= anchor_fraction:
                    continue
                negs = []
                for _ in range(neg_cfg.k):
                    hit = sample_negative((g.id, v, level), corpus, wl, neg_cfg, rng)
                    if hit is not None:
                        negs.append(hit)
                anchors.append((level, v, negs))
        out[g.id] = anchors
    return out


def semi_objective(labeled, corpus, params, rparams, u_table, neg_cfg, lam,
                   levels, assignments):
    """Full objective value and exact gradients for a fixed negative draw.

    Returns (value, embed grads, readout grads, {graph id: u-row grad}).
    The value is minimized: supervised loss plus lam times the negated
    per-anchor objective, both summed (not averaged).
    """
    graphs = {g.id: g for g in corpus.graphs}
    for g in labeled.graphs:
        graphs.setdefault(g.id, g)
    feats = {gid: forward_levels(g, params, levels) for gid, g in graphs.items()}
    upstream = {gid: np.zeros_like(f.h) for gid, f in feats.items()}

    value = 0.0
    readout_grads = None
    for g in labeled.graphs:
        loss, rg, up = supervised_grads(feats[g.id], rparams, labeled.labels[g.id])
        value += loss
        upstream[g.id] += up
        if readout_grads is None:
            readout_grads = rg
        else:
            for name in rg:
                readout_grads[name] += rg[name]
    if readout_grads is None:
        readout_grads = {name: np.zeros_like(a) for name, a in rparams.as_dict().items()}

    u_grads = {}
    if lam > 0:
        for g in corpus.graphs:
            u_row = u_table.row(g.id)
            g_u = np.zeros_like(u_row)
            for level, v, negs in assignments[g.id]:
                neg_h = [feats[nm].h[level - 1, nv] for nm, nv in negs]
                val, gu, gh, gns = ns_loss_and_grads(
                    u_row, feats[g.id].h[level - 1, v], neg_h, neg_cfg.gamma)
                value += lam * (-val)
                g_u += lam * (-gu)
                upstream[g.id][level - 1, v] += lam * (-gh)
                for (nm, nv), gn in zip(negs, gns):
                    upstream[nm][level - 1, nv] += lam * (-gn)
            u_grads[g.id] = g_u

    embed_grads = None
    for gid, up in upstream.items():
        if not np.any(up):
            continue
        eg = backward_levels(graphs[gid], params, feats[gid], up)
        if embed_grads is None:
            embed_grads = eg
        else:
            for name in eg:
                embed_grads[name] += eg[name]
    if embed_grads is None:
        embed_grads = {name: np.zeros_like(a) for name, a in params.as_dict().items()}
    return value, embed_grads, readout_grads, u_grads


def train_semi(labeled, corpus, cfg, neg_cfg=None, params=None, rparams=None,
               u_table=None):
    """Minibatch training of the semi-supervised objective.

    Each epoch partitions the shuffled corpus into batches; a batch
    contributes the supervised loss of its labeled members and, when
    lam > 0, the regularizer of all members with freshly drawn negatives
    read from cached features.  One optimizer step per batch covers the
    message-passing parameters, the readout, and the touched u rows.

    With lam == 0 and corpus == labeled this is plain supervised training.
    Returns (params, rparams, u_table, history), where history holds one
    (supervised term, regularizer term) pair per epoch.
    """
    if labeled.n_graphs == 0:
        raise ConfigError("no labeled molecules")
    if len(labeled.labels) != labeled.n_graphs:
        raise ConfigError("labeled dataset must be fully labeled")
    labeled_of = {g.id: labeled.labels[g.id] for g in labeled.graphs}
    graphs = {g.id: g for g in corpus.graphs}
    for g in labeled.graphs:
        graphs.setdefault(g.id, g)
    ids = sorted(graphs)
    if neg_cfg is None:
        neg_cfg = NegSamplingConfig()
    if params is None:
        params = init_params(cfg.seed, cfg.d, corpus.vocab)
    if rparams is None:
        rparams = init_readout(cfg.seed, cfg.d, labeled.task, cfg.d_fp, cfg.n_hidden)
    if u_table is None:
        u_table = MoleculeVectorTable.init(ids, params.d, cfg.seed)
    levels = cfg.levels
    wl = compute_wl_codes(corpus, levels) if cfg.lam > 0 else None
    opt_state, opt_step = make_optimizer(cfg.optimizer, cfg.lr)
    u_state, u_step = make_optimizer(cfg.optimizer, cfg.u_lr)
    embed_dict = params.as_dict()
    readout_dict = rparams.as_dict()

    features = {gid: forward_levels(graphs[gid], params, levels).h for gid in ids}
    pending = {gid: None for gid in ids}

    history = []
    for epoch in range(cfg.epochs):
        rng = Xoshiro256StarStar(cfg.seed, stream=epoch + 2)
        order = list(ids)
        rng.shuffle(order)
        sup_loss = 0.0
        reg_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            batch_feats = {}
            batch_up = {}
            for m_id in batch:
                f = forward_levels(graphs[m_id], params, levels)
                batch_feats[m_id] = f
                features[m_id] = f.h
                batch_up[m_id] = np.zeros_like(f.h)
                if pending[m_id] is not None:
                    batch_up[m_id] += pending[m_id]
                    pending[m_id] = None
            readout_grads = None
            u_grads = {}
            for m_id in batch:
                if m_id in labeled_of:
                    loss, rg, up = supervised_grads(
                        batch_feats[m_id], rparams, labeled_of[m_id])
                    sup_loss += loss
                    batch_up[m_id] += up
                    if readout_grads is None:
                        readout_grads = rg
                    else:
                        for name in rg:
                            readout_grads[name] += rg[name]
                if cfg.lam > 0:
                    u_row = u_table.row(m_id)
                    g_u = np.zeros_like(u_row)
                    graph = graphs[m_id]
                    for level in range(1, levels + 1):
                        for v in range(graph.n_atoms):
                            if (cfg.anchor_fraction < 1.0
                                    and rng.random() >= cfg.anchor_fraction):
                                continue
                            neg_refs = []
                            neg_h = []
                            for _ in range(neg_cfg.k):
                                hit = sample_negative(
                                    (m_id, v, level), corpus, wl, neg_cfg, rng)
                                if hit is None:
                                    continue
                                neg_refs.append(hit)
                                neg_h.append(features[hit[0]][level - 1, hit[1]])
                            val, gu, gh, gns = ns_loss_and_grads(
                                u_row, batch_feats[m_id].h[level - 1, v],
                                neg_h, neg_cfg.gamma)
                            reg_loss += -val
                            g_u -= cfg.lam * gu
                            batch_up[m_id][level - 1, v] -= cfg.lam * gh
                            for (nm, nv), gn in zip(neg_refs, gns):
                                if nm in batch_up:
                                    batch_up[nm][level - 1, nv] -= cfg.lam * gn
                                else:
                                    if pending[nm] is None:
                                        pending[nm] = np.zeros_like(features[nm])
                                    pending[nm][level - 1, nv] -= cfg.lam * gn
                    u_grads[f"u_{m_id}"] = g_u
            embed_grads = None
            for m_id in batch:
                if not np.any(batch_up[m_id]):
                    continue
                eg = backward_levels(graphs[m_id], params, batch_feats[m_id],
                                     batch_up[m_id])
                if embed_grads is None:
                    embed_grads = eg
                else:
                    for name in eg:
                        embed_grads[name] += eg[name]
            if embed_grads is not None:
                opt_step(embed_dict, embed_grads, opt_state)
            if readout_grads is not None:
                opt_step(readout_dict, readout_grads, opt_state)
            if u_grads:
                rows = {name: u_table.row(int(name[2:])) for name in u_grads}
                u_step(rows, u_grads, u_state)
        history.append((sup_loss / labeled.n_graphs,
                        reg_loss / max(corpus.n_graphs, 1)))
    return params, rparams, u_table, history


def predict_dataset(dataset, params, rparams, levels):
    """Predictions keyed by graph id."""
    return {g.id: predict(forward_levels(g, params, levels), rparams)
            for g in dataset.graphs}


def semi_comparison(dataset, seed, labeled_fraction=0.06, test_fraction=0.1,
                    semi_cfg=None, sup_cfg=None, neg_cfg=None,
                    pretrain_cfg=None):
    """Semi-supervised vs. supervised-only test RMSE for one seed.

    Holds out a test split first (those molecules never enter the
    regularizer corpus), keeps labels on a fraction of the remaining
    molecules, then trains (a) on the labeled subset alone with lam = 0
    and (b) on the labeled subset plus the full train-side corpus,
    optionally warm-started by unsupervised training on that corpus
    (pretrain_cfg).  The supervised baseline never sees unlabeled
    molecules, so it gets no warm start.  Returns (semi RMSE, supervised
    RMSE).
    """
    from .eval import regression_metrics
    from .ingest import label_fraction_split, split_dataset
    from .pvns import train_unsupervised

    train, test = split_dataset(dataset, test_fraction, seed)
    labeled, _rest = label_fraction_split(train, labeled_fraction, seed + 1)
    if semi_cfg is None:
        semi_cfg = SemiConfig(epochs=20, seed=seed)
    if sup_cfg is None:
        # same budget on the labeled data, no regularizer, no corpus
        sup_cfg = SemiConfig(epochs=semi_cfg.epochs, seed=seed, lam=0.0,
                             d=semi_cfg.d, levels=semi_cfg.levels,
                             batch_size=semi_cfg.batch_size)
    labels = [test.labels[g.id] for g in test.graphs]

    params = u_table = None
    if pretrain_cfg is not None:
        if neg_cfg is None:
            neg_cfg = NegSamplingConfig()
        params, u_table, _ = train_unsupervised(train, neg_cfg, pretrain_cfg)
    p_semi, r_semi, _, _ = train_semi(labeled, train, semi_cfg, neg_cfg,
                                      params=params, u_table=u_table)
    preds = predict_dataset(test, p_semi, r_semi, semi_cfg.levels)
    semi_rmse, _ = regression_metrics([preds[g.id] for g in test.graphs], labels)

    p_sup, r_sup, _, _ = train_semi(labeled, labeled, sup_cfg)
    preds = predict_dataset(test, p_sup, r_sup, sup_cfg.levels)
    sup_rmse, _ = regression_metrics([preds[g.id] for g in test.graphs], labels)
    return semi_rmse, sup_rmse
