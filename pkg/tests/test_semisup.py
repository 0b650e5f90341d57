"""Semi-supervised objective and minibatch trainer."""

import numpy as np
import pytest

from molvec.errors import ConfigError
from molvec.ingest import REGRESSION, Dataset
from molvec.molgraph import AtomVocab, build_adjacency
from molvec.nmp import forward_levels, init_params
from molvec.pvns import (MoleculeVectorTable, NegSamplingConfig,
                         compute_wl_codes)
from molvec.readout import init_readout, supervised_loss, predict
from molvec.rng import Xoshiro256StarStar
from molvec.semisup import (SemiConfig, draw_negatives, semi_objective,
                            train_semi)

VOCAB = AtomVocab.from_symbols(["C", "N", "O"])


def _toy(seed=0, n=4):
    rng = Xoshiro256StarStar(seed)
    graphs = []
    for gid in range(n):
        na = 3 + rng.randrange(3)
        atoms = [rng.randrange(3) for _ in range(na)]
        bonds = [(i, i + 1, rng.randrange(4)) for i in range(na - 1)]
        graphs.append(build_adjacency(atoms, bonds, graph_id=gid))
    labels = {0: 0.7, 2: -1.1}
    labeled = Dataset([g for g in graphs if g.id in labels], labels,
                      REGRESSION, VOCAB, "toy")
    corpus = Dataset(graphs, {}, REGRESSION, VOCAB, "toy")
    return labeled, corpus


def test_objective_lam_zero_is_supervised_sum():
    labeled, corpus = _toy()
    params = init_params(0, 5, VOCAB)
    rparams = init_readout(0, 5, REGRESSION, d_fp=4, n_hidden=6)
    u_table = MoleculeVectorTable.init([g.id for g in corpus.graphs], 5, 0)
    value, _, _, u_grads = semi_objective(
        labeled, corpus, params, rparams, u_table, NegSamplingConfig(k=2),
        0.0, 2, assignments=None)
    expected = sum(
        supervised_loss(predict(forward_levels(g, params, 2), rparams),
                        labeled.labels[g.id], REGRESSION)
        for g in labeled.graphs)
    assert value == expected  # bitwise: same code path, no regularizer
    assert u_grads == {}


def test_objective_gradients_match_finite_differences():
    labeled, corpus = _toy(seed=3)
    d, levels, lam = 3, 2, 0.5
    params = init_params(1, d, VOCAB)
    rparams = init_readout(1, d, REGRESSION, d_fp=3, n_hidden=4)
    u_table = MoleculeVectorTable.init([g.id for g in corpus.graphs], d, 1)
    neg = NegSamplingConfig(k=2)
    wl = compute_wl_codes(corpus, levels)
    assignments = draw_negatives(corpus, wl, neg, levels,
                                 Xoshiro256StarStar(9))

    def value():
        return semi_objective(labeled, corpus, params, rparams, u_table,
                              neg, lam, levels, assignments)[0]

    _, eg, rg, ug = semi_objective(labeled, corpus, params, rparams, u_table,
                                   neg, lam, levels, assignments)
    groups = {**{n: (a, eg[n]) for n, a in params.as_dict().items()},
              **{n: (a, rg[n]) for n, a in rparams.as_dict().items()},
              **{f"u_{g}": (u_table.row(g), grad) for g, grad in ug.items()}}
    step = 1e-5
    for name, (arr, grad) in groups.items():
        fd = np.zeros_like(arr)
        for i in range(arr.size):
            orig = arr.flat[i]
            arr.flat[i] = orig + step
            up = value()
            arr.flat[i] = orig - step
            down = value()
            arr.flat[i] = orig
            fd.flat[i] = (up - down) / (2 * step)
        scale = max(np.max(np.abs(fd)), 1e-8)
        assert np.max(np.abs(grad - fd)) / scale <= 1e-4, name


def test_unlabeled_molecules_do_not_enter_supervised_term():
    # with lam = 0, adding unlabeled corpus molecules changes nothing
    labeled, corpus = _toy(seed=5)
    params = init_params(2, 4, VOCAB)
    rparams = init_readout(2, 4, REGRESSION, d_fp=3, n_hidden=4)
    u_table = MoleculeVectorTable.init([g.id for g in corpus.graphs], 4, 2)
    v1 = semi_objective(labeled, labeled, params, rparams, u_table,
                        NegSamplingConfig(), 0.0, 2, None)[0]
    v2 = semi_objective(labeled, corpus, params, rparams, u_table,
                        NegSamplingConfig(), 0.0, 2, None)[0]
    assert v1 == v2


def test_train_semi_deterministic_and_history_shape():
    labeled, corpus = _toy(seed=7)
    cfg = SemiConfig(epochs=3, seed=4, d=5, levels=2, batch_size=2)
    neg = NegSamplingConfig(k=2)
    p1, r1, u1, h1 = train_semi(labeled, corpus, cfg, neg)
    p2, r2, u2, h2 = train_semi(labeled, corpus, cfg, neg)
    assert h1 == h2
    assert len(h1) == 3
    for sup, reg in h1:
        assert sup >= 0.0 and reg >= 0.0
    assert np.array_equal(p1.atom_embed, p2.atom_embed)
    assert np.array_equal(r1.W, r2.W)
    assert np.array_equal(u1.u, u2.u)


def test_train_semi_reduces_supervised_loss():
    labeled, _ = _toy(seed=9)
    cfg = SemiConfig(epochs=30, seed=1, lam=0.0, d=6, levels=2, batch_size=4)
    _, _, _, history = train_semi(labeled, labeled, cfg)
    assert history[-1][0] < history[0][0]


def test_train_semi_input_validation():
    labeled, corpus = _toy()
    with pytest.raises(ConfigError):
        train_semi(Dataset([], {}, REGRESSION, VOCAB, "e"), corpus,
                   SemiConfig(epochs=1, seed=0, d=4, levels=2))
    with pytest.raises(ConfigError):
        # corpus has no labels, so it is not "fully labeled"
        train_semi(corpus, corpus, SemiConfig(epochs=1, seed=0, d=4, levels=2))
    with pytest.raises(ConfigError):
        SemiConfig(epochs=1, seed=0, lam=-0.1)
    with pytest.raises(ConfigError):
        SemiConfig(epochs=1, seed=0, batch_size=0)
