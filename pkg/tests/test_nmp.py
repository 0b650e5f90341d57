"""Message passing forward/backward and optimizers, against numeric oracles."""

import numpy as np
import pytest

from molvec.errors import ConfigError, NumericsError, ShapeError, VocabError
from molvec.molgraph import AtomVocab, build_adjacency
from molvec.nmp import (AdamState, EmbedParams, adam_update, backward_levels,
                        forward_levels, init_params, make_optimizer,
                        sgd_update)
from molvec.rng import Xoshiro256StarStar

VOCAB = AtomVocab.from_symbols(["C", "N", "O"])


def _random_instance(seed, d=4, levels=3, max_atoms=6):
    rng = Xoshiro256StarStar(seed)
    n = 2 + rng.randrange(max_atoms - 1)
    atoms = [rng.randrange(3) for _ in range(n)]
    bonds = [(i, i + 1, rng.randrange(4)) for i in range(n - 1)]
    if n > 2:
        bonds.append((0, n - 1, rng.randrange(4)))
    graph = build_adjacency(atoms, bonds)
    params = init_params(seed, d, VOCAB)
    upstream = np.array([[[rng.uniform(-1, 1) for _ in range(d)]
                          for _ in range(n)] for _ in range(levels)])
    return graph, params, upstream


def test_forward_hand_example():
    # 2 atoms, single bond, identity bond matrix:
    # h2 = sigmoid(h1 + swap(h1)) elementwise
    params = EmbedParams(np.array([[0.2, 0.4]]), np.stack([np.eye(2)] * 4))
    g = build_adjacency([0, 0], [(0, 1, 0)])
    h = forward_levels(g, params, 2).h
    assert np.allclose(h[0], [[0.2, 0.4], [0.2, 0.4]])
    expected = 1.0 / (1.0 + np.exp(-np.array([0.4, 0.8])))
    assert np.allclose(h[1], [expected, expected], atol=1e-12)
    assert np.allclose(expected, [0.59868766, 0.68997448], atol=1e-7)


def test_forward_level1_is_embedding():
    params = init_params(0, 4, VOCAB)
    g = build_adjacency([2, 0], [(0, 1, 1)])
    h = forward_levels(g, params, 1).h
    assert np.array_equal(h[0, 0], params.atom_embed[2])
    assert np.array_equal(h[0, 1], params.atom_embed[0])


def test_forward_outputs_bounded():
    g, params, _ = _random_instance(3)
    h = forward_levels(g, params, 4).h
    assert np.all((h[1:] > 0) & (h[1:] < 1))  # sigmoid range after level 1


def test_forward_equivariance():
    rng = Xoshiro256StarStar(9)
    for seed in range(10):
        g, params, _ = _random_instance(seed)
        n = g.n_atoms
        perm = list(range(n))
        rng.shuffle(perm)
        inv = {old: new for new, old in enumerate(perm)}
        g2 = build_adjacency([g.atoms[i] for i in perm],
                             [(inv[u], inv[v], t) for u, v, t in g.bonds])
        h = forward_levels(g, params, 3).h
        h2 = forward_levels(g2, params, 3).h
        for lvl in range(3):
            for new, old in enumerate(perm):
                assert np.max(np.abs(h2[lvl, new] - h[lvl, old])) <= 1e-9


def test_forward_rejects_unknown_atom():
    params = init_params(0, 4, VOCAB)
    g = build_adjacency([7], [])
    with pytest.raises(VocabError):
        forward_levels(g, params, 2)
    with pytest.raises(ConfigError):
        forward_levels(build_adjacency([0], []), params, 0)


def test_init_deterministic_and_near_identity():
    a = init_params(5, 8, VOCAB)
    b = init_params(5, 8, VOCAB)
    assert np.array_equal(a.atom_embed, b.atom_embed)
    assert np.array_equal(a.bond_mats, b.bond_mats)
    assert np.max(np.abs(a.atom_embed)) < 0.1
    for m in a.bond_mats:
        assert np.max(np.abs(m - np.eye(8))) < 0.01


def test_backward_matches_finite_differences():
    step = 1e-5
    for seed in range(5):
        g, params, upstream = _random_instance(seed)
        feats = forward_levels(g, params, 3)
        grads = backward_levels(g, params, feats, upstream)

        def loss():
            return float(np.sum(forward_levels(g, params, 3).h * upstream))

        for name, arr in params.as_dict().items():
            fd = np.zeros_like(arr)
            for i in range(arr.size):
                orig = arr.flat[i]
                arr.flat[i] = orig + step
                up = loss()
                arr.flat[i] = orig - step
                down = loss()
                arr.flat[i] = orig
                fd.flat[i] = (up - down) / (2 * step)
            scale = max(np.max(np.abs(fd)), 1e-8)
            assert np.max(np.abs(grads[name] - fd)) / scale <= 1e-4, name


def test_backward_shape_mismatch():
    g, params, upstream = _random_instance(1)
    feats = forward_levels(g, params, 3)
    with pytest.raises(ShapeError):
        backward_levels(g, params, feats, upstream[:2])


def _ref_adam(param, grads, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
    # independent straightforward Adam transcription
    m = np.zeros_like(param)
    v = np.zeros_like(param)
    p = param.copy()
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        p = p - lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
    return p


def test_adam_matches_reference():
    rng = np.random.default_rng(0)
    p = rng.normal(size=(3, 2))
    gs = [rng.normal(size=(3, 2)) for _ in range(5)]
    params = {"w": p.copy()}
    state = AdamState(lr=1e-3)
    for g in gs:
        adam_update(params, {"w": g}, state)
    assert np.allclose(params["w"], _ref_adam(p, gs), atol=1e-14)


def test_adam_lazy_slots_independent_timesteps():
    # a parameter first updated late must still get t=1 bias correction
    state = AdamState(lr=0.1)
    a = {"a": np.zeros(2)}
    for _ in range(10):
        adam_update(a, {"a": np.ones(2)}, state)
    b = {"b": np.zeros(2)}
    adam_update(b, {"b": np.ones(2)}, state)
    # first Adam step has magnitude ~lr regardless of history elsewhere
    assert np.allclose(b["b"], -0.1, atol=1e-6)


def test_adam_rejects_nonfinite_and_mismatched():
    state = AdamState()
    params = {"w": np.zeros(2)}
    with pytest.raises(NumericsError, match="w"):
        adam_update(params, {"w": np.array([1.0, np.nan])}, state)
    assert np.array_equal(params["w"], np.zeros(2))  # untouched
    with pytest.raises(ShapeError):
        adam_update(params, {"w": np.zeros(3)}, state)
    with pytest.raises(ShapeError):
        adam_update(params, {"zz": np.zeros(2)}, state)


def test_sgd_and_factory():
    state, step = make_optimizer("sgd", 0.5)
    params = {"w": np.ones(2)}
    step(params, {"w": np.ones(2)}, state)
    assert np.allclose(params["w"], 0.5)
    with pytest.raises(NumericsError):
        sgd_update(params, {"w": np.array([np.inf, 0.0])}, state)
    with pytest.raises(ConfigError):
        make_optimizer("lbfgs", 0.1)
