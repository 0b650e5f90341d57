"""Graph model and WL hashing, with an independent hash oracle."""

import pytest

from molvec.errors import ConfigError, GraphError
from molvec.molgraph import (AtomVocab, BondType, MoleculeGraph,
                             build_adjacency, canonical_signature, fnv1a64,
                             wl_node_hash)
from molvec.rng import Xoshiro256StarStar


def _ref_fnv1a64(data):
    # independent transcription of the published FNV-1a parameters
    h = 14695981039346656037
    for b in data:
        h = ((h ^ b) * 1099511628211) % (1 << 64)
    return h


def _random_graph(rng, max_atoms=12, n_types=4):
    n = 2 + rng.randrange(max_atoms - 1)
    atoms = [rng.randrange(n_types) for _ in range(n)]
    bonds = [(i, i + 1, rng.randrange(4)) for i in range(n - 1)]  # spanning path
    for _ in range(rng.randrange(n)):
        u, v = rng.randrange(n), rng.randrange(n)
        if u != v and all({u, v} != {a, b} for a, b, _ in bonds):
            bonds.append((u, v, rng.randrange(4)))
    return atoms, bonds


def _permute(atoms, bonds, perm):
    inv = {old: new for new, old in enumerate(perm)}
    return ([atoms[i] for i in perm],
            [(inv[u], inv[v], t) for u, v, t in bonds])


def test_fnv_matches_reference():
    for data in (b"", b"a", b"foobar", bytes(range(256))):
        assert fnv1a64(data) == _ref_fnv1a64(data)


def test_bond_type_codes():
    assert [int(t) for t in (BondType.SINGLE, BondType.DOUBLE,
                             BondType.TRIPLE, BondType.AROMATIC)] == [0, 1, 2, 3]


def test_vocab_lookup_roundtrip():
    v = AtomVocab.from_symbols(["C", "N", "O", "c"])
    assert len(v) == 4
    assert all(v.lookup(s) == i for i, s in enumerate(v.symbols))
    assert "N" in v and "P" not in v


def test_vocab_rejects_duplicates():
    with pytest.raises(ConfigError):
        AtomVocab.from_symbols(["C", "C"])


def test_build_adjacency_canonicalizes():
    g = build_adjacency([0, 1, 0], [(2, 0, BondType.DOUBLE), (1, 2, 0)])
    assert g.bonds == ((0, 2, BondType.DOUBLE), (1, 2, BondType.SINGLE))
    assert g.adjacency[2] == ((0, BondType.DOUBLE), (1, BondType.SINGLE))


def test_build_adjacency_rejects_bad_bonds():
    with pytest.raises(GraphError):
        build_adjacency([0, 1], [(0, 2, 0)])
    with pytest.raises(GraphError):
        build_adjacency([0, 1], [(1, 1, 0)])
    with pytest.raises(GraphError):
        build_adjacency([0, 1], [(0, 1, 0), (1, 0, 2)])


def test_wl_level1_is_atom_type_hash():
    g = build_adjacency([2, 0, 2], [(0, 1, 0), (1, 2, 0)])
    codes = wl_node_hash(g, 1)
    assert codes.at(1, 0) == codes.at(1, 2)  # same type, same code
    assert codes.at(1, 0) != codes.at(1, 1)
    assert codes.at(1, 0) == _ref_fnv1a64((2).to_bytes(8, "little"))


def test_wl_level2_oracle():
    # two carbons joined by a double bond: each sees the other
    g = build_adjacency([0, 0], [(0, 1, BondType.DOUBLE)])
    c1 = _ref_fnv1a64((0).to_bytes(8, "little"))
    payload = (c1.to_bytes(8, "little")
               + int(BondType.DOUBLE).to_bytes(8, "little")
               + c1.to_bytes(8, "little"))
    assert wl_node_hash(g, 2).at(2, 0) == _ref_fnv1a64(payload)


def test_wl_multiset_invariant_under_permutation():
    rng = Xoshiro256StarStar(10)
    for _ in range(50):
        atoms, bonds = _random_graph(rng)
        g = build_adjacency(atoms, bonds)
        perm = list(range(len(atoms)))
        rng.shuffle(perm)
        g2 = build_adjacency(*_permute(atoms, bonds, perm))
        for lvl in range(1, 4):
            a = sorted(wl_node_hash(g, 3).codes[lvl - 1])
            b = sorted(wl_node_hash(g2, 3).codes[lvl - 1])
            assert a == b


def test_wl_separates_structures():
    path = build_adjacency([0] * 4, [(0, 1, 0), (1, 2, 0), (2, 3, 0)])
    ring = build_adjacency([0] * 4, [(0, 1, 0), (1, 2, 0), (2, 3, 0), (0, 3, 0)])
    assert (sorted(wl_node_hash(path, 3).codes[-1])
            != sorted(wl_node_hash(ring, 3).codes[-1]))
    # bond type matters too
    single = build_adjacency([0, 0], [(0, 1, BondType.SINGLE)])
    double = build_adjacency([0, 0], [(0, 1, BondType.DOUBLE)])
    assert wl_node_hash(single, 2).at(2, 0) != wl_node_hash(double, 2).at(2, 0)


def test_wl_rejects_bad_level():
    g = build_adjacency([0], [])
    with pytest.raises(ConfigError):
        wl_node_hash(g, 0)


def test_canonical_signature_permutation_invariant():
    rng = Xoshiro256StarStar(11)
    for _ in range(20):
        atoms, bonds = _random_graph(rng)
        g = build_adjacency(atoms, bonds)
        perm = list(range(len(atoms)))
        rng.shuffle(perm)
        g2 = build_adjacency(*_permute(atoms, bonds, perm))
        assert canonical_signature(g) == canonical_signature(g2)


def test_canonical_signature_empty_graph():
    g = MoleculeGraph((), (), ())
    payload = (0).to_bytes(8, "little") * 2
    assert canonical_signature(g) == _ref_fnv1a64(payload)


def test_with_id():
    g = build_adjacency([0], [], graph_id=3)
    assert g.id == 3 and g.with_id(9).id == 9
    assert g.with_id(9).atoms == g.atoms
