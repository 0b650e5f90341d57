"""SMILES subset parsing: hand-checked molecules, errors, positions."""

import pytest

from molvec.errors import ParseError, UnsupportedError
from molvec.molgraph import AtomVocab, BondType
from molvec.smiles import parse_smiles, parse_smiles_symbols


def _count_types(bonds):
    out = {}
    for _, _, t in bonds:
        out[t] = out.get(t, 0) + 1
    return out


def test_benzene():
    # 6 aromatic carbons, 6 aromatic ring bonds
    labels, bonds = parse_smiles_symbols("c1ccccc1")
    assert labels == ("c",) * 6
    assert len(bonds) == 6
    assert _count_types(bonds) == {BondType.AROMATIC: 6}


def test_ethanol():
    # CCO: 3 heavy atoms, 2 single bonds
    labels, bonds = parse_smiles_symbols("CCO")
    assert labels == ("C", "C", "O")
    assert bonds == ((0, 1, BondType.SINGLE), (1, 2, BondType.SINGLE))


def test_acetic_acid():
    # CC(=O)O: 4 heavy atoms, one C=O, two single bonds
    labels, bonds = parse_smiles_symbols("CC(=O)O")
    assert labels == ("C", "C", "O", "O")
    assert _count_types(bonds) == {BondType.SINGLE: 2, BondType.DOUBLE: 1}
    assert (1, 2, BondType.DOUBLE) in bonds


def test_branching_restores_attachment():
    labels, bonds = parse_smiles_symbols("CC(C)(C)C")  # neopentane
    assert labels == ("C",) * 5
    assert sorted(b[:2] for b in bonds) == [(0, 1), (1, 2), (1, 3), (1, 4)]


def test_two_letter_elements():
    labels, _ = parse_smiles_symbols("ClCBr")
    assert labels == ("Cl", "C", "Br")


def test_bracket_atom_element_only():
    labels, _ = parse_smiles_symbols("C[Na]C")
    assert labels == ("C", "Na", "C")
    labels, _ = parse_smiles_symbols("C[N+](C)C")  # charge ignored
    assert labels == ("C", "N", "C", "C")


def test_explicit_hydrogens_dropped():
    labels, bonds = parse_smiles_symbols("O=P([H])(OC)OC")
    assert "H" not in labels
    assert labels == ("O", "P", "O", "C", "O", "C")
    assert len(bonds) == 5


def test_ring_closure_digit_and_percent():
    a = parse_smiles_symbols("C1CCCCC1")
    b = parse_smiles_symbols("C%12CCCCC%12")
    assert a == b


def test_ring_closure_bond_type():
    _, bonds = parse_smiles_symbols("C=1CCCCC1")  # type set at opening
    assert (0, 5, BondType.DOUBLE) in bonds


def test_conflicting_ring_bond_symbols():
    with pytest.raises(ParseError):
        parse_smiles_symbols("C=1CCCCC#1")


def test_aromatic_implicit_bond_requires_both_aromatic():
    _, bonds = parse_smiles_symbols("Cc1ccccc1")  # toluene
    assert (0, 1, BondType.SINGLE) in bonds
    assert _count_types(bonds)[BondType.AROMATIC] == 6


def test_explicit_aromatic_bond_symbol():
    _, bonds = parse_smiles_symbols("c:1:c:c:c:c:c1")
    assert _count_types(bonds) == {BondType.AROMATIC: 6}


@pytest.mark.parametrize("text,pos", [
    ("C/C=C/C", 2),
    ("C[C@H](N)O", 4),
    ("CC.OC", 3),
    ("C*C", 2),
])
def test_unsupported_tokens_with_position(text, pos):
    with pytest.raises(UnsupportedError) as exc:
        parse_smiles_symbols(text)
    assert exc.value.position == pos


@pytest.mark.parametrize("text", [
    "", "C(", "C)", "C1CC", "C=", "=C", "C==C", "[CH4", "%1C", "C11",
])
def test_malformed_inputs(text):
    with pytest.raises(ParseError):
        parse_smiles_symbols(text)


def test_parse_smiles_builds_graph():
    g, vocab = parse_smiles("CCO")
    assert g.n_atoms == 3 and g.n_bonds == 2
    assert vocab.symbols == ("C", "O")


def test_parse_smiles_with_fixed_vocab():
    vocab = AtomVocab.from_symbols(["O", "C", "N"])
    g, v2 = parse_smiles("CCO", vocab)
    assert v2 is vocab
    assert g.atoms == (1, 1, 0)
    with pytest.raises(ParseError):
        parse_smiles("CS", vocab)  # S not in vocabulary


def test_token_count_oracle():
    # independent token counter: heavy-atom tokens must equal parsed atoms
    corpus = [
        "CCO", "c1ccccc1", "CC(=O)Oc1ccccc1C(=O)O", "N#Cc1ccccc1",
        "ClC(Cl)(Cl)Cl", "O=C=O", "C1CC1C2CC2", "Brc1ccc(I)cc1",
        "CC(C)C(N)C(=O)O", "c1ccc2ccccc2c1",
    ]
    import re
    token = re.compile(r"Cl|Br|[BCNOPSFI]|[bcnops]")
    for smi in corpus:
        labels, bonds = parse_smiles_symbols(smi)
        assert len(labels) == len(token.findall(smi)), smi
        # every atom reachable: bond count >= atoms - 1 for these molecules
        assert len(bonds) >= len(labels) - 1
