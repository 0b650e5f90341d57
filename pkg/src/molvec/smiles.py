"""SMILES parsing for a documented organic subset.

Supported: organic-subset atoms (B, C, N, O, P, S, F, Cl, Br, I), aromatic
lowercase forms (b, c, n, o, p, s), explicit bonds ``- = # :``, implicit
single/aromatic bonds, ring closures (digits and %nn), branches, and
bracket atoms parsed for their element symbol only (isotope, charge and
hydrogen counts inside brackets are ignored).

Out of subset: stereo markers (``/ \\ @``), dot-disconnected components,
wildcard ``*``.  These raise UnsupportedError
naming the token and its 1-based position; structural mistakes (unbalanced
parentheses, dangling ring closures, trailing bonds) raise ParseError.

Hydrogens are never materialized: graphs contain heavy atoms only.
"""

from .errors import ParseError, UnsupportedError
from .molgraph import AtomVocab, BondType, build_adjacency

ORGANIC_TWO_LETTER = ("Cl", "Br")
ORGANIC_ONE_LETTER = "BCNOPSFI"
AROMATIC_LETTERS = "bcnops"

_BOND_SYMBOLS = {
    "-": BondType.SINGLE,
    "=": BondType.DOUBLE,
    "#": BondType.TRIPLE,
    ":": BondType.AROMATIC,
}


class _Atom:
    __slots__ = ("symbol", "aromatic")

    def __init__(self, symbol, aromatic):
        self.symbol = symbol
        self.aromatic = aromatic


def _parse_bracket(text, start):
    """Parse a bracket atom starting at ``text[start] == '['``.

    Returns (_Atom, index one past the closing bracket).  Only the element
    symbol is interpreted; isotope digits, hydrogen counts and charges are
    skipped.
    """
    i = start + 1
    end = text.find("]", i)
    if end < 0:
        raise ParseError("unclosed bracket atom", start + 1)
    body = text[i:end]
    for off, ch in enumerate(body):
        if ch == "@":
            raise UnsupportedError("stereo token '@'", i + off + 1)
    j = 0
    while j < len(body) and body[j].isdigit():  # isotope, ignored
        j += 1
    if j >= len(body):
        raise ParseError("bracket atom without element symbol", i + j)
    ch = body[j]
    if ch.isupper():
        symbol = ch
        if j + 1 < len(body) and body[j + 1].islower() and body[j + 1] != "h":
            # two-letter element; 'h' would be a hydrogen count on a
            # one-letter element, never part of a symbol we accept
            candidate = ch + body[j + 1]
            if candidate != "H":
                symbol = candidate
                j += 1
        j += 1
        aromatic = False
    elif ch in AROMATIC_LETTERS:
        symbol = ch
        j += 1
        aromatic = True
    else:
        raise UnsupportedError(f"unsupported bracket element '{ch}'", i + j + 1)
    for off in range(j, len(body)):
        if body[off] not in "H+-0123456789":
            raise UnsupportedError(f"unsupported bracket token '{body[off]}'", i + off + 1)
    return _Atom(symbol, aromatic), end + 1


def parse_smiles_symbols(text):
    """Parse SMILES into (atom labels, typed bonds).

    Labels are element symbols, lowercased when aromatic.  Bonds are
    (u, v, BondType) with atom indices in order of appearance.
    """
    if not text:
        raise ParseError("empty SMILES string", 1)
    atoms = []  # _Atom
    bonds = []
    prev = None  # index of the atom a new atom bonds to
    pending = None  # explicit bond symbol awaiting its second atom
    branch_stack = []  # (prev index, position of '(')
    ring_open = {}  # closure id -> (atom index, explicit bond or None)
    i = 0
    n = len(text)

    def finish_bond(u, v, explicit_u, explicit_v=None):
        if explicit_u is not None and explicit_v is not None and explicit_u != explicit_v:
            raise ParseError("conflicting ring-closure bond symbols", i)
        explicit = explicit_u if explicit_u is not None else explicit_v
        if explicit is None:
            both_aromatic = atoms[u].aromatic and atoms[v].aromatic
            t = BondType.AROMATIC if both_aromatic else BondType.SINGLE
        else:
            t = explicit
        bonds.append((u, v, t))

    def add_atom(atom):
        nonlocal prev, pending
        atoms.append(atom)
        idx = len(atoms) - 1
        if prev is not None:
            finish_bond(prev, idx, pending)
        elif pending is not None:
            raise ParseError("bond symbol without preceding atom", i)
        pending = None
        prev = idx

    def close_ring(ring_id, pos):
        nonlocal pending
        if prev is None:
            raise ParseError("ring closure before any atom", pos)
        if ring_id in ring_open:
            u, explicit_open = ring_open.pop(ring_id)
            if u == prev:
                raise ParseError(f"ring closure {ring_id} bonds an atom to itself", pos)
            finish_bond(u, prev, explicit_open, pending)
        else:
            ring_open[ring_id] = (prev, pending)
        pending = None

    while i < n:
        ch = text[i]
        if ch in "/\\@":
            raise UnsupportedError(f"stereo token '{ch}'", i + 1)
        if ch == ".":
            raise UnsupportedError("dot-disconnected components", i + 1)
        if ch == "*":
            raise UnsupportedError("wildcard atom '*'", i + 1)
        if ch == "[":
            atom, i = _parse_bracket(text, i)
            add_atom(atom)
            continue
        if text[i : i + 2] in ORGANIC_TWO_LETTER:
            add_atom(_Atom(text[i : i + 2], False))
            i += 2
            continue
        if ch in ORGANIC_ONE_LETTER:
            add_atom(_Atom(ch, False))
            i += 1
            continue
        if ch in AROMATIC_LETTERS:
            add_atom(_Atom(ch, True))
            i += 1
            continue
        if ch in _BOND_SYMBOLS:
            if pending is not None:
                raise ParseError("two consecutive bond symbols", i + 1)
            pending = _BOND_SYMBOLS[ch]
            i += 1
            continue
        if ch.isdigit():
            close_ring(int(ch), i + 1)
            i += 1
            continue
        if ch == "%":
            if i + 2 >= n or not (text[i + 1].isdigit() and text[i + 2].isdigit()):
                raise ParseError("'%' ring closure needs two digits", i + 1)
            close_ring(int(text[i + 1 : i + 3]), i + 1)
            i += 3
            continue
        if ch == "(":
            if prev is None:
                raise ParseError("branch before any atom", i + 1)
            branch_stack.append((prev, i + 1))
            i += 1
            continue
        if ch == ")":
            if not branch_stack:
                raise ParseError("unbalanced ')'", i + 1)
            if pending is not None:
                raise ParseError("dangling bond before ')'", i + 1)
            prev, _ = branch_stack.pop()
            i += 1
            continue
        raise UnsupportedError(f"unsupported token '{ch}'", i + 1)

    if branch_stack:
        raise ParseError("unbalanced '('", branch_stack[-1][1])
    if pending is not None:
        raise ParseError("dangling bond at end of input", n)
    if ring_open:
        ring_id = sorted(ring_open)[0]
        raise ParseError(f"unmatched ring closure {ring_id}", n)
    # drop explicit hydrogens ([H], [2H], ...) and their bonds: graphs are
    # heavy-atom only, matching the implicit-hydrogen convention
    keep = [i for i, a in enumerate(atoms) if a.symbol != "H"]
    if not keep:
        raise ParseError("no heavy atoms in SMILES string", 1)
    remap = {old: new for new, old in enumerate(keep)}
    labels = tuple(atoms[i].symbol for i in keep)
    heavy_bonds = tuple(
        (remap[u], remap[v], t) for u, v, t in bonds if u in remap and v in remap
    )
    return labels, heavy_bonds


def parse_smiles(text, vocab=None):
    """Parse SMILES into a MoleculeGraph.

    When ``vocab`` is given, atom labels are encoded against it (labels
    missing from the vocabulary raise ParseError so corpus loaders can
    report the row).  Otherwise a fresh per-molecule vocabulary is built
    in order of first appearance.
    """
    labels, bonds = parse_smiles_symbols(text)
    if vocab is None:
        seen = []
        for s in labels:
            if s not in seen:
                seen.append(s)
        vocab = AtomVocab.from_symbols(seen)
    try:
        atom_ids = [vocab.lookup(s) for s in labels]
    except KeyError as exc:
        raise ParseError(f"atom label {exc} not in vocabulary") from None
    return build_adjacency(atom_ids, bonds), vocab
