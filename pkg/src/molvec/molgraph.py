"""Molecular graph data model and Weisfeiler-Lehman node hashing.

Graphs are immutable once built: atoms are integer type ids into an
AtomVocab, bonds carry one of four types, and the adjacency is stored
per atom with neighbors in ascending index order.

WL codes give a structural identity to the rooted subgraph of radius
l-1 around each atom; equal codes at level l mean (up to hash collision)
identical rooted neighborhoods.  They back the negative-sampler rejection
test and dataset deduplication.
"""

from dataclasses import dataclass, field
from enum import IntEnum

from .errors import ConfigError, GraphError

# FNV-1a 64-bit constants
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


class BondType(IntEnum):
    SINGLE = 0
    DOUBLE = 1
    TRIPLE = 2
    AROMATIC = 3


@dataclass(frozen=True)
class AtomVocab:
    """Dense mapping between atom-type labels and integer ids.

    Labels are element symbols with a lowercase form marking aromaticity
    ("C" vs "c").  Ids are assigned in insertion order, 0..len-1.
    """

    symbols: tuple

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise ConfigError("vocabulary labels must be distinct")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.symbols)})

    def __len__(self):
        return len(self.symbols)

    def __contains__(self, symbol):
        return symbol in self._index

    def lookup(self, symbol):
        return self._index[symbol]

    @staticmethod
    def from_symbols(symbols):
        return AtomVocab(tuple(symbols))


@dataclass(frozen=True)
class MoleculeGraph:
    """Heavy-atom molecular graph.

    atoms: per-atom type id.
    bonds: canonical bond list, one entry per unordered pair, u < v.
    adjacency: per-atom list of (neighbor, BondType), ascending neighbor.
    id: corpus-unique integer, -1 if unassigned.
    """

    atoms: tuple
    bonds: tuple
    adjacency: tuple
    id: int = -1

    @property
    def n_atoms(self):
        return len(self.atoms)

    @property
    def n_bonds(self):
        return len(self.bonds)

    def with_id(self, graph_id):
        return MoleculeGraph(self.atoms, self.bonds, self.adjacency, graph_id)


@dataclass(frozen=True)
class WlCodes:
    """codes[l-1][v] is the 64-bit WL code of atom v at level l."""

    codes: tuple

    @property
    def levels(self):
        return len(self.codes)

    def at(self, level, atom):
        return self.codes[level - 1][atom]


def build_adjacency(atoms, bonds, graph_id=-1):
    """Assemble a validated MoleculeGraph from atom ids and typed bonds.

    Bonds may arrive in either endpoint order; they are canonicalized to
    u < v and neighbors are sorted ascending so the result is a pure
    function of the input sets.
    """
    n = len(atoms)
    canonical = []
    seen = set()
    for u, v, t in bonds:
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"bond endpoint ({u},{v}) out of range for {n} atoms")
        if u == v:
            raise GraphError(f"self-loop on atom {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphError(f"duplicate bond between atoms {key[0]} and {key[1]}")
        seen.add(key)
        canonical.append((key[0], key[1], BondType(t)))
    canonical.sort(key=lambda b: (b[0], b[1]))
    neighbors = [[] for _ in range(n)]
    for u, v, t in canonical:
        neighbors[u].append((v, t))
        neighbors[v].append((u, t))
    adjacency = tuple(tuple(sorted(nb)) for nb in neighbors)
    return MoleculeGraph(tuple(int(a) for a in atoms), tuple(canonical), adjacency, graph_id)


def fnv1a64(data):
    """FNV-1a 64-bit hash of a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _u64le(value):
    return int(value).to_bytes(8, "little")


def wl_node_hash(graph, levels):
    """Weisfeiler-Lehman relabelling with a seedless 64-bit hash.

    Level 1 hashes the atom type alone.  Each further level hashes the
    atom's previous code together with the multiset of (bond type,
    neighbor code) pairs, sorted ascending, so the code identifies the
    rooted subgraph of radius level-1 independent of atom numbering.
    """
    if levels < 1:
        raise ConfigError(f"level count must be >= 1, got {levels}")
    n = graph.n_atoms
    current = [fnv1a64(_u64le(graph.atoms[v])) for v in range(n)]
    all_levels = [tuple(current)]
    for _ in range(levels - 1):
        nxt = []
        for v in range(n):
            pairs = sorted((int(t), current[w]) for w, t in graph.adjacency[v])
            data = bytearray(_u64le(current[v]))
            for bond_code, neighbor_code in pairs:
                data += _u64le(bond_code)
                data += _u64le(neighbor_code)
            nxt.append(fnv1a64(bytes(data)))
        current = nxt
        all_levels.append(tuple(current))
    return WlCodes(tuple(all_levels))


def canonical_signature(graph, levels=3):
    """Permutation-invariant 64-bit identity for a whole graph.

    Hashes the sorted final-level WL codes together with the atom and
    bond counts.  The empty graph hashes to fnv1a64 of the two zero
    counts (0x88201FB960FF6465).
    """
    codes = [] if graph.n_atoms == 0 else sorted(wl_node_hash(graph, levels).codes[-1])
    data = bytearray(_u64le(graph.n_atoms))
    data += _u64le(graph.n_bonds)
    for c in codes:
        data += _u64le(c)
    return fnv1a64(bytes(data))
