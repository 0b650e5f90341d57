"""Dataset ingestion: TU benchmark directories, SMILES CSVs, and splits.

A Dataset couples a list of MoleculeGraph (ids 0..n-1 within the corpus)
with an optional label map, a task kind, and the atom vocabulary the
graphs are encoded against.  Rows of bulk SMILES inputs that fall outside
the supported subset are skipped and reported, never silently dropped.
"""

import csv
import os
from dataclasses import dataclass, field

from .errors import ConfigError, FormatError, IoError, ParseError
from .molgraph import AtomVocab, BondType, build_adjacency
from .rng import Xoshiro256StarStar
from .smiles import parse_smiles_symbols

BINARY_CLASSIFICATION = "binary-classification"
REGRESSION = "regression"

# Edge-label integer -> BondType, per dataset.  The MUTAG map matches the
# dataset README shipped alongside the data files (0 aromatic, 1 single,
# 2 double, 3 triple); the bundled PTC_MR files are generated with the
# same convention.
EDGE_LABEL_MAPS = {
    "MUTAG": {0: BondType.AROMATIC, 1: BondType.SINGLE, 2: BondType.DOUBLE, 3: BondType.TRIPLE},
    "PTC_MR": {0: BondType.AROMATIC, 1: BondType.SINGLE, 2: BondType.DOUBLE, 3: BondType.TRIPLE},
}

# Node-label integer -> atom-type symbol, per dataset README.
NODE_LABEL_MAPS = {
    "MUTAG": {0: "C", 1: "N", 2: "O", 3: "F", 4: "I", 5: "Cl", 6: "Br"},
    "PTC_MR": {i: s for i, s in enumerate(
        ["Ba", "Br", "C", "Ca", "Cl", "Cu", "F", "I", "In", "K", "N", "Na",
         "O", "P", "Pb", "S", "Sn", "Zn"])},
}


@dataclass
class Dataset:
    graphs: list
    labels: dict  # graph id -> float
    task: str
    vocab: AtomVocab
    name: str
    skip_report: list = field(default_factory=list)  # (row number, reason)

    @property
    def n_graphs(self):
        return len(self.graphs)

    def graph_ids(self):
        return [g.id for g in self.graphs]

    def __post_init__(self):
        ids = set(self.graph_ids())
        for gid in self.labels:
            if gid not in ids:
                raise FormatError(f"label references unknown graph id {gid}")
        if self.task == BINARY_CLASSIFICATION:
            bad = {v for v in self.labels.values() if v not in (0.0, 1.0)}
            if bad:
                raise FormatError(f"binary labels must be 0/1, got {sorted(bad)}")


def _read_int_lines(path, what):
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise IoError(f"cannot read {what} file {path}: {exc}") from None
    try:
        return [int(ln) for ln in lines]
    except ValueError as exc:
        raise FormatError(f"{what} file {path}: {exc}") from None


def parse_tu_dataset(directory, name, edge_label_map=None, node_label_map=None):
    """Load a TU-format benchmark directory into a Dataset.

    Expects ``<name>_A.txt``, ``_graph_indicator.txt``, ``_graph_labels.txt``
    and ``_node_labels.txt``; ``_edge_labels.txt`` is optional (all bonds
    default to single without it).  Indices are 1-based; every undirected
    edge must appear in both directions with matching labels.
    """
    def p(suffix):
        return os.path.join(directory, f"{name}_{suffix}.txt")

    for suffix in ("A", "graph_indicator", "graph_labels", "node_labels"):
        if not os.path.isfile(p(suffix)):
            raise IoError(f"missing required file {p(suffix)}")

    indicator = _read_int_lines(p("graph_indicator"), "graph indicator")
    node_labels = _read_int_lines(p("node_labels"), "node labels")
    graph_labels = _read_int_lines(p("graph_labels"), "graph labels")
    if len(indicator) != len(node_labels):
        raise FormatError("graph_indicator and node_labels disagree on node count")
    if indicator and min(indicator) < 1:
        raise FormatError("graph indicator uses 0; TU format is 1-based")
    n_graphs = max(indicator) if indicator else 0
    if n_graphs != len(graph_labels):
        raise FormatError("graph_labels count does not match graph indicator range")

    try:
        with open(p("A"), encoding="utf-8") as fh:
            arcs = []
            for ln in fh:
                ln = ln.strip()
                if not ln:
                    continue
                u, v = (int(x) for x in ln.split(","))
                arcs.append((u, v))
    except OSError as exc:
        raise IoError(f"cannot read adjacency file {p('A')}: {exc}") from None
    except ValueError as exc:
        raise FormatError(f"adjacency file {p('A')}: {exc}") from None

    if os.path.isfile(p("edge_labels")):
        edge_labels = _read_int_lines(p("edge_labels"), "edge labels")
        if len(edge_labels) != len(arcs):
            raise FormatError("edge_labels count does not match adjacency line count")
        if edge_label_map is None:
            edge_label_map = EDGE_LABEL_MAPS.get(name)
        if edge_label_map is None:
            raise ConfigError(f"no edge-label map known for dataset {name!r}")
    else:
        edge_labels = [None] * len(arcs)
        edge_label_map = {}

    n_nodes = len(indicator)
    directed = {}
    for (u, v), el in zip(arcs, edge_labels):
        if not (1 <= u <= n_nodes and 1 <= v <= n_nodes):
            raise FormatError(f"edge ({u},{v}) references a node outside 1..{n_nodes}")
        if indicator[u - 1] != indicator[v - 1]:
            raise FormatError(f"edge ({u},{v}) crosses graphs "
                              f"{indicator[u - 1]} and {indicator[v - 1]}")
        directed[(u, v)] = el
    for (u, v), el in directed.items():
        if directed.get((v, u), "missing") != el:
            raise FormatError(f"edge ({u},{v}) lacks a matching reverse entry")

    if node_label_map is None:
        node_label_map = NODE_LABEL_MAPS.get(name)
    observed = sorted(set(node_labels))
    if node_label_map is None:
        node_label_map = {nl: str(nl) for nl in observed}
    for nl in observed:
        if nl not in node_label_map:
            raise FormatError(f"node label {nl} missing from node-label map")
    vocab = AtomVocab.from_symbols([node_label_map[nl] for nl in observed])

    # per-graph local node numbering in file order
    local_index = {}
    atoms_per_graph = [[] for _ in range(n_graphs)]
    for node, g in enumerate(indicator, start=1):
        local_index[node] = len(atoms_per_graph[g - 1])
        atoms_per_graph[g - 1].append(vocab.lookup(node_label_map[node_labels[node - 1]]))

    bonds_per_graph = [[] for _ in range(n_graphs)]
    for (u, v), el in directed.items():
        if u < v:
            if el is None:
                t = BondType.SINGLE
            else:
                if el not in edge_label_map:
                    raise FormatError(f"unknown edge label {el} on edge ({u},{v})")
                t = edge_label_map[el]
            g = indicator[u - 1] - 1
            bonds_per_graph[g].append((local_index[u], local_index[v], t))

    graphs = [
        build_adjacency(atoms_per_graph[g], bonds_per_graph[g], graph_id=g)
        for g in range(n_graphs)
    ]

    label_set = set(graph_labels)
    if label_set <= {0, 1}:
        labels = {g: float(graph_labels[g]) for g in range(n_graphs)}
    elif label_set <= {-1, 1}:
        labels = {g: (1.0 if graph_labels[g] == 1 else 0.0) for g in range(n_graphs)}
    else:
        raise FormatError(f"cannot normalize graph labels {sorted(label_set)} to 0/1")

    return Dataset(graphs, labels, BINARY_CLASSIFICATION, vocab, name)


def load_labeled_csv(path, smiles_column, label_column=None, task=REGRESSION,
                     name=None):
    """Load a SMILES CSV into a Dataset, optionally with labels.

    Rows whose SMILES fail to parse are skipped and recorded in the
    dataset's skip report as (1-based data row number, reason).  A label
    that cannot be interpreted for the task aborts with FormatError.
    With ``label_column=None`` the dataset is loaded unlabeled.
    """
    if task not in (REGRESSION, BINARY_CLASSIFICATION):
        raise ConfigError(f"unknown task {task!r}")
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise FormatError(f"{path}: empty file, header row required")
        for col in (smiles_column, label_column):
            if col is not None and col not in reader.fieldnames:
                raise FormatError(f"{path}: missing column {col!r}")
        parsed = []  # (row, labels tuple, bonds, label value)
        skip_report = []
        for row_num, row in enumerate(reader, start=1):
            smiles = (row[smiles_column] or "").strip()
            if label_column is None:
                label = None
            else:
                raw_label = (row[label_column] or "").strip()
                if task == REGRESSION:
                    try:
                        label = float(raw_label)
                    except ValueError:
                        raise FormatError(
                            f"{path}: row {row_num}: label {raw_label!r} is not numeric"
                        ) from None
                else:
                    if raw_label not in ("0", "1"):
                        raise FormatError(
                            f"{path}: row {row_num}: label {raw_label!r} is not 0/1"
                        )
                    label = float(raw_label)
            try:
                symbols, bonds = parse_smiles_symbols(smiles)
            except ParseError as exc:
                skip_report.append((row_num, str(exc)))
                continue
            parsed.append((symbols, bonds, label))
    if not parsed:
        raise FormatError(f"{path}: no parseable rows")
    all_symbols = sorted({s for symbols, _, _ in parsed for s in symbols})
    vocab = AtomVocab.from_symbols(all_symbols)
    graphs = []
    labels = {}
    for gid, (symbols, bonds, label) in enumerate(parsed):
        graphs.append(build_adjacency([vocab.lookup(s) for s in symbols], bonds, graph_id=gid))
        if label is not None:
            labels[gid] = label
    return Dataset(graphs, labels, task, vocab,
                   name or os.path.basename(path), skip_report)


def write_skip_report(dataset, path):
    """Write the dataset's skip report as `row=<n> reason=<msg>` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for row_num, reason in dataset.skip_report:
            fh.write(f"row={row_num} reason={reason}\n")


def _subset(dataset, ids, keep_labels=True):
    ids = set(ids)
    graphs = [g for g in dataset.graphs if g.id in ids]
    labels = {gid: v for gid, v in dataset.labels.items()
              if gid in ids and keep_labels}
    return Dataset(graphs, labels, dataset.task, dataset.vocab, dataset.name)


def split_dataset(dataset, test_fraction, seed):
    """Deterministic shuffled train/test partition; floor(fraction*n) test."""
    if not 0 < test_fraction < 1:
        raise ConfigError(f"test fraction must be in (0,1), got {test_fraction}")
    n = dataset.n_graphs
    n_test = int(test_fraction * n)
    if n_test == 0 or n_test == n:
        raise ConfigError(f"fraction {test_fraction} yields an empty side for n={n}")
    order = dataset.graph_ids()
    Xoshiro256StarStar(seed).shuffle(order)
    test_ids = order[:n_test]
    train_ids = order[n_test:]
    return _subset(dataset, train_ids), _subset(dataset, test_ids)


def label_fraction_split(dataset, labeled_fraction, seed):
    """Keep labels on floor(fraction*n) graphs; strip them from the rest."""
    if not 0 < labeled_fraction < 1:
        raise ConfigError(f"labeled fraction must be in (0,1), got {labeled_fraction}")
    if len(dataset.labels) != dataset.n_graphs:
        raise ConfigError("label_fraction_split requires a fully labeled dataset")
    n = dataset.n_graphs
    n_labeled = int(labeled_fraction * n)
    if n_labeled == 0:
        raise ConfigError(f"fraction {labeled_fraction} leaves no labeled graphs")
    order = dataset.graph_ids()
    Xoshiro256StarStar(seed).shuffle(order)
    labeled_ids = order[:n_labeled]
    unlabeled_ids = order[n_labeled:]
    return _subset(dataset, labeled_ids), _subset(dataset, unlabeled_ids, keep_labels=False)
