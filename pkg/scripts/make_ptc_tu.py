"""Regenerate the bundled PTC_MR benchmark directory from its SMILES list.

Reads data/PTC_MR/PTC_MR.smi (lines of `<compound id>,<±1 label>,<SMILES>`)
and writes the standard multi-file plain-text benchmark layout next to it,
using the same conventions as the bundled MUTAG directory: 1-based node
ids, every undirected edge in both directions, edge labels 0 aromatic /
1 single / 2 double / 3 triple.  Aromatic atoms keep their element symbol
(aromaticity is carried by the edge label), and the node-label integer
assignment is written to README.txt.

Run from the repository root:  python3 scripts/make_ptc_tu.py
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from molvec.molgraph import BondType  # noqa: E402
from molvec.smiles import parse_smiles_symbols  # noqa: E402

EDGE_CODE = {BondType.AROMATIC: 0, BondType.SINGLE: 1,
             BondType.DOUBLE: 2, BondType.TRIPLE: 3}


def main():
    src = os.path.join("data", "PTC_MR", "PTC_MR.smi")
    out_dir = os.path.dirname(src)
    molecules = []
    symbols = set()
    for line in open(src, encoding="utf-8"):
        line = line.strip()
        if not line:
            continue
        _compound, label, smiles = line.split(",", 2)
        labels, bonds = parse_smiles_symbols(smiles)
        # aromaticity lives on the bonds; atoms keep the plain element
        labels = tuple(s.capitalize() for s in labels)
        symbols.update(labels)
        molecules.append((int(label), labels, bonds))

    node_code = {s: i for i, s in enumerate(sorted(symbols))}

    def path(suffix):
        return os.path.join(out_dir, f"PTC_MR_{suffix}.txt")

    offset = 0
    with open(path("A"), "w") as f_a, \
            open(path("graph_indicator"), "w") as f_ind, \
            open(path("graph_labels"), "w") as f_gl, \
            open(path("node_labels"), "w") as f_nl, \
            open(path("edge_labels"), "w") as f_el:
        for graph_num, (label, labels, bonds) in enumerate(molecules, start=1):
            f_gl.write(f"{label}\n")
            for s in labels:
                f_ind.write(f"{graph_num}\n")
                f_nl.write(f"{node_code[s]}\n")
            for u, v, t in sorted((min(u, v), max(u, v), t) for u, v, t in bonds):
                a, b = offset + u + 1, offset + v + 1
                f_a.write(f"{a}, {b}\n")
                f_a.write(f"{b}, {a}\n")
                f_el.write(f"{EDGE_CODE[t]}\n")
                f_el.write(f"{EDGE_CODE[t]}\n")
            offset += len(labels)

    n_pos = sum(1 for label, _, _ in molecules if label == 1)
    with open(os.path.join(out_dir, "README.txt"), "w") as fh:
        fh.write(
            "PTC_MR: 344 compounds labeled by carcinogenicity in male rats\n"
            f"(+1: {n_pos}, -1: {len(molecules) - n_pos}).\n\n"
            "Generated from PTC_MR.smi by scripts/make_ptc_tu.py.  Layout and\n"
            "conventions follow the MUTAG directory: 1-based node ids, each\n"
            "undirected edge listed in both directions.\n\n"
            "Edge labels: 0 aromatic, 1 single, 2 double, 3 triple.\n\n"
            "Node labels:\n")
        for s, i in sorted(node_code.items(), key=lambda kv: kv[1]):
            fh.write(f"  {i}  {s}\n")
    print(f"wrote {len(molecules)} graphs, {len(node_code)} atom types")


if __name__ == "__main__":
    main()
