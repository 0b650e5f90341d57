"""Model archives: versioned, diff-able structured text.

Layout: a version line first, scalar `key value` lines, then sections.
Arrays declare their shape up front and store one row per line with
shortest round-trip decimal floats (repr), so save/load is value-exact.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptArchiveError, IoError, VersionError
from .molgraph import AtomVocab
from .nmp import EmbedParams
from .pvns import MoleculeVectorTable
from .readout import ReadoutParams

FORMAT_NAME = "molvec-model"
FORMAT_VERSION = 1


@dataclass
class ModelArchive:
    d: int
    levels: int
    vocab: AtomVocab
    embed: EmbedParams
    readout: ReadoutParams = None
    molvec: MoleculeVectorTable = None
    config: dict = field(default_factory=dict)  # training snapshot, str -> str
    version: int = FORMAT_VERSION


def _write_array(fh, name, arr):
    arr = np.asarray(arr, dtype=np.float64)
    fh.write(f"array {name} {' '.join(str(s) for s in arr.shape)}\n")
    for row in arr.reshape(-1, arr.shape[-1]) if arr.ndim > 1 else [arr]:
        fh.write(" ".join(repr(float(x)) for x in row))
        fh.write("\n")


class _Reader:
    def __init__(self, lines, path):
        self.lines = lines
        self.path = path
        self.pos = 0

    def next(self, expect=None):
        if self.pos >= len(self.lines):
            raise CorruptArchiveError(f"{self.path}: truncated archive")
        line = self.lines[self.pos]
        self.pos += 1
        if expect is not None and not line.startswith(expect + " "):
            raise CorruptArchiveError(f"{self.path}: expected {expect!r}, got {line!r}")
        return line

    def scalar(self, key):
        return self.next(key).split(" ", 1)[1]

    def array(self, name):
        head = self.next("array").split()
        if head[1] != name:
            raise CorruptArchiveError(f"{self.path}: expected array {name!r}, got {head[1]!r}")
        try:
            shape = tuple(int(x) for x in head[2:])
        except ValueError:
            raise CorruptArchiveError(f"{self.path}: bad shape on array {name!r}") from None
        n_rows = 1
        for s in shape[:-1]:
            n_rows *= s
        rows = []
        for _ in range(max(n_rows, 1) if shape else 1):
            parts = self.next().split()
            if len(parts) != (shape[-1] if shape else 1):
                raise CorruptArchiveError(f"{self.path}: array {name!r} row length mismatch")
            try:
                rows.append([float(x) for x in parts])
            except ValueError:
                raise CorruptArchiveError(f"{self.path}: non-numeric value in {name!r}") from None
        return np.array(rows, dtype=np.float64).reshape(shape)


def save_model(archive, path):
    try:
        fh = open(path, "w", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None
    with fh:
        fh.write(f"{FORMAT_NAME} {archive.version}\n")
        fh.write(f"d {archive.d}\n")
        fh.write(f"levels {archive.levels}\n")
        fh.write(f"vocab {' '.join(archive.vocab.symbols)}\n")
        fh.write(f"config {len(archive.config)}\n")
        for key in sorted(archive.config):
            fh.write(f"  {key} {archive.config[key]}\n")
        fh.write("section embed\n")
        for name, arr in archive.embed.as_dict().items():
            _write_array(fh, name, arr)
        if archive.readout is not None:
            fh.write(f"section readout {archive.readout.task}\n")
            for name, arr in archive.readout.as_dict().items():
                _write_array(fh, name, arr)
        if archive.molvec is not None:
            ids = sorted(archive.molvec.row_of)
            fh.write(f"section molvec {' '.join(str(i) for i in ids)}\n")
            rows = np.array([archive.molvec.row(i) for i in ids])
            _write_array(fh, "u", rows)
        fh.write("end\n")


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    rd = _Reader(lines, path)
    head = rd.next().split()
    if len(head) != 2 or head[0] != FORMAT_NAME:
        raise CorruptArchiveError(f"{path}: not a {FORMAT_NAME} archive")
    try:
        version = int(head[1])
    except ValueError:
        raise CorruptArchiveError(f"{path}: bad version field") from None
    if version != FORMAT_VERSION:
        raise VersionError(f"{path}: unknown archive version {version}")
    try:
        d = int(rd.scalar("d"))
        levels = int(rd.scalar("levels"))
    except ValueError:
        raise CorruptArchiveError(f"{path}: bad d/levels fields") from None
    vocab = AtomVocab.from_symbols(rd.scalar("vocab").split())
    try:
        n_config = int(rd.scalar("config"))
    except ValueError:
        raise CorruptArchiveError(f"{path}: bad config count") from None
    config = {}
    for _ in range(n_config):
        parts = rd.next().strip().split(" ", 1)
        config[parts[0]] = parts[1] if len(parts) > 1 else ""

    rd.next("section")  # embed
    rd.pos -= 1
    if rd.next() != "section embed":
        raise CorruptArchiveError(f"{path}: missing embed section")
    atom_embed = rd.array("atom_embed")
    if atom_embed.shape != (len(vocab), d):
        raise CorruptArchiveError(f"{path}: atom_embed shape {atom_embed.shape} "
                                  f"does not match vocab {len(vocab)} x d {d}")
    mats = []
    for name in ("bond_single", "bond_double", "bond_triple", "bond_aromatic"):
        m = rd.array(name)
        if m.shape != (d, d):
            raise CorruptArchiveError(f"{path}: {name} shape {m.shape} != ({d}, {d})")
        mats.append(m)
    embed = EmbedParams(atom_embed, np.stack(mats))

    readout = None
    molvec = None
    while True:
        line = rd.next()
        if line == "end":
            break
        parts = line.split()
        if parts[:2] == ["section", "readout"]:
            if len(parts) != 3:
                raise CorruptArchiveError(f"{path}: readout section missing task")
            task = parts[2]
            W = rd.array("W")
            l1w = rd.array("layer1_W")
            l1b = rd.array("layer1_b")
            l2w = rd.array("layer2_W")
            l2b = rd.array("layer2_b")
            if W.shape[1] != d or l1w.shape[1] != W.shape[0] or \
                    l1b.shape != (l1w.shape[0],) or l2w.shape != (1, l1w.shape[0]) or \
                    l2b.shape != (1,):
                raise CorruptArchiveError(f"{path}: inconsistent readout shapes")
            readout = ReadoutParams(W, l1w, l1b, l2w, l2b, task)
        elif parts[:2] == ["section", "molvec"]:
            try:
                ids = [int(x) for x in parts[2:]]
            except ValueError:
                raise CorruptArchiveError(f"{path}: bad molvec graph ids") from None
            u = rd.array("u")
            if u.shape != (len(ids), d):
                raise CorruptArchiveError(f"{path}: molvec shape {u.shape} != "
                                          f"({len(ids)}, {d})")
            molvec = MoleculeVectorTable(u, {gid: i for i, gid in enumerate(ids)})
        else:
            raise CorruptArchiveError(f"{path}: unexpected line {line!r}")
    return ModelArchive(d, levels, vocab, embed, readout, molvec, config, version)
