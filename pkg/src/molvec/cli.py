"""Command-line interface.

Subcommands tie the library into reproducible workflows; every source of
randomness derives from --seed, so rerunning a command with identical
inputs produces byte-identical outputs.  Exit codes: 0 success, 1 usage
error, 2 data error, 3 numerics error.

Option precedence: command-line flags override --config file values
override built-in defaults.  The config file holds one `key value` pair
per line (keys match long option names without the leading dashes).
"""

import argparse
import csv
import os
import sys

import numpy as np

from .archive import ModelArchive, load_model, save_model
from .errors import (ConfigError, CorruptArchiveError, DataError, FormatError,
                     GraphError, IoError, NumericsError, ParseError,
                     ShapeError, VersionError, VocabError)
from .eval import SvmConfig, evaluate_protocol
from .ingest import (BINARY_CLASSIFICATION, REGRESSION, label_fraction_split,
                     load_labeled_csv, parse_tu_dataset, write_skip_report)
from .molgraph import AtomVocab, build_adjacency
from .nmp import forward_levels, init_params
from .pvns import (MoleculeVectorTable, NegSamplingConfig, TrainConfig,
                   compute_wl_codes, ns_loss_and_grads, train_unsupervised)
from .readout import fingerprint, init_readout, predict, supervised_grads
from .rng import Xoshiro256StarStar
from .semisup import SemiConfig, draw_negatives, semi_objective, train_semi

_USAGE_ERRORS = (ConfigError,)
_DATA_ERRORS = (ParseError, FormatError, IoError, DataError, GraphError,
                VocabError, ShapeError, VersionError, CorruptArchiveError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _float_repr(x):
    return repr(float(x))


def _load_config_file(path):
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for line_num, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split(None, 1)
                if len(parts) != 2:
                    raise ConfigError(f"{path}: line {line_num}: expected 'key value'")
                values[parts[0].replace("-", "_")] = parts[1]
    except OSError as exc:
        raise IoError(f"cannot read config file {path}: {exc}") from None
    return values


def _apply_config(args, parser):
    """Fill options the command line left at None from the config file."""
    if not getattr(args, "config", None):
        return
    values = _load_config_file(args.config)
    for key, raw in values.items():
        if not hasattr(args, key):
            raise ConfigError(f"config file sets unknown option {key!r}")
        if getattr(args, key) is None:
            setattr(args, key, raw)


def _resolve(args, name, default, cast):
    value = getattr(args, name)
    if value is None:
        return default
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for --{name.replace('_', '-')}: {value!r}") from None


def _load_dataset(args, need_labels):
    fmt = _resolve(args, "format", None, str)
    data = args.data
    if fmt is None:
        fmt = "tu" if os.path.isdir(data) else "smiles-csv"
    if fmt == "tu":
        name = _resolve(args, "tu_name", os.path.basename(os.path.normpath(data)), str)
        return parse_tu_dataset(data, name)
    if fmt == "smiles-csv":
        smiles_col = _resolve(args, "smiles_col", "smiles", str)
        label_col = _resolve(args, "label_col", None, str)
        task = _resolve(args, "task", REGRESSION, str)
        if need_labels and label_col is None:
            raise ConfigError("this command needs labels: pass --label-col")
        return load_labeled_csv(data, smiles_col, label_col, task)
    raise ConfigError(f"unknown --format {fmt!r} (expected 'tu' or 'smiles-csv')")


def _add_data_options(p):
    p.add_argument("--data", required=True, help="TU directory or SMILES CSV")
    p.add_argument("--format", choices=["tu", "smiles-csv"])
    p.add_argument("--tu-name", dest="tu_name")
    p.add_argument("--smiles-col", dest="smiles_col")
    p.add_argument("--label-col", dest="label_col")
    p.add_argument("--task", choices=[REGRESSION, BINARY_CLASSIFICATION])


def _write_embeddings_csv(path, rows):
    """rows: sorted (graph_id, vector) pairs."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        d = len(rows[0][1]) if rows else 0
        writer.writerow(["graph_id"] + [f"dim_{i}" for i in range(d)])
        for gid, vec in rows:
            writer.writerow([gid] + [_float_repr(x) for x in vec])


def _cmd_train_unsup(args):
    _apply_config(args, None)
    dataset = _load_dataset(args, need_labels=False)
    neg = NegSamplingConfig(k=_resolve(args, "k", 10, int),
                            gamma=_resolve(args, "gamma", 0.5, float))
    cfg = TrainConfig(epochs=_resolve(args, "epochs", 50, int),
                      seed=_resolve(args, "seed", 0, int),
                      d=_resolve(args, "d", 100, int),
                      levels=_resolve(args, "L", 3, int),
                      lr=_resolve(args, "lr", 1e-4, float),
                      u_lr=_resolve(args, "u_lr", 2e-2, float),
                      anchor_fraction=_resolve(args, "anchor_fraction", 1.0, float),
                      optimizer=_resolve(args, "optimizer", "adam", str))
    params, u_table, history = train_unsupervised(dataset, neg, cfg)
    snapshot = {"command": "train-unsup", "epochs": str(cfg.epochs),
                "seed": str(cfg.seed), "k": str(neg.k),
                "gamma": _float_repr(neg.gamma), "lr": _float_repr(cfg.lr),
                "u_lr": _float_repr(cfg.u_lr), "optimizer": cfg.optimizer}
    save_model(ModelArchive(cfg.d, cfg.levels, dataset.vocab, params,
                            molvec=u_table, config=snapshot), args.out)
    if args.history:
        with open(args.history, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "mean_objective"])
            for epoch, value in enumerate(history, start=1):
                writer.writerow([epoch, _float_repr(value)])
    if args.skip_report:
        write_skip_report(dataset, args.skip_report)
    print(f"trained on {dataset.n_graphs} molecules, {cfg.epochs} epochs; "
          f"model written to {args.out}")
    return 0


def _cmd_train_semi(args):
    _apply_config(args, None)
    if _resolve(args, "label_col", None, str) is None:
        raise ConfigError("train-semi needs labels: pass --label-col")
    dataset = _load_dataset(args, need_labels=True)
    labeled_frac = _resolve(args, "labeled_frac", None, float)
    seed = _resolve(args, "seed", 0, int)
    if labeled_frac is not None:
        labeled, _unlabeled = label_fraction_split(dataset, labeled_frac, seed)
    else:
        labeled = dataset
    cfg = SemiConfig(epochs=_resolve(args, "epochs", 20, int),
                     seed=seed,
                     lam=_resolve(args, "lam", 0.5, float),
                     d=_resolve(args, "d", 100, int),
                     levels=_resolve(args, "L", 3, int),
                     lr=_resolve(args, "lr", 1e-3, float),
                     u_lr=_resolve(args, "u_lr", 2e-2, float),
                     batch_size=_resolve(args, "batch_size", 16, int),
                     anchor_fraction=_resolve(args, "anchor_fraction", 1.0, float))
    neg = NegSamplingConfig(k=_resolve(args, "k", 10, int),
                            gamma=_resolve(args, "gamma", 0.5, float))
    params, rparams, u_table, history = train_semi(labeled, dataset, cfg, neg)
    snapshot = {"command": "train-semi", "epochs": str(cfg.epochs),
                "seed": str(seed), "lambda": _float_repr(cfg.lam),
                "labeled": str(labeled.n_graphs), "corpus": str(dataset.n_graphs)}
    save_model(ModelArchive(cfg.d, cfg.levels, dataset.vocab, params,
                            readout=rparams, molvec=u_table, config=snapshot),
               args.out)
    if args.skip_report:
        write_skip_report(dataset, args.skip_report)
    print(f"trained on {labeled.n_graphs} labeled of {dataset.n_graphs} molecules; "
          f"model written to {args.out}")
    return 0


def _cmd_embed(args):
    _apply_config(args, None)
    archive = load_model(args.model)
    source = _resolve(args, "source", "u", str)
    if source == "u":
        if archive.molvec is None:
            raise ConfigError(f"{args.model} stores no molecule vectors; "
                              "use --source fingerprint or retrain")
        rows = [(gid, archive.molvec.row(gid))
                for gid in sorted(archive.molvec.row_of)]
    elif source == "fingerprint":
        if archive.readout is None:
            raise ConfigError(f"{args.model} stores no readout; "
                              "fingerprints need a trained W")
        dataset = _load_dataset(args, need_labels=False)
        if dataset.vocab.symbols != archive.vocab.symbols:
            raise DataError("dataset vocabulary does not match the model's")
        rows = []
        for g in dataset.graphs:
            feats = forward_levels(g, archive.embed, archive.levels)
            rows.append((g.id, fingerprint(feats, archive.readout.W)))
    else:
        raise ConfigError(f"unknown --source {source!r} (expected 'u' or 'fingerprint')")
    _write_embeddings_csv(args.out, rows)
    print(f"wrote {len(rows)} embeddings to {args.out}")
    return 0


def _read_embeddings_csv(path):
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "graph_id":
            raise FormatError(f"{path}: expected a graph_id,dim_* header")
        ids = []
        rows = []
        for line in reader:
            ids.append(int(line[0]))
            rows.append([float(x) for x in line[1:]])
    if not rows:
        raise DataError(f"{path}: no embedding rows")
    return ids, np.array(rows, dtype=np.float64)


def _read_labels(args):
    path = args.labels
    if os.path.isdir(path):
        name = _resolve(args, "tu_name", os.path.basename(os.path.normpath(path)), str)
        return parse_tu_dataset(path, name).labels
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"graph_id", "label"} <= set(reader.fieldnames):
            raise FormatError(f"{path}: expected graph_id,label columns")
        labels = {}
        for row in reader:
            labels[int(row["graph_id"])] = float(row["label"])
    return labels


def _cmd_eval_downstream(args):
    _apply_config(args, None)
    ids, X = _read_embeddings_csv(args.embeddings)
    labels = _read_labels(args)
    missing = [gid for gid in ids if gid not in labels]
    if missing:
        raise DataError(f"no label for graph ids {missing[:5]}"
                        f"{'...' if len(missing) > 5 else ''}")
    y = np.array([labels[gid] for gid in ids])
    mean, std, accs = evaluate_protocol(
        X, y,
        repeats=_resolve(args, "repeats", 10, int),
        test_fraction=_resolve(args, "test_frac", 0.1, float),
        seed=_resolve(args, "seed", 0, int),
        svm_cfg=SvmConfig(C=_resolve(args, "C", 1.0, float),
                          seed=_resolve(args, "seed", 0, int)))
    lines = [f"mean_accuracy {_float_repr(mean)}",
             f"std_accuracy {_float_repr(std)}"]
    lines += [f"repeat_{i} {_float_repr(a)}" for i, a in enumerate(accs, start=1)]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


def _cmd_predict(args):
    _apply_config(args, None)
    archive = load_model(args.model)
    if archive.readout is None:
        raise ConfigError(f"{args.model} stores no readout; train with train-semi")
    dataset = _load_dataset(args, need_labels=False)
    if dataset.vocab.symbols != archive.vocab.symbols:
        raise DataError("dataset vocabulary does not match the model's")
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["graph_id", "prediction"])
        for g in dataset.graphs:
            feats = forward_levels(g, archive.embed, archive.levels)
            writer.writerow([g.id, _float_repr(predict(feats, archive.readout))])
    print(f"wrote {dataset.n_graphs} predictions to {args.out}")
    return 0


def run_gradcheck(d=4, levels=3, seed=0, step=1e-5):
    """Finite-difference check of every analytic gradient path.

    Builds a tiny random corpus, freezes one negative draw, and compares
    the exact gradients of the full training objective (supervised +
    regularizer) against central differences.  Returns {group: max
    relative error} for atom_embed, each bond matrix, W, both prediction
    layers, and the molecule-vector rows.
    """
    from .ingest import Dataset

    rng = Xoshiro256StarStar(seed, stream=51)
    vocab = AtomVocab.from_symbols(["C", "N", "O"])
    graphs = []
    for gid in range(4):
        n = 3 + rng.randrange(4)  # 3..6 atoms
        atoms = [rng.randrange(len(vocab)) for _ in range(n)]
        bonds = [(i, i + 1, rng.randrange(4)) for i in range(n - 1)]
        if n > 2 and rng.random() < 0.7:
            bonds.append((0, n - 1, rng.randrange(4)))
        graphs.append(build_adjacency(atoms, bonds, graph_id=gid))
    labels = {0: 0.4, 2: -0.8}
    labeled = Dataset([g for g in graphs if g.id in labels], labels,
                      REGRESSION, vocab, "gradcheck")
    corpus = Dataset(graphs, {}, REGRESSION, vocab, "gradcheck")

    params = init_params(seed, d, vocab)
    rparams = init_readout(seed, d, REGRESSION, d_fp=6, n_hidden=8)
    u_table = MoleculeVectorTable.init([g.id for g in graphs], d, seed)
    neg = NegSamplingConfig(k=3)
    wl = compute_wl_codes(corpus, levels)
    assignments = draw_negatives(corpus, wl, neg, levels, rng)

    def objective():
        return semi_objective(labeled, corpus, params, rparams, u_table,
                              neg, 0.5, levels, assignments)[0]

    _, embed_grads, readout_grads, u_grads = semi_objective(
        labeled, corpus, params, rparams, u_table, neg, 0.5, levels, assignments)

    groups = {}
    for name, arr in {**params.as_dict(), **rparams.as_dict()}.items():
        groups[name] = (arr, embed_grads.get(name, readout_grads.get(name)))
    for gid, grad in u_grads.items():
        groups[f"u_{gid}"] = (u_table.row(gid), grad)

    errors = {}
    for name, (arr, grad) in groups.items():
        fd = np.zeros_like(arr)
        for i in range(arr.size):
            orig = arr.flat[i]
            arr.flat[i] = orig + step
            up = objective()
            arr.flat[i] = orig - step
            down = objective()
            arr.flat[i] = orig
            fd.flat[i] = (up - down) / (2 * step)
        scale = max(float(np.max(np.abs(fd))), 1e-8)
        errors[name] = float(np.max(np.abs(grad - fd))) / scale
    return errors


def _cmd_gradcheck(args):
    _apply_config(args, None)
    errors = run_gradcheck(d=_resolve(args, "d", 4, int),
                           levels=_resolve(args, "L", 3, int),
                           seed=_resolve(args, "seed", 0, int))
    worst = 0.0
    for name in sorted(errors):
        print(f"group {name} max_rel_err {errors[name]:.3e}")
        worst = max(worst, errors[name])
    if worst > 1e-4:
        raise NumericsError(f"gradient check failed: worst relative error {worst:.3e}")
    print(f"all groups within 1e-4 (worst {worst:.3e})")
    return 0


def build_parser():
    parser = _Parser(prog="molvec",
                     description="Hierarchical molecular embeddings: train, "
                                 "embed, evaluate, predict.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-unsup", help="unsupervised embedding training")
    _add_data_options(p)
    for flag in ("--d", "--L", "--k", "--epochs", "--seed"):
        p.add_argument(flag)
    p.add_argument("--gamma")
    p.add_argument("--lr")
    p.add_argument("--u-lr", dest="u_lr")
    p.add_argument("--optimizer")
    p.add_argument("--anchor-fraction", dest="anchor_fraction")
    p.add_argument("--out", required=True)
    p.add_argument("--history", help="optional per-epoch objective CSV")
    p.add_argument("--skip-report", dest="skip_report")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_train_unsup)

    p = sub.add_parser("train-semi", help="semi-supervised property prediction")
    _add_data_options(p)
    p.add_argument("--labeled-frac", dest="labeled_frac")
    p.add_argument("--lambda", dest="lam")
    for flag in ("--d", "--L", "--k", "--epochs", "--seed"):
        p.add_argument(flag)
    p.add_argument("--gamma")
    p.add_argument("--lr")
    p.add_argument("--u-lr", dest="u_lr")
    p.add_argument("--batch-size", dest="batch_size")
    p.add_argument("--anchor-fraction", dest="anchor_fraction")
    p.add_argument("--out", required=True)
    p.add_argument("--skip-report", dest="skip_report")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_train_semi)

    p = sub.add_parser("embed", help="write embeddings CSV from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--source", choices=["u", "fingerprint"])
    p.add_argument("--data", help="needed for --source fingerprint")
    p.add_argument("--format", choices=["tu", "smiles-csv"])
    p.add_argument("--tu-name", dest="tu_name")
    p.add_argument("--smiles-col", dest="smiles_col")
    p.add_argument("--label-col", dest="label_col")
    p.add_argument("--task", choices=[REGRESSION, BINARY_CLASSIFICATION])
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("eval-downstream", help="repeated-split SVM accuracy")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True,
                   help="TU directory or graph_id,label CSV")
    p.add_argument("--tu-name", dest="tu_name")
    p.add_argument("--repeats")
    p.add_argument("--test-frac", dest="test_frac")
    p.add_argument("--seed")
    p.add_argument("--C")
    p.add_argument("--out", help="also write the report to this file")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_eval_downstream)

    p = sub.add_parser("predict", help="write predictions CSV from a model")
    p.add_argument("--model", required=True)
    _add_data_options(p)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p.add_argument("--d")
    p.add_argument("--L")
    p.add_argument("--seed")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
