"""Hierarchical molecular graph embeddings.

Unsupervised per-molecule vectors trained by discriminating a molecule's
own multi-level substructure features from randomly sampled ones, plus a
fingerprint readout for supervised and semi-supervised property
prediction.  See the README for the CLI workflows.
"""

from .archive import ModelArchive, load_model, save_model
from .errors import (ConfigError, CorruptArchiveError, DataError, FormatError,
                     GraphError, IoError, MolvecError, NumericsError,
                     ParseError, ShapeError, UnsupportedError, VersionError,
                     VocabError)
from .eval import (SvmConfig, evaluate_protocol, regression_metrics,
                   svm_objective, train_linear_svm)
from .ingest import (BINARY_CLASSIFICATION, REGRESSION, Dataset,
                     label_fraction_split, load_labeled_csv, parse_tu_dataset,
                     split_dataset)
from .molgraph import (AtomVocab, BondType, MoleculeGraph, build_adjacency,
                       canonical_signature, wl_node_hash)
from .nmp import EmbedParams, backward_levels, forward_levels, init_params
from .pvns import (MoleculeVectorTable, NegSamplingConfig, TrainConfig,
                   mean_objective, ns_loss_and_grads, sample_negative,
                   train_unsupervised)
from .readout import ReadoutParams, fingerprint, init_readout, predict
from .semisup import (SemiConfig, predict_dataset, semi_comparison,
                      semi_objective, train_semi)
from .smiles import parse_smiles

__version__ = "0.1.0"
