"""Tree-ensemble learning: forests, voting, chains, multi-output."""

from .base import (Dataset, DimensionMismatch, EmptyDataset,
                   FingerprintMismatch, class_vector, derive_seed, label_matrix)
from .forest import (ExtraTrees, RandomForest, VotingEnsemble, majority_vote,
                     resolve_subsample)
from .io import MODEL_FORMAT_VERSION, load_model, model_kind, save_model
from .multilabel import (BinaryRelevance, ClassifierChain, MultiOutputForest,
                         MultiOutputVoting)
from .tree import DecisionTree, Tree, TreeParams, build_tree

__all__ = [
    "BinaryRelevance",
    "ClassifierChain",
    "Dataset",
    "DecisionTree",
    "DimensionMismatch",
    "EmptyDataset",
    "ExtraTrees",
    "FingerprintMismatch",
    "MODEL_FORMAT_VERSION",
    "MultiOutputForest",
    "MultiOutputVoting",
    "RandomForest",
    "Tree",
    "TreeParams",
    "VotingEnsemble",
    "build_tree",
    "class_vector",
    "derive_seed",
    "label_matrix",
    "load_model",
    "majority_vote",
    "model_kind",
    "resolve_subsample",
    "save_model",
]
