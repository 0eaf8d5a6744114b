"""Model persistence: a self-describing, versioned JSON layout.

The file records the format version, the model kind, its constructor
parameters, the fitted state as flattened tree arrays, and the
fingerprint of the vocabulary the model was trained against.  Loading
with a different vocabulary is an error, because feature columns
would silently mean different tokens.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .base import FingerprintMismatch
from .forest import ExtraTrees, RandomForest, VotingEnsemble
from .multilabel import (BinaryRelevance, ClassifierChain, MultiOutputForest,
                         MultiOutputVoting)
from .tree import Tree

MODEL_FORMAT_VERSION = 1

_KINDS = {
    RandomForest: "random_forest",
    ExtraTrees: "extra_trees",
    VotingEnsemble: "voting_ensemble",
    ClassifierChain: "classifier_chain",
    BinaryRelevance: "binary_relevance",
    MultiOutputForest: "multi_output_forest",
    MultiOutputVoting: "multi_output_voting",
}
_CLASSES = {name: cls for cls, name in _KINDS.items()}


def _encode_tree(tree: Tree) -> dict:
    return {
        "feature": [int(v) for v in tree.feature],
        "threshold": [float(v) for v in tree.threshold],
        "left": [int(v) for v in tree.left],
        "right": [int(v) for v in tree.right],
        "leaf_hist": [None if h is None else [list(c) for c in h]
                      for h in tree.leaf_hist],
    }


def _decode_tree(blob: dict, n_classes, n_features: int) -> Tree:
    return Tree(
        feature=np.array(blob["feature"], dtype=np.int64),
        threshold=np.array(blob["threshold"], dtype=np.float64),
        left=np.array(blob["left"], dtype=np.int64),
        right=np.array(blob["right"], dtype=np.int64),
        leaf_hist=tuple(None if h is None else tuple(tuple(int(v) for v in c) for c in h)
                        for h in blob["leaf_hist"]),
        n_classes=tuple(n_classes),
        n_features=n_features,
    )


def _encode_forest(model) -> dict:
    return {
        "n_features": model.n_features_,
        "n_classes": list(model.n_classes_),
        "single": model._single,
        "trees": [_encode_tree(t) for t in model.trees_],
    }


def _decode_forest(model, state: dict):
    model.n_features_ = int(state["n_features"])
    model.n_classes_ = tuple(int(c) for c in state["n_classes"])
    model._single = bool(state["single"])
    model.trees_ = tuple(_decode_tree(b, model.n_classes_, model.n_features_)
                         for b in state["trees"])
    return model


def _encode_voting(model: VotingEnsemble) -> dict:
    return {
        "n_features": model.n_features_,
        "n_classes": model.n_classes_,
        "members": [{"kind": _KINDS[type(m)], "params": _jsonable(m.get_params()),
                     "state": _encode_forest(m)} for m in model.members_],
    }


def _decode_voting(model: VotingEnsemble, state: dict) -> VotingEnsemble:
    model.n_features_ = int(state["n_features"])
    model.n_classes_ = int(state["n_classes"])
    members = []
    for blob in state["members"]:
        member = _CLASSES[blob["kind"]](**_params_from(blob["params"]))
        members.append(_decode_forest(member, blob["state"]))
    model.members_ = members
    return model


def _encode_link(link) -> dict:
    if isinstance(link, VotingEnsemble):
        return {"kind": "voting_ensemble", "state": _encode_voting(link)}
    return {"kind": _KINDS[type(link)], "params": _jsonable(link.get_params()),
            "state": _encode_forest(link)}


def _decode_link(blob: dict):
    if blob["kind"] == "voting_ensemble":
        return _decode_voting(VotingEnsemble(), blob["state"])
    link = _CLASSES[blob["kind"]](**_params_from(blob["params"]))
    return _decode_forest(link, blob["state"])


def _encode_state(model) -> dict:
    if isinstance(model, (RandomForest, ExtraTrees)):
        return _encode_forest(model)
    if isinstance(model, VotingEnsemble):
        return _encode_voting(model)
    if isinstance(model, ClassifierChain):
        return {
            "n_features": model.n_features_,
            "order": list(model.order_),
            "links": [_encode_link(link) for link in model.links_],
        }
    if isinstance(model, BinaryRelevance):
        return {
            "n_features": model.n_features_,
            "links": [_encode_link(link) for link in model.links_],
        }
    if isinstance(model, MultiOutputForest):
        return {"n_features": model.n_features_, "forest": _encode_forest(model.forest_)}
    if isinstance(model, MultiOutputVoting):
        return {
            "n_features": model.n_features_,
            "members": [{"params": _jsonable(m.get_params()),
                         "state": _encode_state(m)} for m in model.members_],
        }
    raise ValueError(f"cannot serialize {type(model).__name__}")


def _decode_state(model, state: dict):
    if isinstance(model, (RandomForest, ExtraTrees)):
        return _decode_forest(model, state)
    if isinstance(model, VotingEnsemble):
        return _decode_voting(model, state)
    if isinstance(model, ClassifierChain):
        model.n_features_ = int(state["n_features"])
        model.order_ = tuple(int(i) for i in state["order"])
        model.links_ = tuple(_decode_link(blob) for blob in state["links"])
        return model
    if isinstance(model, BinaryRelevance):
        model.n_features_ = int(state["n_features"])
        model.links_ = tuple(_decode_link(blob) for blob in state["links"])
        return model
    if isinstance(model, MultiOutputForest):
        model.n_features_ = int(state["n_features"])
        model.forest_ = _decode_forest(model._forest(model.seed), state["forest"])
        return model
    if isinstance(model, MultiOutputVoting):
        model.n_features_ = int(state["n_features"])
        members = []
        for blob in state["members"]:
            member = MultiOutputForest(**_params_from(blob["params"]))
            members.append(_decode_state(member, blob["state"]))
        model.members_ = tuple(members)
        return model
    raise ValueError(f"cannot restore {type(model).__name__}")


def _jsonable(params: dict) -> dict:
    out = {}
    for key, value in params.items():
        out[key] = list(value) if isinstance(value, tuple) else value
    return out


def _params_from(blob: dict) -> dict:
    out = {}
    for key, value in blob.items():
        out[key] = tuple(value) if isinstance(value, list) else value
    return out


def save_model(model, path: str, vocabulary=None) -> None:
    record = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": _KINDS[type(model)],
        "vocab_fingerprint": vocabulary.fingerprint if vocabulary is not None else "",
        "params": _jsonable(model.get_params()),
        "state": _encode_state(model),
    }
    text = json.dumps(record, indent=1, sort_keys=True) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_model(path: str, vocabulary=None):
    with open(path, encoding="utf-8") as fh:
        record = json.load(fh)
    version = record.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    stored = record.get("vocab_fingerprint", "")
    if vocabulary is not None and stored and stored != vocabulary.fingerprint:
        raise FingerprintMismatch(
            f"model was trained against vocabulary {stored[:12]}..., "
            f"got {vocabulary.fingerprint[:12]}...")
    cls = _CLASSES.get(record.get("kind"))
    if cls is None:
        raise ValueError(f"unknown model kind {record.get('kind')!r}")
    model = cls(**_params_from(record["params"]))
    return _decode_state(model, record["state"])


def model_kind(path: str) -> str:
    name = os.path.basename(path)
    with open(path, encoding="utf-8") as fh:
        record = json.load(fh)
    kind = record.get("kind", "")
    if kind not in _CLASSES:
        raise ValueError(f"unknown model kind in {name}")
    return kind
