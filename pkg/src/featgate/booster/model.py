"""Trained-ensemble container, prediction, and versioned JSON persistence."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, IoError, ShapeMismatch
from .kernel import LEAF, predict_trees
from .params import HyperParams

FORMAT_NAME = "featgate-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Tree:
    """Flat node arrays; feat == -1 marks a leaf, children partition rows."""

    feat: np.ndarray   # int64, -1 for leaves
    thr: np.ndarray    # float64 bin-boundary values; x <= thr goes left
    left: np.ndarray   # int64
    right: np.ndarray  # int64
    value: np.ndarray  # float64, meaningful at leaves

    @property
    def n_leaves(self) -> int:
        return int((self.feat == LEAF).sum())

    def max_depth(self) -> int:
        depth = np.zeros(len(self.feat), np.int64)
        deepest = 0
        for node in range(len(self.feat)):  # parents precede children
            if self.feat[node] != LEAF:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
            else:
                deepest = max(deepest, int(depth[node]))
        return deepest


@dataclass
class BoostedModel:
    trees: list[Tree]
    tree_weights: np.ndarray
    base_score: float
    params: HyperParams
    feature_names: list[str]
    train_loss_curve: np.ndarray = field(default_factory=lambda: np.empty(0))
    _packed: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def packed(self) -> tuple:
        """Concatenated node arrays with global child indices, for the kernel."""
        if self._packed is None:
            sizes = [len(t.feat) for t in self.trees]
            offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
            if self.trees:
                feat = np.concatenate([t.feat for t in self.trees])
                thr = np.concatenate([t.thr for t in self.trees])
                left = np.concatenate(
                    [t.left + o for t, o in zip(self.trees, offsets)])
                right = np.concatenate(
                    [t.right + o for t, o in zip(self.trees, offsets)])
                value = np.concatenate([t.value for t in self.trees])
            else:
                feat = np.empty(0, np.int64)
                thr = np.empty(0, np.float64)
                left = np.empty(0, np.int64)
                right = np.empty(0, np.int64)
                value = np.empty(0, np.float64)
            self._packed = (feat, thr, left, right, value, offsets)
        return self._packed


def predict(m: BoostedModel, X: np.ndarray, n_jobs: int | None = None) -> np.ndarray:
    """base_score + sum of weighted tree outputs; pure, order-preserving.

    n_jobs is accepted for interface symmetry; the traversal is always the
    same single-threaded kernel, so parallelism can never change a byte.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatch("X must be 2-dimensional")
    if X.shape[1] != m.n_features:
        raise ShapeMismatch(
            f"model expects {m.n_features} columns, got {X.shape[1]}")
    feat, thr, left, right, value, offsets = m.packed()
    out = np.empty(X.shape[0], dtype=np.float64)
    predict_trees(X, feat, thr, left, right, value, offsets,
                  np.asarray(m.tree_weights, dtype=np.float64),
                  m.base_score, out)
    return out


# -- JSON serialization ------------------------------------------------------

def _node_to_dict(t: Tree, node: int) -> dict:
    if t.feat[node] == LEAF:
        return {"value": float(t.value[node])}
    return {
        "feature": int(t.feat[node]),
        "threshold": float(t.thr[node]),
        "left": _node_to_dict(t, int(t.left[node])),
        "right": _node_to_dict(t, int(t.right[node])),
    }


def _node_from_dict(d: dict, arrays: list) -> int:
    feat, thr, left, right, value = arrays
    idx = len(feat)
    if "value" in d:
        feat.append(LEAF)
        thr.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(d["value"]))
        return idx
    feat.append(int(d["feature"]))
    thr.append(float(d["threshold"]))
    left.append(-1)
    right.append(-1)
    value.append(0.0)
    left[idx] = _node_from_dict(d["left"], arrays)
    right[idx] = _node_from_dict(d["right"], arrays)
    return idx


def model_to_dict(m: BoostedModel) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "base_score": float(m.base_score),
        "params": m.params.to_dict(),
        "feature_names": list(m.feature_names),
        "tree_weights": [float(w) for w in m.tree_weights],
        "trees": [_node_to_dict(t, 0) for t in m.trees],
    }


def model_from_dict(doc: dict) -> BoostedModel:
    if doc.get("format") != FORMAT_NAME:
        raise ConfigError(f"not a {FORMAT_NAME} document")
    if doc.get("version") != FORMAT_VERSION:
        raise ConfigError(f"unsupported model version {doc.get('version')!r}")
    trees = []
    for td in doc["trees"]:
        arrays: list = [[], [], [], [], []]
        _node_from_dict(td, arrays)
        trees.append(Tree(
            feat=np.asarray(arrays[0], np.int64),
            thr=np.asarray(arrays[1], np.float64),
            left=np.asarray(arrays[2], np.int64),
            right=np.asarray(arrays[3], np.int64),
            value=np.asarray(arrays[4], np.float64),
        ))
    return BoostedModel(
        trees=trees,
        tree_weights=np.asarray(doc["tree_weights"], np.float64),
        base_score=float(doc["base_score"]),
        params=HyperParams.from_dict(doc["params"]),
        feature_names=list(doc["feature_names"]),
    )


def save_model(m: BoostedModel, path) -> None:
    """Atomic write: the file either has the full document or the old content."""
    path = os.fspath(path)
    doc = model_to_dict(m)
    try:
        parent = os.path.dirname(path) or "."
        os.makedirs(parent, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=parent, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(str(exc)) from None


def load_model(path) -> BoostedModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise IoError(str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed model JSON in {path}: {exc}") from None
    return model_from_dict(doc)
