"""Rank-constrained linear classifier: embedding table ``A`` and output ``B``.

The hidden vector is the weighted average of the ``A`` rows named by a
feature vector.  ``B`` has one row per label for the full softmax, or one
row per internal Huffman node for the hierarchical softmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from quicktext._backend import kernels
from quicktext.config import HIERARCHICAL, SOFTMAX
from quicktext.dictionary import FeatureVector
from quicktext.huffman import HuffmanTree


@dataclass
class Scratch:
    """Per-worker buffers reused across steps; never shared."""

    hidden: np.ndarray
    grad: np.ndarray
    output: np.ndarray

    @classmethod
    def for_model(cls, model: "Model") -> "Scratch":
        dt = model.A.dtype
        return cls(
            np.zeros(model.dim, dtype=dt),
            np.zeros(model.dim, dtype=dt),
            np.zeros(model.B.shape[0], dtype=dt),
        )


@dataclass
class Model:
    A: np.ndarray
    B: np.ndarray
    loss_kind: str
    tree: Optional[HuffmanTree] = None
    epochs: int = 0
    _scratch: Optional[Scratch] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.A.ndim != 2 or self.B.ndim != 2 or self.A.shape[1] != self.B.shape[1]:
            raise ValueError("A and B must be matrices with the same column count")
        if self.A.dtype != self.B.dtype:
            raise ValueError("A and B must share a dtype")
        if self.loss_kind == HIERARCHICAL:
            if self.tree is None:
                raise ValueError("hierarchical model needs a Huffman tree")
            if self.B.shape[0] != self.tree.k - 1:
                raise ValueError("hierarchical B needs k-1 rows")
        elif self.loss_kind != SOFTMAX:
            raise ValueError(f"unknown loss kind {self.loss_kind!r}")

    @classmethod
    def initialize(cls, nfeatures: int, nlabels: int, dim: int, loss_kind: str,
                   label_counts=None, seed: int = 0, dtype=np.float32) -> "Model":
        """``A`` uniform in ``[-1/dim, 1/dim)``, ``B`` zero."""
        rng = np.random.default_rng(seed)
        A = rng.random((nfeatures, dim), dtype=dtype)
        A *= 2.0 / dim
        A -= 1.0 / dim
        tree = None
        if loss_kind == HIERARCHICAL:
            tree = HuffmanTree(label_counts if label_counts is not None else [1] * nlabels)
            rows = nlabels - 1
        else:
            rows = nlabels
        B = np.zeros((rows, dim), dtype=dtype)
        return cls(A, B, loss_kind, tree)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def nlabels(self) -> int:
        return self.tree.k if self.loss_kind == HIERARCHICAL else self.B.shape[0]

    @property
    def hierarchical(self) -> bool:
        return self.loss_kind == HIERARCHICAL

    def scratch(self) -> Scratch:
        if self._scratch is None:
            self._scratch = Scratch.for_model(self)
        return self._scratch


def compute_hidden(features: FeatureVector, A: np.ndarray) -> np.ndarray:
    if len(features) == 0:
        raise ValueError("cannot embed an empty feature vector")
    hidden = np.zeros(A.shape[1], dtype=A.dtype)
    kernels.compute_hidden(A, features.ids, features.weight, hidden)
    return hidden


def softmax(scores) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    e = np.exp(s - s.max())
    return e / e.sum()


def log_softmax(scores) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    shifted = s - s.max()
    return shifted - math.log(np.exp(shifted).sum())


def log_sigmoid(x: float) -> float:
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


def full_softmax_step(model: Model, features: FeatureVector, label: int, lr: float,
                      scratch: Optional[Scratch] = None) -> float:
    """One SGD step on the full-softmax loss; returns the pre-update loss."""
    if len(features) == 0:
        raise ValueError("cannot train on an empty feature vector")
    s = scratch or model.scratch()
    return kernels.softmax_step(model.A, model.B, features.ids, features.weight,
                                label, lr, s.hidden, s.grad, s.output)


def hierarchical_softmax_step(model: Model, features: FeatureVector, label: int,
                              lr: float, scratch: Optional[Scratch] = None) -> float:
    """One SGD step along ``label``'s tree path; returns the pre-update loss."""
    if len(features) == 0:
        raise ValueError("cannot train on an empty feature vector")
    if not 0 <= label < model.tree.k:
        raise IndexError(f"label {label} out of range")
    offsets, rows, codes = model.tree.flat_paths()
    p0, p1 = offsets[label], offsets[label + 1]
    s = scratch or model.scratch()
    return kernels.hs_step(model.A, model.B, features.ids, features.weight,
                           rows[p0:p1], codes[p0:p1], lr, s.hidden, s.grad)


def step(model: Model, features: FeatureVector, label: int, lr: float,
         scratch: Optional[Scratch] = None) -> float:
    if model.hierarchical:
        return hierarchical_softmax_step(model, features, label, lr, scratch)
    return full_softmax_step(model, features, label, lr, scratch)


def node_branch_log_probs(model: Model, hidden, node: int):
    """Log-probabilities of taking the left (code 0) and right child."""
    s = float(np.dot(model.B[node - model.tree.k], np.asarray(hidden, dtype=np.float64)))
    return log_sigmoid(s), log_sigmoid(-s)


def leaf_log_probability(model: Model, hidden, label: int) -> float:
    """Log-probability of the root-to-leaf path of ``label``."""
    nodes, code = model.tree.path(label)
    k = model.tree.k
    hidden = np.asarray(hidden, dtype=np.float64)
    total = 0.0
    for node, c in zip(nodes, code):
        s = float(np.dot(model.B[node - k], hidden))
        total += log_sigmoid(-s if c else s)
    return total


def label_log_probabilities(model: Model, hidden) -> np.ndarray:
    """Log-probability of every label, by exhaustive scoring."""
    if model.hierarchical:
        return np.array([leaf_log_probability(model, hidden, i) for i in range(model.tree.k)])
    return log_softmax(model.B @ hidden)
