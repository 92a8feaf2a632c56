"""Top-T label prediction.

Full-softmax models are scored exhaustively.  Hierarchical models are
searched depth first: a path's log-probability can only fall as it gets
longer, so once the heap holds T leaves any branch already below the
heap minimum is dropped without losing an exact result.
"""

from __future__ import annotations

import heapq
from typing import List, NamedTuple, Tuple

import numpy as np

from quicktext.dictionary import FeatureVector
from quicktext.model import Model, compute_hidden, label_log_probabilities, log_sigmoid


class EmptyPredictionError(ValueError):
    """Raised when asked to predict from a document with no features."""


class Prediction(NamedTuple):
    """``(label, log_prob)`` pairs, best first, ties by ascending label."""

    entries: List[Tuple[int, float]]

    @property
    def labels(self) -> List[int]:
        return [label for label, _ in self.entries]

    @property
    def log_probs(self) -> List[float]:
        return [lp for _, lp in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def _rank_key(entry):
    label, lp = entry
    return (-lp, label)


class BoundedMinHeap:
    """Keeps the ``capacity`` best ``(log_prob, label)`` items.

    The root is the worst kept item: lowest log-probability, and among
    equal log-probabilities the highest label id.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: List[Tuple[float, int]] = []  # (log_prob, -label)

    def __len__(self) -> int:
        return len(self._items)

    @property
    def full(self) -> bool:
        return len(self._items) >= self.capacity

    def min_log_prob(self) -> float:
        return self._items[0][0]

    def push(self, log_prob: float, label: int) -> bool:
        """Offer an item; returns True if it was kept."""
        item = (log_prob, -label)
        if len(self._items) < self.capacity:
            heapq.heappush(self._items, item)
            return True
        if item > self._items[0]:
            heapq.heapreplace(self._items, item)
            return True
        return False

    def is_valid(self) -> bool:
        items = self._items
        for i in range(1, len(items)):
            if items[(i - 1) // 2] > items[i]:
                return False
        return len(items) <= self.capacity

    def sorted_entries(self) -> List[Tuple[int, float]]:
        return sorted(((-neg, lp) for lp, neg in self._items), key=_rank_key)


def _top_t(log_probs, T: int) -> Prediction:
    entries = sorted(((i, float(lp)) for i, lp in enumerate(log_probs)), key=_rank_key)
    return Prediction(entries[:T])


def predict_full(model: Model, features: FeatureVector, T: int) -> Prediction:
    if len(features) == 0:
        raise EmptyPredictionError("document has no known features")
    if T < 1:
        raise ValueError("T must be >= 1")
    hidden = compute_hidden(features, model.A)
    return _top_t(label_log_probabilities(model, hidden), T)


def _search(model: Model, hidden, T: int, heap: BoundedMinHeap) -> int:
    tree = model.tree
    k = tree.k
    B = model.B
    # scores in double; float32 products drift by ~1e-6 at |s| ~ 40
    hidden = np.asarray(hidden, dtype=np.float64)
    visited = 0
    stack = [(tree.root, 0.0)]
    while stack:
        node, lp = stack.pop()
        if heap.full and lp < heap.min_log_prob():
            continue
        if node < k:
            heap.push(lp, node)
            continue
        visited += 1
        s = float(np.dot(B[node - k], hidden))
        left = (tree.left[node], lp + log_sigmoid(s))
        right = (tree.right[node], lp + log_sigmoid(-s))
        # the better child goes on top of the stack
        if left[1] >= right[1]:
            stack.append(right)
            stack.append(left)
        else:
            stack.append(left)
            stack.append(right)
    return visited


def predict_hs(model: Model, features: FeatureVector, T: int) -> Prediction:
    """Exact top-T over the leaves via pruned depth-first search."""
    if len(features) == 0:
        raise EmptyPredictionError("document has no known features")
    if T < 1:
        raise ValueError("T must be >= 1")
    hidden = compute_hidden(features, model.A)
    return predict_hs_hidden(model, hidden, T)


def predict_hs_hidden(model: Model, hidden, T: int) -> Prediction:
    heap = BoundedMinHeap(min(T, model.tree.k))
    _search(model, hidden, T, heap)
    return Prediction(heap.sorted_entries())


def count_visited_nodes(model: Model, features: FeatureVector, T: int) -> int:
    """Internal nodes scored by the pruned search for this document."""
    hidden = compute_hidden(features, model.A)
    return _search(model, hidden, T, BoundedMinHeap(min(T, model.tree.k)))


def predict(model: Model, features: FeatureVector, T: int) -> Prediction:
    if model.hierarchical:
        return predict_hs(model, features, T)
    return predict_full(model, features, T)
