"""Huffman coding tree over label frequencies for the hierarchical softmax.

Leaves are labels ``0..k-1``; internal nodes are numbered ``k..2k-2`` in
merge order, so the root is ``2k-2`` and ``node - k`` is the row of the
output matrix that scores the node.  The first node popped in a merge
becomes the left child and receives code digit 0.
"""

from __future__ import annotations

import heapq
from typing import List, Sequence, Tuple

import numpy as np

from quicktext.errors import ConfigError


class HuffmanTree:
    def __init__(self, label_counts: Sequence[int]):
        k = len(label_counts)
        if k < 2:
            raise ConfigError("hierarchical softmax needs at least two labels")
        if any(int(c) < 0 for c in label_counts):
            raise ValueError("label counts must be non-negative")
        n = 2 * k - 1
        self.k = k
        # zero counts are clamped so every label keeps a leaf
        self.count = [max(int(c), 1) for c in label_counts] + [0] * (k - 1)
        self.parent = [-1] * n
        self.left = [-1] * n
        self.right = [-1] * n
        self.binary = [0] * n

        heap = [(c, i) for i, c in enumerate(self.count[:k])]
        heapq.heapify(heap)
        for node in range(k, n):
            c0, a = heapq.heappop(heap)
            c1, b = heapq.heappop(heap)
            self.count[node] = c0 + c1
            self.left[node], self.right[node] = a, b
            self.parent[a] = self.parent[b] = node
            self.binary[b] = 1
            heapq.heappush(heap, (c0 + c1, node))

        self._paths: List[Tuple[List[int], List[int]]] = []
        for leaf in range(k):
            nodes, code = [], []
            child, p = leaf, self.parent[leaf]
            while p != -1:
                nodes.append(p)
                code.append(self.binary[child])
                child, p = p, self.parent[p]
            nodes.reverse()
            code.reverse()
            self._paths.append((nodes, code))
        self._flat = None

    @property
    def root(self) -> int:
        return 2 * self.k - 2

    def is_leaf(self, node: int) -> bool:
        return node < self.k

    def path(self, label: int) -> Tuple[List[int], List[int]]:
        """Root-to-leaf internal node ids and code digits for ``label``."""
        if not 0 <= label < self.k:
            raise IndexError(f"label {label} out of range for {self.k} labels")
        nodes, code = self._paths[label]
        return list(nodes), list(code)

    def depth(self, label: int) -> int:
        return len(self._paths[label][0])

    def depths(self) -> List[int]:
        return [len(p[0]) for p in self._paths]

    def weighted_path_length(self) -> int:
        return sum(self.count[i] * self.depth(i) for i in range(self.k))

    def flat_paths(self):
        """Paths packed for the kernels: ``(offsets, rows, codes)``.

        ``rows`` holds output-matrix rows (node id minus k), and the path of
        label ``i`` is ``rows[offsets[i]:offsets[i+1]]``.
        """
        if self._flat is None:
            offsets = np.zeros(self.k + 1, dtype=np.int64)
            rows, codes = [], []
            for i, (nodes, code) in enumerate(self._paths):
                rows.extend(n - self.k for n in nodes)
                codes.extend(code)
                offsets[i + 1] = len(rows)
            self._flat = (
                offsets,
                np.array(rows, dtype=np.int64),
                np.array(codes, dtype=np.uint8),
            )
        return self._flat

    def node_arrays(self):
        return (
            list(self.count),
            list(self.parent),
            list(self.left),
            list(self.right),
        )

    def __repr__(self) -> str:
        return f"HuffmanTree(k={self.k})"


def build_tree(label_counts: Sequence[int]) -> HuffmanTree:
    return HuffmanTree(label_counts)
