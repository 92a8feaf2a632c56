"""Vocabulary, label set and hashed n-gram feature space."""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from quicktext._backend import kernels
from quicktext.config import TrainConfig
from quicktext.errors import ConfigError

LABEL_PREFIX = "__label__"
HASH_MULTIPLIER = 116049371
_MASK64 = (1 << 64) - 1


def tokenize(line: str) -> Tuple[List[str], List[str]]:
    """Split a corpus line into ``(labels, words)``.

    Tokens are maximal whitespace runs.  Tokens carrying the ``__label__``
    prefix are returned without it in ``labels``; order is preserved.
    """
    labels: List[str] = []
    words: List[str] = []
    for token in line.split():
        if token.startswith(LABEL_PREFIX):
            labels.append(token[len(LABEL_PREFIX):])
        else:
            words.append(token)
    return labels, words


@dataclass
class FeatureVector:
    """Normalized bag of features: every id carries the same ``weight``."""

    ids: np.ndarray
    weight: float

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def from_ids(cls, ids) -> "FeatureVector":
        ids = np.ascontiguousarray(ids, dtype=np.int64)
        weight = 1.0 / len(ids) if len(ids) else 0.0
        return cls(ids, weight)


def _ordered(counts: dict, threshold: int) -> List[Tuple[str, int]]:
    # dict order is first occurrence; sorted() is stable, so ties keep it
    kept = [(tok, c) for tok, c in counts.items() if c >= threshold]
    kept.sort(key=lambda item: -item[1])
    return kept


class Dictionary:
    """Immutable mapping from tokens to dense word and label ids."""

    def __init__(
        self,
        words: Sequence[Tuple[str, int]],
        labels: Sequence[Tuple[str, int]],
        bucket: int,
        ngram_order: int = 1,
        min_count: int = 1,
    ):
        self.words = [(str(w), int(c)) for w, c in words]
        self.labels = [(str(l), int(c)) for l, c in labels]
        self.word_index = {w: i for i, (w, _) in enumerate(self.words)}
        self.label_index = {l: i for i, (l, _) in enumerate(self.labels)}
        if len(self.word_index) != len(self.words):
            raise ValueError("duplicate word in dictionary")
        if len(self.label_index) != len(self.labels):
            raise ValueError("duplicate label in dictionary")
        if ngram_order < 1:
            raise ValueError("ngram_order must be >= 1")
        if ngram_order > 1 and bucket < 1:
            raise ValueError("word n-grams need at least one bucket")
        self.bucket = int(bucket)
        self.ngram_order = int(ngram_order)
        self.min_count = int(min_count)

    @property
    def nwords(self) -> int:
        return len(self.words)

    @property
    def nlabels(self) -> int:
        return len(self.labels)

    @property
    def nfeatures(self) -> int:
        return self.nwords + self.bucket

    @classmethod
    def build(cls, lines: Iterable[str], config: TrainConfig) -> "Dictionary":
        """Count tokens in one pass over ``lines`` and prune rare words.

        Words below ``config.min_count`` and labels below
        ``config.label_min_count`` are dropped.  Ids follow descending
        count, ties broken by first occurrence.
        """
        word_counts: dict = {}
        label_counts: dict = {}
        for line in lines:
            labels, words = tokenize(line)
            for w in words:
                word_counts[w] = word_counts.get(w, 0) + 1
            for l in labels:
                label_counts[l] = label_counts.get(l, 0) + 1
        words = _ordered(word_counts, config.min_count)
        labels = _ordered(label_counts, config.label_min_count)
        if not words:
            raise ConfigError("no word survives min_count pruning")
        if not labels:
            raise ConfigError("corpus contains no labels")
        return cls(words, labels, config.resolved_bucket, config.ngram_order, config.min_count)

    @classmethod
    def build_from_file(cls, path, config: TrainConfig) -> "Dictionary":
        with io.open(path, "r", encoding="utf-8", newline="\n") as f:
            return cls.build(f, config)

    def ngram_hash(self, window: Sequence[int]) -> int:
        """Feature id of a word-id window of length >= 2."""
        if len(window) < 2:
            raise ValueError("unigrams use their word id and are never hashed")
        if self.bucket < 1:
            raise ValueError("dictionary has no hash buckets")
        h = int(window[0])
        for w in window[1:]:
            h = (h * HASH_MULTIPLIER + int(w)) & _MASK64
        return self.nwords + h % self.bucket

    def word_ids(self, words: Iterable[str]) -> np.ndarray:
        index = self.word_index
        ids = [index[w] for w in words if w in index]
        return np.array(ids, dtype=np.int64)

    def label_ids(self, labels: Iterable[str]) -> List[int]:
        index = self.label_index
        return [index[l] for l in labels if l in index]

    def featurize(self, words: Sequence[str]) -> FeatureVector:
        """Unigram ids followed by hashed ids of every 2..n window.

        Out-of-vocabulary words are dropped before windows are formed.
        """
        ids = self.word_ids(words)
        if self.ngram_order > 1 and len(ids) > 1:
            ids = kernels.add_ngrams(ids, self.nwords, self.bucket, self.ngram_order)
        return FeatureVector.from_ids(ids)

    def label_counts(self) -> List[int]:
        return [c for _, c in self.labels]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dictionary):
            return NotImplemented
        return (
            self.words == other.words
            and self.labels == other.labels
            and self.bucket == other.bucket
            and self.ngram_order == other.ngram_order
            and self.min_count == other.min_count
        )

    def __repr__(self) -> str:
        return (
            f"Dictionary(nwords={self.nwords}, nlabels={self.nlabels}, "
            f"bucket={self.bucket}, ngram_order={self.ngram_order})"
        )
