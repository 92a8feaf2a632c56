"""Precision/recall at k over a labeled corpus file."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Collection, Hashable, Sequence, Tuple

from quicktext.dictionary import Dictionary, tokenize
from quicktext.model import Model
from quicktext.predictor import predict


def precision_recall_at_k(predicted: Sequence[Hashable], gold: Collection[Hashable],
                          k: int) -> Tuple[float, float]:
    """Precision and recall of the first ``k`` predicted labels.

    Precision divides by ``k`` even when fewer labels are gold.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not gold:
        raise ValueError("empty gold set")
    hits = len(set(predicted[:k]) & set(gold))
    return hits / k, hits / len(gold)


@dataclass
class EvalReport:
    n_examples: int
    precision_at_k: float
    recall_at_k: float
    k: int
    n_no_label: int = 0
    n_no_feature: int = 0
    test_seconds: float = field(default=0.0, compare=False)
    tokens_per_second: float = field(default=0.0, compare=False)
    train_seconds: float = field(default=0.0, compare=False)

    def lines(self):
        return [
            f"N {self.n_examples}",
            f"P@{self.k} {self.precision_at_k:.3f}",
            f"R@{self.k} {self.recall_at_k:.3f}",
        ]

    def __str__(self) -> str:
        return "\n".join(self.lines())


def evaluate_lines(model: Model, dictionary: Dictionary, lines, k: int = 1) -> EvalReport:
    """Score every line with at least one gold label.

    Lines without any known feature are counted as complete misses.  Gold
    labels unknown to the dictionary still count towards recall.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    start = time.perf_counter()
    n = no_label = no_feature = hits = tokens = 0
    recalls = []
    for line in lines:
        labels, words = tokenize(line)
        tokens += len(words)
        gold = set(labels)
        if not gold:
            no_label += 1
            continue
        n += 1
        features = dictionary.featurize(words)
        if len(features) == 0:
            no_feature += 1
            recalls.append(0.0)
            continue
        top = predict(model, features, k)
        names = [dictionary.labels[i][0] for i in top.labels]
        _, r = precision_recall_at_k(names, gold, k)
        hits += len(set(names) & gold)
        recalls.append(r)
    elapsed = time.perf_counter() - start
    return EvalReport(
        n_examples=n,
        precision_at_k=hits / (k * n) if n else 0.0,
        # fsum is exactly rounded, so line order cannot change the result
        recall_at_k=math.fsum(recalls) / n if n else 0.0,
        k=k,
        n_no_label=no_label,
        n_no_feature=no_feature,
        test_seconds=elapsed,
        tokens_per_second=tokens / elapsed if elapsed > 0 else 0.0,
    )


def evaluate(model: Model, dictionary: Dictionary, path, k: int = 1) -> EvalReport:
    with open(path, "r", encoding="utf-8", newline="\n") as f:
        return evaluate_lines(model, dictionary, f, k)
