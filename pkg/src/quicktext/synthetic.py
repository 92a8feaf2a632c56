"""Synthetic labeled corpora for tests and benchmarks."""

from __future__ import annotations

import numpy as np


def zipf_corpus(n_lines: int, n_labels: int, seed: int = 0, signature_words: int = 2,
                noise_words: int = 4, noise_vocab: int = 1000, every_label: bool = True,
                zipf_a: float = 1.2):
    """Lines in ``__label__`` format with Zipf-distributed label frequencies.

    Each label owns ``signature_words`` words; every line mixes its label's
    signature words with noise drawn from a shared Zipfian pool.  With
    ``every_label`` the first ``n_labels`` lines cover each label once.
    """
    rng = np.random.default_rng(seed)
    ranks = np.arange(1, n_labels + 1, dtype=np.float64)
    label_p = ranks ** -zipf_a
    label_p /= label_p.sum()
    noise_p = np.arange(1, noise_vocab + 1, dtype=np.float64) ** -1.0
    noise_p /= noise_p.sum()

    start = n_labels if every_label else 0
    labels = np.empty(n_lines, dtype=np.int64)
    if every_label:
        if n_lines < n_labels:
            raise ValueError("every_label needs at least one line per label")
        labels[:n_labels] = rng.permutation(n_labels)
    labels[start:] = rng.choice(n_labels, size=n_lines - start, p=label_p)
    noise = rng.choice(noise_vocab, size=(n_lines, noise_words), p=noise_p)
    sig = rng.integers(0, signature_words, size=(n_lines, signature_words))

    lines = []
    for i in range(n_lines):
        lab = labels[i]
        words = [f"s{lab}_{j}" for j in sig[i]] + [f"n{j}" for j in noise[i]]
        order = rng.permutation(len(words))
        lines.append(f"__label__L{lab} " + " ".join(words[j] for j in order))
    return lines


def write_lines(path, lines) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")
