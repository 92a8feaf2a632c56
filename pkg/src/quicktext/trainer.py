"""Asynchronous multi-threaded SGD with a linearly decaying learning rate.

Each worker owns a byte-range shard of the corpus file, featurizes it once
and then cycles over it, updating the shared matrices without locks.  The
learning rate is driven by a shared token counter that stops every worker
once ``epochs`` passes worth of tokens have been consumed.
"""

from __future__ import annotations

import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from quicktext._backend import BACKEND, kernels
from quicktext._pykernels import SplitMix64, worker_seed
from quicktext.config import TrainConfig
from quicktext.dictionary import Dictionary, tokenize
from quicktext.errors import ConfigError, QuicktextError
from quicktext.model import Model

log = logging.getLogger(__name__)

# how many examples a worker processes between reads of the shared clock
SYNC_EVERY = 64


class TrainingError(QuicktextError):
    """Training could not complete, typically because of an I/O failure."""


def lr_at(progress: float, lr0: float) -> float:
    return max(lr0 * (1.0 - progress), 0.0)


def pick_label(labels: Sequence[int], rng: SplitMix64) -> int:
    """Uniform choice among an example's labels."""
    if not labels:
        raise ValueError("example has no labels")
    if len(labels) == 1:
        return labels[0]
    return labels[rng.below(len(labels))]


class ProgressCounter:
    """Shared token clock; the kernels update ``array[0]`` atomically."""

    def __init__(self, total: int):
        self.total = int(total)
        self.array = np.zeros(1, dtype=np.int64)

    @property
    def tokens_processed(self) -> int:
        return int(self.array[0])

    @property
    def progress(self) -> float:
        return self.tokens_processed / self.total if self.total else 1.0


@dataclass
class Shard:
    """A featurized slice of the corpus in flat arrays."""

    feat_ids: np.ndarray
    feat_off: np.ndarray
    lab_ids: np.ndarray
    lab_off: np.ndarray
    ntokens: np.ndarray

    def __len__(self) -> int:
        return len(self.ntokens)

    @property
    def usable(self) -> int:
        """Examples with at least one label and one known feature."""
        return int(np.count_nonzero((np.diff(self.feat_off) > 0) & (np.diff(self.lab_off) > 0)))

    @property
    def tokens(self) -> int:
        return int(self.ntokens.sum())


def shard_bounds(size: int, nshards: int) -> List[int]:
    return [size * i // nshards for i in range(nshards + 1)]


def read_shard(path, start: int, end: int, dictionary: Dictionary) -> Shard:
    """Featurize the lines that begin inside ``[start, end)``.

    A line belongs to the shard holding its first byte, so shards never
    overlap and together cover the file.
    """
    feats: List[np.ndarray] = []
    feat_off = [0]
    lab_ids: List[int] = []
    lab_off = [0]
    ntokens: List[int] = []
    with open(path, "rb") as f:
        if start > 0:
            f.seek(start - 1)
            f.readline()
        pos = f.tell()
        while pos < end:
            raw = f.readline()
            if not raw:
                break
            pos += len(raw)
            labels, words = tokenize(raw.decode("utf-8"))
            fv = dictionary.featurize(words)
            feats.append(fv.ids)
            feat_off.append(feat_off[-1] + len(fv.ids))
            lab_ids.extend(dictionary.label_ids(labels))
            lab_off.append(len(lab_ids))
            ntokens.append(len(words))
    return Shard(
        np.concatenate(feats) if feats else np.zeros(0, dtype=np.int64),
        np.array(feat_off, dtype=np.int64),
        np.array(lab_ids, dtype=np.int64),
        np.array(lab_off, dtype=np.int64),
        np.array(ntokens, dtype=np.int64),
    )


def load_shards(path, nshards: int, dictionary: Dictionary) -> List[Shard]:
    size = os.path.getsize(path)
    bounds = shard_bounds(size, nshards)
    return [read_shard(path, bounds[i], bounds[i + 1], dictionary) for i in range(nshards)]


@dataclass
class TrainStats:
    tokens_total: int
    tokens_processed: int
    final_lr: float
    elapsed: float
    steps: int
    mean_loss: float
    threads: int
    backend: str

    @property
    def progress(self) -> float:
        return self.tokens_processed / self.tokens_total if self.tokens_total else 1.0

    @property
    def tokens_per_second(self) -> float:
        return self.tokens_processed / self.elapsed if self.elapsed > 0 else float("inf")


@dataclass
class TrainResult:
    model: Model
    dictionary: Dictionary
    stats: TrainStats


def _report(counter: ProgressCounter, lr0: float, start: float, done: threading.Event,
            stream, interval: float):
    finished = False
    while not finished:
        # one last line once training is over, so short runs still report
        finished = done.wait(interval)
        seen = counter.tokens_processed
        elapsed = time.perf_counter() - start
        stream.write(
            f"\rProgress: {100.0 * seen / counter.total:5.1f}%  "
            f"words/sec: {seen / max(elapsed, 1e-9):12.0f}  "
            f"lr: {lr_at(seen / counter.total, lr0):.6f}"
        )
        stream.flush()


def run_workers(model: Model, shards: Sequence[Shard], config: TrainConfig,
                epochs: Optional[int] = None, stream=None,
                report_interval: float = 0.5) -> TrainStats:
    """Train ``model`` in place over pre-featurized shards."""
    epochs = config.epochs if epochs is None else epochs
    total = epochs * sum(s.tokens for s in shards)
    if total == 0:
        raise ConfigError("corpus has no word tokens to train on")
    counter = ProgressCounter(total)
    if model.hierarchical:
        path_off, path_rows, codes = model.tree.flat_paths()
    else:
        path_off = np.zeros(1, dtype=np.int64)
        path_rows = np.zeros(1, dtype=np.int64)
        codes = np.zeros(1, dtype=np.uint8)
    results = [None] * len(shards)
    errors: List[BaseException] = []

    def work(i: int):
        s = shards[i]
        try:
            results[i] = kernels.train_worker(
                model.A, model.B, s.feat_ids, s.feat_off, s.lab_ids, s.lab_off,
                s.ntokens, path_off, path_rows, codes, counter.array, total,
                config.lr, worker_seed(config.seed, i), model.hierarchical, SYNC_EVERY,
            )
        except BaseException as exc:  # surfaced after join
            errors.append(exc)

    start = time.perf_counter()
    done = threading.Event()
    reporter = None
    if stream is not None:
        reporter = threading.Thread(
            target=_report, args=(counter, config.lr, start, done, stream, report_interval),
            daemon=True,
        )
        reporter.start()
    if len(shards) == 1:
        work(0)
    else:
        threads = [threading.Thread(target=work, args=(i,)) for i in range(len(shards))]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    elapsed = time.perf_counter() - start
    done.set()
    if reporter is not None:
        reporter.join()
        stream.write("\n")
    if errors:
        raise TrainingError(f"worker failed: {errors[0]!r}") from errors[0]
    loss_sum = sum(r[0] for r in results if r)
    steps = sum(r[1] for r in results if r)
    model.epochs += epochs
    return TrainStats(
        tokens_total=total,
        tokens_processed=counter.tokens_processed,
        final_lr=lr_at(counter.progress, config.lr),
        elapsed=elapsed,
        steps=steps,
        mean_loss=loss_sum / steps if steps else float("nan"),
        threads=len(shards),
        backend=BACKEND,
    )


def train(corpus_path, config: TrainConfig, stream=None) -> TrainResult:
    """Build the dictionary, initialize a model and train it on a file."""
    try:
        dictionary = Dictionary.build_from_file(corpus_path, config)
        shards = load_shards(corpus_path, config.threads, dictionary)
    except (OSError, UnicodeDecodeError) as exc:
        raise TrainingError(f"cannot read corpus {corpus_path}: {exc}") from exc
    if not any(s.usable for s in shards):
        raise ConfigError("corpus has no example with both a label and a known word")
    loss_kind = config.resolve_loss(dictionary.nlabels)
    model = Model.initialize(
        dictionary.nfeatures, dictionary.nlabels, config.dim, loss_kind,
        label_counts=dictionary.label_counts(), seed=config.seed,
    )
    log.info("training %s, %d words, %d labels, %d threads",
             loss_kind, dictionary.nwords, dictionary.nlabels, config.threads)
    stats = run_workers(model, shards, config, stream=stream)
    return TrainResult(model, dictionary, stats)


def train_lines(lines: Sequence[str], config: TrainConfig) -> TrainResult:
    """Convenience wrapper training on in-memory lines via a temp file."""
    with tempfile.NamedTemporaryFile("w", encoding="utf-8", suffix=".txt", delete=False) as f:
        for line in lines:
            f.write(line.rstrip("\n") + "\n")
        path = f.name
    try:
        return train(path, config)
    finally:
        os.unlink(path)
