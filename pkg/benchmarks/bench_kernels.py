"""Compare the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--lines N] [--labels K] [--dim H]

Reports step throughput for both losses, n-gram featurization speed, and
end-to-end training tokens/sec for one epoch over a synthetic corpus.
"""

import argparse
import tempfile
import time
from pathlib import Path

import numpy as np

from quicktext import _pykernels
from quicktext import trainer as trainer_mod
from quicktext.config import TrainConfig
from quicktext.huffman import build_tree
from quicktext.synthetic import write_lines, zipf_corpus

try:
    from quicktext import _kernels
except ImportError:
    _kernels = None


def rate(fn, n):
    start = time.perf_counter()
    for _ in range(n):
        fn()
    return n / (time.perf_counter() - start)


def step_rates(kern, k, dim, n):
    rng = np.random.default_rng(0)
    A = rng.standard_normal((5000, dim)).astype(np.float32)
    B = rng.standard_normal((k, dim)).astype(np.float32) * 0.01
    ids = rng.integers(0, 5000, size=12).astype(np.int64)
    hidden, grad, out = (np.zeros(dim, np.float32), np.zeros(dim, np.float32),
                         np.zeros(k, np.float32))
    tree = build_tree(rng.integers(1, 1000, size=k).tolist())
    offsets, rows, codes = tree.flat_paths()
    prow, pcode = rows[offsets[3]:offsets[4]], codes[offsets[3]:offsets[4]]
    soft = rate(lambda: kern.softmax_step(A, B, ids, 1 / 12, 3, 0.01, hidden, grad, out), n)
    hs = rate(lambda: kern.hs_step(A, B[:k - 1], ids, 1 / 12, prow, pcode, 0.01, hidden,
                                   grad), n)
    ngram = rate(lambda: kern.add_ngrams(ids, 5000, 1_000_000, 3), n)
    return soft, hs, ngram


def epoch_rate(kern, path, loss, dim):
    saved = trainer_mod.kernels
    trainer_mod.kernels = kern
    try:
        stats = trainer_mod.train(path, TrainConfig(dim=dim, epochs=1, loss=loss)).stats
    finally:
        trainer_mod.kernels = saved
    return stats.tokens_per_second


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--lines", type=int, default=20_000)
    parser.add_argument("--labels", type=int, default=200)
    parser.add_argument("--dim", type=int, default=10)
    parser.add_argument("--steps", type=int, default=2000)
    args = parser.parse_args()

    backends = [("python", _pykernels)]
    if _kernels is not None:
        backends.append(("cython", _kernels))
    else:
        print("compiled kernels not built; showing the fallback only")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "corpus.txt"
        write_lines(path, zipf_corpus(args.lines, args.labels, seed=0))
        results = {}
        for name, kern in backends:
            soft, hs, ngram = step_rates(kern, args.labels, args.dim, args.steps)
            results[name] = {
                "softmax step/s": soft,
                "hs step/s": hs,
                "trigram featurize/s": ngram,
                "softmax epoch tok/s": epoch_rate(kern, path, "softmax", args.dim),
                "hs epoch tok/s": epoch_rate(kern, path, "hs", args.dim),
            }

    names = [n for n, _ in backends]
    header = f"{'metric':<22}" + "".join(f"{n:>14}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(f"k={args.labels} dim={args.dim} lines={args.lines}")
    print(header)
    for metric in results[names[0]]:
        row = f"{metric:<22}" + "".join(f"{results[n][metric]:>14,.0f}" for n in names)
        if len(names) == 2:
            row += f"{results['cython'][metric] / results['python'][metric]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
