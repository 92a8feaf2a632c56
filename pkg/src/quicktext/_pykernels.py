"""Pure-Python/numpy implementation of the hot kernels.

Mirrors the compiled ``_kernels`` module function for function and is used
when the extension is not built (or ``QUICKTEXT_PURE_PYTHON=1``).  Step
functions accept float32 or float64 parameters; the training loop is
float32 only, like the compiled one.
"""

import math
import threading

import numpy as np

HASH_MULTIPLIER = 116049371
MASK64 = (1 << 64) - 1

_counter_lock = threading.Lock()


class SplitMix64:
    """The per-worker generator shared by both kernel implementations."""

    def __init__(self, seed):
        self.state = seed & MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n):
        return self.next() % int(n)


def worker_seed(seed, worker):
    return (seed * 0x2545F4914F6CDD1D + worker + 1) & MASK64


def sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def log_sigmoid(x):
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


def add_ngrams(ids, nwords, bucket, order):
    ids = [int(i) for i in ids]
    out = list(ids)
    for i in range(len(ids)):
        h = ids[i]
        for j in range(i + 1, min(i + order, len(ids))):
            h = (h * HASH_MULTIPLIER + ids[j]) & MASK64
            out.append(nwords + h % bucket)
    return np.array(out, dtype=np.int64)


def compute_hidden(A, ids, weight, hidden):
    acc = np.zeros(A.shape[1], dtype=A.dtype)
    for i in ids:
        acc += A[i]
    hidden[:] = acc * A.dtype.type(weight)


def _apply_input_grad(A, ids, weight, grad):
    g = grad * A.dtype.type(weight)
    for i in ids:
        A[i] += g


def softmax_step(A, B, ids, weight, label, lr, hidden, grad, output):
    compute_hidden(A, ids, weight, hidden)
    scores = (B @ hidden).astype(np.float64)
    top = scores.max()
    z = np.exp(scores - top).sum()
    loss = -(scores[label] - top - math.log(z))
    output[:] = np.exp(scores - top) / z
    alpha = -lr * output.astype(np.float64)
    alpha[label] += lr
    alpha = alpha.astype(B.dtype)
    grad[:] = alpha @ B
    B += np.outer(alpha, hidden)
    _apply_input_grad(A, ids, weight, grad)
    return loss


def hs_step(A, B, ids, weight, rows, codes, lr, hidden, grad):
    compute_hidden(A, ids, weight, hidden)
    grad[:] = 0
    loss = 0.0
    for row, c in zip(rows, codes):
        s = float(np.dot(B[row], hidden))
        t = 1 - int(c)
        loss -= log_sigmoid(s if t else -s)
        alpha = B.dtype.type(lr * (t - sigmoid(s)))
        grad += alpha * B[row]
        B[row] += alpha * hidden
    _apply_input_grad(A, ids, weight, grad)
    return loss


def add_saturating(counter, n, total):
    with _counter_lock:
        value = min(int(counter[0]) + n, total)
        counter[0] = value
    return value


def train_worker(A, B, feat_ids, feat_off, lab_ids, lab_off, ntokens,
                 path_off, path_rows, codes, counter, total, lr0, seed,
                 hierarchical, sync_every):
    """Run SGD over one shard until the shared token counter hits ``total``.

    Returns ``(loss_sum, steps)`` for the examples this worker updated on.
    """
    n = len(ntokens)
    if n == 0 or int(ntokens.sum()) == 0:
        return 0.0, 0
    dim = A.shape[1]
    hidden = np.zeros(dim, dtype=np.float32)
    grad = np.zeros(dim, dtype=np.float32)
    output = np.zeros(B.shape[0], dtype=np.float32)
    rng = SplitMix64(seed)
    seen = int(counter[0])
    lr = max(lr0 * (1.0 - seen / total), 0.0)
    pending = since = 0
    loss_sum, steps = 0.0, 0
    ex = 0
    while seen + pending < total:
        pending += int(ntokens[ex])
        f0, f1 = feat_off[ex], feat_off[ex + 1]
        l0, l1 = lab_off[ex], lab_off[ex + 1]
        if f1 > f0 and l1 > l0:
            nl = l1 - l0
            label = int(lab_ids[l0 + (rng.below(nl) if nl > 1 else 0)])
            ids = feat_ids[f0:f1]
            weight = 1.0 / (f1 - f0)
            if hierarchical:
                p0, p1 = path_off[label], path_off[label + 1]
                loss_sum += hs_step(A, B, ids, weight, path_rows[p0:p1],
                                    codes[p0:p1], lr, hidden, grad)
            else:
                loss_sum += softmax_step(A, B, ids, weight, label, lr,
                                         hidden, grad, output)
            steps += 1
        ex = ex + 1 if ex + 1 < n else 0
        since += 1
        if since == sync_every:
            seen = add_saturating(counter, pending, total)
            pending = since = 0
            lr = max(lr0 * (1.0 - seen / total), 0.0)
    add_saturating(counter, pending, total)
    return loss_sum, steps
