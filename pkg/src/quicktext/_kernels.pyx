# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: n-gram hashing, SGD steps and the hogwild loop.

The training loop runs without the GIL so several Python threads can
update the shared matrices concurrently.  Updates are unsynchronized by
design; only the token counter is atomic.
"""

from cython cimport floating
from libc.math cimport exp, log, log1p
from libc.stdint cimport int64_t, uint8_t, uint64_t
from libc.stdlib cimport calloc, free

import numpy as np

cdef extern from *:
    """
    #include <stdint.h>
    static inline int64_t qt_load(int64_t *p) {
        return __atomic_load_n(p, __ATOMIC_RELAXED);
    }
    static inline int64_t qt_add_saturating(int64_t *p, int64_t n, int64_t cap) {
        int64_t cur = __atomic_load_n(p, __ATOMIC_RELAXED);
        int64_t nxt;
        do {
            nxt = cur + n;
            if (nxt > cap) nxt = cap;
        } while (!__atomic_compare_exchange_n(p, &cur, nxt, 1,
                                              __ATOMIC_RELAXED, __ATOMIC_RELAXED));
        return nxt;
    }
    """
    int64_t qt_load(int64_t *p) nogil
    int64_t qt_add_saturating(int64_t *p, int64_t n, int64_t cap) nogil

cdef enum:
    HASH_MULTIPLIER = 116049371


cdef inline uint64_t _splitmix_next(uint64_t *state) noexcept nogil:
    state[0] += 0x9E3779B97F4A7C15ULL
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double z
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    z = exp(x)
    return z / (1.0 + z)


cdef inline double _log_sigmoid(double x) noexcept nogil:
    if x >= 0:
        return -log1p(exp(-x))
    return x - log1p(exp(x))


cdef inline double _dot(floating *a, floating *b, Py_ssize_t n) noexcept nogil:
    # four independent accumulators break the add latency chain
    cdef double s0 = 0, s1 = 0, s2 = 0, s3 = 0
    cdef Py_ssize_t j = 0
    while j + 4 <= n:
        s0 += <double>a[j] * b[j]
        s1 += <double>a[j + 1] * b[j + 1]
        s2 += <double>a[j + 2] * b[j + 2]
        s3 += <double>a[j + 3] * b[j + 3]
        j += 4
    while j < n:
        s0 += <double>a[j] * b[j]
        j += 1
    return (s0 + s1) + (s2 + s3)


cdef inline void _axpy(floating alpha, floating *x, floating *y, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t j
    for j in range(n):
        y[j] += alpha * x[j]


cdef void _hidden(floating *A, Py_ssize_t dim, int64_t *ids, Py_ssize_t nids,
                  double weight, floating *hidden) noexcept nogil:
    cdef Py_ssize_t i, j
    for j in range(dim):
        hidden[j] = 0
    for i in range(nids):
        _axpy(<floating>1, A + ids[i] * dim, hidden, dim)
    for j in range(dim):
        hidden[j] *= <floating>weight


cdef void _input_update(floating *A, Py_ssize_t dim, int64_t *ids, Py_ssize_t nids,
                        double weight, floating *grad) noexcept nogil:
    cdef Py_ssize_t i
    cdef floating w = <floating>weight
    for i in range(nids):
        _axpy(w, grad, A + ids[i] * dim, dim)


cdef double _softmax_step(floating *A, floating *B, Py_ssize_t dim, Py_ssize_t k,
                          int64_t *ids, Py_ssize_t nids, double weight,
                          Py_ssize_t label, double lr, floating *hidden,
                          floating *grad, floating *output) noexcept nogil:
    cdef Py_ssize_t j
    cdef double top, z = 0, s, label_score, loss
    cdef floating alpha
    _hidden(A, dim, ids, nids, weight, hidden)
    for j in range(dim):
        grad[j] = 0
    top = <floating>_dot(B, hidden, dim)
    for j in range(k):
        s = <floating>_dot(B + j * dim, hidden, dim)
        output[j] = <floating>s
        if j == label:
            label_score = s
        if s > top:
            top = s
    for j in range(k):
        s = exp(<double>output[j] - top)
        output[j] = <floating>s
        z += s
    loss = -(label_score - top - log(z))
    for j in range(k):
        s = output[j] / z
        output[j] = <floating>s
        if j == label:
            alpha = <floating>(lr * (1.0 - s))
        else:
            alpha = <floating>(-lr * s)
        _axpy(alpha, B + j * dim, grad, dim)
        _axpy(alpha, hidden, B + j * dim, dim)
    _input_update(A, dim, ids, nids, weight, grad)
    return loss


cdef double _hs_step(floating *A, floating *B, Py_ssize_t dim,
                     int64_t *ids, Py_ssize_t nids, double weight,
                     int64_t *rows, uint8_t *codes, Py_ssize_t depth, double lr,
                     floating *hidden, floating *grad) noexcept nogil:
    cdef Py_ssize_t d, j
    cdef double s, loss = 0
    cdef int t
    cdef floating alpha
    cdef floating *brow
    _hidden(A, dim, ids, nids, weight, hidden)
    for j in range(dim):
        grad[j] = 0
    for d in range(depth):
        brow = B + rows[d] * dim
        s = _dot(brow, hidden, dim)
        t = 1 - codes[d]
        loss -= _log_sigmoid(s if t else -s)
        alpha = <floating>(lr * (t - _sigmoid(s)))
        _axpy(alpha, brow, grad, dim)
        _axpy(alpha, hidden, brow, dim)
    _input_update(A, dim, ids, nids, weight, grad)
    return loss


def add_ngrams(const int64_t[::1] ids, int64_t nwords, int64_t bucket, int order):
    """Unigram ids followed by the hashed ids of every 2..order window."""
    cdef Py_ssize_t n = ids.shape[0], i, j, m = n
    cdef Py_ssize_t extra = 0
    for i in range(n):
        extra += min(order, n - i) - 1
    out = np.empty(n + extra, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef uint64_t h
    for i in range(n):
        o[i] = ids[i]
    for i in range(n):
        h = <uint64_t>ids[i]
        for j in range(i + 1, min(i + order, n)):
            h = h * HASH_MULTIPLIER + <uint64_t>ids[j]
            o[m] = nwords + <int64_t>(h % <uint64_t>bucket)
            m += 1
    return out


def compute_hidden(floating[:, ::1] A, const int64_t[::1] ids, double weight,
                   floating[::1] hidden):
    _hidden(&A[0, 0], A.shape[1], <int64_t *>&ids[0], ids.shape[0], weight, &hidden[0])


def softmax_step(floating[:, ::1] A, floating[:, ::1] B, const int64_t[::1] ids,
                 double weight, Py_ssize_t label, double lr, floating[::1] hidden,
                 floating[::1] grad, floating[::1] output):
    if not 0 <= label < B.shape[0]:
        raise IndexError("label out of range")
    return _softmax_step(&A[0, 0], &B[0, 0], A.shape[1], B.shape[0],
                         <int64_t *>&ids[0], ids.shape[0], weight, label, lr,
                         &hidden[0], &grad[0], &output[0])


def hs_step(floating[:, ::1] A, floating[:, ::1] B, const int64_t[::1] ids,
            double weight, const int64_t[::1] rows, const uint8_t[::1] codes,
            double lr, floating[::1] hidden, floating[::1] grad):
    if rows.shape[0] != codes.shape[0]:
        raise ValueError("rows and codes differ in length")
    return _hs_step(&A[0, 0], &B[0, 0], A.shape[1], <int64_t *>&ids[0], ids.shape[0],
                    weight, <int64_t *>&rows[0], <uint8_t *>&codes[0], rows.shape[0],
                    lr, &hidden[0], &grad[0])


def train_worker(float[:, ::1] A, float[:, ::1] B,
                 const int64_t[::1] feat_ids, const int64_t[::1] feat_off,
                 const int64_t[::1] lab_ids, const int64_t[::1] lab_off,
                 const int64_t[::1] ntokens,
                 const int64_t[::1] path_off, const int64_t[::1] path_rows,
                 const uint8_t[::1] codes,
                 int64_t[::1] counter, int64_t total, double lr0, uint64_t seed,
                 bint hierarchical, int sync_every):
    """Run SGD over one shard until the shared token counter hits ``total``.

    Returns ``(loss_sum, steps)`` for the examples this worker updated on.
    """
    cdef Py_ssize_t n = ntokens.shape[0]
    cdef Py_ssize_t dim = A.shape[1], k = B.shape[0]
    cdef Py_ssize_t ex = 0, f0, f1, l0, l1, nl, p0, p1
    cdef int64_t seen, pending = 0, shard_tokens = 0, label
    cdef int since = 0
    cdef uint64_t state = seed
    cdef double lr, loss_sum = 0
    cdef long steps = 0
    cdef float *hidden
    cdef float *grad
    cdef float *output
    if n == 0:
        return 0.0, 0
    for ex in range(n):
        shard_tokens += ntokens[ex]
    if shard_tokens == 0:
        return 0.0, 0
    hidden = <float *>calloc(dim, sizeof(float))
    grad = <float *>calloc(dim, sizeof(float))
    output = <float *>calloc(k, sizeof(float))
    if hidden == NULL or grad == NULL or output == NULL:
        free(hidden)
        free(grad)
        free(output)
        raise MemoryError()
    ex = 0
    with nogil:
        seen = qt_load(&counter[0])
        lr = lr0 * (1.0 - <double>seen / total)
        if lr < 0:
            lr = 0
        while seen + pending < total:
            pending += ntokens[ex]
            f0 = feat_off[ex]
            f1 = feat_off[ex + 1]
            l0 = lab_off[ex]
            l1 = lab_off[ex + 1]
            if f1 > f0 and l1 > l0:
                nl = l1 - l0
                if nl > 1:
                    label = lab_ids[l0 + <Py_ssize_t>(_splitmix_next(&state) % <uint64_t>nl)]
                else:
                    label = lab_ids[l0]
                if hierarchical:
                    p0 = path_off[label]
                    p1 = path_off[label + 1]
                    loss_sum += _hs_step(&A[0, 0], &B[0, 0], dim,
                                         <int64_t *>&feat_ids[f0], f1 - f0, 1.0 / (f1 - f0),
                                         <int64_t *>&path_rows[p0], <uint8_t *>&codes[p0],
                                         p1 - p0, lr, hidden, grad)
                else:
                    loss_sum += _softmax_step(&A[0, 0], &B[0, 0], dim, k,
                                              <int64_t *>&feat_ids[f0], f1 - f0,
                                              1.0 / (f1 - f0), label, lr,
                                              hidden, grad, output)
                steps += 1
            ex += 1
            if ex == n:
                ex = 0
            since += 1
            if since == sync_every:
                seen = qt_add_saturating(&counter[0], pending, total)
                pending = 0
                since = 0
                lr = lr0 * (1.0 - <double>seen / total)
                if lr < 0:
                    lr = 0
        qt_add_saturating(&counter[0], pending, total)
    free(hidden)
    free(grad)
    free(output)
    return loss_sum, steps
