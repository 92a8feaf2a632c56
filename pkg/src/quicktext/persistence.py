"""Binary model files.

Layout, all integers little-endian::

    b"FTXS"  u32 version
    u32 dim  u32 epochs  u32 ngram_order  u64 bucket  u32 min_count  u32 loss
    u32 nwords  u32 nlabels
    (u32 nbytes, utf-8 bytes, u64 count) for each word, then each label
    u64 rows  u64 cols  float32[rows*cols]   -- A, row-major
    u64 rows  u64 cols  float32[rows*cols]   -- B

The Huffman tree is not stored; it is rebuilt from the label counts.
"""

from __future__ import annotations

import struct

import numpy as np

from quicktext.config import HIERARCHICAL, SOFTMAX
from quicktext.dictionary import Dictionary
from quicktext.errors import ModelFormatError, NotAModelFileError
from quicktext.huffman import HuffmanTree
from quicktext.model import Model

MAGIC = b"FTXS"
VERSION = 1
DEFAULT_ALLOC_CAP = 2 ** 33

_LOSS_TAGS = {SOFTMAX: 0, HIERARCHICAL: 1}
_TAG_LOSSES = {v: k for k, v in _LOSS_TAGS.items()}
_HEADER = struct.Struct("<4sI")
_CONFIG = struct.Struct("<IIIQII")
_COUNTS = struct.Struct("<II")
_MATRIX = struct.Struct("<QQ")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_F32 = np.dtype("<f4")


def _write_entries(f, entries):
    for token, count in entries:
        raw = token.encode("utf-8")
        f.write(_U32.pack(len(raw)))
        f.write(raw)
        f.write(_U64.pack(count))


def _write_matrix(f, m):
    m = np.ascontiguousarray(m, dtype=_F32)
    f.write(_MATRIX.pack(*m.shape))
    f.write(memoryview(m).cast("B"))


def save(model: Model, dictionary: Dictionary, path) -> None:
    if model.A.shape[0] != dictionary.nfeatures:
        raise ValueError("model and dictionary disagree on the feature count")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION))
        f.write(_CONFIG.pack(model.dim, model.epochs, dictionary.ngram_order,
                             dictionary.bucket, dictionary.min_count,
                             _LOSS_TAGS[model.loss_kind]))
        f.write(_COUNTS.pack(dictionary.nwords, dictionary.nlabels))
        _write_entries(f, dictionary.words)
        _write_entries(f, dictionary.labels)
        _write_matrix(f, model.A)
        _write_matrix(f, model.B)


class _Reader:
    def __init__(self, data: bytes, cap: int):
        self.data = memoryview(data)
        self.pos = 0
        self.cap = cap

    def take(self, n: int) -> memoryview:
        if n > self.cap:
            raise ModelFormatError(f"length {n} exceeds allocation cap {self.cap}")
        if self.pos + n > len(self.data):
            raise ModelFormatError("model file is truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, st: struct.Struct):
        return st.unpack(self.take(st.size))

    def entries(self, n: int):
        out = []
        for _ in range(n):
            (length,) = self.unpack(_U32)
            raw = self.take(length)
            try:
                token = bytes(raw).decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ModelFormatError(f"malformed UTF-8 token: {exc}") from exc
            (count,) = self.unpack(_U64)
            out.append((token, count))
        return out

    def matrix(self):
        rows, cols = self.unpack(_MATRIX)
        nbytes = rows * cols * _F32.itemsize
        m = np.frombuffer(self.take(nbytes), dtype=_F32).reshape(rows, cols)
        return m.astype(np.float32)  # native, writable copy


def load(path, alloc_cap: int = DEFAULT_ALLOC_CAP):
    """Read and validate a model file; returns ``(model, dictionary)``."""
    with open(path, "rb") as f:
        data = f.read()
    r = _Reader(data, alloc_cap)
    if len(data) < 4 or data[:4] != MAGIC:
        raise NotAModelFileError(f"{path} is not a quicktext model file")
    _, version = r.unpack(_HEADER)
    if version != VERSION:
        raise ModelFormatError(f"unsupported model version {version}, expected {VERSION}")
    dim, epochs, ngram_order, bucket, min_count, tag = r.unpack(_CONFIG)
    if tag not in _TAG_LOSSES:
        raise ModelFormatError(f"unknown loss tag {tag}")
    loss_kind = _TAG_LOSSES[tag]
    nwords, nlabels = r.unpack(_COUNTS)
    words = r.entries(nwords)
    labels = r.entries(nlabels)
    try:
        dictionary = Dictionary(words, labels, bucket, ngram_order, min_count)
    except ValueError as exc:
        raise ModelFormatError(f"invalid dictionary: {exc}") from exc

    A = r.matrix()
    B = r.matrix()
    if r.pos != len(data):
        raise ModelFormatError("trailing bytes after model data")
    if A.shape != (dictionary.nfeatures, dim):
        raise ModelFormatError(
            f"A has shape {A.shape}, expected {(dictionary.nfeatures, dim)}")
    expected_rows = nlabels - 1 if loss_kind == HIERARCHICAL else nlabels
    if B.shape != (expected_rows, dim):
        raise ModelFormatError(f"B has shape {B.shape}, expected {(expected_rows, dim)}")
    tree = None
    if loss_kind == HIERARCHICAL:
        if nlabels < 2:
            raise ModelFormatError("hierarchical model with fewer than two labels")
        tree = HuffmanTree(dictionary.label_counts())
    return Model(A, B, loss_kind, tree, epochs=epochs), dictionary
