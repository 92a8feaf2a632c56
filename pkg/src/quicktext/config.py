from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from quicktext.errors import ConfigError

SOFTMAX = "softmax"
HIERARCHICAL = "hs"
AUTO = "auto"
LOSS_KINDS = (SOFTMAX, HIERARCHICAL, AUTO)

# labels above this count switch "auto" to the hierarchical softmax
AUTO_HS_THRESHOLD = 64

LR_GRID = (0.05, 0.1, 0.25, 0.5)


def default_bucket(ngram_order: int) -> int:
    """Number of hash bins used when the caller does not choose one."""
    if ngram_order <= 1:
        return 0
    if ngram_order == 2:
        return 10_000_000
    return 100_000_000


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 10
    epochs: int = 5
    lr: float = 0.1
    ngram_order: int = 1
    bucket: Optional[int] = None
    min_count: int = 1
    label_min_count: int = 1
    loss: str = AUTO
    threads: int = 1
    seed: int = 0
    verbose: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not self.lr > 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.ngram_order < 1:
            raise ConfigError(f"ngram order must be >= 1, got {self.ngram_order}")
        if self.bucket is not None and self.bucket < 0:
            raise ConfigError(f"bucket must be >= 0, got {self.bucket}")
        if self.ngram_order > 1 and self.bucket == 0:
            raise ConfigError("word n-grams need at least one hash bucket")
        if self.min_count < 1 or self.label_min_count < 1:
            raise ConfigError("min counts must be >= 1")
        if self.loss not in LOSS_KINDS:
            raise ConfigError(f"unknown loss {self.loss!r}, expected one of {LOSS_KINDS}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")

    @property
    def resolved_bucket(self) -> int:
        if self.bucket is None:
            return default_bucket(self.ngram_order)
        return self.bucket

    def resolve_loss(self, nlabels: int) -> str:
        if self.loss != AUTO:
            return self.loss
        return SOFTMAX if nlabels <= AUTO_HS_THRESHOLD else HIERARCHICAL

    def with_(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

