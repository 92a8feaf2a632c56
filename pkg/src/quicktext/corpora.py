"""Converters for the CSV benchmark corpora (AG News, DBpedia).

Both ship as ``train.csv``/``test.csv`` with rows ``"class","title","body"``
where class is a 1-based integer.  Text is lowercased and punctuation is
split off into separate tokens before being written in ``__label__`` format.
"""

from __future__ import annotations

import csv
import random
import re
from pathlib import Path
from typing import Iterable, Iterator, List, Sequence, Tuple

from quicktext.dictionary import LABEL_PREFIX

_DROP = re.compile(r'<br\s*/?>|\\n|[";:]')
_SPLIT = re.compile(r"([.,()!?'])")
_SPACE = re.compile(r"\s+")


def normalize(text: str) -> str:
    """Lowercase and put whitespace around punctuation."""
    text = _DROP.sub(" ", text.lower())
    text = _SPLIT.sub(r" \1 ", text)
    return _SPACE.sub(" ", text).strip()


def read_csv(path) -> Iterator[Tuple[str, str]]:
    """Yield ``(class, text)`` rows; all columns after the class are joined."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        for row in csv.reader(f):
            if not row:
                continue
            yield row[0].strip(), " ".join(row[1:])


def to_lines(rows: Iterable[Tuple[str, str]]) -> List[str]:
    return [f"{LABEL_PREFIX}{label} {normalize(text)}" for label, text in rows]


def split_holdout(lines: Sequence[str], fraction: float, seed: int = 0):
    """Shuffle and split off ``fraction`` of the lines; returns (train, held_out)."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    shuffled = list(lines)
    random.Random(seed).shuffle(shuffled)
    n_held = max(1, round(len(shuffled) * fraction))
    return shuffled[n_held:], shuffled[:n_held]


def convert_dir(src, dst) -> Tuple[Path, Path]:
    """Convert ``src/{train,test}.csv`` into ``dst/{train,test}.txt``."""
    src, dst = Path(src), Path(dst)
    dst.mkdir(parents=True, exist_ok=True)
    out = []
    for name in ("train", "test"):
        target = dst / f"{name}.txt"
        with open(target, "w", encoding="utf-8") as f:
            for line in to_lines(read_csv(src / f"{name}.csv")):
                f.write(line + "\n")
        out.append(target)
    return out[0], out[1]
