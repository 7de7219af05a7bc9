"""Deterministic stratified train/validation/test partitioning.

Two-stage carve: the test fraction comes off the whole cohort first, then
the validation fraction comes off the remaining pool, stratified by class
at each step. Within a class, indices are shuffled by the documented
SplitMix64 key-sort shuffle and cut at the floored class-proportional
boundary; flooring resolves remainder rows toward the training pool.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, StratificationError
from .rng import SplitMix64

_EPS = 1e-9  # guards floor() against products like 50*0.2 = 10.000000000000002


@dataclass(frozen=True)
class SplitConfig:
    test_fraction: float = 0.20
    valid_fraction_of_pool: float = 0.20
    seed: int = 42

    def __post_init__(self):
        for frac in (self.test_fraction, self.valid_fraction_of_pool):
            if not 0.0 < frac < 1.0:
                raise DomainError(f"split fraction {frac} outside (0, 1)")


@dataclass(frozen=True)
class DatasetSplit:
    train_idx: np.ndarray
    valid_idx: np.ndarray
    test_idx: np.ndarray
    seed: int

    def save(self, out_dir: str | Path) -> None:
        """Three index files plus the seed, exactly repeatable."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, idx in (("train", self.train_idx), ("valid", self.valid_idx),
                          ("test", self.test_idx)):
            (out / f"{name}.idx").write_text(
                "\n".join(str(i) for i in idx) + "\n")
        (out / "seed.txt").write_text(f"{self.seed}\n")

    @classmethod
    def load(cls, out_dir: str | Path) -> "DatasetSplit":
        out = Path(out_dir)
        parts = []
        for name in ("train", "valid", "test"):
            text = (out / f"{name}.idx").read_text()
            parts.append(np.array([int(v) for v in text.split()], dtype=np.int64))
        seed_file = out / "seed.txt"
        seed = int(seed_file.read_text()) if seed_file.exists() else -1
        return cls(parts[0], parts[1], parts[2], seed)


def _floor(x: float) -> int:
    return int(x + _EPS)


def stratified_split(labels: np.ndarray, cfg: SplitConfig = SplitConfig()) -> DatasetSplit:
    """Class-preserving 3-way split of ``range(len(labels))``."""
    labels = np.asarray(labels)
    n = len(labels)
    if n < 10:
        raise DomainError(f"need at least 10 rows to split, got {n}")
    classes = np.unique(labels)
    if len(classes) < 2:
        raise StratificationError("both classes must be present to stratify")

    rng = SplitMix64(cfg.seed)
    train_parts, valid_parts, test_parts = [], [], []
    # Class order is ascending label value; each class consumes the next
    # block of the seeded stream.
    for cls_value in classes:
        cls_idx = np.flatnonzero(labels == cls_value)
        n_cls = len(cls_idx)
        if n_cls < 3:
            raise StratificationError(
                f"class {cls_value} has {n_cls} members, fewer than the 3 splits")
        shuffled = cls_idx[rng.shuffled(n_cls)]
        n_test = _floor(n_cls * cfg.test_fraction)
        pool = n_cls - n_test
        n_valid = _floor(pool * cfg.valid_fraction_of_pool)
        test_parts.append(shuffled[:n_test])
        valid_parts.append(shuffled[n_test:n_test + n_valid])
        train_parts.append(shuffled[n_test + n_valid:])

    def _gather(parts: list[np.ndarray]) -> np.ndarray:
        out = np.concatenate(parts)
        out.sort()
        return out

    return DatasetSplit(
        train_idx=_gather(train_parts),
        valid_idx=_gather(valid_parts),
        test_idx=_gather(test_parts),
        seed=cfg.seed,
    )


def class_weight(train_labels: np.ndarray) -> float:
    """Negative-to-positive ratio over the training portion."""
    train_labels = np.asarray(train_labels)
    positives = int((train_labels == 1).sum())
    if positives == 0:
        raise DomainError("class weight undefined without positives")
    negatives = int((train_labels == 0).sum())
    return negatives / positives
