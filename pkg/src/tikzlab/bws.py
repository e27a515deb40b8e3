"""Best-worst scaling: per-item scores, split-half reliability, Spearman
correlation, and min-max normalization."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateInput,
    DegenerateRange,
    EmptyInput,
    InvalidRecord,
    LengthMismatch,
    Unsplittable,
)

TUPLE_SIZE = 4
MAX_SPLIT_RETRIES = 1000


@dataclass(frozen=True)
class AnnotationRecord:
    tuple_id: str
    items: tuple[str, str, str, str]
    best: str
    worst: str
    annotator: str

    def __post_init__(self):
        if len(self.items) != TUPLE_SIZE:
            raise InvalidRecord(
                f"tuple {self.tuple_id}: expected {TUPLE_SIZE} items"
            )
        if self.best not in self.items or self.worst not in self.items:
            raise InvalidRecord(
                f"tuple {self.tuple_id}: best/worst must be tuple members"
            )
        if self.best == self.worst:
            raise InvalidRecord(f"tuple {self.tuple_id}: best equals worst")


def read_annotations(path: str | Path) -> list[AnnotationRecord]:
    """CSV with header tuple_id,item1,item2,item3,item4,best,worst,annotator."""
    records = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            records.append(
                AnnotationRecord(
                    tuple_id=row["tuple_id"],
                    items=(row["item1"], row["item2"], row["item3"], row["item4"]),
                    best=row["best"],
                    worst=row["worst"],
                    annotator=row["annotator"],
                )
            )
    return records


def bws_scores(annotations: Iterable[AnnotationRecord]) -> dict[str, float]:
    """score(item) = best_count/appearances - worst_count/appearances."""
    appearances: dict[str, int] = {}
    best: dict[str, int] = {}
    worst: dict[str, int] = {}
    n = 0
    for rec in annotations:
        n += 1
        for item in rec.items:
            appearances[item] = appearances.get(item, 0) + 1
        best[rec.best] = best.get(rec.best, 0) + 1
        worst[rec.worst] = worst.get(rec.worst, 0) + 1
    if n == 0:
        raise EmptyInput("no annotations")
    return {
        item: (best.get(item, 0) - worst.get(item, 0)) / count
        for item, count in appearances.items()
    }


def _fractional_ranks(xs: np.ndarray) -> np.ndarray:
    """Average ranks for ties, 1-based."""
    order = np.argsort(xs, kind="stable")
    ranks = np.empty(len(xs), dtype=np.float64)
    i = 0
    while i < len(xs):
        j = i
        while j + 1 < len(xs) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation of fractional ranks (average ranks for ties)."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"{x.shape} vs {y.shape}")
    if len(x) == 0:
        raise LengthMismatch("empty input")
    rx = _fractional_ranks(x)
    ry = _fractional_ranks(y)
    sx = rx.std()
    sy = ry.std()
    if sx == 0.0 or sy == 0.0:
        raise DegenerateInput("correlation undefined for constant input")
    return float(((rx - rx.mean()) * (ry - ry.mean())).mean() / (sx * sy))


def split_half_reliability(
    annotations: Sequence[AnnotationRecord],
    seed: int = 0,
    repeats: int = 100,
) -> float:
    """Mean Spearman correlation of per-half BWS scores over random
    half-splits of the annotation records.

    Splits where some item is missing from either half are resampled (up to
    a bounded retry budget per repeat).
    """
    if not annotations:
        raise EmptyInput("no annotations")
    all_items = sorted({item for rec in annotations for item in rec.items})
    rng = np.random.default_rng(seed)
    n = len(annotations)
    rhos = []
    for _ in range(repeats):
        for _retry in range(MAX_SPLIT_RETRIES):
            perm = rng.permutation(n)
            half_a = [annotations[i] for i in perm[: n // 2]]
            half_b = [annotations[i] for i in perm[n // 2 :]]
            items_a = {item for rec in half_a for item in rec.items}
            items_b = {item for rec in half_b for item in rec.items}
            if items_a.issuperset(all_items) and items_b.issuperset(all_items):
                break
        else:
            raise Unsplittable(
                f"no covering half-split found in {MAX_SPLIT_RETRIES} tries"
            )
        scores_a = bws_scores(half_a)
        scores_b = bws_scores(half_b)
        rhos.append(
            spearman(
                [scores_a[i] for i in all_items],
                [scores_b[i] for i in all_items],
            )
        )
    return float(np.mean(rhos))


def min_max_normalize(scores: dict[str, float]) -> dict[str, float]:
    """(x - min) / (max - min) over the score values."""
    values = list(scores.values())
    lo = min(values)
    hi = max(values)
    if hi == lo:
        raise DegenerateRange("all scores equal, normalization undefined")
    return {item: (v - lo) / (hi - lo) for item, v in scores.items()}
