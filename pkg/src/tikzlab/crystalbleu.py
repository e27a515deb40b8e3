"""Corpus BLEU with trivially-shared n-gram discounting: the k most frequent
n-grams of the reference corpus are removed from both sides before computing
modified precisions. k = 0 reduces exactly to standard BLEU."""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

from .analysis import ngrams
from .errors import EmptyCorpus, LengthMismatch

MAX_ORDER = 4


def trivially_shared_ngrams(
    reference_corpus: Sequence[Sequence[str]], k: int, max_order: int = MAX_ORDER
) -> set[tuple[str, ...]]:
    """The k most frequent n-grams (orders 1..max_order pooled) of the
    reference corpus; ties broken deterministically by gram."""
    if k <= 0:
        return set()
    counts: Counter = Counter()
    for doc in reference_corpus:
        for n in range(1, max_order + 1):
            counts.update(ngrams(doc, n))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return {gram for gram, _ in ranked[:k]}


def crystal_bleu(
    candidate_corpus: Sequence[Sequence[str]],
    reference_corpus: Sequence[Sequence[str]],
    k: int = 500,
    max_order: int = MAX_ORDER,
) -> float:
    """CrystalBLEU over aligned token-list corpora, in [0, 1].

    4-gram corpus BLEU with uniform weights and brevity penalty; the
    trivially-shared set is computed from the reference side only. Orders
    with no candidate n-grams left after discounting are excluded from the
    geometric mean.
    """
    if not candidate_corpus or not reference_corpus:
        raise EmptyCorpus("candidate and reference corpora must be non-empty")
    if len(candidate_corpus) != len(reference_corpus):
        raise LengthMismatch(
            f"{len(candidate_corpus)} candidates vs {len(reference_corpus)} references"
        )

    trivial = trivially_shared_ngrams(reference_corpus, k, max_order)

    matches = [0] * max_order
    totals = [0] * max_order
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidate_corpus, reference_corpus):
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, max_order + 1):
            cand_counts = Counter(
                g for g in ngrams(cand, n) if g not in trivial
            )
            ref_counts = Counter(g for g in ngrams(ref, n) if g not in trivial)
            totals[n - 1] += sum(cand_counts.values())
            matches[n - 1] += sum(
                min(c, ref_counts[g]) for g, c in cand_counts.items()
            )

    log_sum = 0.0
    orders = 0
    for m, t in zip(matches, totals):
        if t == 0:
            continue
        if m == 0:
            return 0.0
        log_sum += math.log(m / t)
        orders += 1
    if orders == 0:
        return 0.0

    if cand_len == 0:
        return 0.0
    bp = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    return bp * math.exp(log_sum / orders)
