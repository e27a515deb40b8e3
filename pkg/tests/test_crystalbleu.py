import math
import random
from collections import Counter

import pytest

from tikzlab.crystalbleu import crystal_bleu, trivially_shared_ngrams
from tikzlab.errors import EmptyCorpus, LengthMismatch


# ---------------------------------------------------------------------------
# independent corpus-BLEU oracle (textbook formulation, separate code path)

def _oracle_bleu(candidates, references, max_order=4):
    matches = [0] * max_order
    totals = [0] * max_order
    c_len = sum(len(c) for c in candidates)
    r_len = sum(len(r) for r in references)
    for cand, ref in zip(candidates, references):
        for n in range(1, max_order + 1):
            c_grams = Counter(
                tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)
            )
            r_grams = Counter(
                tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)
            )
            totals[n - 1] += sum(c_grams.values())
            matches[n - 1] += sum(
                min(count, r_grams[g]) for g, count in c_grams.items()
            )
    precisions = []
    for m, t in zip(matches, totals):
        if t == 0:
            continue
        if m == 0:
            return 0.0
        precisions.append(m / t)
    if not precisions or c_len == 0:
        return 0.0
    bp = 1.0 if c_len >= r_len else math.exp(1 - r_len / c_len)
    return bp * math.exp(sum(math.log(p) for p in precisions) / len(precisions))


def test_self_comparison_k0_is_one():
    corpus = [["a", "b", "c", "d", "e"], ["x", "y", "z", "w", "v", "u"]]
    assert crystal_bleu(corpus, corpus, k=0) == pytest.approx(1.0, abs=1e-12)


def test_disjoint_vocabularies_zero():
    cand = [["a", "b", "c", "d"]]
    ref = [["w", "x", "y", "z"]]
    assert crystal_bleu(cand, ref, k=0) == 0.0


def test_k0_matches_independent_oracle_on_random_corpora():
    rng = random.Random(1234)
    vocab = [f"tok{i}" for i in range(12)]
    for trial in range(20):
        n_docs = rng.randint(1, 6)
        cands, refs = [], []
        for _ in range(n_docs):
            ref = [rng.choice(vocab) for _ in range(rng.randint(8, 25))]
            cand = [
                t if rng.random() < 0.7 else rng.choice(vocab) for t in ref
            ]
            if rng.random() < 0.3:
                cand = cand[: rng.randint(8, len(cand))]
            refs.append(ref)
            cands.append(cand)
        assert crystal_bleu(cands, refs, k=0) == pytest.approx(
            _oracle_bleu(cands, refs), abs=1e-9
        ), f"trial {trial}"


def test_trivially_shared_top_k():
    refs = [["a", "a", "a", "b", "b", "c"]]
    shared = trivially_shared_ngrams(refs, k=2)
    assert ("a",) in shared
    assert len(shared) == 2


def test_discounting_removes_boilerplate_influence():
    # "the" dominates the reference corpus; removing it as trivially shared
    # stops it from inflating the unigram precision
    refs = [["the", "a", "the", "b", "the", "c", "the", "d"]]
    cands = [["the", "a", "the", "b", "the", "x", "the", "y"]]
    with_shared = crystal_bleu(cands, refs, k=0)
    without = crystal_bleu(cands, refs, k=1)  # removes ("the",)
    assert 0.0 < without < with_shared


def test_corruption_never_increases_score():
    rng = random.Random(99)
    vocab = [f"t{i}" for i in range(8)]
    refs = [[rng.choice(vocab) for _ in range(15)] for _ in range(4)]
    cands = [list(r) for r in refs]
    prev = crystal_bleu(cands, refs, k=0)
    for step in range(5):
        # replace more tokens with out-of-vocabulary ones
        for doc in cands:
            i = rng.randrange(len(doc))
            doc[i] = f"oov{step}_{i}"
        score = crystal_bleu(cands, refs, k=0)
        assert score <= prev + 1e-12
        prev = score


def test_empty_corpus_raises():
    with pytest.raises(EmptyCorpus):
        crystal_bleu([], [], k=0)


def test_misaligned_raises():
    with pytest.raises(LengthMismatch):
        crystal_bleu([["a"]], [["a"], ["b"]], k=0)
