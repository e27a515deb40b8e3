import math
import random

import pytest

from tikzlab.bws import (
    AnnotationRecord,
    bws_scores,
    min_max_normalize,
    read_annotations,
    spearman,
    split_half_reliability,
)
from tikzlab.errors import (
    DegenerateInput,
    DegenerateRange,
    EmptyInput,
    InvalidRecord,
    LengthMismatch,
)


def _rec(tuple_id, items, best, worst, annotator="ann0"):
    return AnnotationRecord(
        tuple_id=tuple_id, items=tuple(items), best=best, worst=worst,
        annotator=annotator,
    )


def _random_annotations(rng, items, n, quality=None):
    """Synthetic annotations: best/worst picked by a latent quality order
    (or uniformly when quality is None)."""
    records = []
    for t in range(n):
        tup = rng.sample(items, 4)
        if quality is None:
            best, worst = rng.sample(tup, 2)
        else:
            ordered = sorted(tup, key=lambda i: quality[i])
            best, worst = ordered[-1], ordered[0]
        records.append(_rec(f"t{t}", tup, best, worst, f"ann{t % 3}"))
    return records


# ---------------------------------------------------------------------------
# record validation

def test_wrong_tuple_size_rejected():
    with pytest.raises(InvalidRecord):
        AnnotationRecord("t0", ("a", "b", "c"), "a", "b", "ann0")


def test_best_outside_tuple_rejected():
    with pytest.raises(InvalidRecord):
        _rec("t0", ["a", "b", "c", "d"], "z", "b")


def test_best_equals_worst_rejected():
    with pytest.raises(InvalidRecord):
        _rec("t0", ["a", "b", "c", "d"], "a", "a")


def test_read_annotations_csv(tmp_path):
    path = tmp_path / "ann.csv"
    path.write_text(
        "tuple_id,item1,item2,item3,item4,best,worst,annotator\n"
        "t0,a,b,c,d,a,d,ann0\n"
        "t1,a,b,c,d,b,c,ann1\n"
    )
    recs = read_annotations(path)
    assert len(recs) == 2
    assert recs[0].best == "a" and recs[0].worst == "d"
    assert recs[1].annotator == "ann1"


# ---------------------------------------------------------------------------
# scores

def test_hand_computed_single_item():
    # "a" appears in 4 tuples, chosen best 3 times, worst once: (3-1)/4 = 0.5
    recs = [
        _rec("t0", ["a", "b", "c", "d"], "a", "d"),
        _rec("t1", ["a", "b", "c", "d"], "a", "c"),
        _rec("t2", ["a", "b", "c", "d"], "a", "b"),
        _rec("t3", ["a", "b", "c", "d"], "b", "a"),
    ]
    scores = bws_scores(recs)
    assert scores["a"] == pytest.approx((3 - 1) / 4)


def test_scores_bounded():
    rng = random.Random(0)
    items = [f"i{k}" for k in range(8)]
    scores = bws_scores(_random_annotations(rng, items, 50))
    assert all(-1.0 <= s <= 1.0 for s in scores.values())


def test_scores_sum_zero_when_counts_balanced():
    # every record names one best and one worst, so summing count-weighted
    # scores over items gives zero
    rng = random.Random(1)
    items = [f"i{k}" for k in range(8)]
    recs = _random_annotations(rng, items, 40)
    scores = bws_scores(recs)
    appearances = {}
    for rec in recs:
        for item in rec.items:
            appearances[item] = appearances.get(item, 0) + 1
    weighted = sum(scores[i] * appearances[i] for i in scores)
    assert weighted == pytest.approx(0.0, abs=1e-12)


def test_scores_empty_raises():
    with pytest.raises(EmptyInput):
        bws_scores([])


def test_scores_recover_latent_order():
    rng = random.Random(2)
    items = [f"i{k}" for k in range(10)]
    quality = {item: k for k, item in enumerate(items)}
    recs = _random_annotations(rng, items, 400, quality=quality)
    scores = bws_scores(recs)
    ranked = sorted(items, key=lambda i: scores[i])
    assert ranked == items


# ---------------------------------------------------------------------------
# spearman

def test_spearman_identity():
    assert spearman([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)


def test_spearman_reversed():
    assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)


def test_spearman_tied_oracle():
    # ranks x: [1, 2.5, 2.5, 4]; ranks y: [1, 2, 3.5, 3.5]
    # Pearson of those rank vectors, computed by hand:
    x = [1.0, 2.5, 2.5, 4.0]
    y = [1.0, 2.0, 3.5, 3.5]
    mx, my = sum(x) / 4, sum(y) / 4
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    den = math.sqrt(
        sum((a - mx) ** 2 for a in x) * sum((b - my) ** 2 for b in y)
    )
    assert spearman([1, 2, 2, 3], [1, 2, 3, 3]) == pytest.approx(num / den)


def test_spearman_monotone_transform_invariant():
    xs = [0.3, -1.2, 5.0, 2.2, 0.0]
    ys = [2.0, 1.0, 9.0, 4.0, 1.5]
    assert spearman(xs, ys) == pytest.approx(
        spearman([math.exp(x) for x in xs], ys)
    )


def test_spearman_constant_input():
    with pytest.raises(DegenerateInput):
        spearman([1, 1, 1], [1, 2, 3])


def test_spearman_length_mismatch():
    with pytest.raises(LengthMismatch):
        spearman([1, 2], [1, 2, 3])


# ---------------------------------------------------------------------------
# split-half reliability

def test_shr_perfectly_consistent_annotations():
    # every annotation agrees exactly (same tuple, same best, same worst), so
    # any half-split yields identical rank vectors and rho is exactly 1
    recs = [
        _rec(f"t{k}", ["a", "b", "c", "d"], "a", "d", f"ann{k}")
        for k in range(18)
    ]
    assert split_half_reliability(recs, seed=0, repeats=20) == pytest.approx(1.0)


def test_shr_random_annotations_near_zero():
    rng = random.Random(3)
    items = [f"i{k}" for k in range(8)]
    recs = _random_annotations(rng, items, 1000)
    rho = split_half_reliability(recs, seed=0, repeats=20)
    assert abs(rho) < 0.2


def test_shr_quality_driven_annotations_high():
    rng = random.Random(4)
    items = [f"i{k}" for k in range(8)]
    quality = {item: k for k, item in enumerate(items)}
    recs = _random_annotations(rng, items, 400, quality=quality)
    assert split_half_reliability(recs, seed=0, repeats=10) > 0.9


def test_shr_seed_reproducible():
    rng = random.Random(5)
    items = [f"i{k}" for k in range(6)]
    recs = _random_annotations(rng, items, 200)
    a = split_half_reliability(recs, seed=11, repeats=10)
    b = split_half_reliability(recs, seed=11, repeats=10)
    assert a == b


def test_shr_empty_raises():
    with pytest.raises(EmptyInput):
        split_half_reliability([])


# ---------------------------------------------------------------------------
# normalization

def test_min_max_known_values():
    assert min_max_normalize({"a": -1.0, "b": 0.0, "c": 1.0}) == {
        "a": 0.0,
        "b": 0.5,
        "c": 1.0,
    }


def test_min_max_degenerate():
    with pytest.raises(DegenerateRange):
        min_max_normalize({"a": 0.3, "b": 0.3})
