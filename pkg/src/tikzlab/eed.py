"""Extended edit distance: character-level Levenshtein with a jump operation
at blank boundaries and a coverage penalty, normalized to [0, 1]."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class EedParams:
    # published defaults of the extended-edit-distance reference
    jump: float = 2.0
    deletion: float = 0.2
    insertion: float = 1.0
    substitution: float = 1.0
    rho: float = 0.3  # coverage penalty weight


DEFAULT_PARAMS = EedParams()


def eed(hypothesis: str, reference: str, params: EedParams = DEFAULT_PARAMS) -> float:
    """Normalized extended edit distance; 0 for identical strings, capped at
    1, lower is better.

    Both strings are padded with boundary blanks; after each reference
    character is consumed, a jump from the cheapest blank position is allowed
    at jump cost, and repeated visits of a blank accrue the coverage penalty.
    Normalization uses the unpadded reference length.
    """
    if not reference:
        return 0.0 if not hypothesis else 1.0

    hyp = " " + hypothesis + " "
    ref = " " + reference + " "
    n = len(hyp)
    visits = [-1] * (n + 1)  # per-position visit counts, first visit is free

    # row[i]: cheapest cost of producing the consumed reference prefix from
    # the first i hypothesis characters
    row = [i * params.deletion for i in range(n + 1)]
    for ref_char in ref:
        next_row = [row[0] + params.insertion] + [math.inf] * n
        for i in range(1, n + 1):
            sub = 0.0 if hyp[i - 1] == ref_char else params.substitution
            next_row[i] = min(
                next_row[i - 1] + params.deletion,
                row[i - 1] + sub,
                row[i] + params.insertion,
            )
        min_ind = min(range(n + 1), key=next_row.__getitem__)
        if min_ind > 0 and hyp[min_ind - 1] == " ":
            visits[min_ind] += 1
            jump_cost = next_row[min_ind] + params.jump
            for i in range(n + 1):
                if jump_cost < next_row[i]:
                    next_row[i] = jump_cost
        row = next_row

    errors = row[n]
    coverage = sum(v for v in visits if v > 0)
    score = (errors + params.rho * coverage) / (len(reference) + params.rho * coverage)
    return min(1.0, score)
