"""Memorization and complexity analysis: tokenization, comment stripping,
code n-gram novelty, caption copying, and token-count statistics."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import EmptyGroup, NoNGrams

# Moses-compatible rule subset: words keep internal apostrophes and hyphens
# ("state-of-the-art" stays one token), every other punctuation character
# becomes its own token.
_TOKEN_RE = re.compile(r"\w+(?:[-'’]\w+)*|[^\w\s]", re.UNICODE)

_COMMENT_RE = re.compile(r"(?<!\\)%")


def tokenize(text: str) -> list[str]:
    """Split text into tokens: whitespace boundaries, punctuation separated
    from words, internal apostrophes/hyphens kept."""
    return _TOKEN_RE.findall(text)


def strip_comments(tikz_code: str) -> str:
    """Remove per-line comment suffixes starting at the first unescaped %.

    ``\\%`` survives; line structure is preserved (comment-only lines become
    empty lines so line numbers stay stable).
    """
    out = []
    for line in tikz_code.split("\n"):
        m = _COMMENT_RE.search(line)
        out.append(line[: m.start()] if m else line)
    return "\n".join(out)


def ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    if n < 1:
        raise ValueError("n must be >= 1")
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


@dataclass
class NGramIndex:
    """Set of token n-grams of a fixed order plus corpus size bookkeeping."""

    n: int
    grams: set[tuple[str, ...]] = field(default_factory=set)
    source_size: int = 0

    def add_document(self, tokens: Sequence[str]) -> None:
        self.grams.update(ngrams(tokens, self.n))
        self.source_size += len(tokens)

    def __contains__(self, gram: tuple[str, ...]) -> bool:
        return gram in self.grams


def build_index(documents: Iterable[Sequence[str]], n: int) -> NGramIndex:
    index = NGramIndex(n=n)
    for doc in documents:
        index.add_document(doc)
    return index


def ngram_novelty(
    generated_corpus: Iterable[Sequence[str]], training_index: NGramIndex
) -> float:
    """Fraction of unique generated n-grams absent from the training index.

    Uniqueness is on the generated side: each distinct gram counts once no
    matter how often it occurs.
    """
    unique = set()
    for doc in generated_corpus:
        unique.update(ngrams(doc, training_index.n))
    if not unique:
        raise NoNGrams(
            f"generated corpus has no {training_index.n}-grams"
        )
    novel = sum(1 for g in unique if g not in training_index)
    return novel / len(unique)


def caption_copying(
    caption_tokens: Sequence[str], code_tokens: Sequence[str], n: int
) -> float:
    """Fraction of caption n-gram positions that occur as contiguous runs in
    the code token stream."""
    positions = ngrams(caption_tokens, n)
    if not positions:
        raise NoNGrams(f"caption has no {n}-grams")
    code_grams = set(ngrams(code_tokens, n))
    copied = sum(1 for g in positions if g in code_grams)
    return copied / len(positions)


def complexity_stats(corpus: Mapping[str, Iterable[str]]) -> dict[str, float]:
    """Mean comment-stripped token count per system tag."""
    stats = {}
    for system, docs in corpus.items():
        counts = [len(tokenize(strip_comments(doc))) for doc in docs]
        if not counts:
            raise EmptyGroup(f"system {system!r} has no documents")
        stats[system] = sum(counts) / len(counts)
    return stats
