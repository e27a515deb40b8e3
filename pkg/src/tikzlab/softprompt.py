"""Multimodal adapter math: project an embedding into the language model's
word-embedding space and prepend it as a single soft-prefix row."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch


class RowSource(str, Enum):
    SOFT_PREFIX = "soft_prefix"
    TOKEN = "token"


@dataclass(frozen=True)
class ProjectionLayer:
    """Affine map from the vision feature space (d_in) into the word
    embedding space (d_out); bias defaults to zero."""

    weights: np.ndarray  # shape (d_in, d_out)
    bias: Optional[np.ndarray] = None  # shape (d_out,)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise DimensionMismatch(f"weights must be 2-d, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights contain non-finite entries")
        b = self.bias
        if b is None:
            b = np.zeros(w.shape[1], dtype=np.float64)
        else:
            b = np.asarray(b, dtype=np.float64)
            if b.shape != (w.shape[1],):
                raise DimensionMismatch(
                    f"bias shape {b.shape} does not match output dim {w.shape[1]}"
                )
            if not np.all(np.isfinite(b)):
                raise ValueError("bias contains non-finite entries")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def d_in(self) -> int:
        return self.weights.shape[0]

    @property
    def d_out(self) -> int:
        return self.weights.shape[1]


@dataclass
class PromptSequence:
    """Embedding rows fed to the language model: soft-prefix rows first,
    token rows after."""

    rows: np.ndarray  # shape (k, d_out)
    source_tags: list[RowSource] = field(default_factory=list)

    def __len__(self) -> int:
        return self.rows.shape[0]


def _check_vector(v, dim: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (dim,):
        raise DimensionMismatch(f"{name} has shape {v.shape}, expected ({dim},)")
    return v


def project(layer: ProjectionLayer, embedding) -> np.ndarray:
    """embedding @ weights + bias; pure and linear in the embedding."""
    x = _check_vector(embedding, layer.d_in, "embedding")
    return x @ layer.weights + layer.bias


def prepend(projected, token_embeddings: Sequence) -> PromptSequence:
    """Build a prompt sequence with the projected vector as row 0 and the
    token embeddings unchanged after it."""
    projected = np.asarray(projected, dtype=np.float64)
    d = projected.shape[0]
    if projected.ndim != 1:
        raise DimensionMismatch("projected vector must be 1-d")
    tokens = np.asarray(token_embeddings, dtype=np.float64)
    if tokens.size == 0:
        tokens = tokens.reshape(0, d)
    if tokens.ndim != 2 or tokens.shape[1] != d:
        raise DimensionMismatch(
            f"token embeddings have shape {tokens.shape}, expected (*, {d})"
        )
    rows = np.vstack([projected[None, :], tokens])
    tags = [RowSource.SOFT_PREFIX] + [RowSource.TOKEN] * tokens.shape[0]
    return PromptSequence(rows=rows, source_tags=tags)


def project_gradient(
    layer: ProjectionLayer, embedding, upstream
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of project() under a linear loss with the given
    upstream cotangent: (d_weights, d_bias, d_embedding)."""
    x = _check_vector(embedding, layer.d_in, "embedding")
    u = _check_vector(upstream, layer.d_out, "upstream")
    d_weights = np.outer(x, u)
    d_bias = u.copy()
    d_embedding = layer.weights @ u
    return d_weights, d_bias, d_embedding
