"""Embedding providers: a deterministic in-process mock and a TCP client for
the external embedder sidecar (newline-delimited JSON with a hello line)."""

from __future__ import annotations

import hashlib
import json
import socket
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import EmbedderUnavailable


class EmbeddingSource(str, Enum):
    TEXT = "text"
    IMAGE = "image"
    MOCK = "mock"


@dataclass
class EmbeddingVector:
    values: np.ndarray
    source: EmbeddingSource

    @property
    def dim(self) -> int:
        return self.values.shape[0]


MOCK_DIM = 64


def mock_vector(seed: int, key: str, dim: int = MOCK_DIM) -> np.ndarray:
    """Deterministic unit vector derived from a seed and a content key.

    The key is modality-independent (text payload, or image filename stem),
    so a text matching an image's stem receives the identical vector. The
    sidecar's mock mode implements the same derivation; a shared golden file
    pins both.
    """
    digest = hashlib.blake2b(
        f"{seed}\x1f{key}".encode("utf-8"), digest_size=8
    ).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "big"))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


class NativeMockEmbedder:
    """Zero-dependency mock provider used by the primary test suite; mirrors
    the sidecar's mock mode exactly."""

    def __init__(self, seed: int = 0, dim: int = MOCK_DIM):
        self.seed = seed
        self.dim = dim
        self.model_id = f"mock-seed{seed}-d{dim}"

    def embed_text(self, text: str) -> EmbeddingVector:
        return EmbeddingVector(
            mock_vector(self.seed, text, self.dim), EmbeddingSource.MOCK
        )

    def embed_image(self, image_path: str | Path) -> EmbeddingVector:
        key = Path(image_path).stem
        return EmbeddingVector(
            mock_vector(self.seed, key, self.dim), EmbeddingSource.MOCK
        )

    def caption_image(self, image_path: str | Path) -> list[str]:
        # hash-derived pseudo captions; candidate 0 equals the image stem so
        # it always ranks first under the mock's cosine-1 construction
        stem = Path(image_path).stem
        return [stem] + [f"{stem} variant {i}" for i in range(1, 5)]

    def close(self) -> None:
        pass


class EmbedderClient:
    """TCP client for the sidecar wire protocol: a hello line announcing dim
    and model_id, then one JSON request/response pair per line."""

    def __init__(self, addr: str, timeout: float = 30.0):
        host, _, port = addr.rpartition(":")
        try:
            self.sock = socket.create_connection(
                (host or "127.0.0.1", int(port)), timeout=timeout
            )
        except (OSError, ValueError) as exc:
            raise EmbedderUnavailable(f"cannot connect to {addr}: {exc}") from exc
        self._file = self.sock.makefile("rw", encoding="utf-8", newline="\n")
        hello = self._read()
        if "hello" not in hello:
            raise EmbedderUnavailable(f"no hello message, got {hello}")
        self.dim = int(hello["hello"]["dim"])
        self.model_id = str(hello["hello"]["model_id"])
        self._next_id = 0

    def _read(self) -> dict:
        line = self._file.readline()
        if not line:
            raise EmbedderUnavailable("embedder closed the connection")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise EmbedderUnavailable(f"invalid response line: {line!r}") from exc

    def _request(self, kind: str, **payload) -> dict:
        self._next_id += 1
        req_id = str(self._next_id)
        self._file.write(
            json.dumps({"id": req_id, "kind": kind, **payload}) + "\n"
        )
        self._file.flush()
        response = self._read()
        if response.get("id") != req_id:
            raise EmbedderUnavailable("response id mismatch")
        if "error" in response:
            raise EmbedderUnavailable(response["error"])
        return response

    def embed_text(self, text: str) -> EmbeddingVector:
        r = self._request("embed_text", text=text)
        return EmbeddingVector(
            np.asarray(r["embedding"], dtype=np.float64), EmbeddingSource.TEXT
        )

    def embed_image(self, image_path: str | Path) -> EmbeddingVector:
        r = self._request("embed_image", image_path=str(image_path))
        return EmbeddingVector(
            np.asarray(r["embedding"], dtype=np.float64), EmbeddingSource.IMAGE
        )

    def caption_image(self, image_path: str | Path) -> list[str]:
        r = self._request("caption_image", image_path=str(image_path))
        return list(r["candidates"])

    def close(self) -> None:
        try:
            self._file.close()
            self.sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_embedder(addr: Optional[str], seed: int = 0):
    """Resolve an embedder address: None or "mock" (optionally
    "mock:<seed>") yields the native mock, anything else a TCP client."""
    if addr is None or addr == "mock":
        return NativeMockEmbedder(seed=seed)
    if addr.startswith("mock:"):
        return NativeMockEmbedder(seed=int(addr.split(":", 1)[1]))
    return EmbedderClient(addr)
