"""Embedding providers behind a common interface: a deterministic mock and an
optional real CLIP backend (loaded lazily so the mock path needs no model
dependencies)."""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

MOCK_DIM = 64
CAPTION_CANDIDATES = 5


class ProviderError(Exception):
    """Turned into a per-request error response by the server."""


class MockProvider:
    """Hash-derived unit vectors, keyed only by content (text payload, or
    image filename stem) so a text equal to an image's stem gets the exact
    same vector. The toolkit ships a native twin of this derivation; a shared
    golden file keeps the two bit-identical."""

    def __init__(self, seed: int = 0, dim: int = MOCK_DIM):
        self.seed = seed
        self.dim = dim
        self.model_id = f"mock-seed{seed}-d{dim}"

    def _vector(self, key: str) -> np.ndarray:
        material = f"{self.seed}\x1f{key}".encode("utf-8")
        digest = hashlib.blake2b(material, digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "big"))
        v = rng.standard_normal(self.dim)
        return v / np.linalg.norm(v)

    def embed_text(self, text: str) -> np.ndarray:
        return self._vector(text)

    def embed_image(self, image_path: str) -> np.ndarray:
        return self._vector(Path(image_path).stem)

    def caption_image(self, image_path: str) -> list[str]:
        stem = Path(image_path).stem
        return [stem] + [
            f"{stem} variant {i}" for i in range(1, CAPTION_CANDIDATES)
        ]


class ClipProvider:
    """Real CLIP embeddings via open_clip; one checkpoint per process."""

    def __init__(self, model_name: str = "ViT-B-32", pretrained: str = "openai"):
        try:
            import open_clip  # noqa: F401  deferred heavy import
            import torch
        except ImportError as exc:
            raise ProviderError(
                f"CLIP backend unavailable: {exc}; install the [clip] extra"
            ) from exc
        self._torch = torch
        self._open_clip = open_clip
        self.model, _, self.preprocess = open_clip.create_model_and_transforms(
            model_name, pretrained=pretrained
        )
        self.model.eval()
        self.tokenizer = open_clip.get_tokenizer(model_name)
        self.model_id = f"open_clip:{model_name}/{pretrained}"
        with torch.no_grad():
            probe = self.model.encode_text(self.tokenizer(["probe"]))
        self.dim = int(probe.shape[-1])

    def embed_text(self, text: str) -> np.ndarray:
        with self._torch.no_grad():
            v = self.model.encode_text(self.tokenizer([text]))[0]
        return v.cpu().numpy().astype(np.float64)

    def embed_image(self, image_path: str) -> np.ndarray:
        from PIL import Image

        path = Path(image_path)
        if not path.is_file():
            raise ProviderError(f"no such image: {image_path}")
        with Image.open(path) as img:
            tensor = self.preprocess(img.convert("RGB")).unsqueeze(0)
        with self._torch.no_grad():
            v = self.model.encode_image(tensor)[0]
        return v.cpu().numpy().astype(np.float64)

    def caption_image(self, image_path: str) -> list[str]:
        raise ProviderError("captioner not loaded")
