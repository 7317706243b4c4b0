"""Text encoders behind the embedding service.

Two interchangeable backends: a pretrained transformer encoder for real
deployments and a deterministic hashing encoder that needs no model
download, for tests and air-gapped environments. Both are deterministic
for a fixed model version: the same text always encodes to the same
vector, which the service contract relies on.
"""

from __future__ import annotations

import hashlib
import re
from abc import ABC, abstractmethod

import numpy as np

DEFAULT_SENTENCE_MODEL = "sentence-transformers/all-mpnet-base-v2"
HASHING_MODEL_ID = "hashing-v1"
HASHING_DIM = 384

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class Encoder(ABC):
    """A deterministic text-to-vector encoder with a fixed dimension."""

    def __init__(self, model_id: str, dim: int) -> None:
        if dim < 1:
            raise ValueError("encoder dim must be >= 1")
        self.model_id = model_id
        self.dim = dim

    @abstractmethod
    def encode(self, texts: list[str]) -> list[list[float]]:
        """Encode texts in order, one dim-length vector per input."""


class HashingEncoder(Encoder):
    """Token-hashing encoder: no weights, no downloads, fully deterministic.

    Each lowercased token is hashed into one of dim - 1 buckets and
    counted; the final slot is a constant bias so that no text, not even
    an empty one, encodes to the zero vector. Vectors are L2-normalized,
    making every self-cosine exactly 1.
    """

    def __init__(self, model_id: str = HASHING_MODEL_ID,
                 dim: int = HASHING_DIM) -> None:
        if dim < 2:
            raise ValueError("hashing encoder needs dim >= 2")
        super().__init__(model_id=model_id, dim=dim)

    def _vector(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        buckets = self.dim - 1
        for token in _TOKEN_RE.findall(text.lower()):
            digest = hashlib.md5(token.encode("utf-8")).digest()
            vec[int.from_bytes(digest[:8], "big") % buckets] += 1.0
        vec[self.dim - 1] = 1.0
        return vec / np.linalg.norm(vec)

    def encode(self, texts: list[str]) -> list[list[float]]:
        return [self._vector(t).tolist() for t in texts]


class SentenceTransformerEncoder(Encoder):
    """Pretrained transformer encoder (weights fetched on first use)."""

    def __init__(self, model_id: str = DEFAULT_SENTENCE_MODEL) -> None:
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(model_id)
        self._model.eval()
        super().__init__(
            model_id=model_id,
            dim=int(self._model.get_sentence_embedding_dimension()),
        )

    def encode(self, texts: list[str]) -> list[list[float]]:
        rows = self._model.encode(texts, convert_to_numpy=True,
                                  show_progress_bar=False)
        return [np.asarray(row, dtype=np.float64).tolist() for row in rows]


def build_encoder(backend: str, model_id: str | None = None) -> Encoder:
    """Construct the encoder for a backend name ("sentence" or "hashing")."""
    if backend == "hashing":
        if model_id is None:
            return HashingEncoder()
        return HashingEncoder(model_id=model_id)
    if backend == "sentence":
        if model_id is None:
            return SentenceTransformerEncoder()
        return SentenceTransformerEncoder(model_id=model_id)
    raise ValueError(f"unknown encoder backend {backend!r}")
