"""Text embeddings and cosine similarity behind a provider abstraction.

Two providers implement the same contract: a deterministic local one
that feature-hashes tokens (hermetic, no network), and a remote client
for an embedding service speaking the shared wire protocol. Vectors
are cached per (model_id, text hash), so repeated texts are free.
"""

from __future__ import annotations

import hashlib
import math
import re
import threading
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass

import numpy as np
import requests

from .errors import ProviderError, TransportError, ValidationError

__all__ = [
    "LOCAL_DIM",
    "LOCAL_HASH_SEED",
    "LOCAL_MODEL_ID",
    "EmbeddingVector",
    "SimilarityProvider",
    "LocalHashingProvider",
    "RemoteProvider",
    "local_embed",
    "embed_batch",
    "cosine",
]

# Local provider constants. The seed keys the token hash; changing
# either value changes every vector, so they are fixed here and in the
# README.
LOCAL_DIM = 1024
LOCAL_HASH_SEED = b"comvi-local-embed-v1"
LOCAL_MODEL_ID = "local-hash-1024-v1"

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """A fixed-length real vector with its dimension.

    Entries must be finite. The backing array is marked read-only so a
    cached vector cannot be mutated by one caller under another.
    """

    values: np.ndarray
    dim: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (self.dim,):
            raise ValidationError(
                f"vector has shape {arr.shape}, expected ({self.dim},)"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError("vector entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingVector):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.values, other.values)


def _token_bucket(token: str) -> int:
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=LOCAL_HASH_SEED
    ).digest()
    return int.from_bytes(digest, "big") % LOCAL_DIM


def local_embed(text: str) -> EmbeddingVector:
    """Embed text deterministically without a model.

    Lowercases, tokenizes on non-alphanumeric boundaries, weights each
    token 1 + ln(tf), feature-hashes into LOCAL_DIM buckets keyed by
    LOCAL_HASH_SEED, and L2-normalizes. No tokens yields the zero
    vector.
    """
    counts = Counter(_TOKEN_RE.findall(text.lower()))
    vec = np.zeros(LOCAL_DIM, dtype=np.float64)
    for token, tf in counts.items():
        vec[_token_bucket(token)] += 1.0 + math.log(tf)
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return EmbeddingVector(values=vec, dim=LOCAL_DIM)


class SimilarityProvider(ABC):
    """Contract shared by all embedding providers.

    ``embed_many`` is deterministic per provider configuration and
    thread-safe; the cache may be read and written concurrently.
    """

    def __init__(self, model_id: str, dim: int) -> None:
        if dim < 1:
            raise ValidationError(f"provider dim must be >= 1, got {dim}")
        self.model_id = model_id
        self.dim = dim
        self._cache: dict[str, EmbeddingVector] = {}
        self._lock = threading.Lock()

    @abstractmethod
    def _embed_uncached(self, texts: list[str]) -> list[np.ndarray]:
        """Compute raw vectors for texts that missed the cache."""

    def _cache_key(self, text: str) -> str:
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def embed_many(self, texts: list[str]) -> list[EmbeddingVector]:
        keys = [self._cache_key(t) for t in texts]
        with self._lock:
            found = {k: self._cache[k] for k in keys if k in self._cache}
        missing: dict[str, str] = {}
        for key, text in zip(keys, texts):
            if key not in found and key not in missing:
                missing[key] = text
        if missing:
            raw = self._embed_uncached(list(missing.values()))
            if len(raw) != len(missing):
                raise ProviderError(
                    f"provider returned {len(raw)} vectors for "
                    f"{len(missing)} texts"
                )
            computed: dict[str, EmbeddingVector] = {}
            for key, arr in zip(missing, raw):
                arr = np.asarray(arr, dtype=np.float64)
                if arr.shape != (self.dim,):
                    raise ProviderError(
                        f"provider {self.model_id!r} returned a vector of "
                        f"shape {arr.shape}, expected ({self.dim},)"
                    )
                if not np.all(np.isfinite(arr)):
                    raise ProviderError(
                        f"provider {self.model_id!r} returned non-finite values"
                    )
                computed[key] = EmbeddingVector(values=arr, dim=self.dim)
            with self._lock:
                # A concurrent call may have filled some keys meanwhile;
                # first write wins so every caller sees one object.
                for key, vec in computed.items():
                    self._cache.setdefault(key, vec)
                found.update({k: self._cache[k] for k in computed})
        return [found[k] for k in keys]

    def embed(self, text: str) -> EmbeddingVector:
        return self.embed_many([text])[0]


class LocalHashingProvider(SimilarityProvider):
    """Deterministic offline provider built on :func:`local_embed`."""

    def __init__(self) -> None:
        super().__init__(model_id=LOCAL_MODEL_ID, dim=LOCAL_DIM)

    def _embed_uncached(self, texts: list[str]) -> list[np.ndarray]:
        return [local_embed(t).values for t in texts]


# The wire protocol caps one /embed request at this many texts, so the
# client chunks larger batches.
REMOTE_BATCH_LIMIT = 256


class RemoteProvider(SimilarityProvider):
    """Client for an embedding service speaking the shared protocol.

    GET /health on construction learns model_id and dim; POST /embed
    serves batches. Transport failures (connection refused, timeout)
    are retried once and then raised as TransportError; HTTP error
    statuses and malformed payloads raise ProviderError without retry.
    """

    def __init__(self, base_url: str, timeout: float = 10.0,
                 session: requests.Session | None = None) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = session if session is not None else requests.Session()
        health = self._request("GET", "/health")
        if not isinstance(health, dict) or health.get("status") != "ok":
            raise ProviderError(f"embedding service not ready: {health!r}")
        model_id = health.get("model_id")
        dim = health.get("dim")
        if not isinstance(model_id, str) or isinstance(dim, bool) \
                or not isinstance(dim, int) or dim < 1:
            raise ProviderError(f"malformed health response: {health!r}")
        super().__init__(model_id=model_id, dim=dim)

    def _request(self, method: str, path: str, body: dict | None = None) -> object:
        url = self.base_url + path
        last_error: Exception | None = None
        for _ in range(2):
            try:
                resp = self._session.request(method, url, json=body,
                                             timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code != 200:
                raise ProviderError(
                    f"embedding service returned HTTP {resp.status_code} "
                    f"for {path}"
                )
            try:
                return resp.json()
            except ValueError:
                raise ProviderError(
                    f"embedding service returned non-JSON for {path}"
                ) from None
        raise TransportError(
            f"embedding service unreachable after retry: {last_error}"
        )

    def _embed_uncached(self, texts: list[str]) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for lo in range(0, len(texts), REMOTE_BATCH_LIMIT):
            chunk = texts[lo:lo + REMOTE_BATCH_LIMIT]
            payload = self._request("POST", "/embed", {"texts": chunk})
            if not isinstance(payload, dict):
                raise ProviderError("embed response must be a JSON object")
            if payload.get("model_id") != self.model_id:
                raise ProviderError(
                    f"embed response model_id {payload.get('model_id')!r} "
                    f"does not match {self.model_id!r}"
                )
            if payload.get("dim") != self.dim:
                raise ProviderError(
                    f"embed response dim {payload.get('dim')!r} does not "
                    f"match declared dim {self.dim}"
                )
            vectors = payload.get("vectors")
            if not isinstance(vectors, list) or len(vectors) != len(chunk):
                raise ProviderError(
                    "embed response vector count does not match request"
                )
            for row in vectors:
                arr = np.asarray(row, dtype=np.float64)
                if arr.shape != (self.dim,):
                    raise ProviderError(
                        f"embed response row has shape {arr.shape}, "
                        f"expected ({self.dim},)"
                    )
                out.append(arr)
        return out


def embed_batch(provider: SimilarityProvider,
                texts: list[str]) -> list[EmbeddingVector]:
    """Embed texts in order, one vector per text, through the cache."""
    return provider.embed_many(texts)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity in [-1, 1]; zero-norm vectors compare as 0."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    norm_a = float(np.linalg.norm(a.values))
    norm_b = float(np.linalg.norm(b.values))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    value = float(np.dot(a.values, b.values)) / (norm_a * norm_b)
    return max(-1.0, min(1.0, value))
