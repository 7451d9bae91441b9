"""Embedding providers, the write-once embedding cache and the exact cosine index."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import sqlite3
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[^0-9a-zA-Z]+")


class EmbeddingError(RuntimeError):
    pass


class TransportError(EmbeddingError):
    """Remote call failed after all retries."""


class DimensionMismatch(EmbeddingError):
    pass


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_RE.split(text.lower()) if t]


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def _check_vector(vec: np.ndarray, text: str) -> np.ndarray:
    if vec.ndim != 1 or vec.size == 0:
        raise EmbeddingError(f"embedding for {text!r} is not a non-empty vector")
    if not np.all(np.isfinite(vec)) or not np.any(vec):
        raise EmbeddingError(f"embedding for {text!r} is zero or non-finite")
    return vec


class HashEmbedder:
    """Offline token-hash bag embedder.

    Each lowercase alphanumeric token is hashed (blake2b, so results do not depend
    on PYTHONHASHSEED) into one of ``dim`` buckets with a sign taken from the hash;
    the bag is summed and L2-normalised. Text without tokens maps to a fixed
    sentinel bucket so that no input yields a zero vector.
    """

    provider_id = "hash"

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.model = f"token-hash-{dim}"

    def _bucket(self, token: str) -> tuple[int, float]:
        h = int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "little")
        return (h >> 1) % self.dim, (1.0 if h & 1 else -1.0)

    def embed_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        tokens = tokenize(text) or ["\x00empty"]
        for tok in tokens:
            idx, sign = self._bucket(tok)
            vec[idx] += sign
        norm = np.linalg.norm(vec)
        if norm == 0:
            # opposite signs cancelled exactly; fall back to the first token's bucket
            idx, sign = self._bucket(tokens[0])
            vec[idx] = sign
            norm = 1.0
        return vec / norm

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self.embed_one(t) for t in texts]


class RateLimiter:
    """Minimum spacing between request starts, shared across threads."""

    def __init__(self, per_second: float | None):
        self.interval = 1.0 / per_second if per_second else 0.0
        self._lock = threading.Lock()
        self._next = 0.0

    def wait(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._next - now
            self._next = max(now, self._next) + self.interval
        if delay > 0:
            time.sleep(delay)


def post_with_retries(client, url, payload, headers, *, retries=3, backoff=0.5, limiter=None, timeout=60.0):
    """POST JSON, retrying transport failures and 429/5xx; raise TransportError at the end."""
    import httpx

    last: Exception | None = None
    for attempt in range(retries):
        if limiter is not None:
            limiter.wait()
        try:
            resp = client.post(url, json=payload, headers=headers, timeout=timeout)
            if resp.status_code == 429 or resp.status_code >= 500:
                last = TransportError(f"HTTP {resp.status_code} from {url}")
            elif resp.status_code >= 400:
                raise EmbeddingError(f"HTTP {resp.status_code} from {url}: {resp.text[:200]}")
            else:
                return resp.json()
        except httpx.HTTPError as exc:
            last = exc
        if attempt + 1 < retries:
            time.sleep(backoff * (2**attempt))
    raise TransportError(f"{url}: giving up after {retries} attempts ({last})")


class HttpEmbedder:
    """OpenAI-style embedding endpoint: ``{"model", "input": [...]}`` -> ``data[i].embedding``."""

    provider_id = "http"

    def __init__(
        self,
        endpoint: str,
        model: str,
        auth_env: str | None = None,
        auth_header: str = "Authorization",
        auth_prefix: str = "Bearer ",
        batch_size: int = 64,
        retries: int = 3,
        backoff: float = 0.5,
        requests_per_second: float | None = None,
        timeout: float = 60.0,
        client=None,
    ):
        import httpx

        self.endpoint = endpoint
        self.model = model
        self.auth_env = auth_env
        self.auth_header = auth_header
        self.auth_prefix = auth_prefix
        self.batch_size = batch_size
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self.limiter = RateLimiter(requests_per_second)
        self.client = client or httpx.Client()
        self.dim: int | None = None

    def _headers(self) -> dict:
        if not self.auth_env:
            return {}
        key = os.environ.get(self.auth_env)
        if not key:
            raise EmbeddingError(f"environment variable {self.auth_env} is not set")
        return {self.auth_header: f"{self.auth_prefix}{key}"}

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            chunk = list(texts[start : start + self.batch_size])
            body = post_with_retries(
                self.client,
                self.endpoint,
                {"model": self.model, "input": chunk},
                self._headers(),
                retries=self.retries,
                backoff=self.backoff,
                limiter=self.limiter,
                timeout=self.timeout,
            )
            try:
                rows = [np.asarray(item["embedding"], dtype=np.float64) for item in body["data"]]
            except (KeyError, TypeError) as exc:
                raise EmbeddingError(f"unexpected embedding response shape: {exc!r}") from exc
            if len(rows) != len(chunk):
                raise EmbeddingError(f"asked for {len(chunk)} embeddings, got {len(rows)}")
            out.extend(rows)
        return out

    def embed_one(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]


class EmbeddingCache:
    """Content-addressed, write-once vector store in a sqlite file.

    Vectors are kept as float64 bytes, so a hit is bit-identical to the first
    response. A second writer for the same key is ignored.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._conn = sqlite3.connect(str(self.path), check_same_thread=False)
        with self._conn:
            self._conn.execute("CREATE TABLE IF NOT EXISTS vectors (key TEXT PRIMARY KEY, dim INTEGER, vec BLOB)")
            self._conn.execute("CREATE TABLE IF NOT EXISTS manifest (k TEXT PRIMARY KEY, v TEXT)")

    @staticmethod
    def key(provider_id: str, model: str, text: str) -> str:
        h = hashlib.sha256()
        for part in (provider_id, model, text):
            h.update(part.encode("utf-8"))
            h.update(b"\x1f")
        return h.hexdigest()

    def get(self, key: str) -> np.ndarray | None:
        with self._lock:
            row = self._conn.execute("SELECT vec FROM vectors WHERE key = ?", (key,)).fetchone()
        if row is None:
            return None
        return np.frombuffer(row[0], dtype="<f8").copy()

    def put(self, key: str, vec: np.ndarray) -> np.ndarray:
        """Store if absent and return whatever the cache now holds for ``key``."""
        blob = np.asarray(vec, dtype="<f8").tobytes()
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR IGNORE INTO vectors (key, dim, vec) VALUES (?, ?, ?)", (key, len(vec), blob)
            )
        return self.get(key)

    def record_manifest(self, provider_id: str, model: str, dim: int) -> None:
        with self._lock, self._conn:
            for k, v in (("provider", provider_id), ("model", model), ("dim", int(dim))):
                self._conn.execute("INSERT OR IGNORE INTO manifest (k, v) VALUES (?, ?)", (k, json.dumps(v)))

    def manifest(self) -> dict:
        with self._lock:
            rows = self._conn.execute("SELECT k, v FROM manifest").fetchall()
        return {k: json.loads(v) for k, v in rows}

    def __len__(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM vectors").fetchone()[0]

    def close(self) -> None:
        self._conn.close()


class CachedEmbedder:
    """Wrap a provider with the cache, dimension checks and bounded parallel fetches."""

    def __init__(self, provider, cache: EmbeddingCache | None = None, max_in_flight: int = 8, chunk: int = 64):
        self.provider = provider
        self.cache = cache
        self.max_in_flight = max(1, max_in_flight)
        self.chunk = chunk
        self.dim: int | None = getattr(provider, "dim", None)
        self.calls = 0  # texts sent to the provider

    @property
    def provider_id(self) -> str:
        return self.provider.provider_id

    @property
    def model(self) -> str:
        return self.provider.model

    def cache_key(self, text: str) -> str:
        return EmbeddingCache.key(self.provider_id, self.model, text)

    def _accept(self, text: str, vec) -> np.ndarray:
        vec = _check_vector(np.asarray(vec, dtype=np.float64), text)
        if self.dim is None:
            self.dim = vec.size
        elif vec.size != self.dim:
            raise DimensionMismatch(f"embedding of {text!r} has dim {vec.size}, expected {self.dim}")
        return vec

    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        for t in texts:
            if not t:
                raise ValueError("cannot embed empty text")
        result: dict[str, np.ndarray] = {}
        missing = []
        for t in dict.fromkeys(texts):
            hit = self.cache.get(self.cache_key(t)) if self.cache is not None else None
            if hit is not None:
                result[t] = self._accept(t, hit)
            else:
                missing.append(t)
        if missing:
            chunks = [missing[i : i + self.chunk] for i in range(0, len(missing), self.chunk)]
            if len(chunks) > 1 and self.max_in_flight > 1:
                with ThreadPoolExecutor(self.max_in_flight) as pool:
                    fetched = list(pool.map(self.provider.embed_batch, chunks))
            else:
                fetched = [self.provider.embed_batch(c) for c in chunks]
            self.calls += len(missing)
            for chunk, vecs in zip(chunks, fetched):
                for t, v in zip(chunk, vecs):
                    v = self._accept(t, v)
                    if self.cache is not None:
                        v = self.cache.put(self.cache_key(t), v)
                    result[t] = v
            if self.cache is not None:
                self.cache.record_manifest(self.provider_id, self.model, self.dim)
        return [result[t] for t in texts]

    def embed_text(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]


def probe_text(question: str, probe: str, contextual: bool = True) -> str:
    """Text actually embedded for a probe: ``"<question> <probe>"`` or the probe alone."""
    if not probe:
        raise ValueError("probe must be non-empty")
    if not contextual:
        return probe
    return normalize_whitespace(f"{question} {probe}")


def embed_probe(embedder, question: str, probe: str, contextual: bool = True) -> np.ndarray:
    return embedder.embed_text(probe_text(question, probe, contextual))


def names_digest(names: Sequence[str]) -> str:
    return hashlib.sha256("\n".join(names).encode("utf-8")).hexdigest()


class VectorIndex:
    """Dense float32 matrix whose row i is document i, searched exhaustively."""

    def __init__(self, vectors: np.ndarray, provider: str = "", model: str = "", doc_ids_sha256: str = ""):
        vectors = np.ascontiguousarray(vectors, dtype="<f4")
        if vectors.ndim != 2:
            raise ValueError("index matrix must be 2-D")
        self.vectors = vectors
        self._rows = vectors.astype(np.float64)
        self.norms = np.linalg.norm(self._rows, axis=1)
        if vectors.shape[0] and not np.all(self.norms > 0):
            bad = int(np.argmin(self.norms))
            raise EmbeddingError(f"row {bad} has zero norm")
        self.provider = provider
        self.model = model
        self.doc_ids_sha256 = doc_ids_sha256

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def build(cls, embedder, docs, texts: Sequence[str] | None = None) -> "VectorIndex":
        texts = list(texts) if texts is not None else [d.display_text for d in docs]
        vecs = embedder.embed_many(texts)
        dim = embedder.dim or 1
        matrix = np.vstack(vecs) if vecs else np.zeros((0, dim))
        return cls(
            matrix,
            provider=embedder.provider_id,
            model=embedder.model,
            doc_ids_sha256=names_digest([d.qualified_name for d in docs]),
        )

    def cosines(self, query: np.ndarray) -> np.ndarray:
        query = np.asarray(query, dtype=np.float64)
        if query.shape != (self.dim,):
            raise DimensionMismatch(f"query dim {query.shape} does not match index dim {self.dim}")
        qn = np.linalg.norm(query)
        if qn == 0:
            raise EmbeddingError("query vector has zero norm")
        return (self._rows @ query) / (self.norms * qn)

    def ranking(self, query: np.ndarray) -> np.ndarray:
        """All doc_ids by cosine descending, ties by ascending doc_id."""
        if self.size == 0:
            return np.zeros(0, dtype=np.int64)
        cos = self.cosines(query)
        return np.lexsort((np.arange(self.size), -cos))

    def knn(self, query: np.ndarray, k: int) -> list[tuple[int, float]]:
        if k < 1:
            raise ValueError("k must be >= 1")
        if self.size == 0:
            return []
        cos = self.cosines(query)
        order = np.lexsort((np.arange(self.size), -cos))[:k]
        return [(int(i), float(cos[i])) for i in order]

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "vectors.f32").write_bytes(self.vectors.astype("<f4").tobytes())
        manifest = {
            "dim": int(self.dim),
            "count": int(self.size),
            "provider": self.provider,
            "model": self.model,
            "doc_ids_sha256": self.doc_ids_sha256,
        }
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")

    @classmethod
    def load(cls, directory: str | Path, expect_doc_ids_sha256: str | None = None) -> "VectorIndex":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        if expect_doc_ids_sha256 is not None and manifest["doc_ids_sha256"] != expect_doc_ids_sha256:
            raise DimensionMismatch(
                f"index at {directory} was built for a different catalog; rerun `index` to rebuild it"
            )
        raw = np.frombuffer((directory / "vectors.f32").read_bytes(), dtype="<f4")
        if raw.size != manifest["dim"] * manifest["count"]:
            raise EmbeddingError(f"{directory}/vectors.f32 does not match its manifest")
        return cls(
            raw.reshape(manifest["count"], manifest["dim"]),
            provider=manifest["provider"],
            model=manifest["model"],
            doc_ids_sha256=manifest["doc_ids_sha256"],
        )
