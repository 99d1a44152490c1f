"""Shared vector space for documents and queries.

Documents combine a text embedding with a layout/region feature vector:
both are passed through lightweight projections and the concatenation is
L2-normalized.  Queries are embedded from text alone through their own
projection into the same space.  A deterministic hashed-bigram stub
encoder stands in for the external neural text encoder so the whole
engine runs offline.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEmbeddingError, InvalidInputError
from .extraction import ExtractionRecord, normalize_text
from .kinds import REGION_ORDER

REGION_FEATURE_DIM = 12  # 4 presence flags + 4 confidence means + 4 log-lengths


@dataclass(frozen=True)
class TextEmbedding:
    vector: np.ndarray
    source: str = "external-encoder"

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise InvalidInputError("text embedding must be a finite 1-D vector")
        object.__setattr__(self, "vector", v)


@dataclass(frozen=True)
class RegionFeatureVector:
    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise InvalidInputError("region features must be a finite 1-D vector")
        object.__setattr__(self, "vector", v)


@dataclass(frozen=True)
class DocEmbedding:
    """Unit-norm vector in the shared document/query space."""

    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        norm = float(np.linalg.norm(v))
        if not math.isfinite(norm) or abs(norm - 1.0) > 1e-9:
            raise InvalidInputError(f"embedding norm must be 1, got {norm}")
        object.__setattr__(self, "vector", v)

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])


def _orthonormal_rows(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """rows x cols matrix with orthonormal rows when rows <= cols."""
    if rows <= cols:
        a = rng.standard_normal((cols, rows))
        q, _ = np.linalg.qr(a)
        return q[:, :rows].T
    # More rows than the space allows orthonormality for; settle for
    # unit-norm random rows.
    a = rng.standard_normal((rows, cols))
    return a / np.linalg.norm(a, axis=1, keepdims=True)


@dataclass
class ProjectionConfig:
    """Projection matrices for the shared space.

    `w_text` is m_t x d_t, `w_region` is m_r x d_r, and `w_query` is
    (m_t + m_r) x d_t so query embeddings land in the document space.
    Defaults are identity blocks completed with seed-initialized random
    orthonormal rows; externally learned matrices drop in unchanged.
    """

    w_text: np.ndarray
    w_region: np.ndarray
    w_query: np.ndarray
    seed: int = 0

    def __post_init__(self):
        self.w_text = np.asarray(self.w_text, dtype=np.float64)
        self.w_region = np.asarray(self.w_region, dtype=np.float64)
        self.w_query = np.asarray(self.w_query, dtype=np.float64)
        m = self.w_text.shape[0] + self.w_region.shape[0]
        if self.w_query.shape[0] != m:
            raise InvalidInputError(
                f"w_query must have {m} rows to match the document space, "
                f"got {self.w_query.shape[0]}"
            )

    @property
    def doc_dim(self) -> int:
        return int(self.w_text.shape[0] + self.w_region.shape[0])

    @classmethod
    def default(
        cls,
        text_dim: int,
        region_dim: int = REGION_FEATURE_DIM,
        m_text: int | None = None,
        m_region: int | None = None,
        seed: int = 0,
    ) -> "ProjectionConfig":
        m_text = text_dim if m_text is None else m_text
        m_region = region_dim if m_region is None else m_region
        rng = np.random.default_rng(seed)

        def block(m, d):
            if m == d:
                return np.eye(d)
            return _orthonormal_rows(m, d, rng)

        w_text = block(m_text, text_dim)
        w_region = block(m_region, region_dim)
        # Query projection reuses the text block and completes the region
        # rows from a seeded orthonormal draw over the text space.
        w_query = np.vstack([w_text, _orthonormal_rows(m_region, text_dim, rng)])
        return cls(w_text=w_text, w_region=w_region, w_query=w_query, seed=seed)


def _normalized(v: np.ndarray) -> DocEmbedding:
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        raise DegenerateEmbeddingError("zero vector has no direction")
    return DocEmbedding(vector=v / norm)


def embed_document(
    text: TextEmbedding, region: RegionFeatureVector, cfg: ProjectionConfig
) -> DocEmbedding:
    """Project text and region features and L2-normalize the concatenation."""
    if text.vector.shape[0] != cfg.w_text.shape[1]:
        raise InvalidInputError(
            f"text dim {text.vector.shape[0]} != w_text cols {cfg.w_text.shape[1]}"
        )
    if region.vector.shape[0] != cfg.w_region.shape[1]:
        raise InvalidInputError(
            f"region dim {region.vector.shape[0]} != w_region cols {cfg.w_region.shape[1]}"
        )
    fused = np.concatenate([cfg.w_text @ text.vector, cfg.w_region @ region.vector])
    return _normalized(fused)


def embed_query(text: TextEmbedding, cfg: ProjectionConfig) -> DocEmbedding:
    """Project a text-only query into the document space and normalize."""
    if text.vector.shape[0] != cfg.w_query.shape[1]:
        raise InvalidInputError(
            f"query dim {text.vector.shape[0]} != w_query cols {cfg.w_query.shape[1]}"
        )
    return _normalized(cfg.w_query @ text.vector)


def cosine(a: DocEmbedding, b: DocEmbedding) -> float:
    return float(np.dot(a.vector, b.vector))


# ----------------------------------------------------------------------
# Deterministic stub encoder

def _bucket(token: str, dim: int, seed: int) -> tuple[int, float]:
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, salt=seed.to_bytes(8, "little")
    ).digest()
    value = int.from_bytes(digest, "little")
    sign = 1.0 if value & 1 else -1.0
    return (value >> 1) % dim, sign


def stub_text_encoder(text: str, dim: int = 64, seed: int = 0) -> TextEmbedding:
    """Hashed token/bigram bag with signed hashing; unit-normalized.

    Deterministic across processes (keyed blake2b, not the randomized
    builtin hash), so equal texts always embed identically.
    """
    if dim < 8:
        raise InvalidInputError(f"stub encoder dim must be >= 8, got {dim}")
    tokens = normalize_text(text).split()
    vec = np.zeros(dim)
    grams = tokens + [f"{a}_{b}" for a, b in zip(tokens, tokens[1:])]
    for gram in grams:
        idx, sign = _bucket(gram, dim, seed)
        vec[idx] += sign
    norm = float(np.linalg.norm(vec))
    if norm < 1e-12:
        vec[0] = 1.0  # empty text maps to a fixed direction
        norm = 1.0
    return TextEmbedding(vector=vec / norm, source="deterministic-stub")


class EncoderClient:
    """Protocol for the external text encoder: encode(text) -> vector."""

    dim: int

    def encode(self, text: str) -> TextEmbedding:  # pragma: no cover - interface
        raise NotImplementedError


class StubEncoderClient(EncoderClient):
    """Offline encoder backed by :func:`stub_text_encoder`."""

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def encode(self, text: str) -> TextEmbedding:
        return stub_text_encoder(text, dim=self.dim, seed=self.seed)


def region_features(record: ExtractionRecord) -> RegionFeatureVector:
    """Default 12-dim layout feature vector.

    Per canonical region: a presence flag, the mean OCR confidence, and
    log(1 + total text length).
    """
    presence, confidence, length = [], [], []
    for kind in REGION_ORDER:
        matching = [r for r in record.regions if r.kind == kind]
        presence.append(1.0 if matching else 0.0)
        confidence.append(
            sum(r.confidence for r in matching) / len(matching) if matching else 0.0
        )
        length.append(math.log1p(sum(len(r.text) for r in matching)))
    return RegionFeatureVector(vector=np.array(presence + confidence + length))
