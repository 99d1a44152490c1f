"""Inverted index with field-weighted BM25 scoring.

Tokenization keeps identifier-like runs intact: text is normalized then
split on non-alphanumerics, so "59X1235" survives as one searchable
token while "59X-1235" yields two.  No stemming; identifiers dominate
recall in this domain and stemmers mangle them.
"""

from __future__ import annotations

import math
import re
from collections import defaultdict

from ..errors import ConflictError, NotFoundError
from ..extraction import normalize_text

TOKENIZER_VERSION = "alnum-v1"
_TOKEN = re.compile(r"[a-z0-9]+")

K1 = 1.2
B = 0.75

DEFAULT_FIELD_WEIGHTS = {"drawing_number": 3.0, "title": 2.0}


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(normalize_text(text))


class InvertedIndex:
    """Postings, document frequencies, and per-field length statistics."""

    def __init__(
        self,
        k1: float = K1,
        b: float = B,
        field_weights: dict[str, float] | None = None,
    ):
        self.k1 = k1
        self.b = b
        self.field_weights = dict(DEFAULT_FIELD_WEIGHTS if field_weights is None else field_weights)
        # term -> doc_id -> [(field_name, tf), ...] so pointwise rescoring
        # of a candidate pool stays O(fields) per doc instead of O(df)
        self.postings: dict[str, dict[str, list[tuple[str, int]]]] = defaultdict(dict)
        self.df: dict[str, int] = defaultdict(int)
        self.doc_lengths: dict[str, dict[str, int]] = {}
        self.field_token_totals: dict[str, int] = defaultdict(int)
        self.field_doc_counts: dict[str, int] = defaultdict(int)
        self.n_docs = 0

    def add(self, doc_id: str, fields: dict[str, str]) -> None:
        if doc_id in self.doc_lengths:
            raise ConflictError(f"doc_id already indexed: {doc_id}")
        lengths: dict[str, int] = {}
        seen_terms: set[str] = set()
        for field_name, text in fields.items():
            tokens = tokenize(text)
            if not tokens:
                continue
            lengths[field_name] = len(tokens)
            self.field_token_totals[field_name] += len(tokens)
            self.field_doc_counts[field_name] += 1
            counts: dict[str, int] = defaultdict(int)
            for tok in tokens:
                counts[tok] += 1
            for term, tf in counts.items():
                self.postings[term].setdefault(doc_id, []).append((field_name, tf))
                seen_terms.add(term)
        for term in seen_terms:
            self.df[term] += 1
        self.doc_lengths[doc_id] = lengths
        self.n_docs += 1

    def idf(self, term: str) -> float:
        df = self.df.get(term, 0)
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))

    def avgdl(self, field_name: str) -> float:
        count = self.field_doc_counts.get(field_name, 0)
        if count == 0:
            return 0.0
        return self.field_token_totals[field_name] / count

    def _field_weight(self, field_name: str) -> float:
        return self.field_weights.get(field_name, 1.0)

    def _tf_component(self, tf: int, field_name: str, doc_id: str) -> float:
        length = self.doc_lengths[doc_id].get(field_name, 0)
        avg = self.avgdl(field_name)
        if avg == 0.0:
            return 0.0
        denom = tf + self.k1 * (1.0 - self.b + self.b * length / avg)
        return tf * (self.k1 + 1.0) / denom

    def bm25_score(self, query_terms: list[str], doc_id: str) -> float:
        """BM25 for one document; 0 when no query term occurs in it."""
        if doc_id not in self.doc_lengths:
            raise NotFoundError(f"unknown doc_id: {doc_id}")
        score = 0.0
        for term in query_terms:
            idf = self.idf(term)
            for field_name, tf in self.postings.get(term, {}).get(doc_id, ()):
                score += (
                    idf * self._field_weight(field_name)
                    * self._tf_component(tf, field_name, doc_id)
                )
        return score

    def search(self, query_terms: list[str], top_n: int) -> list[tuple[str, float]]:
        """Top matching docs by BM25, ties broken by doc_id."""
        scores: dict[str, float] = defaultdict(float)
        for term in query_terms:
            idf = self.idf(term)
            for doc_id, field_entries in self.postings.get(term, {}).items():
                for field_name, tf in field_entries:
                    scores[doc_id] += (
                        idf * self._field_weight(field_name)
                        * self._tf_component(tf, field_name, doc_id)
                    )
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        return ranked[:top_n]

    def check_consistency(self) -> None:
        """Recount df from postings; raise if the incremental counts drifted."""
        for term, by_doc in self.postings.items():
            docs = set(by_doc)
            if self.df[term] != len(docs):
                raise AssertionError(
                    f"df drift for {term!r}: {self.df[term]} != {len(docs)}"
                )
            if len(docs) > self.n_docs:
                raise AssertionError(f"df exceeds corpus size for {term!r}")
