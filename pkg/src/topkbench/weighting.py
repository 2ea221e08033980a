"""TF, IDF, TF-IDF and Okapi BM25 weights plus the top-k scoring sums.

Scalar functions are the reference definitions.  :func:`posting_weights` is
the vectorized form the engine uses; it performs the same floating point
operations in the same order, so both paths agree bit for bit.

The logarithm is natural.  The IDF ``1 + log(N/n)`` changes by a
constant factor under another base, which leaves TF-IDF rankings unchanged but
can reorder Okapi BM25 rankings, because TF enters its denominator unscaled.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

import numpy as np

if TYPE_CHECKING:
    from .storage import CorpusStats

__all__ = [
    "Scheme",
    "SchemeParams",
    "tf",
    "idf",
    "tfidf",
    "okapi",
    "weight",
    "posting_weights",
    "idf_table",
    "score_keyword",
    "score_document",
]


class Scheme(str, enum.Enum):
    TFIDF = "TFIDF"
    OKAPI = "OKAPI"

    @classmethod
    def parse(cls, value: "str | Scheme") -> "Scheme":
        if isinstance(value, Scheme):
            return value
        key = str(value).strip().upper().replace("-", "")
        if key in ("BM25", "OKAPIBM25"):
            key = "OKAPI"
        return cls(key)


@dataclass(frozen=True)
class SchemeParams:
    scheme: Scheme = Scheme.TFIDF
    K: float = 0.5
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not 0.0 <= self.K <= 1.0:
            raise ValueError(f"K must lie in [0, 1], got {self.K}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [0, 1], got {self.b}")
        if not 1.2 <= self.k1 <= 2.0:
            warnings.warn(f"k1={self.k1} outside the customary range [1.2, 2.0]", stacklevel=3)


def tf(count: int, max_count: int, K: float = 0.5) -> float:
    """Augmented term frequency ``K + (1 - K) * count / max_count``."""
    if max_count <= 0:
        raise ValueError("max_count must be positive: a term cannot occur in an empty document")
    if not 1 <= count <= max_count:
        raise ValueError(f"count must lie in [1, max_count={max_count}], got {count}")
    return K + (1 - K) * count / max_count


def idf(N: int, n: int) -> float:
    if n <= 0 or n > N:
        raise ValueError(f"document frequency must satisfy 1 <= n <= N, got n={n}, N={N}")
    return 1 + math.log(N / n)


def _okapi_from_tf(tf_value: float, idf_value: float, doc_len: float, avg_len: float, p: SchemeParams) -> float:
    return tf_value * idf_value * (p.k1 + 1) / (tf_value + p.k1 * (1 - p.b + p.b * doc_len / avg_len))


def tfidf(count: int, max_count: int, N: int, n: int, params: SchemeParams = SchemeParams()) -> float:
    return tf(count, max_count, params.K) * idf(N, n)


def okapi(
    count: int,
    max_count: int,
    N: int,
    n: int,
    doc_len: float,
    avg_len: float,
    params: SchemeParams = SchemeParams(scheme=Scheme.OKAPI),
) -> float:
    if avg_len <= 0:
        raise ValueError(f"average document length must be positive, got {avg_len}")
    if doc_len < 1:
        raise ValueError(f"document length must be at least 1, got {doc_len}")
    return _okapi_from_tf(tf(count, max_count, params.K), idf(N, n), doc_len, avg_len, params)


def weight(tf_value: float, idf_value: float, doc_len: float, avg_len: float, params: SchemeParams) -> float:
    """Per-posting weight from a stored TF value, under ``params.scheme``."""
    if params.scheme is Scheme.TFIDF:
        return tf_value * idf_value
    return _okapi_from_tf(tf_value, idf_value, doc_len, avg_len, params)


def posting_weights(
    tf_values: np.ndarray,
    idf_values: np.ndarray,
    doc_lens: np.ndarray,
    avg_len: float,
    params: SchemeParams,
) -> np.ndarray:
    """Vectorized :func:`weight`; identical rounding to the scalar form."""
    tf_values = np.asarray(tf_values, dtype=np.float64)
    tfidf_values = tf_values * np.asarray(idf_values, dtype=np.float64)
    if params.scheme is Scheme.TFIDF:
        return tfidf_values
    dl = np.asarray(doc_lens, dtype=np.float64)
    return tfidf_values * (params.k1 + 1) / (tf_values + params.k1 * (1 - params.b + params.b * dl / avg_len))


def idf_table(N: int, doc_freq: np.ndarray) -> np.ndarray:
    """IDF for every entry of ``doc_freq``; zero where the frequency is zero.

    Evaluated through :func:`idf` once per distinct frequency so the vector
    path uses the same ``math.log`` as the scalar path.
    """
    doc_freq = np.asarray(doc_freq, dtype=np.int64)
    out = np.zeros(doc_freq.shape, dtype=np.float64)
    values, inverse = np.unique(doc_freq, return_inverse=True)
    lookup = np.array([idf(N, int(v)) if v > 0 else 0.0 for v in values], dtype=np.float64)
    if values.size:
        out = lookup[inverse.reshape(doc_freq.shape)]
    return out


def score_keyword(
    term: str,
    stats: "CorpusStats",
    postings: Iterable[tuple[float, int]],
    params: SchemeParams = SchemeParams(),
) -> float:
    """Summed weight of ``term`` over a document subset.

    ``postings`` holds ``(tf, doc_len)`` for each subset document containing
    the term; ``stats`` are the statistics of that same subset.
    """
    postings = list(postings)
    if not postings:
        return 0.0
    w = idf(stats.n_docs, stats.doc_freq[term])
    return math.fsum(weight(t, w, dl, stats.avg_doc_len, params) for t, dl in postings)


def score_document(
    query_terms: Sequence[str],
    doc_tf: Mapping[str, float],
    doc_len: int,
    stats: "CorpusStats",
    params: SchemeParams = SchemeParams(),
) -> float:
    """Score one document against a query; absent query terms add nothing.

    ``doc_tf`` maps each term of the document to its stored TF.
    """
    if not query_terms:
        raise ValueError("query must contain at least one term")
    parts = [
        weight(doc_tf[q], idf(stats.n_docs, stats.doc_freq[q]), doc_len, stats.avg_doc_len, params)
        for q in dict.fromkeys(query_terms)
        if q in doc_tf
    ]
    return math.fsum(parts)
