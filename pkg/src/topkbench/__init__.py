"""Top-k keyword and top-k document benchmark over normalized and star layouts."""

__version__ = "0.1.0"

from .corpus import Gender, Preprocessor, ProcessedDocument, RawRecord, VocabularyEntry, preprocess
from .weighting import Scheme, SchemeParams, idf, okapi, tf, tfidf
from .storage import CorpusStats, NormalizedStore, StarStore, load_normalized, load_snapshot, save_snapshot, stats, to_star
from .generator import GeneratorConfig, generate, ingest, write_jsonl
from .engine import (
    DEFAULT_PARAMS,
    Layout,
    Mode,
    QueryId,
    QueryParams,
    QuerySpec,
    RankedResult,
    apply_constraints,
    evaluate,
    plan_complexity,
    sharded_evaluate,
    topk_documents,
    topk_keywords,
)
from .bench import BenchReport, ProtocolConfig, StoreSet, default_suite, run_protocol, selectivity, summarize

__all__ = [name for name in dir() if not name.startswith("_")]
