"""Top-k keyword and top-k document queries over either store layout.

Each query runs in two passes.  A layout-specific scan applies the gender,
date and location constraints and collects the postings of the selected
documents.  A shared aggregation pass then computes the subset statistics,
weights every posting, groups by term (keywords) or document (documents) and
keeps the best ``k`` groups.

Group sums are correctly rounded (``math.fsum`` over the group, or over exact
partial expansions when sharded), so results do not depend on summation order,
shard count or shard completion order.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Sequence, Union

import numpy as np

from .corpus import Gender
from .storage import CorpusStats, NormalizedStore, StarStore
from .weighting import Scheme, SchemeParams, idf_table, posting_weights

__all__ = [
    "QueryId",
    "Mode",
    "Layout",
    "QueryParams",
    "QuerySpec",
    "RankedResult",
    "Traversal",
    "DEFAULT_PARAMS",
    "DEFAULT_TERMS",
    "apply_constraints",
    "topk_keywords",
    "topk_documents",
    "evaluate",
    "sharded_evaluate",
    "plan_complexity",
    "explain",
    "to_sql",
    "layout_of",
]

Store = Union[NormalizedStore, StarStore]


class QueryId(str, enum.Enum):
    Q1 = "Q1"
    Q2 = "Q2"
    Q3 = "Q3"
    Q4 = "Q4"

    @property
    def uses_date(self) -> bool:
        return self in (QueryId.Q2, QueryId.Q4)

    @property
    def uses_geo(self) -> bool:
        return self in (QueryId.Q3, QueryId.Q4)


class Mode(str, enum.Enum):
    KEYWORDS = "KEYWORDS"
    DOCUMENTS = "DOCUMENTS"


class Layout(str, enum.Enum):
    NORMALIZED = "NORMALIZED"
    STAR = "STAR"


def layout_of(store: Store) -> Layout:
    if isinstance(store, NormalizedStore):
        return Layout.NORMALIZED
    if isinstance(store, StarStore):
        return Layout.STAR
    raise TypeError(f"not a store: {type(store).__name__}")


def _utc(dt: datetime) -> datetime:
    return dt.replace(tzinfo=timezone.utc) if dt.tzinfo is None else dt


@dataclass(frozen=True)
class QueryParams:
    p_gender: Gender = Gender.MALE
    p_start_date: datetime | None = None
    p_end_date: datetime | None = None
    p_start_x: float | None = None
    p_end_x: float | None = None
    p_start_y: float | None = None
    p_end_y: float | None = None
    p_terms: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "p_gender", Gender.parse(self.p_gender))
        object.__setattr__(self, "p_terms", tuple(dict.fromkeys(self.p_terms)))
        for name in ("p_start_date", "p_end_date"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _utc(value))


DEFAULT_TERMS = ("think", "today", "friday")
DEFAULT_PARAMS = QueryParams(
    p_gender=Gender.MALE,
    p_start_date=datetime(2015, 9, 17, tzinfo=timezone.utc),
    p_end_date=datetime(2015, 9, 18, tzinfo=timezone.utc),
    p_start_x=20, p_end_x=40,
    p_start_y=-100, p_end_y=100,
    p_terms=DEFAULT_TERMS,
)


@dataclass(frozen=True)
class QuerySpec:
    query_id: QueryId
    mode: Mode = Mode.KEYWORDS
    params: QueryParams = DEFAULT_PARAMS
    scheme: SchemeParams = SchemeParams()
    k: int = 10

    def __post_init__(self):
        object.__setattr__(self, "query_id", QueryId(self.query_id))
        object.__setattr__(self, "mode", Mode(self.mode))
        p = self.params
        if self.k < 1:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.query_id.uses_date:
            if p.p_start_date is None or p.p_end_date is None:
                raise ValueError(f"{self.query_id.value} requires p_start_date and p_end_date")
            if not p.p_start_date < p.p_end_date:
                raise ValueError("p_start_date must precede p_end_date")
        if self.query_id.uses_geo:
            if None in (p.p_start_x, p.p_end_x, p.p_start_y, p.p_end_y):
                raise ValueError(f"{self.query_id.value} requires x and y bounds")
            if not (p.p_start_x < p.p_end_x and p.p_start_y < p.p_end_y):
                raise ValueError("geo bounds must satisfy start < end")
        if self.mode is Mode.DOCUMENTS and not p.p_terms:
            raise ValueError("DOCUMENTS mode requires at least one search term")

    def label(self) -> str:
        return f"{self.query_id.value}/{self.mode.value}/{self.scheme.scheme.value}/{self.params.p_gender.value}/k={self.k}"


@dataclass(frozen=True)
class RankedResult:
    mode: Mode
    entries: tuple[tuple[Union[str, int], float], ...]
    subset_size: int
    stats_used: CorpusStats = field(repr=False)


# ---------------------------------------------------------------------------
# scans


@dataclass
class _Scan:
    doc_ids: np.ndarray  # per document row
    doc_lens: np.ndarray  # per document row
    subset: np.ndarray  # bool per document row, constraints c1-c3
    p_doc: np.ndarray  # document row of each selected posting, document-id order
    p_word: np.ndarray
    p_tf: np.ndarray
    lemmas: Sequence[str]

    def word_ids(self, terms: Sequence[str]) -> np.ndarray:
        wanted = set(terms)
        return np.array([i for i, lemma in enumerate(self.lemmas) if lemma in wanted], dtype=np.int64)


def _in_range(values: np.ndarray, lo, hi) -> np.ndarray:
    return (values >= lo) & (values <= hi)


def _epoch(dt: datetime) -> int:
    return int(dt.timestamp())


def _scan_normalized(store: NormalizedStore, spec: QuerySpec) -> _Scan:
    p = spec.params
    docs = store.documents
    # genders -> authors -> documents_authors -> documents
    gender_ok = np.array([t == p.p_gender.value for t in store.genders["type"]], dtype=bool)
    author_ok = gender_ok[store.authors["gender_ref"]] if len(gender_ok) else np.zeros(len(store.authors), bool)
    links = store.documents_authors
    link_ok = author_ok[links["author_ref"]] if len(author_ok) else np.zeros(len(links), bool)
    subset = np.zeros(len(docs), dtype=bool)
    subset[np.asarray(links["doc_ref"])[link_ok]] = True
    if spec.query_id.uses_date:
        subset &= _in_range(docs["date"], _epoch(p.p_start_date), _epoch(p.p_end_date))
    if spec.query_id.uses_geo:
        geo = store.geo_location
        geo_ok = _in_range(geo["x"], p.p_start_x, p.p_end_x) & _in_range(geo["y"], p.p_start_y, p.p_end_y)
        subset &= geo_ok[docs["geo_ref"]]
    vocab = store.vocabulary
    v_doc = np.asarray(vocab["doc_ref"])
    # documents without vocabulary rows drop out of the join
    has_postings = np.zeros(len(docs), dtype=bool)
    has_postings[v_doc] = True
    subset &= has_postings
    keep = subset[v_doc]
    return _Scan(
        doc_ids=np.asarray(docs["id"]),
        doc_lens=np.asarray(docs["lemma_length"]),
        subset=subset,
        p_doc=v_doc[keep],
        p_word=np.asarray(vocab["word_ref"])[keep],
        p_tf=np.asarray(vocab["tf"])[keep],
        lemmas=store.words["lemma"],
    )


def _scan_star(store: StarStore, spec: QuerySpec) -> _Scan:
    p = spec.params
    fact = store.document_fact
    dims = store.document_dimension
    authors = store.author_dimension
    gender_ok = np.array([g == p.p_gender.value for g in authors["gender"]], dtype=bool)
    f_doc = dims.index.lookup(fact["id_document"])
    if len(fact):
        mask = gender_ok[authors.index.lookup(fact["id_author"])]
    else:
        mask = np.zeros(0, dtype=bool)
    if spec.query_id.uses_date:
        t = store.time_dimension
        time_ok = _in_range(t["full_date"], _epoch(p.p_start_date), _epoch(p.p_end_date))
        mask &= time_ok[t.index.lookup(fact["id_time"])]
    if spec.query_id.uses_geo:
        loc = store.location_dimension
        loc_ok = _in_range(loc["x"], p.p_start_x, p.p_end_x) & _in_range(loc["y"], p.p_start_y, p.p_end_y)
        mask &= loc_ok[loc.index.lookup(fact["id_location"])]
    subset = np.zeros(len(dims), dtype=bool)
    subset[f_doc[mask]] = True
    return _Scan(
        doc_ids=np.asarray(dims["id"]),
        doc_lens=np.asarray(dims["lemma_length"]),
        subset=subset,
        p_doc=f_doc[mask],
        p_word=np.asarray(fact["id_word"])[mask],
        p_tf=np.asarray(fact["tf"])[mask],
        lemmas=store.word_dimension["lemma"],
    )


def _scan(store: Store, spec: QuerySpec) -> _Scan:
    if layout_of(store) is Layout.NORMALIZED:
        return _scan_normalized(store, spec)
    return _scan_star(store, spec)


# ---------------------------------------------------------------------------
# aggregation


@dataclass
class _Prepared:
    """Everything the per-posting weighting needs, computed once per query."""

    scan: _Scan
    stats: CorpusStats
    sel_doc: np.ndarray
    sel_word: np.ndarray
    sel_tf: np.ndarray
    idf_by_word: np.ndarray
    subset_size: int


def _prepare(store: Store, spec: QuerySpec) -> _Prepared:
    scan = _scan(store, spec)
    n_docs = int(np.count_nonzero(scan.subset))
    total = int(scan.doc_lens[scan.subset].sum())
    freq = np.bincount(scan.p_word, minlength=len(scan.lemmas))
    present = np.flatnonzero(freq)
    stats = CorpusStats(
        n_docs=n_docs,
        avg_doc_len=total / n_docs if n_docs else 0.0,
        vocab_size=len(present),
        doc_freq={scan.lemmas[w]: int(freq[w]) for w in present.tolist()},
        total_len=total,
    )
    if spec.mode is Mode.DOCUMENTS:
        sel = np.isin(scan.p_word, scan.word_ids(spec.params.p_terms))
        sel_doc = scan.p_doc[sel]
        subset_size = len(np.unique(sel_doc))
        sel_word, sel_tf = scan.p_word[sel], scan.p_tf[sel]
    else:
        sel_doc, sel_word, sel_tf = scan.p_doc, scan.p_word, scan.p_tf
        subset_size = n_docs
    return _Prepared(scan, stats, sel_doc, sel_word, sel_tf, idf_table(n_docs, freq), subset_size)


def _weights(prep: _Prepared, spec: QuerySpec, rows: np.ndarray | slice = slice(None)) -> np.ndarray:
    word = prep.sel_word[rows]
    return posting_weights(
        prep.sel_tf[rows],
        prep.idf_by_word[word],
        prep.scan.doc_lens[prep.sel_doc[rows]],
        prep.stats.avg_doc_len,
        spec.scheme,
    )


def _group_keys(prep: _Prepared, spec: QuerySpec, rows: np.ndarray | slice = slice(None)) -> np.ndarray:
    return prep.sel_word[rows] if spec.mode is Mode.KEYWORDS else prep.sel_doc[rows]


def _groups(keys: np.ndarray, values: np.ndarray):
    """Yield ``(key, values-of-group)`` for each distinct key."""
    if len(keys) == 0:
        return
    order = np.argsort(keys, kind="stable")
    k = keys[order]
    v = values[order].tolist()
    cuts = (np.flatnonzero(k[1:] != k[:-1]) + 1).tolist()
    starts = [0] + cuts
    ends = cuts + [len(k)]
    for s, e in zip(starts, ends):
        yield int(k[s]), v[s:e]


def _rank(prep: _Prepared, spec: QuerySpec, keys: np.ndarray, scores: np.ndarray) -> RankedResult:
    if spec.mode is Mode.KEYWORDS:
        names = prep.scan.lemmas
        label = lambda g: names[g]  # noqa: E731
    else:
        ids = prep.scan.doc_ids
        label = lambda g: int(ids[g])  # noqa: E731
    k = spec.k
    if len(scores) > k:
        kth = np.partition(scores, len(scores) - k)[len(scores) - k]
        candidates = np.flatnonzero(scores >= kth)
    else:
        candidates = np.arange(len(scores))
    entries = sorted(((label(int(keys[i])), float(scores[i])) for i in candidates), key=lambda e: (-e[1], e[0]))
    return RankedResult(spec.mode, tuple(entries[:k]), prep.subset_size, prep.stats)


def _finish(prep: _Prepared, spec: QuerySpec, sums: dict[int, float]) -> RankedResult:
    keys = np.fromiter(sums.keys(), dtype=np.int64, count=len(sums))
    scores = np.fromiter(sums.values(), dtype=np.float64, count=len(sums))
    return _rank(prep, spec, keys, scores)


def _check_mode(spec: QuerySpec, mode: Mode) -> None:
    if spec.mode is not mode:
        raise ValueError(f"expected a {mode.value} query, got {spec.mode.value}")


def evaluate(store: Store, spec: QuerySpec) -> RankedResult:
    """Run ``spec`` on a single instance."""
    prep = _prepare(store, spec)
    sums = {key: math.fsum(vals) for key, vals in _groups(_group_keys(prep, spec), _weights(prep, spec))}
    return _finish(prep, spec, sums)


def topk_keywords(store: Store, spec: QuerySpec) -> RankedResult:
    _check_mode(spec, Mode.KEYWORDS)
    return evaluate(store, spec)


def topk_documents(store: Store, spec: QuerySpec) -> RankedResult:
    _check_mode(spec, Mode.DOCUMENTS)
    return evaluate(store, spec)


def apply_constraints(store: Store, spec: QuerySpec) -> frozenset[int]:
    """Ids of the documents selected by the query's constraints.

    Covers gender, date and location as the query id requires, and in
    DOCUMENTS mode additionally at least one search term.
    """
    scan = _scan(store, spec)
    if spec.mode is Mode.DOCUMENTS:
        sel = np.isin(scan.p_word, scan.word_ids(spec.params.p_terms))
        rows = np.unique(scan.p_doc[sel])
    else:
        rows = np.flatnonzero(scan.subset)
    return frozenset(int(i) for i in scan.doc_ids[rows].tolist())


# ---------------------------------------------------------------------------
# sharded execution


def _exact_partials(values: Sequence[float]) -> list[float]:
    """Non-overlapping floats whose exact sum equals the exact sum of ``values``."""
    partials: list[float] = []
    for x in values:
        i = 0
        for y in partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                partials[i] = lo
                i += 1
            x = hi
        partials[i:] = [x]
    return partials


def _map_shard(prep: _Prepared, spec: QuerySpec, rows: np.ndarray) -> dict[int, list[float]]:
    return {key: _exact_partials(vals) for key, vals in _groups(_group_keys(prep, spec, rows), _weights(prep, spec, rows))}


def sharded_evaluate(store: Store, spec: QuerySpec, shard_count: int, *, max_workers: int | None = None) -> RankedResult:
    """Two-phase evaluation over ``shard_count`` document-id shards.

    The global phase computes the subset and its statistics.  Each shard then
    weights its postings (document id modulo ``shard_count``) and emits exact
    partial sums per group; the reduce step merges partials by key and ranks.
    With ``max_workers`` > 1 the shards run on a thread pool.
    """
    if shard_count < 1:
        raise ValueError(f"shard_count must be at least 1, got {shard_count}")
    prep = _prepare(store, spec)
    shard_of = (prep.scan.doc_ids[prep.sel_doc] % np.uint64(shard_count)).astype(np.int64)
    shard_rows = [np.flatnonzero(shard_of == s) for s in range(shard_count)]

    merged: dict[int, list[float]] = {}

    def reduce(partial: dict[int, list[float]]) -> None:
        for key, parts in partial.items():
            merged.setdefault(key, []).extend(parts)

    if max_workers and max_workers > 1 and shard_count > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = [pool.submit(_map_shard, prep, spec, rows) for rows in shard_rows]
            for fut in as_completed(futures):
                reduce(fut.result())
    else:
        for rows in shard_rows:
            reduce(_map_shard(prep, spec, rows))

    return _finish(prep, spec, {key: math.fsum(parts) for key, parts in merged.items()})


# ---------------------------------------------------------------------------
# plan complexity and export

_PUBLISHED = {
    # normalized layout, same for both modes
    (Layout.NORMALIZED, Scheme.TFIDF, None): (12, 12, 15, 15),
    (Layout.NORMALIZED, Scheme.OKAPI, None): (17, 17, 21, 21),
    (Layout.STAR, Scheme.TFIDF, Mode.KEYWORDS): (3, 5, 5, 7),
    (Layout.STAR, Scheme.OKAPI, Mode.KEYWORDS): (4, 6, 6, 8),
    (Layout.STAR, Scheme.TFIDF, Mode.DOCUMENTS): (5, 8, 8, 11),
    (Layout.STAR, Scheme.OKAPI, Mode.DOCUMENTS): (6, 9, 9, 12),
}


@dataclass(frozen=True)
class Traversal:
    scan: str
    entities: tuple[str, ...]


def _filter_entities(layout: Layout, query_id: QueryId) -> tuple[str, ...]:
    if layout is Layout.NORMALIZED:
        path = ("documents", "documents_authors", "authors", "genders")
        return path + (("geo_location",) if query_id.uses_geo else ())
    path = ("document_fact", "author_dimension")
    if query_id.uses_date:
        path += ("time_dimension",)
    if query_id.uses_geo:
        path += ("location_dimension",)
    return path


def _main_entities(layout: Layout, query_id: QueryId) -> tuple[str, ...]:
    if layout is Layout.NORMALIZED:
        base = ("documents", "documents_authors", "authors", "genders", "vocabulary", "words")
        return base + (("geo_location",) if query_id.uses_geo else ())
    base = ("document_fact", "word_dimension", "author_dimension")
    if query_id.uses_date:
        base += ("time_dimension",)
    if query_id.uses_geo:
        base += ("location_dimension",)
    return base


def _traversals(layout: Layout, scheme: Scheme, query_id: QueryId) -> tuple[Traversal, ...]:
    filt = _filter_entities(layout, query_id)
    postings = ("vocabulary", "words") if layout is Layout.NORMALIZED else ("word_dimension",)
    docs = "documents" if layout is Layout.NORMALIZED else "document_dimension"
    scans = [
        Traversal("main", _main_entities(layout, query_id)),
        Traversal("n_docs", filt),
        Traversal("doc_freq", filt + postings),
    ]
    if scheme is Scheme.OKAPI:
        scans.append(Traversal("doc_len", (docs,)))
        scans.append(Traversal("avg_doc_len", filt if docs in filt else filt + (docs,)))
    return tuple(scans)


def plan_complexity(layout, scheme, query_id, mode) -> tuple[int, tuple[Traversal, ...]]:
    """Published traversal count and this engine's own traversal breakdown.

    ``published`` is the tabulated value for the combination.  The breakdown
    lists the entities touched by the main plan and by each statistics scan;
    its total is ``sum(len(t.entities) for t in breakdown)``.
    """
    layout, query_id, mode = Layout(layout), QueryId(query_id), Mode(mode)
    scheme = Scheme.parse(scheme.scheme if isinstance(scheme, SchemeParams) else scheme)
    key = (layout, scheme, None if layout is Layout.NORMALIZED else mode)
    published = _PUBLISHED[key][int(query_id.value[1]) - 1]
    return published, _traversals(layout, scheme, query_id)


def _constraints(spec: QuerySpec) -> list[dict]:
    p = spec.params
    out = [{"name": "c1", "attribute": "gender", "op": "=", "value": p.p_gender.value}]
    if spec.query_id.uses_date:
        out.append({"name": "c2", "attribute": "date", "op": "between",
                    "value": [p.p_start_date.isoformat(), p.p_end_date.isoformat()]})
    if spec.query_id.uses_geo:
        out.append({"name": "c3", "attribute": "x", "op": "between", "value": [p.p_start_x, p.p_end_x]})
        out.append({"name": "c3", "attribute": "y", "op": "between", "value": [p.p_start_y, p.p_end_y]})
    if spec.mode is Mode.DOCUMENTS:
        out.append({"name": "c4", "attribute": "lemma", "op": "in", "value": list(p.p_terms)})
    return out


def explain(spec: QuerySpec, layout) -> dict:
    """JSON-serializable description of the plan for ``spec`` on ``layout``."""
    layout = Layout(layout)
    published, traversals = plan_complexity(layout, spec.scheme, spec.query_id, spec.mode)
    group_by = "lemma" if spec.mode is Mode.KEYWORDS else "document_id"
    s = spec.scheme
    return {
        "query": spec.query_id.value,
        "mode": spec.mode.value,
        "layout": layout.value,
        "scheme": {"name": s.scheme.value, "K": s.K, "k1": s.k1, "b": s.b},
        "operators": [
            {"op": "join", "entities": list(_main_entities(layout, spec.query_id))},
            {"op": "select", "constraints": _constraints(spec)},
            {"op": "project", "columns": ["document_id", "lemma", "f_w"]},
            {"op": "group", "by": [group_by], "aggregate": "sum(f_w)"},
            {"op": "topk", "k": spec.k, "order": ["score desc", f"{group_by} asc"]},
        ],
        "traversals": [{"scan": t.scan, "entities": list(t.entities)} for t in traversals],
        "complexity": {"published": published, "breakdown_total": sum(len(t.entities) for t in traversals)},
    }


def _sql_weight(spec: QuerySpec, tf: str, length: str) -> str:
    idf = "(1 + LN(CAST(st.n_docs AS REAL) / df.n))"
    s = spec.scheme
    if s.scheme is Scheme.TFIDF:
        return f"{tf} * {idf}"
    return f"{tf} * {idf} * {s.k1 + 1!r} / ({tf} + {s.k1!r} * (1 - {s.b!r} + {s.b!r} * {length} / st.avg_len))"


def to_sql(spec: QuerySpec, layout) -> str:
    """Portable SQL text for ``spec``; named parameters use ``:name`` syntax.

    Dates are bound as Unix epoch seconds.  ``LN`` is the natural logarithm.
    """
    layout = Layout(layout)
    q = spec.query_id
    where = []
    if layout is Layout.NORMALIZED:
        joins = [
            "FROM documents d",
            "JOIN documents_authors da ON da.doc_ref = d.row_no",
            "JOIN authors a ON a.row_no = da.author_ref",
            "JOIN genders g ON g.id = a.gender_ref",
        ]
        where.append("g.type = :p_gender")
        if q.uses_date:
            where.append("d.date BETWEEN :p_start_date AND :p_end_date")
        if q.uses_geo:
            joins.append("JOIN geo_location gl ON gl.id = d.geo_ref")
            where.append("gl.x BETWEEN :p_start_x AND :p_end_x AND gl.y BETWEEN :p_start_y AND :p_end_y")
        where.append("EXISTS (SELECT 1 FROM vocabulary v0 WHERE v0.doc_ref = d.row_no)")
        subset = "SELECT d.row_no AS doc, d.id AS doc_id, d.lemma_length AS len\n    " + "\n    ".join(joins)
        postings, word_join = "vocabulary v", "JOIN words w ON w.id = v.word_ref"
        p_doc, p_word, p_tf = "v.doc_ref", "v.word_ref", "v.tf"
    else:
        joins = [
            "FROM document_fact f",
            "JOIN document_dimension dd ON dd.id = f.id_document",
            "JOIN author_dimension ad ON ad.id = f.id_author",
        ]
        where.append("ad.gender = :p_gender")
        if q.uses_date:
            joins.append("JOIN time_dimension td ON td.id = f.id_time")
            where.append("td.full_date BETWEEN :p_start_date AND :p_end_date")
        if q.uses_geo:
            joins.append("JOIN location_dimension ld ON ld.id = f.id_location")
            where.append("ld.x BETWEEN :p_start_x AND :p_end_x AND ld.y BETWEEN :p_start_y AND :p_end_y")
        subset = "SELECT DISTINCT dd.id AS doc, dd.id AS doc_id, dd.lemma_length AS len\n    " + "\n    ".join(joins)
        postings, word_join = "document_fact v", "JOIN word_dimension w ON w.id = v.id_word"
        p_doc, p_word, p_tf = "v.id_document", "v.id_word", "v.tf"

    if spec.mode is Mode.KEYWORDS:
        key, extra, order_key = "w.lemma", "", "w.lemma"
    else:
        terms = ", ".join(f":term{i}" for i in range(len(spec.params.p_terms)))
        key, extra, order_key = "s.doc_id", f"\n  WHERE w.lemma IN ({terms})", "s.doc_id"
    weight = _sql_weight(spec, p_tf, "s.len")
    return (
        "WITH subset AS (\n"
        f"  {subset}\n"
        f"  WHERE {' AND '.join(where)}\n"
        "),\n"
        "st AS (SELECT COUNT(*) AS n_docs, AVG(CAST(len AS REAL)) AS avg_len FROM subset),\n"
        f"df AS (SELECT {p_word} AS word, COUNT(*) AS n FROM {postings} JOIN subset s ON s.doc = {p_doc} GROUP BY {p_word})\n"
        f"SELECT {key} AS key, SUM({weight}) AS score\n"
        f"  FROM subset s JOIN {postings} ON {p_doc} = s.doc {word_join}\n"
        f"  JOIN df ON df.word = {p_word} CROSS JOIN st{extra}\n"
        f"  GROUP BY {key}\n"
        f"  ORDER BY score DESC, {order_key} ASC\n"
        f"  LIMIT {spec.k}"
    )


def sql_parameters(spec: QuerySpec) -> dict:
    """Named parameter bindings for :func:`to_sql`."""
    p = spec.params
    out: dict = {"p_gender": p.p_gender.value}
    if spec.query_id.uses_date:
        out.update(p_start_date=_epoch(p.p_start_date), p_end_date=_epoch(p.p_end_date))
    if spec.query_id.uses_geo:
        out.update(p_start_x=p.p_start_x, p_end_x=p.p_end_x, p_start_y=p.p_start_y, p_end_y=p.p_end_y)
    if spec.mode is Mode.DOCUMENTS:
        out.update({f"term{i}": t for i, t in enumerate(p.p_terms)})
    return out
