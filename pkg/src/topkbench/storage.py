"""In-memory normalized and star layouts of one preprocessed corpus.

Both stores are column-group tables: numeric columns are read-only numpy
arrays, text columns are tuples of ``str``.  Every table carries a primary-key
index and nothing else.  Columns named ``*_ref`` hold row positions in the
referenced table; surrogate ids (genders, geo locations, words, times) equal
row positions as well.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .corpus import Gender, ProcessedDocument

__all__ = [
    "Table",
    "PrimaryKeyIndex",
    "NormalizedStore",
    "StarStore",
    "CorpusStats",
    "DuplicateDocumentError",
    "load_normalized",
    "to_star",
    "stats",
    "save_snapshot",
    "load_snapshot",
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
]

Column = Union[np.ndarray, tuple]


class DuplicateDocumentError(ValueError):
    def __init__(self, doc_id: int):
        super().__init__(f"duplicate document id {doc_id}")
        self.doc_id = doc_id


class PrimaryKeyIndex:
    """Maps key values to row positions.

    Dense key ranges use a direct-address array; sparse ones fall back to a
    sorted array with binary search.
    """

    def __init__(self, keys: np.ndarray):
        keys = np.asarray(keys)
        self._n = len(keys)
        self._dense = None
        self._offset = 0
        if self._n == 0:
            self._sorted = keys
            self._rows = np.empty(0, dtype=np.int64)
            return
        lo, hi = int(keys.min()), int(keys.max())
        if hi - lo < 4 * self._n + 64:
            dense = np.full(hi - lo + 1, -1, dtype=np.int64)
            dense[(keys - keys.dtype.type(lo)).astype(np.int64)] = np.arange(self._n, dtype=np.int64)
            if np.count_nonzero(dense >= 0) != self._n:
                raise ValueError("primary key values are not unique")
            self._dense, self._offset, self._hi = dense, lo, hi
        order = np.argsort(keys, kind="stable")
        self._sorted = keys[order]
        self._rows = order.astype(np.int64)
        if self._dense is None and np.any(self._sorted[1:] == self._sorted[:-1]):
            raise ValueError("primary key values are not unique")

    def __len__(self) -> int:
        return self._n

    def lookup(self, keys, *, missing_ok: bool = False) -> np.ndarray:
        """Row positions for ``keys``; -1 for absent keys when ``missing_ok``."""
        keys = np.asarray(keys, dtype=self._sorted.dtype if self._n else None)
        if self._n == 0:
            rows = np.full(keys.shape, -1, dtype=np.int64)
        elif self._dense is not None:
            inside = (keys >= self._offset) & (keys <= self._hi)
            rows = np.full(keys.shape, -1, dtype=np.int64)
            rows[inside] = self._dense[(keys[inside] - keys.dtype.type(self._offset)).astype(np.int64)]
        else:
            pos = np.searchsorted(self._sorted, keys)
            pos_c = np.minimum(pos, self._n - 1)
            found = self._sorted[pos_c] == keys
            rows = np.where(found, self._rows[pos_c], -1)
        if not missing_ok and np.any(rows < 0):
            bad = keys[rows < 0][0]
            raise KeyError(f"unknown key {int(bad)}")
        return rows

    def row(self, key: int) -> int:
        return int(self.lookup(np.array([key]))[0])


class Table:
    """Named columns of equal length with a primary-key index on ``key``."""

    def __init__(self, name: str, columns: Mapping[str, Column], key: str = "id"):
        self.name = name
        self.columns: dict[str, Column] = {}
        lengths = set()
        for col, values in columns.items():
            if isinstance(values, np.ndarray):
                values = values.copy()
                values.setflags(write=False)
            else:
                values = tuple(values)
            self.columns[col] = values
            lengths.add(len(values))
        if len(lengths) > 1:
            raise ValueError(f"table {name}: columns have different lengths {sorted(lengths)}")
        self._len = lengths.pop() if lengths else 0
        self.key = key if key in self.columns else None
        self.index = PrimaryKeyIndex(self.columns[key]) if self.key else None

    def __len__(self) -> int:
        return self._len

    def __getitem__(self, col: str) -> Column:
        return self.columns[col]

    def __repr__(self) -> str:
        return f"Table({self.name!r}, rows={self._len}, columns={list(self.columns)})"


def _i64(values) -> np.ndarray:
    return np.asarray(values, dtype=np.int64).reshape(-1)


def _u64(values) -> np.ndarray:
    return np.asarray(values, dtype=np.uint64).reshape(-1)


def _f64(values) -> np.ndarray:
    return np.asarray(values, dtype=np.float64).reshape(-1)


def _epoch(dt: datetime) -> int:
    return int(dt.timestamp())


@dataclass(frozen=True)
class NormalizedStore:
    documents: Table
    authors: Table
    genders: Table
    documents_authors: Table
    geo_location: Table
    words: Table
    vocabulary: Table

    def tables(self) -> dict[str, Table]:
        return {
            "documents": self.documents,
            "authors": self.authors,
            "genders": self.genders,
            "documents_authors": self.documents_authors,
            "geo_location": self.geo_location,
            "words": self.words,
            "vocabulary": self.vocabulary,
        }

    @property
    def n_docs(self) -> int:
        return len(self.documents)


@dataclass(frozen=True)
class StarStore:
    document_fact: Table
    document_dimension: Table
    word_dimension: Table
    time_dimension: Table
    author_dimension: Table
    location_dimension: Table

    def tables(self) -> dict[str, Table]:
        return {
            "document_fact": self.document_fact,
            "document_dimension": self.document_dimension,
            "word_dimension": self.word_dimension,
            "time_dimension": self.time_dimension,
            "author_dimension": self.author_dimension,
            "location_dimension": self.location_dimension,
        }

    @property
    def n_docs(self) -> int:
        return len(self.document_dimension)


Store = Union[NormalizedStore, StarStore]


@dataclass(frozen=True)
class CorpusStats:
    n_docs: int
    avg_doc_len: float
    vocab_size: int
    doc_freq: Mapping[str, int] = field(repr=False)
    total_len: int = 0


# ---------------------------------------------------------------------------
# construction

def load_normalized(docs: Iterable[ProcessedDocument]) -> NormalizedStore:
    """Build the normalized layout from preprocessed documents.

    Genders and geo locations are deduplicated, word ids are assigned densely
    in first-seen order and vocabulary rows are stored in document-id order.
    """
    doc_ids: list[int] = []
    raw, clean, lemma, dates, lengths, geo_refs = [], [], [], [], [], []
    seen_docs: set[int] = set()

    author_rows: dict[int, int] = {}
    a_ids, a_first, a_last, a_age, a_gender = [], [], [], [], []
    gender_rows: dict[str, int] = {}
    geo_rows: dict[tuple[float, float], int] = {}
    word_rows: dict[str, int] = {}
    link_doc, link_author = [], []
    postings_per_doc: list[tuple[list[int], list[int], list[float]]] = []

    for doc in docs:
        rec = doc.record
        if rec.id in seen_docs:
            raise DuplicateDocumentError(rec.id)
        seen_docs.add(rec.id)
        row = len(doc_ids)
        doc_ids.append(rec.id)
        raw.append(rec.raw_text)
        clean.append(doc.clean_text)
        lemma.append(doc.lemma_text)
        dates.append(_epoch(rec.date))
        lengths.append(doc.lemma_length)
        geo_refs.append(geo_rows.setdefault((float(rec.geo_x), float(rec.geo_y)), len(geo_rows)))

        gender = Gender.parse(rec.gender).value
        g_row = gender_rows.setdefault(gender, len(gender_rows))
        if rec.author_id not in author_rows:
            author_rows[rec.author_id] = len(a_ids)
            a_ids.append(rec.author_id)
            a_first.append(rec.author_first)
            a_last.append(rec.author_last)
            a_age.append(rec.age)
            a_gender.append(g_row)
        link_doc.append(row)
        link_author.append(author_rows[rec.author_id])

        w, c, t = [], [], []
        for p in doc.postings:
            w.append(word_rows.setdefault(p.term, len(word_rows)))
            c.append(p.count)
            t.append(p.tf)
        postings_per_doc.append((w, c, t))

    order = np.argsort(_u64(doc_ids), kind="stable")
    v_doc, v_word, v_count, v_tf = [], [], [], []
    for row in order.tolist():
        w, c, t = postings_per_doc[row]
        v_doc.extend([row] * len(w))
        v_word.extend(w)
        v_count.extend(c)
        v_tf.extend(t)

    geo = list(geo_rows)
    return NormalizedStore(
        documents=Table("documents", {
            "id": _u64(doc_ids), "raw_text": raw, "clean_text": clean, "lemma_text": lemma,
            "date": _i64(dates), "lemma_length": _i64(lengths), "geo_ref": _i64(geo_refs),
        }),
        authors=Table("authors", {
            "id": _u64(a_ids), "first": a_first, "last": a_last,
            "age": _i64(a_age), "gender_ref": _i64(a_gender),
        }),
        genders=Table("genders", {"id": _i64(range(len(gender_rows))), "type": list(gender_rows)}),
        documents_authors=Table("documents_authors", {
            "doc_ref": _i64(link_doc), "author_ref": _i64(link_author),
        }, key="doc_ref"),
        geo_location=Table("geo_location", {
            "id": _i64(range(len(geo))), "x": _f64([g[0] for g in geo]), "y": _f64([g[1] for g in geo]),
        }),
        words=Table("words", {"id": _i64(range(len(word_rows))), "lemma": list(word_rows)}),
        vocabulary=Table("vocabulary", {
            "doc_ref": _i64(v_doc), "word_ref": _i64(v_word), "count": _i64(v_count), "tf": _f64(v_tf),
        }, key=""),
    )


def _time_parts(epochs: np.ndarray) -> dict[str, np.ndarray]:
    stamps = epochs.astype("datetime64[s]")
    years = stamps.astype("datetime64[Y]")
    months = stamps.astype("datetime64[M]")
    days = stamps.astype("datetime64[D]")
    hours = stamps.astype("datetime64[h]")
    minutes = stamps.astype("datetime64[m]")
    return {
        "minute": _i64((minutes - hours).astype(np.int64)),
        "hour": _i64((hours - days).astype(np.int64)),
        "day": _i64((days - months).astype(np.int64) + 1),
        "month": _i64((months - years).astype(np.int64) + 1),
        "year": _i64(years.astype(np.int64) + 1970),
    }


def to_star(norm: NormalizedStore) -> StarStore:
    """Remodel a normalized store into the star layout (one fact per posting)."""
    docs = norm.documents
    dates = np.asarray(docs["date"])
    time_keys, time_of_doc = np.unique(dates, return_inverse=True) if len(dates) else (dates, dates)
    # time ids in first-seen document order
    first_seen = np.full(len(time_keys), len(dates), dtype=np.int64)
    np.minimum.at(first_seen, time_of_doc, np.arange(len(dates)))
    rank = np.empty(len(time_keys), dtype=np.int64)
    rank[np.argsort(first_seen, kind="stable")] = np.arange(len(time_keys))
    time_id_of_doc = rank[time_of_doc] if len(dates) else _i64([])
    time_epochs = np.empty(len(time_keys), dtype=np.int64)
    time_epochs[rank] = time_keys

    author_of_doc = np.full(len(docs), -1, dtype=np.int64)
    author_of_doc[np.asarray(norm.documents_authors["doc_ref"])] = norm.documents_authors["author_ref"]

    vocab = norm.vocabulary
    v_doc = np.asarray(vocab["doc_ref"])
    gender_types = norm.genders["type"]
    authors = norm.authors

    return StarStore(
        document_fact=Table("document_fact", {
            "id_document": np.asarray(docs["id"])[v_doc],
            "id_word": np.asarray(vocab["word_ref"]),
            "id_author": np.asarray(authors["id"])[author_of_doc[v_doc]],
            "id_time": time_id_of_doc[v_doc],
            "id_location": np.asarray(docs["geo_ref"])[v_doc],
            "count": np.asarray(vocab["count"]),
            "tf": np.asarray(vocab["tf"]),
        }, key=""),
        document_dimension=Table("document_dimension", {
            "id": docs["id"], "raw_text": docs["raw_text"], "clean_text": docs["clean_text"],
            "lemma_text": docs["lemma_text"], "lemma_length": docs["lemma_length"],
        }),
        word_dimension=Table("word_dimension", {"id": norm.words["id"], "lemma": norm.words["lemma"]}),
        time_dimension=Table("time_dimension", {
            "id": _i64(range(len(time_epochs))), **_time_parts(time_epochs), "full_date": time_epochs,
        }),
        author_dimension=Table("author_dimension", {
            "id": authors["id"],
            "gender": [gender_types[g] for g in authors["gender_ref"]],
            "age": authors["age"], "first": authors["first"], "last": authors["last"],
        }),
        location_dimension=Table("location_dimension", {
            "id": norm.geo_location["id"], "x": norm.geo_location["x"], "y": norm.geo_location["y"],
        }),
    )


# ---------------------------------------------------------------------------
# statistics

def _doc_table(store: Store) -> Table:
    return store.documents if isinstance(store, NormalizedStore) else store.document_dimension


def _postings(store: Store) -> tuple[np.ndarray, np.ndarray, Sequence[str]]:
    """(document row, word id) per posting, plus the word lemma column."""
    if isinstance(store, NormalizedStore):
        v = store.vocabulary
        return np.asarray(v["doc_ref"]), np.asarray(v["word_ref"]), store.words["lemma"]
    f = store.document_fact
    rows = store.document_dimension.index.lookup(f["id_document"])
    return rows, np.asarray(f["id_word"]), store.word_dimension["lemma"]


def stats_for_rows(store: Store, doc_mask: np.ndarray | None = None) -> CorpusStats:
    table = _doc_table(store)
    lengths = np.asarray(table["lemma_length"])
    doc_rows, word_ids, lemmas = _postings(store)
    if doc_mask is None:
        doc_mask = np.ones(len(table), dtype=bool)
    n_docs = int(np.count_nonzero(doc_mask))
    total = int(lengths[doc_mask].sum())
    freq = np.bincount(word_ids[doc_mask[doc_rows]], minlength=len(lemmas)) if len(doc_rows) else np.zeros(len(lemmas), np.int64)
    present = np.flatnonzero(freq)
    return CorpusStats(
        n_docs=n_docs,
        avg_doc_len=total / n_docs if n_docs else 0.0,
        vocab_size=len(present),
        doc_freq={lemmas[w]: int(freq[w]) for w in present.tolist()},
        total_len=total,
    )


def stats(store: Store, subset: Iterable[int] | None = None) -> CorpusStats:
    """Document count, mean lemma length and per-term document frequency.

    Computed over ``subset`` (document ids) when given, else the whole corpus.
    """
    table = _doc_table(store)
    if subset is None:
        return stats_for_rows(store)
    ids = np.fromiter((int(i) for i in subset), dtype=np.uint64)
    try:
        rows = table.index.lookup(ids)
    except KeyError as exc:
        raise KeyError(f"subset contains a document id not in the store: {exc.args[0]}") from None
    mask = np.zeros(len(table), dtype=bool)
    mask[rows] = True
    return stats_for_rows(store, mask)


# ---------------------------------------------------------------------------
# snapshots

SNAPSHOT_MAGIC = b"TOPKSNAP"
SNAPSHOT_VERSION = 1
_KINDS = {0: NormalizedStore, 1: StarStore}
_INT64, _UINT64, _FLOAT64, _TEXT = 1, 2, 3, 4
_DTYPES = {_INT64: "<i8", _UINT64: "<u8", _FLOAT64: "<f8"}


def _write_str(out: io.BufferedIOBase, s: str) -> None:
    data = s.encode("utf-8")
    out.write(struct.pack("<I", len(data)))
    out.write(data)


def _read_exact(inp, n: int) -> bytes:
    data = inp.read(n)
    if len(data) != n:
        raise ValueError("truncated snapshot")
    return data


def _read_str(inp) -> str:
    (n,) = struct.unpack("<I", _read_exact(inp, 4))
    return _read_exact(inp, n).decode("utf-8")


def save_snapshot(store: Store, path: str | Path) -> None:
    """Write ``store`` to a versioned little-endian binary file (see README)."""
    kind = 0 if isinstance(store, NormalizedStore) else 1
    tables = store.tables()
    with open(path, "wb") as out:
        out.write(SNAPSHOT_MAGIC)
        out.write(struct.pack("<HBH", SNAPSHOT_VERSION, kind, len(tables)))
        for name, table in tables.items():
            _write_str(out, name)
            _write_str(out, table.key or "")
            out.write(struct.pack("<QH", len(table), len(table.columns)))
            for col, values in table.columns.items():
                _write_str(out, col)
                if isinstance(values, np.ndarray):
                    code = {np.dtype(np.int64): _INT64, np.dtype(np.uint64): _UINT64,
                            np.dtype(np.float64): _FLOAT64}[values.dtype]
                    out.write(struct.pack("<B", code))
                    out.write(values.astype(_DTYPES[code]).tobytes())
                else:
                    out.write(struct.pack("<B", _TEXT))
                    for s in values:
                        _write_str(out, s)


def load_snapshot(path: str | Path) -> Store:
    with open(path, "rb") as inp:
        if _read_exact(inp, len(SNAPSHOT_MAGIC)) != SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not a snapshot file")
        version, kind, n_tables = struct.unpack("<HBH", _read_exact(inp, 5))
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"{path}: unsupported snapshot version {version}")
        if kind not in _KINDS:
            raise ValueError(f"{path}: unknown store kind {kind}")
        tables = {}
        for _ in range(n_tables):
            name = _read_str(inp)
            key = _read_str(inp)
            n_rows, n_cols = struct.unpack("<QH", _read_exact(inp, 10))
            columns: dict[str, Column] = {}
            for _ in range(n_cols):
                col = _read_str(inp)
                (code,) = struct.unpack("<B", _read_exact(inp, 1))
                if code == _TEXT:
                    columns[col] = tuple(_read_str(inp) for _ in range(n_rows))
                elif code in _DTYPES:
                    raw = _read_exact(inp, 8 * n_rows)
                    columns[col] = np.frombuffer(raw, dtype=_DTYPES[code]).astype(_DTYPES[code][1:])
                else:
                    raise ValueError(f"{path}: unknown column type {code}")
            tables[name] = Table(name, columns, key=key)
    return _KINDS[kind](**tables)


def utc_from_epoch(seconds: int) -> datetime:
    return datetime.fromtimestamp(int(seconds), tz=timezone.utc)
