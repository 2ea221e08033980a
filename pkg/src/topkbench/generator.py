"""Seeded synthetic tweet corpora and JSON-lines ingestion.

Generated corpora alternate author gender, draw dates and integer coordinates
uniformly, and draw content words from a Zipf distribution over a synthetic
lexicon in which the default search terms hold fixed, frequent ranks.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .corpus import Gender, RawRecord, default_stopwords, heuristic_lemmatize

__all__ = [
    "GeneratorConfig",
    "IngestError",
    "DEFAULT_BASE",
    "SEARCH_TERM_RANKS",
    "generate",
    "build_lexicon",
    "record_to_json",
    "write_jsonl",
    "stream_digest",
    "ingest",
]

DEFAULT_BASE = 1_000_000
DATE_MIN = datetime(2015, 9, 17, 20, 41, 35, tzinfo=timezone.utc)
DATE_MAX = datetime(2015, 9, 19, 4, 5, 45, tzinfo=timezone.utc)
# 1-based Zipf ranks of the default search terms
SEARCH_TERM_RANKS = {"think": 12, "today": 25, "friday": 40}
FIRST_ID = 644_626_677_310_000_000

_FIRST_NAMES = (
    "amanda", "bruno", "chloe", "dmitri", "elena", "farid", "greta", "hiro", "ines", "jonas",
    "kemal", "lucia", "marek", "nadia", "oscar", "priya", "quinn", "rosa", "sven", "tara",
)
_LAST_NAMES = (
    "adams", "bauer", "costa", "dubois", "eriksen", "fischer", "garcia", "horvat", "ivanova",
    "jensen", "kowalski", "lopez", "moreau", "novak", "olsen", "petrov", "rossi", "silva",
)
_FILLERS = ("the", "is", "a", "my", "for", "and", "to", "of", "so", "this", "with", "it")
_CONTRACTED = ("it's", "don't", "i'm", "can't", "we're", "that's", "you'll")
_ONSETS = "b c d f g h j k l m n p r s t v z br dr fl gr kr pl st tr".split()
_NUCLEI = "a e i o u ai ea io".split()


@dataclass(frozen=True)
class GeneratorConfig:
    sf: float = 1.0
    seed: int = 0
    base: int = DEFAULT_BASE
    date_min: datetime = DATE_MIN
    date_max: datetime = DATE_MAX
    x_range: tuple[float, float] = (15, 50)
    y_range: tuple[float, float] = (-124, 120)
    vocab_size: int = 5000
    zipf_exponent: float = 1.0
    doc_length_mean: float = 8.0

    def __post_init__(self):
        if not self.sf > 0:
            raise ValueError(f"scale factor must be positive, got {self.sf}")
        if self.base < 1:
            raise ValueError(f"base must be positive, got {self.base}")
        if not self.date_min < self.date_max:
            raise ValueError("date_min must precede date_max")
        for name, (lo, hi) in (("x_range", self.x_range), ("y_range", self.y_range)):
            if not lo < hi:
                raise ValueError(f"{name} is degenerate: {lo} >= {hi}")
        if self.vocab_size < max(SEARCH_TERM_RANKS.values()):
            raise ValueError(f"vocab_size must be at least {max(SEARCH_TERM_RANKS.values())}")
        if self.doc_length_mean < 1:
            raise ValueError("doc_length_mean must be at least 1")
        if self.n_docs == 0:
            raise ValueError(f"sf={self.sf} with base {self.base} produces no documents")

    @property
    def n_docs(self) -> int:
        # round first so 0.000002 * 1e6 is 2, not 1.9999
        return int(np.floor(round(self.sf * self.base, 6)))


def build_lexicon(size: int, seed: int) -> list[str]:
    """``size`` distinct lemma-stable words ordered by Zipf rank."""
    rng = np.random.default_rng([seed, 0x1E1C0])
    stop = default_stopwords()
    reserved = set(SEARCH_TERM_RANKS)
    words: list[str] = []
    seen = set(reserved)
    while len(words) < size - len(reserved):
        n_syll = 2 + int(rng.integers(0, 2))
        w = "".join(_ONSETS[rng.integers(len(_ONSETS))] + _NUCLEI[rng.integers(len(_NUCLEI))] for _ in range(n_syll))
        if w in seen or w in stop or heuristic_lemmatize(w, "NOUN") != w:
            continue
        seen.add(w)
        words.append(w)
    for term, rank in sorted(SEARCH_TERM_RANKS.items(), key=lambda kv: kv[1]):
        words.insert(rank - 1, term)
    return words


def _zipf_thresholds(size: int, exponent: float) -> np.ndarray:
    weights = np.arange(1, size + 1, dtype=np.float64) ** -exponent
    cdf = np.cumsum(weights) / weights.sum()
    # integer thresholds keep the draw platform independent
    return np.round(cdf * 2**52).astype(np.int64)


def _author(author_id: int) -> tuple[str, str, int]:
    h = int.from_bytes(hashlib.sha256(author_id.to_bytes(8, "little")).digest()[:8], "little")
    return _FIRST_NAMES[h % len(_FIRST_NAMES)], _LAST_NAMES[(h >> 8) % len(_LAST_NAMES)], 16 + (h >> 16) % 55


def generate(config: GeneratorConfig, chunk: int = 4096) -> Iterator[RawRecord]:
    """Yield ``config.n_docs`` records; the stream depends only on ``config``."""
    n = config.n_docs
    rng = np.random.default_rng(config.seed)
    lexicon = build_lexicon(config.vocab_size, config.seed)
    thresholds = _zipf_thresholds(config.vocab_size, config.zipf_exponent)
    t0 = int(config.date_min.timestamp())
    t1 = int(config.date_max.timestamp())
    x0, x1 = int(np.ceil(config.x_range[0])), int(np.floor(config.x_range[1]))
    y0, y1 = int(np.ceil(config.y_range[0])), int(np.floor(config.y_range[1]))
    authors_per_gender = max(1, n // 8)

    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        lengths = 1 + rng.poisson(config.doc_length_mean - 1, size=m)
        word_draws = np.searchsorted(thresholds, rng.integers(0, 2**52, size=int(lengths.sum())), side="right")
        word_draws = np.minimum(word_draws, config.vocab_size - 1)
        dates = rng.integers(t0, t1 + 1, size=m)
        xs = rng.integers(x0, x1 + 1, size=m)
        ys = rng.integers(y0, y1 + 1, size=m)
        author_slots = rng.integers(0, authors_per_gender, size=m)
        decor = rng.integers(0, 100, size=(m, 6))

        offset = 0
        for j in range(m):
            i = start + j
            gender = Gender.MALE if i % 2 == 0 else Gender.FEMALE
            words = [lexicon[k] for k in word_draws[offset:offset + lengths[j]]]
            offset += lengths[j]
            d = decor[j]
            tokens: list[str] = []
            for pos, w in enumerate(words):
                if (d[0] + 7 * pos) % 100 < 35:
                    tokens.append(_FILLERS[(d[1] + pos) % len(_FILLERS)])
                tokens.append(w)
            if d[2] < 10:
                tokens.insert(0, _CONTRACTED[d[2] % len(_CONTRACTED)])
            tokens[0] = tokens[0].capitalize()
            if d[3] < 6:
                tokens.append("#" + words[0])
            if d[4] < 5:
                tokens.append(f"@user{int(author_slots[(j + 1) % m])}")
            if d[5] < 4:
                tokens.append(f"http://t.co/{i:x}")
            author_id = 2 * int(author_slots[j]) + (i % 2) + 1
            first, last, age = _author(author_id)
            yield RawRecord(
                id=FIRST_ID + i,
                raw_text=" ".join(tokens) + (".", "!", "")[int(d[1]) % 3],
                author_id=author_id,
                author_first=first,
                author_last=last,
                age=age,
                gender=gender,
                date=datetime.fromtimestamp(int(dates[j]), tz=timezone.utc),
                geo_x=int(xs[j]),
                geo_y=int(ys[j]),
            )


# ---------------------------------------------------------------------------
# JSON lines

def _iso(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def record_to_json(record: RawRecord) -> dict:
    return {
        "_id": record.id,
        "rawText": record.raw_text,
        "author": record.author_id,
        "firstName": record.author_first,
        "lastName": record.author_last,
        "gender": record.gender.value,
        "age": record.age,
        "date": _iso(record.date),
        "geoLocation": [record.geo_x, record.geo_y],
    }


def _dumps(record: RawRecord) -> str:
    return json.dumps(record_to_json(record), ensure_ascii=False, separators=(",", ":"))


def write_jsonl(records: Iterable[RawRecord], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        for record in records:
            out.write(_dumps(record))
            out.write("\n")
            count += 1
    return count


def stream_digest(records: Iterable[RawRecord]) -> str:
    """SHA-256 over the JSON-lines serialization of ``records``."""
    h = hashlib.sha256()
    for record in records:
        h.update(_dumps(record).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


class IngestError(ValueError):
    def __init__(self, line: int, field_name: str | None, message: str):
        where = f"line {line}" + (f", field '{field_name}'" if field_name else "")
        super().__init__(f"{where}: {message}")
        self.line = line
        self.field = field_name


_REQUIRED = ("_id", "rawText", "author", "gender", "age", "date", "geoLocation")


def _parse_date(value) -> datetime:
    if isinstance(value, dict) and "$date" in value:
        value = value["$date"]
    if isinstance(value, str):
        text = value.strip()
        if text.startswith("ISODate(") and text.endswith(")"):
            text = text[8:-1].strip("\"'")
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
        return dt.replace(tzinfo=timezone.utc) if dt.tzinfo is None else dt.astimezone(timezone.utc)
    raise TypeError("expected an ISO-8601 string")


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_num(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _record_from_obj(obj, line: int) -> RawRecord:
    if not isinstance(obj, dict):
        raise IngestError(line, None, "expected a JSON object")
    for name in _REQUIRED:
        if name not in obj:
            raise IngestError(line, name, "missing")
    if not _is_int(obj["_id"]) or not 0 <= obj["_id"] < 2**64:
        raise IngestError(line, "_id", "expected an unsigned 64-bit integer")
    if not isinstance(obj["rawText"], str):
        raise IngestError(line, "rawText", "expected a string")
    if not _is_int(obj["author"]) or obj["author"] < 0:
        raise IngestError(line, "author", "expected an unsigned integer")
    try:
        gender = Gender.parse(obj["gender"])
    except ValueError:
        raise IngestError(line, "gender", f"expected 'male' or 'female', got {obj['gender']!r}") from None
    if not _is_int(obj["age"]) or obj["age"] < 0:
        raise IngestError(line, "age", "expected an unsigned integer")
    try:
        date = _parse_date(obj["date"])
    except (TypeError, ValueError) as exc:
        raise IngestError(line, "date", f"malformed timestamp ({exc})") from None
    geo = obj["geoLocation"]
    if not (isinstance(geo, list) and len(geo) == 2 and all(_is_num(v) for v in geo)):
        raise IngestError(line, "geoLocation", "expected [x, y]")
    for name in ("firstName", "lastName"):
        if not isinstance(obj.get(name, ""), str):
            raise IngestError(line, name, "expected a string")
    return RawRecord(
        id=obj["_id"],
        raw_text=obj["rawText"],
        author_id=obj["author"],
        author_first=obj.get("firstName", ""),
        author_last=obj.get("lastName", ""),
        age=obj["age"],
        gender=gender,
        date=date,
        geo_x=geo[0],
        geo_y=geo[1],
    )


def ingest(path: str | Path, *, skip_invalid: bool = False, errors: list | None = None) -> Iterator[RawRecord]:
    """Read records from a JSON-lines file, one object per line.

    Invalid lines raise :class:`IngestError` unless ``skip_invalid`` is set,
    in which case they are skipped and the errors appended to ``errors``.
    Blank lines are ignored.
    """
    with open(path, encoding="utf-8") as inp:
        for lineno, line in enumerate(inp, 1):
            if not line.strip():
                continue
            try:
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise IngestError(lineno, None, f"invalid JSON ({exc.msg})") from None
                record = _record_from_obj(obj, lineno)
            except IngestError as exc:
                if not skip_invalid:
                    raise
                if errors is not None:
                    errors.append(exc)
                continue
            yield record
