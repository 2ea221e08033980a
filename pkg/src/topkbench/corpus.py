"""Documents, authors and the text preprocessing pipeline.

Raw tweet-like records go through seven steps: tag extraction, contraction
expansion, sentence splitting, part-of-speech tagging, punctuation and
stop-word removal, lemmatization and posting construction.  POS tagging and
lemmatization are pluggable; the defaults are small rule-based heuristics.
"""

from __future__ import annotations

import enum
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

__all__ = [
    "Gender",
    "RawRecord",
    "VocabularyEntry",
    "ProcessedDocument",
    "PreprocessError",
    "Preprocessor",
    "extract_tags",
    "expand_contractions",
    "split_sentences",
    "heuristic_pos_tags",
    "heuristic_lemmatize",
    "load_stopwords",
    "load_contractions",
    "default_stopwords",
    "default_contractions",
    "preprocess",
    "augmented_tf",
    "utc",
]

MAX_ID = 2**64 - 1
DEFAULT_K = 0.5

Lemmatizer = Callable[[str, str], str]
PosTagger = Callable[[Sequence[str]], Sequence[str]]


class Gender(str, enum.Enum):
    MALE = "male"
    FEMALE = "female"

    @classmethod
    def parse(cls, value: "str | Gender") -> "Gender":
        if isinstance(value, Gender):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"gender must be 'male' or 'female', got {value!r}") from None


class PreprocessError(ValueError):
    pass


@dataclass(frozen=True)
class RawRecord:
    id: int
    raw_text: str
    author_id: int
    author_first: str
    author_last: str
    age: int
    gender: Gender
    date: datetime
    geo_x: float
    geo_y: float


@dataclass(frozen=True)
class VocabularyEntry:
    term: str
    doc_id: int
    count: int
    tf: float


@dataclass(frozen=True)
class ProcessedDocument:
    record: RawRecord
    clean_text: str
    lemma_text: str
    lemma_length: int
    hashtags: tuple[str, ...] = ()
    attags: tuple[str, ...] = ()
    postings: tuple[VocabularyEntry, ...] = field(default=())

    @property
    def id(self) -> int:
        return self.record.id

    @property
    def raw_text(self) -> str:
        return self.record.raw_text

    @property
    def date(self) -> datetime:
        return self.record.date

    @property
    def gender(self) -> Gender:
        return self.record.gender


# ---------------------------------------------------------------------------
# tables

def _data_lines(text: str) -> Iterable[str]:
    for line in text.splitlines():
        line = line.rstrip("\n\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield line


def _parse_stopwords(text: str) -> frozenset[str]:
    return frozenset(line.strip().lower() for line in _data_lines(text))


def _parse_contractions(text: str) -> dict[str, str]:
    table = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        short, sep, expansion = line.partition("\t")
        if not sep or not short.strip() or not expansion.strip():
            raise ValueError(f"contraction table line {lineno}: expected 'short<TAB>expansion'")
        table[_normalize_apostrophes(short.strip().lower())] = expansion.strip()
    return table


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a UTF-8 stop-word file, one word per line ('#' starts a comment line)."""
    return _parse_stopwords(Path(path).read_text(encoding="utf-8"))


def load_contractions(path: str | Path) -> dict[str, str]:
    """Read a UTF-8 ``short<TAB>expansion`` contraction file.

    Keys prefixed with ``-`` are suffix rules, e.g. ``-'s<TAB>is`` turns
    ``Amanda's`` into ``Amanda is``.
    """
    return _parse_contractions(Path(path).read_text(encoding="utf-8"))


def _packaged(name: str) -> str:
    return resources.files("topkbench").joinpath("data").joinpath(name).read_text(encoding="utf-8")


_DEFAULT_STOPWORDS: frozenset[str] | None = None
_DEFAULT_CONTRACTIONS: dict[str, str] | None = None


def default_stopwords() -> frozenset[str]:
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        _DEFAULT_STOPWORDS = _parse_stopwords(_packaged("stopwords.txt"))
    return _DEFAULT_STOPWORDS


def default_contractions() -> dict[str, str]:
    global _DEFAULT_CONTRACTIONS
    if _DEFAULT_CONTRACTIONS is None:
        _DEFAULT_CONTRACTIONS = _parse_contractions(_packaged("contractions.tsv"))
    return dict(_DEFAULT_CONTRACTIONS)


# ---------------------------------------------------------------------------
# step 1: tags and links

_URL_RE = re.compile(r"^(?:https?://|www\.)", re.IGNORECASE)
_TAG_BODY_TRIM = "".join(chr(c) for c in range(0x21, 0x7F) if not chr(c).isalnum() and chr(c) != "_")


def extract_tags(raw_text: str) -> tuple[list[str], list[str], str]:
    """Split hashtags, @-mentions and links out of a raw text.

    Returns ``(hashtags, attags, stripped)``; tag markers are removed and the
    remaining tokens keep their order, joined by single spaces.
    """
    hashtags: list[str] = []
    attags: list[str] = []
    kept: list[str] = []
    for token in raw_text.split():
        if _URL_RE.match(token):
            continue
        if token.startswith("#") or token.startswith("@"):
            body = token[1:].rstrip(_TAG_BODY_TRIM)
            if body:
                (hashtags if token[0] == "#" else attags).append(body)
            continue
        kept.append(token)
    return hashtags, attags, " ".join(kept)


# ---------------------------------------------------------------------------
# step 2: contractions

_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "ʼ": "'"})
_CONTRACTION_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)+")


def _normalize_apostrophes(text: str) -> str:
    return text.translate(_APOSTROPHES)


def _match_case(original: str, expansion: str) -> str:
    if original[:1].isupper():
        return expansion[:1].upper() + expansion[1:]
    return expansion


def expand_contractions(text: str, table: Mapping[str, str] | None = None) -> str:
    """Replace contractions found in ``table`` by their expansion.

    Whole-word entries are tried first, then ``-suffix`` rules, longest suffix
    first.  The case of the leading character is kept.
    """
    if table is None:
        table = default_contractions()
    words = {k: v for k, v in table.items() if not k.startswith("-")}
    suffixes = sorted(
        ((k[1:], v) for k, v in table.items() if k.startswith("-")),
        key=lambda kv: -len(kv[0]),
    )

    def replace(match: re.Match[str]) -> str:
        token = match.group(0)
        lowered = token.lower()
        if lowered in words:
            return _match_case(token, words[lowered])
        for suffix, expansion in suffixes:
            if lowered.endswith(suffix) and len(lowered) > len(suffix):
                stem = token[: len(token) - len(suffix)]
                return f"{stem} {expansion}"
        return token

    return _CONTRACTION_RE.sub(replace, _normalize_apostrophes(text))


# ---------------------------------------------------------------------------
# steps 3-6

_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")
_WORD_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")


def split_sentences(text: str) -> list[str]:
    return [s for s in _SENTENCE_RE.split(text.strip()) if s]


def _words(sentence: str) -> list[str]:
    # apostrophes left after contraction expansion are dropped inside the word
    return [w.replace("'", "") for w in _WORD_RE.findall(sentence)]


_AUX = frozenset("to will would can could should must might may shall i you we they".split())


def heuristic_pos_tags(tokens: Sequence[str]) -> list[str]:
    """Suffix/context rule tagger returning coarse tags (NOUN, VERB, ADV, NUM)."""
    tags = []
    prev = ""
    for token in tokens:
        low = token.lower()
        if low.isdigit():
            tag = "NUM"
        elif prev in _AUX or (len(low) > 4 and (low.endswith("ing") or low.endswith("ed"))):
            tag = "VERB"
        elif len(low) > 4 and low.endswith("ly"):
            tag = "ADV"
        else:
            tag = "NOUN"
        tags.append(tag)
        prev = low
    return tags


_IRREGULAR = {
    "am": "be", "is": "be", "are": "be", "was": "be", "were": "be", "been": "be",
    "has": "have", "had": "have", "did": "do", "does": "do", "done": "do",
    "went": "go", "gone": "go", "made": "make", "said": "say", "thought": "think",
    "saw": "see", "seen": "see", "took": "take", "taken": "take", "came": "come",
    "children": "child", "men": "man", "women": "woman", "people": "person",
    "feet": "foot", "teeth": "tooth", "mice": "mouse",
}
_KEEP_S = frozenset(
    "always perhaps news series species yes this his its us gas bus plus thus lens "
    "chaos canvas bias atlas dress class glass boss loss".split()
)
_VOWELS = frozenset("aeiou")


def _undouble(stem: str) -> str:
    if len(stem) > 2 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS and stem[-1] not in "lsz":
        return stem[:-1]
    return stem


def heuristic_lemmatize(token: str, pos: str) -> str:
    """Lowercase ``token`` and strip plural or verbal suffixes by rule."""
    word = token.lower()
    if word in _IRREGULAR:
        return _IRREGULAR[word]
    if pos == "VERB":
        if word.endswith("ing") and len(word) > 5:
            return _undouble(word[:-3])
        if word.endswith("ied") and len(word) > 4:
            return word[:-3] + "y"
        if word.endswith("ed") and len(word) > 4:
            return _undouble(word[:-2])
    if pos in ("NOUN", "VERB") and word not in _KEEP_S:
        if word.endswith("ies") and len(word) > 4:
            return word[:-3] + "y"
        if word.endswith("sses"):
            return word[:-2]
        if word.endswith(("xes", "ches", "shes")):
            return word[:-2]
        if word.endswith("s") and len(word) > 3 and not word.endswith(("ss", "us", "is")):
            return word[:-1]
    return word


def augmented_tf(count: int, max_count: int, K: float = DEFAULT_K) -> float:
    return K + (1 - K) * count / max_count


def _is_lemma(word: str) -> bool:
    return bool(word) and all(unicodedata.category(c)[0] in "LN" for c in word)


# ---------------------------------------------------------------------------
# pipeline

def _validate(record: RawRecord) -> None:
    if record.id is None or isinstance(record.id, bool) or not isinstance(record.id, int):
        raise PreprocessError(f"record id must be an integer, got {record.id!r}")
    if not 0 <= record.id <= MAX_ID:
        raise PreprocessError(f"record id {record.id} outside the unsigned 64-bit range")
    if not isinstance(record.date, datetime) or record.date.tzinfo is None:
        raise PreprocessError(f"record {record.id}: date must be a timezone-aware datetime, got {record.date!r}")


@dataclass(frozen=True)
class Preprocessor:
    """Configured preprocessing pipeline.

    Instances are immutable and may be shared between threads.
    """

    stopwords: frozenset[str] = field(default_factory=default_stopwords)
    contractions: Mapping[str, str] = field(default_factory=default_contractions)
    lemmatizer: Lemmatizer = heuristic_lemmatize
    tagger: PosTagger = heuristic_pos_tags
    K: float = DEFAULT_K

    def lemmas(self, sentences: Iterable[str]) -> list[str]:
        out = []
        for sentence in sentences:
            tokens = _words(sentence)
            tags = self.tagger(tokens)
            for token, tag in zip(tokens, tags):
                if token.lower() in self.stopwords:
                    continue
                lemma = self.lemmatizer(token, tag).lower()
                if _is_lemma(lemma) and lemma not in self.stopwords:
                    out.append(lemma)
        return out

    def __call__(self, record: RawRecord) -> ProcessedDocument:
        _validate(record)
        hashtags, attags, stripped = extract_tags(record.raw_text)
        expanded = expand_contractions(stripped, self.contractions)
        sentences = split_sentences(expanded)
        clean_text = " ".join(" ".join(_words(s)) for s in sentences if _words(s))
        # hashtag bodies enter the vocabulary; mentions stay metadata
        lemmas = self.lemmas(sentences) + self.lemmas(hashtags)

        counts = Counter(lemmas)
        postings: tuple[VocabularyEntry, ...] = ()
        if counts:
            top = max(counts.values())
            postings = tuple(
                VocabularyEntry(term, record.id, c, augmented_tf(c, top, self.K))
                for term, c in counts.items()
            )
        return ProcessedDocument(
            record=record,
            clean_text=clean_text,
            lemma_text=" ".join(lemmas),
            lemma_length=len(lemmas),
            hashtags=tuple(hashtags),
            attags=tuple(attags),
            postings=postings,
        )


def preprocess(
    record: RawRecord,
    stopwords: Iterable[str] | None = None,
    lemmatizer: Lemmatizer | None = None,
    *,
    tagger: PosTagger | None = None,
    contractions: Mapping[str, str] | None = None,
    K: float = DEFAULT_K,
) -> ProcessedDocument:
    """Run the full pipeline on one record with the given configuration."""
    pipeline = Preprocessor(
        stopwords=default_stopwords() if stopwords is None else frozenset(w.lower() for w in stopwords),
        contractions=default_contractions() if contractions is None else contractions,
        lemmatizer=lemmatizer or heuristic_lemmatize,
        tagger=tagger or heuristic_pos_tags,
        K=K,
    )
    return pipeline(record)


def utc(year: int, month: int, day: int, hour: int = 0, minute: int = 0, second: int = 0) -> datetime:
    return datetime(year, month, day, hour, minute, second, tzinfo=timezone.utc)
