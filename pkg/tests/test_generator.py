from collections import Counter
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpora import SAMPLE_ID, SAMPLE_JSON, PIPELINE
from topkbench.corpus import Gender
from topkbench.generator import (
    SEARCH_TERM_RANKS,
    GeneratorConfig,
    IngestError,
    build_lexicon,
    generate,
    ingest,
    stream_digest,
    write_jsonl,
)


def test_two_records_one_per_gender():
    recs = list(generate(GeneratorConfig(sf=0.000002)))
    assert len(recs) == 2
    assert {r.gender for r in recs} == {Gender.MALE, Gender.FEMALE}


def test_document_counts():
    assert GeneratorConfig(sf=0.5).n_docs == 500_000
    assert GeneratorConfig(sf=2.5, base=10_000).n_docs == 25_000
    assert sum(1 for _ in generate(GeneratorConfig(sf=0.3, base=10_000))) == 3000


def test_zero_documents_rejected():
    with pytest.raises(ValueError):
        GeneratorConfig(sf=0.0000001)
    with pytest.raises(ValueError):
        GeneratorConfig(sf=-1)


@pytest.mark.parametrize(
    "kw",
    [
        {"date_min": datetime(2016, 1, 1, tzinfo=timezone.utc)},
        {"x_range": (5, 5)},
        {"y_range": (3, 1)},
        {"vocab_size": 10},
    ],
)
def test_invalid_configs(kw):
    with pytest.raises(ValueError):
        GeneratorConfig(sf=0.001, **kw)


def test_same_seed_same_stream():
    cfg = GeneratorConfig(sf=0.002, seed=42)
    assert stream_digest(generate(cfg)) == stream_digest(generate(cfg))
    assert stream_digest(generate(cfg)) != stream_digest(generate(GeneratorConfig(sf=0.002, seed=43)))


@settings(max_examples=15, deadline=None)
@given(n=st.integers(1, 400), seed=st.integers(0, 2**32))
def test_balance_and_ranges(n, seed):
    cfg = GeneratorConfig(sf=n / 1000, base=1000, seed=seed)
    recs = list(generate(cfg))
    assert len(recs) == n
    g = Counter(r.gender for r in recs)
    assert abs(g[Gender.MALE] - g[Gender.FEMALE]) <= 1
    assert len({r.id for r in recs}) == n
    for r in recs:
        assert cfg.date_min <= r.date <= cfg.date_max
        assert 15 <= r.geo_x <= 50 and -124 <= r.geo_y <= 120
    # an author id always maps to one gender
    by_author = {}
    for r in recs:
        assert by_author.setdefault(r.author_id, r.gender) is r.gender


def test_lexicon_places_search_terms():
    lex = build_lexicon(200, 3)
    assert len(set(lex)) == 200
    for term, rank in SEARCH_TERM_RANKS.items():
        assert lex[rank - 1] == term


def test_search_terms_survive_preprocessing():
    recs = list(generate(GeneratorConfig(sf=0.002, seed=1)))
    terms = Counter(e.term for r in recs for e in PIPELINE(r).postings)
    assert all(terms[t] > 0 for t in SEARCH_TERM_RANKS)
    # frequent ranks are frequent
    assert terms.most_common(1)[0][1] > terms["friday"] > 0


def test_ingest_sample(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text(SAMPLE_JSON + "\n", encoding="utf-8")
    (r,) = ingest(p)
    assert (r.id, r.gender, r.age, (r.geo_x, r.geo_y)) == (SAMPLE_ID, Gender.MALE, 23, (32, 79))
    assert r.date == datetime(2015, 9, 17, 23, 39, 11, tzinfo=timezone.utc)


def test_ingest_isodate_string(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text(SAMPLE_JSON.replace('{"$date": "2015-09-17T23:39:11Z"}', '"ISODate(\\"2015-09-17T23:39:11Z\\")"'), encoding="utf-8")
    (r,) = ingest(p)
    assert r.date.hour == 23


def test_ingest_empty_file(tmp_path):
    p = tmp_path / "e.jsonl"
    p.write_text("", encoding="utf-8")
    assert list(ingest(p)) == []


def test_ingest_missing_gender_names_line_and_field(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text(SAMPLE_JSON + "\n" + SAMPLE_JSON.replace('"gender": "male", ', "") + "\n", encoding="utf-8")
    with pytest.raises(IngestError) as info:
        list(ingest(p))
    assert info.value.line == 2 and info.value.field == "gender"
    assert "line 2" in str(info.value) and "gender" in str(info.value)


def test_ingest_skip_with_count(tmp_path):
    p = tmp_path / "mixed.jsonl"
    lines = [SAMPLE_JSON, "{not json", SAMPLE_JSON.replace('"age": 23', '"age": "old"'), "", SAMPLE_JSON]
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    errors = []
    recs = list(ingest(p, skip_invalid=True, errors=errors))
    assert len(recs) == 2
    assert [(e.line, e.field) for e in errors] == [(2, None), (3, "age")]


def test_write_then_ingest_round_trip(tmp_path):
    recs = list(generate(GeneratorConfig(sf=0.0005, seed=9)))
    p = tmp_path / "g.jsonl"
    assert write_jsonl(recs, p) == len(recs)
    assert list(ingest(p)) == recs
