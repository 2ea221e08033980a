from datetime import datetime

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpora import SAMPLE_ID, sample_record, record
from topkbench.corpus import (
    Gender,
    PreprocessError,
    Preprocessor,
    default_contractions,
    default_stopwords,
    expand_contractions,
    extract_tags,
    heuristic_lemmatize,
    load_contractions,
    load_stopwords,
    preprocess,
    split_sentences,
)


def test_golden_record():
    doc = preprocess(sample_record())
    assert doc.clean_text == "Amanda is car is too much for my headache"
    assert doc.lemma_text == "amanda car headache"
    assert doc.lemma_length == 3
    assert [(e.term, e.doc_id, e.count, e.tf) for e in doc.postings] == [
        ("amanda", SAMPLE_ID, 1, 1.0),
        ("car", SAMPLE_ID, 1, 1.0),
        ("headache", SAMPLE_ID, 1, 1.0),
    ]


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("go #fri @bob http://x.co now", (["fri"], ["bob"], "go now")),
        ("", ([], [], "")),
        ("plain text", ([], [], "plain text")),
        ("see www.example.org and #Rain! @you,", (["Rain"], ["you"], "see and")),
        ("lone # and @ signs", ([], [], "lone and signs")),
    ],
)
def test_extract_tags(raw, expected):
    assert extract_tags(raw) == expected


@pytest.mark.parametrize(
    "text, expected",
    [
        ("it's", "it is"),
        ("Amanda's car", "Amanda is car"),
        ("cars", "cars"),
        ("I can't go", "I cannot go"),
        ("Won't they", "Will not they"),
        ("we’re here", "we are here"),
        ("they'd've", "they'd have"),
    ],
)
def test_expand_contractions(text, expected):
    assert expand_contractions(text) == expected


def test_run_run_runs_single_posting():
    doc = preprocess(record(5, "run run runs"), lemmatizer=lambda tok, pos: "run" if tok == "runs" else tok)
    assert [(e.term, e.count, e.tf) for e in doc.postings] == [("run", 3, 1.0)]
    assert doc.lemma_length == 3


def test_empty_document():
    doc = preprocess(record(6, ""))
    assert doc.postings == () and doc.lemma_length == 0 and doc.lemma_text == ""


def test_stopword_only_document_has_no_postings():
    doc = preprocess(record(7, "it is the and of"))
    assert doc.postings == ()
    assert doc.clean_text == "it is the and of"


def test_tf_is_augmented():
    doc = preprocess(record(8, "apple apple apple pear pear kiwi"))
    tf = {e.term: (e.count, e.tf) for e in doc.postings}
    assert tf == {"apple": (3, 1.0), "pear": (2, 0.5 + 0.5 * 2 / 3), "kiwi": (1, 0.5 + 0.5 / 3)}


def test_custom_K():
    doc = Preprocessor(K=0.0)(record(9, "apple apple pear"))
    assert {e.term: e.tf for e in doc.postings} == {"apple": 1.0, "pear": 0.5}


def test_hashtags_join_the_vocabulary_and_mentions_do_not():
    doc = preprocess(record(10, "lunch with @alice #pizza"))
    terms = {e.term for e in doc.postings}
    assert "pizza" in terms and "alice" not in terms
    assert doc.hashtags == ("pizza",) and doc.attags == ("alice",)


def test_no_posting_is_a_stopword():
    sw = default_stopwords()
    doc = preprocess(record(11, "They were thinking about the cars and the houses."))
    assert all(e.term not in sw for e in doc.postings)
    assert sum(e.count for e in doc.postings) == doc.lemma_length


@pytest.mark.parametrize(
    "token, pos, lemma",
    [
        ("cars", "NOUN", "car"),
        ("running", "VERB", "run"),
        ("studied", "VERB", "study"),
        ("boxes", "NOUN", "box"),
        ("glass", "NOUN", "glass"),
        ("went", "VERB", "go"),
        ("Friday", "NOUN", "friday"),
        ("thinking", "VERB", "think"),
    ],
)
def test_heuristic_lemmatize(token, pos, lemma):
    assert heuristic_lemmatize(token, pos) == lemma


def test_split_sentences():
    assert split_sentences("One. Two!  Three? four") == ["One.", "Two!", "Three?", "four"]


@pytest.mark.parametrize("bad_id", [-1, 2**64, "12", None, True])
def test_rejects_bad_ids(bad_id):
    r = sample_record()
    with pytest.raises(PreprocessError):
        preprocess(type(r)(**{**r.__dict__, "id": bad_id}))


def test_rejects_naive_timestamp():
    r = sample_record()
    with pytest.raises(PreprocessError):
        preprocess(type(r)(**{**r.__dict__, "date": datetime(2015, 9, 17)}))


def test_gender_parse():
    assert Gender.parse(" Male ") is Gender.MALE
    with pytest.raises(ValueError):
        Gender.parse("other")


def test_table_loaders(tmp_path):
    sw = tmp_path / "sw.txt"
    sw.write_text("# comment\nFoo\n\nbar\n", encoding="utf-8")
    assert load_stopwords(sw) == frozenset({"foo", "bar"})
    ct = tmp_path / "c.tsv"
    ct.write_text("y'know\tyou know\n-'s\tis\n", encoding="utf-8")
    table = load_contractions(ct)
    assert expand_contractions("y'know Bob's", table) == "you know Bob is"
    assert "-n't" in default_contractions()


@settings(max_examples=150, deadline=None)
@given(st.text(alphabet="abcdefgh #@'.!, ", max_size=60))
def test_preprocess_invariants(text):
    doc = preprocess(record(1, text))
    terms = [e.term for e in doc.postings]
    assert len(terms) == len(set(terms))
    assert doc.lemma_length == sum(e.count for e in doc.postings) == len(doc.lemma_text.split())
    if doc.postings:
        assert max(e.tf for e in doc.postings) == 1.0
        assert all(0.5 <= e.tf <= 1.0 for e in doc.postings)
    assert set(terms) <= set(doc.lemma_text.split())
