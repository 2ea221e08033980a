import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topkbench.storage import CorpusStats
from topkbench.weighting import (
    Scheme,
    SchemeParams,
    idf,
    idf_table,
    okapi,
    posting_weights,
    score_document,
    score_keyword,
    tf,
    tfidf,
    weight,
)

OKAPI = SchemeParams(scheme=Scheme.OKAPI)


@pytest.mark.parametrize("args, expected", [((1, 1, 0.5), 1.0), ((1, 2, 0.5), 0.75), ((5, 5, 0.5), 1.0)])
def test_tf(args, expected):
    assert tf(*args) == expected


@pytest.mark.parametrize("args", [(1, 0), (0, 3), (4, 3)])
def test_tf_rejects(args):
    with pytest.raises(ValueError):
        tf(*args)


def test_idf():
    assert idf(10, 10) == 1.0
    assert idf(10, 1) == pytest.approx(3.302585, abs=1e-6)
    assert idf(1, 1) == 1.0
    for n in (0, 11):
        with pytest.raises(ValueError):
            idf(10, n)


def test_tfidf_examples():
    assert tfidf(1, 1, 10, 10) == 1.0
    assert tfidf(1, 2, 10, 1) == pytest.approx(2.476939, abs=1e-6)
    assert tfidf(2, 2, 4, 2) == pytest.approx(1.693147, abs=1e-6)


def test_okapi_worked_example():
    value = okapi(1, 2, 10, 1, 4, 2, OKAPI)
    # the closed form, evaluated in full precision
    assert value == pytest.approx(0.75 * (1 + math.log(10)) * 2.2 / (0.75 + 1.2 * (0.25 + 0.75 * 2)), rel=1e-15)
    assert value == pytest.approx(1.9120229, abs=1e-7)


def test_okapi_rejects():
    with pytest.raises(ValueError):
        okapi(1, 1, 2, 1, 3, 0, OKAPI)
    with pytest.raises(ValueError):
        okapi(1, 1, 2, 1, 0, 2, OKAPI)


@settings(max_examples=300)
@given(
    N=st.integers(1, 10**6),
    frac=st.floats(0, 1),
    dl=st.integers(1, 500),
    k1=st.floats(1.2, 2.0),
    b=st.floats(0, 1),
)
def test_okapi_equals_tfidf_at_unit_tf_and_average_length(N, frac, dl, k1, b):
    n = max(1, int(frac * N))
    p = SchemeParams(Scheme.OKAPI, k1=k1, b=b)
    assert okapi(1, 1, N, n, dl, dl, p) == pytest.approx(tfidf(1, 1, N, n, p), abs=1e-12)


@settings(max_examples=200)
@given(dl=st.integers(1, 500), avg=st.floats(0.5, 500), count=st.integers(1, 5))
def test_okapi_b_zero_ignores_length_at_unit_tf(dl, avg, count):
    p = SchemeParams(Scheme.OKAPI, b=0.0)
    assert okapi(count, count, 50, 7, dl, avg, p) == pytest.approx(tfidf(count, count, 50, 7, p), abs=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        SchemeParams(K=1.5)
    with pytest.raises(ValueError):
        SchemeParams(b=-0.1)
    with pytest.warns(UserWarning):
        SchemeParams(k1=3.0)
    assert Scheme.parse("bm25") is Scheme.OKAPI
    assert SchemeParams(scheme="tfidf").scheme is Scheme.TFIDF


@settings(max_examples=100)
@given(st.lists(st.tuples(st.integers(1, 6), st.integers(1, 40), st.integers(1, 30)), min_size=1, max_size=30))
def test_vector_weights_match_scalar_bitwise(rows):
    N = max(r[2] for r in rows) + 1
    tfs = np.array([0.5 + 0.5 * 1 / r[0] for r in rows])
    idfs = idf_table(N, np.array([r[2] for r in rows]))
    dls = np.array([r[1] for r in rows])
    avg = dls.sum() / len(dls)
    for p in (SchemeParams(), OKAPI):
        vec = posting_weights(tfs, idfs, dls, avg, p)
        scalar = [weight(t, idf(N, r[2]), r[1], avg, p) for t, r in zip(tfs.tolist(), rows)]
        assert vec.tolist() == scalar


def test_idf_table_zero_frequency():
    assert idf_table(5, np.array([0, 5, 1])).tolist() == [0.0, 1.0, 1 + math.log(5)]


def _stats(n_docs, avg, freq):
    return CorpusStats(n_docs=n_docs, avg_doc_len=avg, vocab_size=len(freq), doc_freq=freq, total_len=int(avg * n_docs))


def test_score_keyword():
    s = _stats(2, 1.5, {"a": 2, "b": 1})
    assert score_keyword("a", s, [(1.0, 2), (1.0, 1)]) == 2.0
    assert score_keyword("zzz", s, []) == 0.0
    assert score_keyword("b", s, [(1.0, 2)]) == 1 + math.log(2)


def test_score_document():
    s = _stats(2, 1.5, {"a": 2, "b": 1})
    assert score_document(["a"], {"a": 1.0}, 1, s) == 1.0
    assert score_document(["a", "b"], {"a": 1.0}, 1, s) == score_document(["a"], {"a": 1.0}, 1, s)
    assert score_document(["a", "a"], {"a": 1.0}, 1, s) == 1.0
    with pytest.raises(ValueError):
        score_document([], {"a": 1.0}, 1, s)
