import json
import math
import sqlite3
from dataclasses import replace

import numpy as np
import pytest

from corpora import full_suite, processed, random_corpus, record
from oracle import oracle_ids, oracle_topk
from topkbench.corpus import Gender
from topkbench.engine import (
    DEFAULT_PARAMS,
    Layout,
    Mode,
    QueryId,
    QueryParams,
    QuerySpec,
    apply_constraints,
    evaluate,
    explain,
    plan_complexity,
    sharded_evaluate,
    sql_parameters,
    to_sql,
    topk_documents,
    topk_keywords,
)
from topkbench.storage import load_normalized, to_star
from topkbench.weighting import Scheme, SchemeParams

OKAPI = SchemeParams(Scheme.OKAPI)


def _both(records):
    norm = load_normalized(processed(records))
    return norm, to_star(norm)


@pytest.fixture(scope="module")
def ab_stores():
    # d1 = "a b", d2 = "a"; single-letter lemmas stand in for real words
    return _both([record(1, "apple berry"), record(2, "apple")])


def test_two_document_keywords(ab_stores):
    for store in ab_stores:
        r = topk_keywords(store, QuerySpec(QueryId.Q1))
        assert r.entries == (("apple", 2.0), ("berry", 1 + math.log(2)))
        top1 = topk_keywords(store, QuerySpec(QueryId.Q1, k=1))
        assert top1.entries == (("apple", 2.0),)


def test_two_document_documents(ab_stores):
    params = replace(DEFAULT_PARAMS, p_terms=("apple",))
    for store in ab_stores:
        r = topk_documents(store, QuerySpec(QueryId.Q1, Mode.DOCUMENTS, params))
        assert r.entries == ((1, 1.0), (2, 1.0))
        miss = topk_documents(store, QuerySpec(QueryId.Q1, Mode.DOCUMENTS, replace(params, p_terms=("zebra",))))
        assert miss.entries == () and miss.subset_size == 0


def test_mode_guards(ab_stores):
    with pytest.raises(ValueError):
        topk_keywords(ab_stores[0], QuerySpec(QueryId.Q1, Mode.DOCUMENTS))
    with pytest.raises(ValueError):
        topk_documents(ab_stores[0], QuerySpec(QueryId.Q1))


def test_spec_validation():
    with pytest.raises(ValueError):
        QuerySpec(QueryId.Q2, params=QueryParams())
    with pytest.raises(ValueError):
        QuerySpec(QueryId.Q3, params=replace(DEFAULT_PARAMS, p_start_x=None))
    with pytest.raises(ValueError):
        QuerySpec(QueryId.Q4, params=replace(DEFAULT_PARAMS, p_start_y=200))
    with pytest.raises(ValueError):
        QuerySpec(QueryId.Q1, Mode.DOCUMENTS, QueryParams())
    with pytest.raises(ValueError):
        QuerySpec(QueryId.Q1, k=0)
    with pytest.raises(ValueError):
        QuerySpec(QueryId.Q2, params=replace(DEFAULT_PARAMS, p_start_date=DEFAULT_PARAMS.p_end_date))
    assert QueryParams(p_terms=("a", "b", "a")).p_terms == ("a", "b")


def test_all_male_corpus_female_query_is_empty():
    docs, norm, star = random_corpus(2, 60, all_male=True)
    spec = QuerySpec(QueryId.Q1, params=replace(DEFAULT_PARAMS, p_gender=Gender.FEMALE))
    for store in (norm, star):
        assert apply_constraints(store, spec) == frozenset()
        r = evaluate(store, spec)
        assert r.entries == () and r.subset_size == 0
        assert sharded_evaluate(store, spec, 3).entries == ()


@pytest.mark.parametrize("seed", range(6))
def test_constraint_monotonicity(seed):
    _, norm, star = random_corpus(seed, 120)
    for store in (norm, star):
        for mode in Mode:
            ids = {q: apply_constraints(store, QuerySpec(q, mode)) for q in QueryId}
            assert ids[QueryId.Q4] <= ids[QueryId.Q2] <= ids[QueryId.Q1]
            assert ids[QueryId.Q4] <= ids[QueryId.Q3] <= ids[QueryId.Q1]


def test_q3_matches_linear_scan():
    docs, norm, star = random_corpus(10, 10)
    spec = QuerySpec(QueryId.Q3)
    for store in (norm, star):
        assert apply_constraints(store, spec) == oracle_ids(docs, spec)


def test_hand_corpus_documents_against_oracle():
    recs = [record(1, "I think today is friday"), record(2, "think think about it"), record(3, "friday night music")]
    docs = processed(recs)
    norm = load_normalized(docs)
    for scheme in (SchemeParams(), OKAPI):
        spec = QuerySpec(QueryId.Q1, Mode.DOCUMENTS, scheme=scheme)
        expected, size = oracle_topk(docs, spec)
        r = evaluate(norm, spec)
        assert list(r.entries) == expected and r.subset_size == size == 3


@pytest.mark.parametrize("seed", [0, 1, 7])
def test_matches_oracle_both_layouts(seed):
    docs, norm, star = random_corpus(seed, 200)
    for spec in full_suite(k=15):
        expected, size = oracle_topk(docs, spec)
        for store in (norm, star):
            r = evaluate(store, spec)
            assert [e[0] for e in r.entries] == [e[0] for e in expected], spec.label()
            assert all(abs(a[1] - b[1]) <= 1e-9 for a, b in zip(r.entries, expected))
            assert r.subset_size == size


def test_entries_sorted_and_bounded():
    _, norm, _ = random_corpus(11, 150)
    for k in (1, 3, 50):
        r = evaluate(norm, QuerySpec(QueryId.Q1, k=k))
        assert len(r.entries) <= k
        keys = [(-s, key) for key, s in r.entries]
        assert keys == sorted(keys)


def test_stats_used_follow_the_subset():
    docs, norm, _ = random_corpus(12, 150)
    spec = QuerySpec(QueryId.Q2, Mode.DOCUMENTS)
    r = evaluate(norm, spec)
    kw = evaluate(norm, QuerySpec(QueryId.Q2, Mode.KEYWORDS))
    # statistics are taken before the term filter
    assert r.stats_used.n_docs == kw.subset_size
    assert r.subset_size <= kw.subset_size


@pytest.mark.parametrize("shards", [1, 2, 3, 5, 8])
def test_sharding_matches_single_instance(shards):
    _, norm, star = random_corpus(13, 300)
    for spec in full_suite()[:16]:
        for store in (norm, star):
            base = evaluate(store, spec)
            got = sharded_evaluate(store, spec, shards)
            assert got.entries == base.entries and got.subset_size == base.subset_size


def test_sharding_thread_pool_and_errors():
    _, norm, _ = random_corpus(14, 200)
    spec = QuerySpec(QueryId.Q4, scheme=OKAPI)
    assert sharded_evaluate(norm, spec, 4, max_workers=4).entries == evaluate(norm, spec).entries
    with pytest.raises(ValueError):
        sharded_evaluate(norm, spec, 0)


def test_empty_store():
    norm = load_normalized([])
    for store in (norm, to_star(norm)):
        for spec in full_suite()[:8]:
            assert evaluate(store, spec).entries == ()
            assert sharded_evaluate(store, spec, 4).entries == ()


NORMALIZED_COST = {Scheme.TFIDF: (12, 12, 15, 15), Scheme.OKAPI: (17, 17, 21, 21)}
STAR_KEYWORD_COST = {Scheme.TFIDF: (3, 5, 5, 7), Scheme.OKAPI: (4, 6, 6, 8)}
STAR_DOCUMENT_COST = {Scheme.TFIDF: (5, 8, 8, 11), Scheme.OKAPI: (6, 9, 9, 12)}


def test_published_complexity_tables():
    for scheme in Scheme:
        for i, q in enumerate(QueryId):
            for mode in Mode:
                assert plan_complexity(Layout.NORMALIZED, scheme, q, mode)[0] == NORMALIZED_COST[scheme][i]
            assert plan_complexity(Layout.STAR, scheme, q, Mode.KEYWORDS)[0] == STAR_KEYWORD_COST[scheme][i]
            assert plan_complexity(Layout.STAR, scheme, q, Mode.DOCUMENTS)[0] == STAR_DOCUMENT_COST[scheme][i]


def _total(layout, scheme, q, mode):
    return sum(len(t.entities) for t in plan_complexity(layout, scheme, q, mode)[1])


def test_breakdown_orderings():
    for layout in Layout:
        for mode in Mode:
            for q in QueryId:
                assert _total(layout, Scheme.OKAPI, q, mode) >= _total(layout, Scheme.TFIDF, q, mode)
            for scheme in Scheme:
                assert _total(layout, scheme, QueryId.Q4, mode) >= _total(layout, scheme, QueryId.Q1, mode)


def test_explain_is_json():
    spec = QuerySpec(QueryId.Q4, Mode.DOCUMENTS, scheme=OKAPI)
    plan = json.loads(json.dumps(explain(spec, Layout.STAR)))
    assert plan["complexity"]["published"] == 12
    assert [op["op"] for op in plan["operators"]] == ["join", "select", "project", "group", "topk"]
    assert {c["name"] for c in plan["operators"][1]["constraints"]} == {"c1", "c2", "c3", "c4"}


def _sqlite(norm, star):
    con = sqlite3.connect(":memory:")
    con.create_function("LN", 1, math.log)
    for store in (norm, star):
        for name, table in store.tables().items():
            cols = list(table.columns)
            data = [table[c].tolist() if isinstance(table[c], np.ndarray) else list(table[c]) for c in cols]
            cols_sql = ["row_no"] + cols
            con.execute(f"CREATE TABLE {name} ({', '.join(cols_sql)})")
            rows = zip(range(len(table)), *data)
            con.executemany(f"INSERT INTO {name} VALUES ({', '.join('?' * len(cols_sql))})", rows)
    return con


@pytest.mark.parametrize("seed", [0, 4])
def test_sql_export_runs_on_sqlite(seed):
    # even seeds keep ids below 2**63 so sqlite can store them
    _, norm, star = random_corpus(seed, 120)
    con = _sqlite(norm, star)
    for spec in full_suite():
        spec = replace(spec, k=10_000)
        expected = dict(evaluate(norm, spec).entries)
        for layout in Layout:
            got = dict(con.execute(to_sql(spec, layout), sql_parameters(spec)).fetchall())
            assert got.keys() == expected.keys(), (spec.label(), layout)
            assert all(abs(got[key] - expected[key]) <= 1e-9 for key in got)
