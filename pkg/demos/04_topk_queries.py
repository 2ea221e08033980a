"""Top-k keywords and top-k documents under the four query shapes."""

from dataclasses import replace

from topkbench.bench import StoreSet, selectivity
from topkbench.engine import DEFAULT_PARAMS, Layout, Mode, QueryId, QuerySpec, evaluate, explain, to_sql
from topkbench.generator import GeneratorConfig, generate
from topkbench.weighting import Scheme, SchemeParams

stores = StoreSet.from_records(0.5, generate(GeneratorConfig(sf=0.5, base=10_000, seed=5)))
print(f"{stores.n_docs} documents\n")

for q in QueryId:
    spec = QuerySpec(q, k=5)
    r = evaluate(stores.normalized, spec)
    words = ", ".join(f"{w} ({s:.1f})" for w, s in r.entries)
    print(f"{q.value} keywords, S={selectivity(stores.normalized, spec):.3f}: {words}")

print()
okapi = SchemeParams(Scheme.OKAPI)
for q in QueryId:
    spec = QuerySpec(q, Mode.DOCUMENTS, scheme=okapi, k=3)
    r = evaluate(stores.star, spec)
    print(f"{q.value} documents (Okapi, star layout), {r.subset_size} matches: {r.entries}")

# Both layouts return the same entries, float for float.
spec = QuerySpec(QueryId.Q4, params=replace(DEFAULT_PARAMS, p_gender="female"))
assert evaluate(stores.normalized, spec).entries == evaluate(stores.star, spec).entries
print("\nlayouts agree on", spec.label())

plan = explain(spec, Layout.STAR)
print("\nplan traversals:", [(t["scan"], len(t["entities"])) for t in plan["traversals"]])
print("published complexity:", plan["complexity"]["published"])
print("\nSQL for the normalized layout:\n")
print(to_sql(spec, Layout.NORMALIZED))
