"""Generate a small corpus and load it into both storage layouts."""

import tempfile
from pathlib import Path

from topkbench.corpus import Preprocessor
from topkbench.generator import GeneratorConfig, generate, record_to_json
from topkbench.storage import load_normalized, load_snapshot, save_snapshot, stats, to_star

config = GeneratorConfig(sf=0.2, base=10_000, seed=11)
records = list(generate(config))
print(f"generated {len(records)} records; the first one as JSON:")
print("   ", record_to_json(records[0]))

pipeline = Preprocessor()
norm = load_normalized(pipeline(r) for r in records)
star = to_star(norm)

print("\nnormalized tables:")
for name, table in norm.tables().items():
    print(f"    {name:<18} {len(table):>6} rows  {list(table.columns)}")
print("star tables:")
for name, table in star.tables().items():
    print(f"    {name:<18} {len(table):>6} rows  {list(table.columns)}")

s = stats(norm)
top = sorted(s.doc_freq.items(), key=lambda kv: -kv[1])[:5]
print(f"\ncorpus: N={s.n_docs}, avgdl={s.avg_doc_len:.2f}, vocabulary={s.vocab_size}")
print("most widespread terms:", top)

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "corpus.snap"
    save_snapshot(star, path)
    back = load_snapshot(path)
    print(f"\nsnapshot: {path.stat().st_size} bytes, reloaded {back.n_docs} documents")
