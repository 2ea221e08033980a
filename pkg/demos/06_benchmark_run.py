"""A reduced benchmark run over three scale factors, with report and chart.

The full protocol (40 and 10 repetitions, both genders, every query) is the
default of ``topkbench run``; this script trims repetitions to stay quick.
"""

import sys
import tempfile
from pathlib import Path

from topkbench.bench import ProtocolConfig, StoreSet, default_suite, run_protocol
from topkbench.cli import format_table, write_charts
from topkbench.generator import GeneratorConfig, generate

sfs = (0.25, 0.5, 1.0)
stores = [StoreSet.from_records(sf, generate(GeneratorConfig(sf=sf, base=10_000, seed=1))) for sf in sfs]
config = ProtocolConfig(suite=default_suite(genders=["male"], queries=["Q1", "Q4"]), reps_keywords=5, reps_documents=3)
report = run_protocol(stores, config)

summary = report.summary()
print(format_table(summary["measurements"]))

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="topkbench-"))
out.mkdir(parents=True, exist_ok=True)
report.write_csv(out / "results.csv")
report.write_json(out / "summary.json")
print(f"\nreport written to {out}")
try:
    charts = write_charts(summary["measurements"], out / "charts")
    print("charts:", ", ".join(p.name for p in charts))
except Exception as exc:  # matplotlib is optional
    print("charts skipped:", exc)
