"""Execution protocol: warm-up, timed repetitions, summaries and reports."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .corpus import Gender
from .engine import (
    DEFAULT_PARAMS,
    Layout,
    Mode,
    QueryId,
    QueryParams,
    QuerySpec,
    RankedResult,
    apply_constraints,
    evaluate,
    layout_of,
    plan_complexity,
    sharded_evaluate,
)
from .corpus import Preprocessor, RawRecord
from .storage import NormalizedStore, StarStore, load_normalized, to_star
from .weighting import Scheme, SchemeParams

__all__ = [
    "ProtocolConfig",
    "StoreSet",
    "Measurement",
    "BenchReport",
    "BenchError",
    "selectivity",
    "summarize",
    "result_digest",
    "run_protocol",
    "default_suite",
    "CSV_COLUMNS",
    "REPORT_VERSION",
]

REPORT_VERSION = 1
CSV_COLUMNS = ("sf", "n_docs", "gender", "query", "mode", "scheme", "layout", "shards", "rep", "time_ms")


class BenchError(RuntimeError):
    pass


def summarize(samples: Sequence[float]) -> tuple[float, float]:
    """Arithmetic mean and population standard deviation."""
    if len(samples) == 0:
        raise ValueError("cannot summarize an empty sample list")
    mean = math.fsum(samples) / len(samples)
    var = math.fsum((x - mean) ** 2 for x in samples) / len(samples)
    return mean, math.sqrt(var)


def selectivity(store, spec: QuerySpec) -> float:
    """``1 - n(Q) / N`` with N the number of documents in the store."""
    n_total = store.n_docs
    if n_total == 0:
        raise ValueError("selectivity is undefined on an empty corpus")
    return 1 - len(apply_constraints(store, spec)) / n_total


def result_digest(result: RankedResult) -> str:
    h = hashlib.sha256(result.mode.value.encode())
    for key, score in result.entries:
        h.update(f"\x1f{key}\x1e{float(score).hex()}".encode("utf-8"))
    h.update(f"\x1d{result.subset_size}".encode())
    return h.hexdigest()


@dataclass(frozen=True)
class StoreSet:
    """Both layouts of one corpus at one scale factor."""

    sf: float
    normalized: NormalizedStore
    star: StarStore | None = None

    def __post_init__(self):
        if self.star is None:
            object.__setattr__(self, "star", to_star(self.normalized))

    @classmethod
    def from_records(cls, sf: float, records: Iterable[RawRecord], preprocessor: Preprocessor | None = None) -> "StoreSet":
        pipeline = preprocessor or Preprocessor()
        return cls(sf, load_normalized(pipeline(r) for r in records))

    @property
    def n_docs(self) -> int:
        return self.normalized.n_docs

    def layout(self, layout: Layout):
        return self.normalized if Layout(layout) is Layout.NORMALIZED else self.star


@dataclass(frozen=True)
class ProtocolConfig:
    suite: tuple[QuerySpec, ...]
    reps_keywords: int = 40
    reps_documents: int = 10
    warmup: bool = True
    layouts: tuple[Layout, ...] = (Layout.NORMALIZED, Layout.STAR)
    shards: int = 1
    sf_labels: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "suite", tuple(self.suite))
        object.__setattr__(self, "layouts", tuple(Layout(x) for x in self.layouts))
        if not self.suite:
            raise ValueError("protocol suite must not be empty")
        if self.reps_keywords < 1 or self.reps_documents < 1:
            raise ValueError("repetition counts must be at least 1")
        if self.shards < 1:
            raise ValueError("shards must be at least 1")

    def reps(self, mode: Mode) -> int:
        return self.reps_keywords if mode is Mode.KEYWORDS else self.reps_documents


@dataclass
class Measurement:
    sf: float
    n_docs: int
    gender: str
    query: str
    mode: str
    scheme: str
    layout: str
    shards: int
    k: int
    samples_ms: list[float]
    mean_ms: float
    stddev_ms: float
    selectivity: float
    subset_size: int
    published_complexity: int
    breakdown_complexity: int
    result_digest: str
    digests_consistent: bool
    executions: int

    def summary(self) -> dict:
        out = asdict(self)
        out.pop("samples_ms")
        out["reps"] = len(self.samples_ms)
        return out


@dataclass
class BenchReport:
    measurements: list[Measurement] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def csv_rows(self):
        for m in self.measurements:
            for rep, t in enumerate(m.samples_ms, 1):
                yield (m.sf, m.n_docs, m.gender, m.query, m.mode, m.scheme, m.layout, m.shards, rep, t)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as out:
            writer = csv.writer(out)
            writer.writerow(CSV_COLUMNS)
            for row in self.csv_rows():
                writer.writerow(row[:-1] + (f"{row[-1]:.6f}",))

    def summary(self) -> dict:
        return {
            "format": "topkbench-summary",
            "version": REPORT_VERSION,
            "config": self.config,
            "measurements": [m.summary() for m in self.measurements],
        }

    def write_json(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as out:
            json.dump(self.summary(), out, indent=2, sort_keys=False)
            out.write("\n")


Evaluator = Callable[[object, QuerySpec], RankedResult]


def default_suite(
    params: QueryParams = DEFAULT_PARAMS,
    *,
    genders: Sequence[Gender | str] = (Gender.MALE, Gender.FEMALE),
    queries: Sequence[QueryId | str] = tuple(QueryId),
    modes: Sequence[Mode | str] = tuple(Mode),
    schemes: Sequence[SchemeParams | Scheme | str] = (Scheme.TFIDF, Scheme.OKAPI),
    k: int = 10,
) -> tuple[QuerySpec, ...]:
    """Cartesian product of the given axes, gender outermost."""
    scheme_params = [s if isinstance(s, SchemeParams) else SchemeParams(scheme=Scheme.parse(s)) for s in schemes]
    return tuple(
        QuerySpec(QueryId(q), Mode(m), replace(params, p_gender=Gender.parse(g)), sp, k)
        for g in genders
        for q in queries
        for m in modes
        for sp in scheme_params
    )


def _default_evaluator(shards: int) -> Evaluator:
    if shards == 1:
        return evaluate
    return lambda store, spec: sharded_evaluate(store, spec, shards)


def _measure(store, spec: QuerySpec, reps: int, warmup: bool, run: Evaluator, clock) -> tuple[list[float], list[str], int]:
    executions = 0
    if warmup:
        run(store, spec)
        executions += 1
    samples, digests = [], []
    for _ in range(reps):
        t0 = clock()
        result = run(store, spec)
        t1 = clock()
        executions += 1
        samples.append((t1 - t0) * 1000.0)
        digests.append(result_digest(result))
    return samples, digests, executions


def run_protocol(
    stores: Mapping[float, StoreSet] | Sequence[StoreSet],
    config: ProtocolConfig,
    *,
    evaluator: Evaluator | None = None,
    clock: Callable[[], float] = time.perf_counter,
    progress: Callable[[str], None] | None = None,
) -> BenchReport:
    """Measure every (store, layout, spec) combination sequentially.

    Each measurement runs one untimed warm-up when ``config.warmup`` is set,
    then the configured number of timed repetitions.  Only query evaluation
    sits inside the timed region.
    """
    store_sets = list(stores.values()) if isinstance(stores, Mapping) else list(stores)
    run = evaluator or _default_evaluator(config.shards)
    report = BenchReport()
    for ss in store_sets:
        for layout in config.layouts:
            store = ss.layout(layout)
            for spec in config.suite:
                label = f"sf={ss.sf} layout={layout.value} {spec.label()}"
                if progress:
                    progress(label)
                try:
                    samples, digests, executions = _measure(
                        store, spec, config.reps(spec.mode), config.warmup, run, clock
                    )
                    sel = selectivity(store, spec)
                    reference = evaluate(store, spec) if evaluator is None else None
                except Exception as exc:
                    raise BenchError(f"measurement failed for {label}: {exc}") from exc
                mean, std = summarize(samples)
                published, breakdown = plan_complexity(layout_of(store), spec.scheme, spec.query_id, spec.mode)
                report.measurements.append(Measurement(
                    sf=ss.sf,
                    n_docs=ss.n_docs,
                    gender=spec.params.p_gender.value,
                    query=spec.query_id.value,
                    mode=spec.mode.value,
                    scheme=spec.scheme.scheme.value,
                    layout=layout.value,
                    shards=config.shards,
                    k=spec.k,
                    samples_ms=samples,
                    mean_ms=mean,
                    stddev_ms=std,
                    selectivity=sel,
                    subset_size=reference.subset_size if reference else -1,
                    published_complexity=published,
                    breakdown_complexity=sum(len(t.entities) for t in breakdown),
                    result_digest=digests[0],
                    digests_consistent=len(set(digests)) == 1,
                    executions=executions,
                ))
    return report
