"""Command-line entry point: ``topkbench {generate,ingest,run,report}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import traceback
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .bench import BenchError, ProtocolConfig, StoreSet, default_suite, run_protocol
from .corpus import Gender, PreprocessError, Preprocessor
from .engine import DEFAULT_PARAMS, DEFAULT_TERMS, Layout, Mode, QueryId
from .generator import DEFAULT_BASE, GeneratorConfig, IngestError, generate, ingest, write_jsonl
from .storage import SNAPSHOT_MAGIC, DuplicateDocumentError, NormalizedStore, load_normalized, load_snapshot, save_snapshot, to_star
from .weighting import Scheme

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# keys accepted in --config files, with their list-valued subset
_LIST_KEYS = {"sf", "scheme", "layout", "mode", "terms", "gender", "query"}
_SCALAR_KEYS = {"base": int, "seed": int, "reps_keywords": int, "reps_documents": int,
                "shards": int, "k": int, "out": str}


def _split(value: str) -> list[str]:
    return [v for v in value.replace(",", " ").split() if v]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value file; its entries override flags")
    p.add_argument("--out", help="output file or directory")


def _corpus_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sf", type=float, nargs="+", default=[1.0], help="scale factor(s)")
    p.add_argument("--base", type=int, default=DEFAULT_BASE, help="documents per unit of sf (default %(default)s)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="topkbench", description="Top-k keyword and document benchmark over normalized and star layouts.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic JSON-lines corpus per scale factor")
    _corpus_flags(g)
    _common(g)

    i = sub.add_parser("ingest", help="convert a JSON-lines corpus into a binary snapshot")
    i.add_argument("corpus", type=Path)
    i.add_argument("--layout", type=str.upper, choices=[x.value for x in Layout], default=Layout.NORMALIZED.value)
    i.add_argument("--skip-invalid", action="store_true", help="skip malformed lines instead of failing")
    _common(i)

    r = sub.add_parser("run", help="execute the benchmark protocol")
    r.add_argument("inputs", nargs="*", type=Path, help="JSON-lines corpora or normalized snapshots; generated when omitted")
    _corpus_flags(r)
    r.add_argument("--reps-keywords", type=int, default=40)
    r.add_argument("--reps-documents", type=int, default=10)
    r.add_argument("--shards", type=int, default=1)
    r.add_argument("--scheme", nargs="+", default=[s.value for s in Scheme])
    r.add_argument("--layout", nargs="+", default=[x.value for x in Layout])
    r.add_argument("--mode", nargs="+", default=[m.value for m in Mode])
    r.add_argument("--query", nargs="+", default=[q.value for q in QueryId])
    r.add_argument("--gender", nargs="+", default=[x.value for x in Gender])
    r.add_argument("--k", type=int, default=10)
    r.add_argument("--terms", nargs="+", default=list(DEFAULT_TERMS))
    r.add_argument("--no-warmup", action="store_true")
    r.add_argument("--quiet", action="store_true")
    _common(r)

    rep = sub.add_parser("report", help="print a run summary and optionally chart it")
    rep.add_argument("run_dir", type=Path)
    rep.add_argument("--charts", action="store_true", help="write SVG charts of mean_ms vs sf (needs matplotlib)")
    _common(rep)
    return parser


def apply_config_file(args: argparse.Namespace, path: Path) -> None:
    """Overlay ``key = value`` lines from ``path`` onto ``args``."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string("[topkbench]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from None
    for raw_key, value in cp["topkbench"].items():
        key = raw_key.replace("-", "_")
        if not hasattr(args, key):
            raise UsageError(f"{path}: key {raw_key!r} does not apply to '{args.command}'")
        try:
            if key in _LIST_KEYS:
                items = _split(value)
                setattr(args, key, [float(v) for v in items] if key == "sf" else items)
            elif key in _SCALAR_KEYS:
                setattr(args, key, _SCALAR_KEYS[key](value))
            else:
                raise UsageError(f"{path}: key {raw_key!r} cannot be set from a config file")
        except ValueError:
            raise UsageError(f"{path}: bad value for {raw_key!r}: {value!r}") from None


def _effective(args: argparse.Namespace) -> dict:
    out = {}
    for k, v in vars(args).items():
        if isinstance(v, Path):
            v = str(v)
        elif isinstance(v, list):
            v = [str(x) if isinstance(x, Path) else x for x in v]
        out[k] = v
    return out


def _gen_config(args, sf: float) -> GeneratorConfig:
    try:
        return GeneratorConfig(sf=sf, seed=args.seed, base=args.base)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_generate(args) -> int:
    configs = [_gen_config(args, sf) for sf in args.sf]
    out = Path(args.out or ".")
    if len(configs) == 1 and out.suffix:
        targets = [out]
    else:
        out.mkdir(parents=True, exist_ok=True)
        targets = [out / f"corpus_sf{c.sf:g}_seed{c.seed}.jsonl" for c in configs]
    for cfg, target in zip(configs, targets):
        target.parent.mkdir(parents=True, exist_ok=True)
        n = write_jsonl(generate(cfg), target)
        print(f"{target}\t{n} documents", file=sys.stderr)
    return EXIT_OK


def _is_snapshot(path: Path) -> bool:
    with open(path, "rb") as f:
        return f.read(len(SNAPSHOT_MAGIC)) == SNAPSHOT_MAGIC


def cmd_ingest(args) -> int:
    skipped: list = []
    pipeline = Preprocessor()
    records = ingest(args.corpus, skip_invalid=args.skip_invalid, errors=skipped)
    store = load_normalized(pipeline(r) for r in records)
    if Layout(args.layout) is Layout.STAR:
        store = to_star(store)
    out = Path(args.out) if args.out else args.corpus.with_suffix(f".{args.layout.lower()}.snap")
    save_snapshot(store, out)
    if skipped:
        print(f"skipped {len(skipped)} invalid line(s); first: {skipped[0]}", file=sys.stderr)
    print(f"{out}\t{store.n_docs} documents", file=sys.stderr)
    return EXIT_OK


def _load_input(path: Path, sf: float) -> StoreSet:
    if _is_snapshot(path):
        store = load_snapshot(path)
        if not isinstance(store, NormalizedStore):
            raise DataError(f"{path}: run needs a normalized snapshot or a JSON-lines corpus")
        return StoreSet(sf, store)
    return StoreSet.from_records(sf, ingest(path))


def _suite(args):
    try:
        params = replace(DEFAULT_PARAMS, p_terms=tuple(t.lower() for t in args.terms))
        return default_suite(
            params,
            genders=[Gender.parse(g) for g in args.gender],
            queries=[QueryId(q.upper()) for q in args.query],
            modes=[Mode(m.upper()) for m in args.mode],
            schemes=[Scheme.parse(s) for s in args.scheme],
            k=args.k,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_run(args) -> int:
    suite = _suite(args)
    try:
        layouts = tuple(Layout(x.upper()) for x in args.layout)
        config = ProtocolConfig(
            suite=suite,
            reps_keywords=args.reps_keywords,
            reps_documents=args.reps_documents,
            warmup=not args.no_warmup,
            layouts=layouts,
            shards=args.shards,
            sf_labels=tuple(args.sf),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    if args.inputs:
        if len(args.sf) == len(args.inputs):
            labels = args.sf
        else:
            labels = [None] * len(args.inputs)
        stores = []
        for path, sf in zip(args.inputs, labels):
            ss = _load_input(path, 0.0 if sf is None else sf)
            stores.append(ss if sf is not None else replace(ss, sf=ss.n_docs / args.base))
    else:
        stores = [StoreSet.from_records(sf, generate(_gen_config(args, sf))) for sf in args.sf]

    progress = None if args.quiet else (lambda label: print(label, file=sys.stderr))
    report = run_protocol(stores, config, progress=progress)
    report.config = _effective(args)

    out = Path(args.out or "results")
    out.mkdir(parents=True, exist_ok=True)
    report.write_csv(out / "results.csv")
    report.write_json(out / "summary.json")
    (out / "config.json").write_text(json.dumps(report.config, indent=2) + "\n", encoding="utf-8")
    print(f"{len(report.measurements)} measurements written to {out}", file=sys.stderr)
    return EXIT_OK


def _read_summary(run_dir: Path) -> dict:
    path = run_dir / "summary.json" if run_dir.is_dir() else run_dir
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read summary {path}: {exc}") from None
    if data.get("format") != "topkbench-summary":
        raise DataError(f"{path}: not a topkbench summary")
    return data


def format_table(measurements: list[dict]) -> str:
    cols = ("sf", "n_docs", "gender", "query", "mode", "scheme", "layout", "shards",
            "mean_ms", "stddev_ms", "selectivity", "published_complexity")
    heads = ("sf", "n_docs", "gender", "query", "mode", "scheme", "layout", "shards",
             "mean_ms", "stddev_ms", "S", "complexity")
    rows = []
    for m in measurements:
        row = []
        for c in cols:
            v = m[c]
            if c in ("mean_ms", "stddev_ms"):
                v = f"{v:.3f}"
            elif c == "selectivity":
                v = f"{v:.4f}"
            elif c == "sf":
                v = f"{v:g}"
            row.append(str(v))
        rows.append(row)
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(heads)]
    line = lambda cells: "  ".join(c.rjust(w) for c, w in zip(cells, widths))
    return "\n".join([line(heads), line(["-" * w for w in widths])] + [line(r) for r in rows])


def write_charts(measurements: list[dict], out_dir: Path) -> list[Path]:
    """One SVG per (query, mode): mean_ms against sf, a line per scheme/layout/gender."""
    try:
        import matplotlib
        matplotlib.use("svg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise DataError("charts need matplotlib: pip install 'topkbench[plot]'") from None
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    panels: dict[tuple[str, str], dict[tuple, list]] = {}
    for m in measurements:
        series = panels.setdefault((m["query"], m["mode"]), {})
        series.setdefault((m["scheme"], m["layout"], m["gender"]), []).append((m["sf"], m["mean_ms"]))
    for (query, mode), series in sorted(panels.items()):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for (scheme, layout, gender), pts in sorted(series.items()):
            pts.sort()
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"{scheme} {layout} {gender}")
        ax.set_xlabel("scale factor")
        ax.set_ylabel("mean response time (ms)")
        ax.set_title(f"{query} top-k {mode.lower()}")
        ax.legend(fontsize="small")
        ax.grid(alpha=0.3)
        path = out_dir / f"{query}_{mode.lower()}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


def cmd_report(args) -> int:
    data = _read_summary(args.run_dir)
    print(format_table(data["measurements"]))
    if args.charts:
        base = args.run_dir if args.run_dir.is_dir() else args.run_dir.parent
        out = Path(args.out) if args.out else base / "charts"
        for path in write_charts(data["measurements"], out):
            print(path, file=sys.stderr)
    return EXIT_OK


_COMMANDS = {"generate": cmd_generate, "ingest": cmd_ingest, "run": cmd_run, "report": cmd_report}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config is not None:
            apply_config_file(args, args.config)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except (DataError, IngestError, PreprocessError, DuplicateDocumentError, OSError) as exc:
        print(f"topkbench: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BenchError as exc:
        cause = exc.__cause__
        if isinstance(cause, (ValueError, KeyError)):
            print(f"topkbench: data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"topkbench: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        # malformed snapshots and similar input problems
        print(f"topkbench: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL
