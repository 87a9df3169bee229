"""Command-line entry point: ingest corpora, run methods, compare them.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path

from . import apriori, extensions, naive, oracle, suffix
from .corpus import (
    Corpus,
    Document,
    build_dictionary,
    load_corpus,
    tokenize_and_split,
    write_corpus,
)
from .engine import CounterSet, EngineError
from .pipeline import MethodResult

METHODS = ("naive", "apriori-scan", "apriori-index", "suffix-sigma", "oracle")
MANIFEST_NAME = "years.tsv"

DEFAULT_WORKERS_ENV = "NGRAM_WORKERS"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """A validated method invocation."""

    method: str
    min_count: int
    max_len: int | None  # None: unbounded
    reducers: int = 1
    index_len: int | None = None  # apriori-index only
    maximal: bool = False
    closed: bool = False
    timeseries: bool = False
    combiner: bool = True
    workers: int = 1

    def validate(self) -> None:
        if self.method not in METHODS:
            raise UsageError(f"unknown method {self.method!r}")
        if self.min_count < 1:
            raise UsageError("--tau must be >= 1")
        if self.max_len is not None and self.max_len < 1:
            raise UsageError("--sigma must be >= 1 or 'inf'")
        if self.reducers < 1:
            raise UsageError("--reducers must be >= 1")
        if self.workers < 1:
            raise UsageError("--workers must be >= 1")
        if self.index_len is not None:
            if self.method != "apriori-index":
                raise UsageError("--k applies to apriori-index only")
            if self.index_len < 2:
                raise UsageError("--k must be >= 2")
        if self.maximal and self.closed:
            raise UsageError("--maximal and --closed are mutually exclusive")
        if self.timeseries and (self.maximal or self.closed):
            raise UsageError("--timeseries excludes --maximal/--closed")
        if (self.maximal or self.closed or self.timeseries) and self.method != "suffix-sigma":
            raise UsageError("--maximal/--closed/--timeseries require --method suffix-sigma")


def parse_sigma(text: str) -> int | None:
    if text.lower() in ("inf", "infinity"):
        return None
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"--sigma must be an integer or 'inf', got {text!r}")


def execute(config: RunConfig, corpus: Corpus) -> MethodResult:
    if config.method == "naive":
        return naive.run_naive(
            corpus,
            config.min_count,
            config.max_len,
            num_partitions=config.reducers,
            workers=config.workers,
            combiner=config.combiner,
        )
    if config.method == "apriori-scan":
        return apriori.run_apriori_scan(
            corpus,
            config.min_count,
            config.max_len,
            num_partitions=config.reducers,
            workers=config.workers,
            combiner=config.combiner,
        )
    if config.method == "apriori-index":
        return apriori.run_apriori_index(
            corpus,
            config.min_count,
            config.max_len,
            config.index_len if config.index_len is not None else apriori.DEFAULT_INDEX_LEN,
            num_partitions=config.reducers,
            workers=config.workers,
        )
    if config.method == "suffix-sigma":
        if config.timeseries:
            return extensions.run_suffix_sigma_timeseries(
                corpus,
                config.min_count,
                config.max_len,
                num_partitions=config.reducers,
                workers=config.workers,
                combiner=config.combiner,
            )
        if config.maximal or config.closed:
            mode = extensions.MAXIMAL if config.maximal else extensions.CLOSED
            return extensions.run_suffix_sigma_reduced(
                corpus,
                config.min_count,
                config.max_len,
                mode,
                num_partitions=config.reducers,
                workers=config.workers,
                combiner=config.combiner,
            )
        return suffix.run_suffix_sigma(
            corpus,
            config.min_count,
            config.max_len,
            num_partitions=config.reducers,
            workers=config.workers,
            combiner=config.combiner,
        )
    stats = oracle.oracle_cf(corpus, config.min_count, config.max_len)
    return MethodResult(stats, [])


def render_stats_tsv(corpus: Corpus, stats) -> str:
    """One line per n-gram, sorted lexicographically by surface form."""
    dictionary = corpus.dictionary
    rows = []
    for gram, value in stats.items():
        if isinstance(value, dict):
            cell = ",".join(f"{year}:{count}" for year, count in sorted(value.items()))
        else:
            cell = str(value)
        rows.append((dictionary.render(gram), cell))
    rows.sort(key=lambda row: row[0])
    return "".join(f"{surface}\t{cell}\n" for surface, cell in rows)


def metrics_payload(result: MethodResult) -> dict:
    return {
        "jobs": [c.as_dict() for c in result.jobs],
        "totals": CounterSet.total(result.jobs).as_dict(),
    }


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------


def _load_manifest(input_dir: Path) -> dict[str, int]:
    manifest = input_dir / MANIFEST_NAME
    years: dict[str, int] = {}
    if manifest.is_file():
        for line in manifest.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            name, year = line.split("\t")
            years[name] = int(year)
    return years


def cmd_ingest(args) -> int:
    input_dir = Path(args.input_dir)
    if not input_dir.is_dir():
        raise UsageError(f"not a directory: {input_dir}")
    years = _load_manifest(input_dir)
    files = sorted(p for p in input_dir.iterdir() if p.is_file() and p.name != MANIFEST_NAME)
    if not files:
        print("error: no input files", file=sys.stderr)
        return 2

    tokenized = []
    failures = 0
    for path in files:
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            print(f"warning: skipping {path.name}: {exc}", file=sys.stderr)
            failures += 1
            continue
        tokenized.append((path.name, years.get(path.name), tokenize_and_split(text)))
    if not tokenized:
        print("error: all input files failed", file=sys.stderr)
        return 2

    dictionary = build_dictionary(sentences for _, _, sentences in tokenized)
    documents = [
        Document(doc_id, year, [dictionary.terms_of(s) for s in sentences])
        for doc_id, (_, year, sentences) in enumerate(tokenized)
    ]
    corpus = Corpus.from_documents(dictionary, documents, shard_size=args.shard_size)
    write_corpus(args.output_dir, corpus)

    lengths = [len(f) for doc in documents for f in doc.fragments]
    report = [
        ("documents", len(documents)),
        ("term occurrences", sum(lengths)),
        ("distinct terms", len(dictionary)),
        ("sentences", len(lengths)),
        ("sentence length (mean)", f"{statistics.mean(lengths):.2f}" if lengths else "0"),
        ("sentence length (stddev)", f"{statistics.pstdev(lengths):.2f}" if lengths else "0"),
    ]
    for label, value in report:
        print(f"{label:26}{value}")
    if failures:
        print(f"warning: {failures} file(s) skipped", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _config_from_args(args) -> RunConfig:
    config = RunConfig(
        method=args.method,
        min_count=args.tau,
        max_len=parse_sigma(args.sigma),
        reducers=args.reducers,
        index_len=args.k,
        maximal=args.maximal,
        closed=args.closed,
        timeseries=args.timeseries,
        combiner=args.combiner == "on",
        workers=args.workers,
    )
    config.validate()
    return config


def cmd_run(args) -> int:
    config = _config_from_args(args)
    corpus = load_corpus(args.corpus)
    try:
        result = execute(config, corpus)
    except EngineError as exc:
        job = f" in job {exc.job!r}" if exc.job else ""
        print(f"error{job}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    text = render_stats_tsv(corpus, result.stats)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)

    if args.metrics_out:
        Path(args.metrics_out).write_text(
            json.dumps(metrics_payload(result), indent=2) + "\n", encoding="utf-8"
        )

    if args.keep_intermediate and result.intermediates:
        base = Path(args.out).parent if args.out else Path.cwd()
        target = base / "intermediate"
        target.mkdir(parents=True, exist_ok=True)
        for index, records in enumerate(result.intermediates, start=1):
            apriori.save_intermediate(target / f"iter-{index:03d}.bin", records)
    return 0


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

COMPARE_METHODS = ("naive", "apriori-scan", "apriori-index", "suffix-sigma")


def cmd_compare(args) -> int:
    corpus = load_corpus(args.corpus)
    taus = [int(t) for t in args.tau.split(",")]
    sigmas = [parse_sigma(s) for s in args.sigma.split(",")]
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["method", "tau", "sigma", "records", "bytes", "wall_ms"])
    for method in COMPARE_METHODS:
        for tau in taus:
            for sigma in sigmas:
                config = RunConfig(
                    method=method,
                    min_count=tau,
                    max_len=sigma,
                    reducers=args.reducers,
                    workers=args.workers,
                )
                config.validate()
                result = execute(config, corpus)
                totals = CounterSet.total(result.jobs)
                writer.writerow(
                    [
                        method,
                        tau,
                        "inf" if sigma is None else sigma,
                        totals.map_output_records_pre_combiner,
                        totals.map_output_bytes,
                        round(totals.wall_ms, 3),
                    ]
                )
    if args.out:
        Path(args.out).write_text(buffer.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buffer.getvalue())
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _default_workers() -> int:
    env = os.environ.get(DEFAULT_WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 4


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ngramstats", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="encode a directory of text files")
    p_ingest.add_argument("input_dir")
    p_ingest.add_argument("output_dir")
    p_ingest.add_argument("--shard-size", type=int, default=256, help="documents per shard")
    p_ingest.set_defaults(func=cmd_ingest)

    p_run = sub.add_parser("run", help="compute n-gram statistics")
    p_run.add_argument("--corpus", required=True, help="ingested corpus directory")
    p_run.add_argument("--method", required=True, choices=METHODS)
    p_run.add_argument("--tau", type=int, required=True, help="minimum collection frequency")
    p_run.add_argument("--sigma", default="inf", help="maximum n-gram length or 'inf'")
    p_run.add_argument("--reducers", type=int, default=1)
    p_run.add_argument("--k", type=int, default=None, help="apriori-index direct depth")
    p_run.add_argument("--maximal", action="store_true")
    p_run.add_argument("--closed", action="store_true")
    p_run.add_argument("--timeseries", action="store_true")
    p_run.add_argument("--combiner", choices=("on", "off"), default="on")
    p_run.add_argument("--workers", type=int, default=_default_workers())
    p_run.add_argument("--out", default=None, help="output TSV path (default stdout)")
    p_run.add_argument("--metrics-out", default=None, help="counter report JSON path")
    p_run.add_argument("--keep-intermediate", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="method comparison grid")
    p_cmp.add_argument("--corpus", required=True)
    p_cmp.add_argument("--tau", required=True, help="comma-separated list")
    p_cmp.add_argument("--sigma", required=True, help="comma-separated list ('inf' allowed)")
    p_cmp.add_argument("--reducers", type=int, default=1)
    p_cmp.add_argument("--workers", type=int, default=_default_workers())
    p_cmp.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except EngineError as exc:
        job = f" in job {exc.job!r}" if exc.job else ""
        print(f"error{job}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
