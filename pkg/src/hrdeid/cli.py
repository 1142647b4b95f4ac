"""Command line entry point: tokenize, deidentify, evaluate, kappa, build-dataset.

Exit status: 0 on success, 1 on input or configuration errors, 2 when the NER
backend fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import shlex
import sys
from pathlib import Path

from hrdeid import corpus as corpus_io
from hrdeid.config import PipelineConfig, load_config
from hrdeid.corpus import OUTSIDE, TaggedToken
from hrdeid.errors import BackendError, InputError
from hrdeid.tokenizer import TokenizerConfig, tokenize


def _write(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise InputError(f"cannot write: {exc.strerror}", str(path)) from exc


def _figure(plot, *args) -> None:
    path = args[-1]
    try:
        plot(*args)
    except (ValueError, OSError) as exc:
        raise InputError(f"cannot write figure: {exc}", str(path)) from None


def cmd_tokenize(args) -> int:
    docs = corpus_io.load_corpus(args.input)
    config = TokenizerConfig(email_aware=not args.no_email_aware, url_aware=not args.no_url_aware)
    tagged = [[TaggedToken(t, OUTSIDE) for t in tokenize(d.text, config)] for d in docs]
    _write(args.out, corpus_io.format_iob2(tagged))
    return 0


def cmd_deidentify(args) -> int:
    from hrdeid.deidentify import deidentify_corpus
    from hrdeid.evaluation import format_report

    config = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.ner_cmd:
        overrides.update(backend_kind="external", backend_command=tuple(shlex.split(args.ner_cmd)))
    if args.label_map:
        if not Path(args.label_map).is_file():
            raise InputError("label map not found", args.label_map)
        overrides["label_map"] = Path(args.label_map)
    if args.strategy:
        overrides["strategy"] = args.strategy
    if args.workers:
        overrides["workers"] = args.workers
    config = dataclasses.replace(config, **overrides)

    docs = corpus_io.load_corpus(args.input)
    results = deidentify_corpus(docs, config, config.workers)

    failed = [r for r in results if r.error]
    for r in failed:
        print(f"error: document {r.doc.id}: {r.error}", file=sys.stderr)
    done = [r for r in results if not r.error]
    _write(args.out, corpus_io.format_corpus(r.redacted for r in done))
    if args.report:
        rows = ((r.doc.id, s, rep) for r in done for s, rep in zip(r.report.spans, r.report.replacements))
        _write(args.report, format_report(rows))
    total = sum(len(r.report.spans) for r in done)
    print(f"{len(done)} documents de-identified, {total} spans suppressed, {len(failed)} failed")
    return 2 if failed else 0


def cmd_evaluate(args) -> int:
    from hrdeid.evaluation import EvalMode, evaluate_corpus, format_table, format_tsv, load_report

    docs = corpus_io.load_corpus(args.corpus) if args.corpus else None
    gold = corpus_io.load_annotations(args.gold, docs)
    predicted = load_report(args.pred)
    mode = EvalMode(args.mode)
    if not 0.0 <= args.overlap_fraction <= 1.0:
        raise InputError("--overlap-fraction must lie in [0, 1]")
    doc_ids = [d.id for d in docs] if docs is not None else None
    try:
        reports = evaluate_corpus(gold, predicted, doc_ids, mode, args.overlap_fraction)
    except ValueError as exc:
        raise InputError(str(exc), args.pred) from None
    sys.stdout.write(format_table(reports, mode))
    if args.out:
        _write(args.out, format_tsv(reports, mode))
    if args.figure:
        from hrdeid.plots import plot_reports

        _figure(plot_reports, reports, mode, args.figure)
    return 0


def cmd_kappa(args) -> int:
    from hrdeid.evaluation import corpus_kappa

    docs = corpus_io.load_corpus(args.corpus)
    a = corpus_io.load_annotations(args.a, docs)
    b = corpus_io.load_annotations(args.b, docs)
    if not docs:
        raise InputError("corpus is empty", args.corpus)
    result = corpus_kappa(docs, a, b)
    print(f"tokens\t{result.n}")
    print(f"pr_a\t{result.pr_a:.6f}")
    print(f"pr_e\t{result.pr_e:.6f}")
    print(f"kappa\t{result.kappa:.6f}")
    return 0


def cmd_build_dataset(args) -> int:
    from hrdeid.dataset_builder import (
        dataset_stats,
        expand_job_titles,
        label_texts,
        prepare_titles,
        read_titles,
    )

    raw = read_titles(args.titles)
    stop = read_titles(args.stoplist) if args.stoplist else []
    titles = prepare_titles(expand_job_titles(raw, args.prefix), stop)
    docs = corpus_io.load_corpus(args.input)
    labeled = label_texts(docs, titles)
    _write(args.out, corpus_io.format_iob2(tagged for _, tagged in labeled))
    stats = dataset_stats(labeled, args.top)
    print(f"documents\t{stats.documents}")
    print(f"tokens\t{stats.tokens}")
    print(f"entities\t{stats.entities}")
    print(f"distinct\t{stats.distinct}")
    print(f"titles\t{len(titles)}")
    for surface, count in stats.top:
        print(f"top\t{surface}\t{count}")
    print(f"top_share\t{stats.top_share:.4f}")
    if args.figure:
        from hrdeid.plots import plot_top_titles

        _figure(plot_top_titles, stats, args.figure)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hrdeid", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("tokenize", help="tokenize a corpus into an all-O IOB2 file")
    p.add_argument("--in", dest="input", required=True, help="corpus file (id<TAB>text)")
    p.add_argument("--out", required=True, help="IOB2 output file")
    p.add_argument("--no-email-aware", action="store_true", help="split e-mail addresses")
    p.add_argument("--no-url-aware", action="store_true", help="split URLs")
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("deidentify", help="suppress personal identifiers in a corpus")
    p.add_argument("--config", help="pipeline config file (INI)")
    p.add_argument("--in", dest="input", required=True, help="corpus file")
    p.add_argument("--out", required=True, help="redacted corpus file")
    p.add_argument("--report", help="TSV of suppressed spans")
    p.add_argument("--ner-cmd", help="external tagger command line (overrides config)")
    p.add_argument("--label-map", help="TSV backend_label<TAB>LABEL|DROP")
    p.add_argument("--strategy", choices=["label", "numbered"], help="replacement format")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.set_defaults(func=cmd_deidentify)

    p = sub.add_parser("evaluate", help="score a suppression report against gold annotations")
    p.add_argument("--gold", required=True, help="gold annotation TSV")
    p.add_argument("--pred", required=True, help="suppression report TSV")
    p.add_argument("--mode", choices=["strict", "loose"], default="strict",
                   help="strict needs the right label; loose only needs suppression (default strict)")
    p.add_argument("--overlap-fraction", type=float, default=0.0,
                   help="share of a gold span a prediction must cover (0 = any overlap, 1 = exact)")
    p.add_argument("--corpus", help="corpus file; checks gold surfaces and fixes the document set")
    p.add_argument("--out", help="write the table as TSV")
    p.add_argument("--figure", help="write a bar chart (PNG, SVG or PDF by extension)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("kappa", help="token-level Cohen's kappa between two annotators")
    p.add_argument("--a", required=True, help="first annotator TSV")
    p.add_argument("--b", required=True, help="second annotator TSV")
    p.add_argument("--corpus", required=True, help="corpus file")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("build-dataset", help="tag job titles in texts to build IOB2 training data")
    p.add_argument("--titles", required=True, help="job titles, one per line")
    p.add_argument("--in", dest="input", required=True, help="corpus file")
    p.add_argument("--out", required=True, help="IOB2 output file")
    p.add_argument("--stoplist", help="titles to leave untagged, one per line")
    p.add_argument("--prefix", default="senior", help="seniority prefix to add and strip")
    p.add_argument("--top", type=int, default=5, help="number of frequent titles to list")
    p.add_argument("--figure", help="bar chart of the most frequent titles")
    p.set_defaults(func=cmd_build_dataset)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 2


def run(argv: list[str] | None = None) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
