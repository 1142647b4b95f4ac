"""Strict and loose de-identification scoring, and Cohen's kappa.

Strict: a gold span counts as found only when an overlapping prediction also
has the gold label. A prediction with the wrong label costs a false negative
for the gold class and a false positive for the predicted class.

Loose: a gold span counts as found when any prediction overlaps it,
whatever its label. False positives are not scored, so only recall is
reported.
"""

from __future__ import annotations

import io
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

from hrdeid.corpus import (
    LABEL_ORDER,
    Annotation,
    Document,
    Label,
    escape,
    find_overlap,
    group_by_doc,
)
from hrdeid.deidentify import SelectedSpan
from hrdeid.errors import InputError
from hrdeid.tokenizer import DEFAULT_CONFIG, TokenizerConfig, tokenize


class EvalMode(str, Enum):
    STRICT = "strict"
    LOOSE = "loose"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError("counts must be non-negative")

    def __add__(self, other: ConfusionCounts) -> ConfusionCounts:
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def add_counts(*tables: Mapping[Label, ConfusionCounts]) -> dict[Label, ConfusionCounts]:
    out: dict[Label, ConfusionCounts] = {}
    for table in tables:
        for label, c in table.items():
            out[label] = out.get(label, ConfusionCounts()) + c
    return out


def _overlap(a, b) -> int:
    return max(0, min(a.end, b.end) - max(a.start, b.start))


def _matches(gold, pred, fraction: float) -> bool:
    if fraction >= 1.0:
        return gold.start == pred.start and gold.end == pred.end
    inter = _overlap(gold, pred)
    return inter > 0 and inter >= fraction * (gold.end - gold.start)


def match_spans(gold: Sequence[Annotation], predicted: Sequence[SelectedSpan],
                mode: EvalMode = EvalMode.STRICT,
                overlap_fraction: float = 0.0) -> dict[Label, ConfusionCounts]:
    """Per-label counts for one document.

    overlap_fraction is the share of a gold span a prediction must cover to
    match it; 0 means any overlap and 1 means identical boundaries.
    """
    pair = find_overlap(gold)
    if pair:
        a, b = pair
        raise ValueError(f"overlapping gold spans ({a.start},{a.end}) and ({b.start},{b.end})")
    mode = EvalMode(mode)
    tp: Counter = Counter()
    fn: Counter = Counter()
    fp: Counter = Counter()
    used = [False] * len(predicted)

    for g in gold:
        hits = [i for i, p in enumerate(predicted) if _matches(g, p, overlap_fraction)]
        if not hits:
            fn[g.label] += 1
        elif mode is EvalMode.LOOSE:
            tp[g.label] += 1
        else:
            same = [i for i in hits if predicted[i].label == g.label]
            if same:
                tp[g.label] += 1
                for i in same:
                    used[i] = True
            else:
                fn[g.label] += 1

    if mode is EvalMode.STRICT:
        # at most one false positive per prediction
        for p, ok in zip(predicted, used):
            if not ok:
                fp[p.label] += 1

    labels = set(tp) | set(fn) | set(fp) | {g.label for g in gold}
    return {l: ConfusionCounts(tp[l], fp[l], fn[l]) for l in labels}


@dataclass(frozen=True)
class ClassReport:
    label: Label | None
    tp: int
    fp: int
    fn: int
    precision: float | None
    recall: float
    f1: float | None
    undefined: frozenset[str] = frozenset()

    @property
    def support(self) -> int:
        return self.tp + self.fn


def _ratio(num: int, den: int) -> tuple[float, bool]:
    return (num / den, True) if den else (0.0, False)


def metrics(counts: ConfusionCounts, label: Label | None = None,
            mode: EvalMode = EvalMode.STRICT) -> ClassReport:
    """Precision, recall and F1 from summed counts. A 0/0 is reported as 0 and
    named in ``undefined``. Loose reports carry recall only."""
    undefined = set()
    recall, ok = _ratio(counts.tp, counts.tp + counts.fn)
    if not ok:
        undefined.add("recall")
    if EvalMode(mode) is EvalMode.LOOSE:
        return ClassReport(label, counts.tp, 0, counts.fn, None, recall, None, frozenset(undefined))
    precision, ok = _ratio(counts.tp, counts.tp + counts.fp)
    if not ok:
        undefined.add("precision")
    if precision + recall > 0:
        f1 = 2 * (precision * recall) / (precision + recall)
    else:
        f1 = 0.0
        undefined.add("f1")
    return ClassReport(label, counts.tp, counts.fp, counts.fn, precision, recall, f1, frozenset(undefined))


def evaluate_corpus(gold: Sequence[Annotation], predicted: Mapping[str, Sequence[SelectedSpan]],
                    doc_ids: Iterable[str] | None = None, mode: EvalMode = EvalMode.STRICT,
                    overlap_fraction: float = 0.0) -> list[ClassReport]:
    """Micro-averaged report per label, in the usual label order.

    Documents without predictions score as all misses. Predictions for a
    document outside ``doc_ids`` (default: the gold documents) are an error.
    """
    gold_by_doc = group_by_doc(gold)
    known = set(gold_by_doc) if doc_ids is None else set(doc_ids)
    for doc_id in sorted(predicted):
        if doc_id not in known:
            raise ValueError(f"prediction for unknown document {doc_id!r}")
    tables = [
        match_spans(gold_by_doc.get(d, []), predicted.get(d, []), mode, overlap_fraction)
        for d in sorted(known)
    ]
    total = add_counts(*tables)
    return [metrics(total[l], l, mode) for l in LABEL_ORDER if l in total]


def micro_total(reports: Sequence[ClassReport], mode: EvalMode = EvalMode.STRICT) -> ClassReport:
    c = ConfusionCounts(sum(r.tp for r in reports), sum(r.fp for r in reports), sum(r.fn for r in reports))
    return metrics(c, None, mode)


# -- prediction reports --------------------------------------------------------

REPORT_HEADER = ("doc_id", "start", "end", "label", "source", "replacement")


def format_report(rows: Iterable[tuple[str, SelectedSpan, str]]) -> str:
    buf = io.StringIO()
    buf.write("\t".join(REPORT_HEADER) + "\n")
    for doc_id, s, replacement in rows:
        buf.write(f"{doc_id}\t{s.start}\t{s.end}\t{s.label}\t{s.source}\t{escape(replacement)}\n")
    return buf.getvalue()


def load_report(path: str | Path) -> dict[str, list[SelectedSpan]]:
    out: dict[str, list[SelectedSpan]] = {}
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read report: {exc.strerror}", str(path)) from exc
    with fh:
        header = fh.readline().rstrip("\r\n")
        if tuple(header.split("\t")) != REPORT_HEADER:
            raise InputError("missing header " + "\t".join(REPORT_HEADER), str(path), 1)
        for lineno, raw in enumerate(fh, 2):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 6:
                raise InputError(f"expected 6 columns, got {len(cols)}", str(path), lineno)
            try:
                span = SelectedSpan(int(cols[1]), int(cols[2]), Label.parse(cols[3]), cols[4])
            except ValueError as exc:
                raise InputError(str(exc), str(path), lineno) from None
            if not 0 <= span.start < span.end:
                raise InputError(f"bad offsets ({span.start},{span.end})", str(path), lineno)
            out.setdefault(cols[0], []).append(span)
    return out


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.4f}"


def report_rows(reports: Sequence[ClassReport], mode: EvalMode) -> list[list[str]]:
    mode = EvalMode(mode)
    rows = []
    for r in list(reports) + ([micro_total(reports, mode)] if reports else []):
        name = r.label.value if r.label else "ALL"
        if mode is EvalMode.LOOSE:
            rows.append([name, str(r.tp), str(r.fn), str(r.support), _fmt(r.recall)])
        else:
            rows.append([name, str(r.tp), str(r.fp), str(r.fn), str(r.support),
                         _fmt(r.precision), _fmt(r.recall), _fmt(r.f1)])
    return rows


def report_header(mode: EvalMode) -> list[str]:
    if EvalMode(mode) is EvalMode.LOOSE:
        return ["label", "tp", "fn", "support", "recall"]
    return ["label", "tp", "fp", "fn", "support", "precision", "recall", "f1"]


def format_tsv(reports: Sequence[ClassReport], mode: EvalMode) -> str:
    lines = [report_header(mode)] + report_rows(reports, mode)
    return "".join("\t".join(row) + "\n" for row in lines)


def format_table(reports: Sequence[ClassReport], mode: EvalMode) -> str:
    lines = [report_header(mode)] + report_rows(reports, mode)
    widths = [max(len(row[i]) for row in lines) for i in range(len(lines[0]))]
    out = []
    for row in lines:
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        out.append("  ".join(cells).rstrip())
    return "\n".join(out) + "\n"


# -- kappa ---------------------------------------------------------------------


@dataclass(frozen=True)
class KappaResult:
    pr_a: float
    pr_e: float
    kappa: float
    n: int = 0


def kappa_from_agreements(pr_a: float, pr_e: float) -> float:
    if pr_e >= 1.0:
        if pr_a >= 1.0:
            return 1.0  # both annotators used one and the same category throughout
        raise ValueError("expected agreement of 1 with imperfect observed agreement")
    return (pr_a - pr_e) / (1.0 - pr_e)


def cohen_kappa(labels_a: Sequence[Hashable], labels_b: Sequence[Hashable]) -> KappaResult:
    """Kappa between two equal-length label sequences (None counts as O)."""
    n = len(labels_a)
    if n != len(labels_b):
        raise ValueError(f"length mismatch: {n} vs {len(labels_b)}")
    if n == 0:
        raise ValueError("need at least one item")
    agree = sum(a == b for a, b in zip(labels_a, labels_b))
    freq_a = Counter(labels_a)
    freq_b = Counter(labels_b)
    pr_a = agree / n
    pr_e = sum(freq_a[c] * freq_b[c] for c in freq_a) / (n * n)
    return KappaResult(pr_a, pr_e, kappa_from_agreements(pr_a, pr_e), n)


def segment_labels(doc: Document, anns_a: Sequence[Annotation], anns_b: Sequence[Annotation],
                   config: TokenizerConfig = DEFAULT_CONFIG) -> tuple[list, list]:
    """Label both annotators on the union segmentation of one document.

    Tokens are cut further at every annotation boundary either annotator
    placed inside them; each piece takes the label covering it, or None.
    """
    cuts = {a.start for a in anns_a} | {a.end for a in anns_a} | \
        {b.start for b in anns_b} | {b.end for b in anns_b}
    pieces = []
    for tok in tokenize(doc.text, config):
        inner = sorted(c for c in cuts if tok.start < c < tok.end)
        bounds = [tok.start, *inner, tok.end]
        pieces.extend(zip(bounds, bounds[1:]))

    def labels_for(anns):
        ordered = sorted(anns, key=lambda a: a.start)
        out = []
        j = 0
        for start, end in pieces:
            while j < len(ordered) and ordered[j].end <= start:
                j += 1
            hit = j < len(ordered) and ordered[j].start < end
            out.append(ordered[j].label if hit else None)
        return out

    return labels_for(anns_a), labels_for(anns_b)


def corpus_kappa(docs: Sequence[Document], anns_a: Sequence[Annotation],
                 anns_b: Sequence[Annotation],
                 config: TokenizerConfig = DEFAULT_CONFIG) -> KappaResult:
    by_a = group_by_doc(anns_a)
    by_b = group_by_doc(anns_b)
    la: list = []
    lb: list = []
    for doc in docs:
        a, b = segment_labels(doc, by_a.get(doc.id, []), by_b.get(doc.id, []), config)
        la += a
        lb += b
    return cohen_kappa(la, lb)
