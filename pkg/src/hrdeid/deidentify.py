"""Run recognizers and the NER backend, resolve conflicts, suppress spans."""

from __future__ import annotations

import bisect
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from hrdeid.config import PipelineConfig
from hrdeid.corpus import Document, Label, Tag, Token
from hrdeid.errors import BackendError, BackendStartError
from hrdeid.ner_adapter import (
    IDENTITY_MAP,
    BackendConfig,
    load_label_map,
    map_labels,
    open_backend,
)
from hrdeid.recognizers import (
    DEFAULT_PRIORITY,
    CandidateSpan,
    Lexicon,
    compile_code_patterns,
    default_lexicon,
    lexicon_match,
    load_lexicon,
    recognize_codes,
    recognize_dates,
    recognize_emails,
    recognize_gender,
    recognize_numbers,
    recognize_prefixed_person,
    recognize_websites,
)
from hrdeid.tokenizer import tokenize

log = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class SelectedSpan:
    start: int
    end: int
    label: Label
    source: str


def _rank(c: CandidateSpan):
    return (-(c.end - c.start), c.priority, c.start, c.source, c.label.rank, c.end)


def merge_spans(candidates: Iterable[CandidateSpan]) -> list[SelectedSpan]:
    """Greedy conflict resolution: longest first, then lowest priority number,
    then leftmost, then source name. Losers overlapping a winner are dropped."""
    starts: list[int] = []
    ends: list[int] = []
    chosen: list[CandidateSpan] = []
    for c in sorted(candidates, key=_rank):
        i = bisect.bisect_right(starts, c.start)
        if i > 0 and ends[i - 1] > c.start:
            continue
        if i < len(starts) and starts[i] < c.end:
            continue
        starts.insert(i, c.start)
        ends.insert(i, c.end)
        chosen.insert(i, c)
    return [SelectedSpan(c.start, c.end, c.label, c.source) for c in chosen]


# -- suppression ---------------------------------------------------------------

STRATEGIES = ("label", "numbered")


@dataclass(frozen=True)
class DeidReport:
    doc_id: str
    spans: tuple[SelectedSpan, ...] = ()
    replacements: tuple[str, ...] = ()

    @property
    def counts(self) -> Counter:
        return Counter(s.label for s in self.spans)


def replacement_strings(text: str, spans: Sequence[SelectedSpan], strategy: str = "label") -> list[str]:
    if strategy == "label":
        return [f"[{s.label}]" for s in spans]
    if strategy != "numbered":
        raise ValueError(f"unknown strategy {strategy!r}")
    seen: dict[tuple[Label, str], int] = {}
    per_label: Counter = Counter()
    out = []
    for s in spans:
        key = (s.label, text[s.start : s.end].casefold())
        if key not in seen:
            per_label[s.label] += 1
            seen[key] = per_label[s.label]
        out.append(f"[{s.label}-{seen[key]}]")
    return out


def suppress(text: str, spans: Sequence[SelectedSpan], strategy: str = "label",
             doc_id: str = "") -> tuple[str, DeidReport]:
    spans = sorted(spans)
    for prev, cur in zip(spans, spans[1:]):
        if cur.start < prev.end:
            raise ValueError(f"overlapping spans ({prev.start},{prev.end}) and ({cur.start},{cur.end})")
    if spans and (spans[0].start < 0 or spans[-1].end > len(text)):
        raise ValueError("span outside text")
    replacements = replacement_strings(text, spans, strategy)
    out = text
    for s, r in zip(reversed(spans), reversed(replacements)):
        out = out[: s.start] + r + out[s.end :]
    return out, DeidReport(doc_id, tuple(spans), tuple(replacements))


# -- pipeline ------------------------------------------------------------------


def tags_to_candidates(tokens: Sequence[Token], tags: Sequence[Tag], source: str,
                       offset: int = 0) -> list[CandidateSpan]:
    """Turn a valid IOB2 sequence over Labels into candidate spans."""
    spans = []
    run = None
    for tok, tag in zip(tokens, tags):
        if tag.prefix == "I" and run is not None:
            run[1] = tok.end
            continue
        if run is not None:
            spans.append(run)
            run = None
        if tag.prefix == "B":
            run = [tok.start, tok.end, tag.label]
    if run is not None:
        spans.append(run)
    return [CandidateSpan(s, e, lab, source, DEFAULT_PRIORITY[lab] + offset) for s, e, lab in spans]


@dataclass
class Pipeline:
    """Loaded resources for one worker: lexicons, patterns and a backend."""

    config: PipelineConfig = field(default_factory=PipelineConfig)

    def __post_init__(self):
        cfg = self.config
        self.lexicons: dict[Label, Lexicon] = {
            label: load_lexicon(path, label, label in cfg.case_sensitive)
            for label, path in cfg.lexicons.items()
        }
        self.lexicons.setdefault(Label.GENDER, default_lexicon("gender", Label.GENDER))
        self.lexicons.setdefault(Label.TITLE, default_lexicon("titles", Label.TITLE))
        self.code_patterns = compile_code_patterns(cfg.code_patterns)
        gazetteers = tuple(self.lexicons[l] for l in (Label.PER, Label.ORG, Label.LOC) if l in self.lexicons)
        if cfg.backend_kind == "builtin":
            label_map = dict(IDENTITY_MAP)
        elif cfg.label_map is not None:
            label_map = load_label_map(cfg.label_map)
        else:
            label_map = dict(IDENTITY_MAP)
        self.backend_config = BackendConfig(
            kind=cfg.backend_kind,
            command=cfg.backend_command,
            label_map=label_map,
            lexicons=gazetteers if cfg.enabled("gazetteers") else (),
            timeout=cfg.backend_timeout,
        )
        self._backend = None

    @property
    def backend(self):
        if self._backend is None:
            self._backend = open_backend(self.backend_config)
        return self._backend

    def close(self) -> None:
        if self._backend is not None:
            self._backend.close()
            self._backend = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def candidates(self, tokens: Sequence[Token]) -> list[CandidateSpan]:
        cfg = self.config
        found: list[CandidateSpan] = []
        if cfg.enabled("numbers"):
            found += recognize_numbers(tokens)
        if cfg.enabled("dates"):
            found += recognize_dates(tokens)
        if cfg.enabled("emails"):
            found += recognize_emails(tokens, repair=cfg.enabled("email_repair"))
        if cfg.enabled("websites"):
            found += recognize_websites(tokens)
        if cfg.enabled("codes"):
            found += recognize_codes(tokens, self.code_patterns)
        if cfg.enabled("prefixed_person"):
            found += recognize_prefixed_person(tokens, self.lexicons[Label.TITLE])
        if cfg.enabled("gender"):
            found += recognize_gender(tokens, self.lexicons[Label.GENDER])
        if cfg.enabled("job_titles") and Label.JOBTITLE in self.lexicons:
            found += lexicon_match(tokens, self.lexicons[Label.JOBTITLE])
        # The builtin backend already tags from the person/org/location lists.
        if cfg.enabled("gazetteers") and cfg.backend_kind == "external":
            for label in (Label.PER, Label.ORG, Label.LOC):
                if label in self.lexicons:
                    found += lexicon_match(tokens, self.lexicons[label])
        return found

    def ner_candidates(self, tokens: Sequence[Token]) -> list[CandidateSpan]:
        if not tokens:
            return []
        raw = self.backend.tag(tokens)
        tags = map_labels(raw, self.backend_config.label_map)
        source = "ner" if self.config.backend_kind == "external" else "gazetteer"
        return tags_to_candidates(tokens, tags, source, self.config.backend_priority_offset)

    def select(self, text: str) -> list[SelectedSpan]:
        tokens = tokenize(text, self.config.tokenizer)
        return merge_spans(self.candidates(tokens) + self.ner_candidates(tokens))


def deidentify_document(doc: Document, pipeline: Pipeline) -> tuple[Document, DeidReport]:
    spans = pipeline.select(doc.text)
    text, report = suppress(doc.text, spans, pipeline.config.strategy, doc.id)
    return Document(doc.id, text), report


@dataclass(frozen=True)
class DocResult:
    doc: Document
    redacted: Document | None = None
    report: DeidReport | None = None
    error: str | None = None


def _process(doc: Document, pipeline: Pipeline) -> DocResult:
    try:
        redacted, report = deidentify_document(doc, pipeline)
    except BackendStartError:
        raise
    except BackendError as exc:
        log.error("document %s failed: %s", doc.id, exc)
        return DocResult(doc, error=str(exc))
    return DocResult(doc, redacted, report)


_worker_pipeline: Pipeline | None = None


def _init_worker(config: PipelineConfig) -> None:
    global _worker_pipeline
    _worker_pipeline = Pipeline(config)


def _work(doc: Document) -> DocResult:
    return _process(doc, _worker_pipeline)


def deidentify_corpus(docs: Sequence[Document], config: PipelineConfig,
                      workers: int = 1) -> list[DocResult]:
    """De-identify documents in input order. A backend failure fails only its
    document; only a backend that cannot be started aborts the run."""
    if workers <= 1 or len(docs) < 2:
        with Pipeline(config) as pipeline:
            return [_process(doc, pipeline) for doc in docs]
    chunk = max(1, len(docs) // (workers * 8))
    with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(config,)) as pool:
        return list(pool.map(_work, docs, chunksize=chunk))

