"""Unsupervised job-title NER data: expand a title list, then tag every
occurrence in raw texts as B-/I-JOBTITLE, longest titles first."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from hrdeid.corpus import OUTSIDE, Document, Label, Tag, TaggedToken
from hrdeid.errors import InputError
from hrdeid.tokenizer import DEFAULT_CONFIG, TokenizerConfig, tokenize


@dataclass(frozen=True)
class JobTitleList:
    titles: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.titles)

    def __iter__(self):
        return iter(self.titles)


def _normalize(title: str) -> str:
    return " ".join(title.split())


def _sort_key(title: str):
    return (-len(title), title.casefold(), title)


def prepare_titles(titles: Iterable[str], stoplist: Iterable[str] = ()) -> JobTitleList:
    """Normalize whitespace, drop empties, stop-listed and case-insensitive
    duplicates (first spelling kept), sort longest first."""
    stop = {_normalize(s).casefold() for s in stoplist}
    seen = set()
    kept = []
    for t in titles:
        t = _normalize(t)
        key = t.casefold()
        if t and key not in seen and key not in stop:
            seen.add(key)
            kept.append(t)
    return JobTitleList(tuple(sorted(kept, key=_sort_key)))


def expand_job_titles(raw: Iterable[str], prefix: str = "senior") -> JobTitleList:
    """Add the un-prefixed form of every prefixed title and the prefixed form
    of every un-prefixed one. The prefix is never stacked."""
    head = re.compile(rf"{re.escape(prefix)}\s+", re.IGNORECASE)
    items = [t for t in map(_normalize, raw) if t]
    stripped = []
    for t in items:
        while (m := head.match(t)) and t[m.end():]:
            t = t[m.end():]
            stripped.append(t)
    added = [
        f"{prefix} {t}"
        for t in items + stripped
        if not head.match(t) and t.casefold() != prefix.casefold()
    ]
    return prepare_titles(items + stripped + added)


def read_titles(path: str | Path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read title list: {exc.strerror}", str(path)) from exc
    return [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")]


def label_tokens(tokens, titles: JobTitleList) -> list[TaggedToken]:
    """Tag title occurrences in one token list.

    Occurrences are assigned longest title first (by character count), then
    leftmost; a token already tagged is never retagged.
    """
    index: dict[str, list[tuple[int, tuple[str, ...]]]] = {}
    for rank, title in enumerate(titles):
        key = tuple(t.surface.casefold() for t in tokenize(title))
        index.setdefault(key[0], []).append((rank, key))

    words = [t.surface.casefold() for t in tokens]
    found = []
    for i, w in enumerate(words):
        for rank, key in index.get(w, ()):
            if tuple(words[i : i + len(key)]) == key:
                found.append((-len(titles.titles[rank]), i, rank, len(key)))
    found.sort()

    tags = [OUTSIDE] * len(tokens)
    for _, i, _, n in found:
        if all(tags[k] is OUTSIDE for k in range(i, i + n)):
            tags[i] = Tag("B", Label.JOBTITLE)
            for k in range(i + 1, i + n):
                tags[k] = Tag("I", Label.JOBTITLE)
    return [TaggedToken(t, g) for t, g in zip(tokens, tags)]


def label_texts(texts: Sequence[Document], titles: JobTitleList,
                config: TokenizerConfig = DEFAULT_CONFIG) -> list[tuple[Document, list[TaggedToken]]]:
    return [(doc, label_tokens(tokenize(doc.text, config), titles)) for doc in texts]


@dataclass(frozen=True)
class DatasetStats:
    documents: int
    tokens: int
    entities: int
    distinct: int
    top: tuple[tuple[str, int], ...]

    @property
    def top_share(self) -> float:
        """Fraction of all entities covered by the top entries."""
        return sum(c for _, c in self.top) / self.entities if self.entities else 0.0


def entity_surfaces(tagged: Sequence[TaggedToken]) -> list[str]:
    out = []
    current: list[str] = []
    for tt in tagged:
        if tt.tag.prefix != "I" and current:
            out.append(" ".join(current))
            current = []
        if tt.tag.prefix in ("B", "I"):
            current.append(tt.token.surface.casefold())
    if current:
        out.append(" ".join(current))
    return out


def dataset_stats(labeled: Sequence[tuple[Document, Sequence[TaggedToken]]], k: int = 5) -> DatasetStats:
    counts: Counter = Counter()
    n_tokens = 0
    for _, tagged in labeled:
        n_tokens += len(tagged)
        counts.update(entity_surfaces(tagged))
    top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return DatasetStats(len(labeled), n_tokens, sum(counts.values()), len(counts), tuple(top))
