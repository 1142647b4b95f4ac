"""Rule-based candidate producers: patterns, gazetteers and prefix-triggered names.

Every recognizer works on a token list and only reports spans that start at
some token start and end at some token end.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from hrdeid.corpus import Label, Token
from hrdeid.errors import ConfigError, InputError
from hrdeid.tokenizer import EMAIL_PATTERN, EMAIL_RE, URL_RE, tokenize

DEFAULT_PRIORITY: dict[Label, int] = {
    Label.PER: 0,
    Label.MAIL: 1,
    Label.CODE: 2,
    Label.LOC: 3,
    Label.ORG: 4,
    Label.DATE: 5,
    Label.JOBTITLE: 6,
    Label.TITLE: 7,
    Label.GENDER: 8,
    Label.WEBSITE: 9,
    Label.NUM: 10,
}


@dataclass(frozen=True, order=True)
class CandidateSpan:
    start: int
    end: int
    label: Label
    source: str
    priority: int

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"empty span ({self.start},{self.end})")
        if not self.source:
            raise ValueError("source must be non-empty")


def candidate(start: int, end: int, label: Label, source: str) -> CandidateSpan:
    return CandidateSpan(start, end, label, source, DEFAULT_PRIORITY[label])


# -- lexicons ------------------------------------------------------------------


@dataclass(frozen=True)
class Lexicon:
    """A labeled gazetteer. Entries may span several tokens."""

    label: Label
    entries: frozenset[str]
    case_sensitive: bool = False
    categories: dict[str, str] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        for e in self.entries:
            if not e.strip():
                raise ValueError("lexicon entries must not be empty")
        # first token -> entry token tuples, longest first
        index: dict[str, list[tuple[str, ...]]] = {}
        for entry in self.entries:
            key = tuple(self._norm(t.surface) for t in tokenize(entry))
            bucket = index.setdefault(key[0], [])
            if key not in bucket:
                bucket.append(key)
        for bucket in index.values():
            bucket.sort(key=lambda k: (-len(k), k))
        object.__setattr__(self, "_index", index)

    def _norm(self, surface: str) -> str:
        return surface if self.case_sensitive else surface.casefold()

    def without_category(self, category: str) -> Lexicon:
        kept = frozenset(e for e in self.entries if self.categories.get(e) != category)
        return Lexicon(self.label, kept, self.case_sensitive,
                       {e: c for e, c in self.categories.items() if e in kept})


def parse_lexicon(lines: Iterable[str], label: Label, case_sensitive: bool = False,
                  path: str = "<lexicon>") -> Lexicon:
    entries = set()
    categories = {}
    for raw in lines:
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        entry, _, category = line.partition("\t")
        entry = entry.strip()
        if not entry:
            continue
        entries.add(entry)
        if category.strip():
            categories[entry] = category.strip()
    return Lexicon(label, frozenset(entries), case_sensitive, categories)


def load_lexicon(path: str | Path, label: Label, case_sensitive: bool = False) -> Lexicon:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_lexicon(fh, label, case_sensitive, str(path))
    except OSError as exc:
        raise InputError(f"cannot read lexicon: {exc.strerror}", str(path)) from exc


def default_lexicon(name: str, label: Label) -> Lexicon:
    """One of the lexicons shipped with the package: "gender" or "titles"."""
    text = resources.files("hrdeid.data").joinpath(f"{name}.txt").read_text(encoding="utf-8")
    return parse_lexicon(text.splitlines(), label)


def lexicon_match(tokens: Sequence[Token], lexicon: Lexicon,
                  source: str | None = None) -> list[CandidateSpan]:
    """Leftmost-longest gazetteer matching over token sequences."""
    source = source or f"lexicon:{lexicon.label.value.lower()}"
    index = lexicon._index
    norm = [lexicon._norm(t.surface) for t in tokens]
    spans = []
    i = 0
    while i < len(tokens):
        for key in index.get(norm[i], ()):
            n = len(key)
            if tuple(norm[i : i + n]) == key:
                spans.append(candidate(tokens[i].start, tokens[i + n - 1].end, lexicon.label, source))
                i += n
                break
        else:
            i += 1
    return spans


# -- pattern helpers -----------------------------------------------------------


def render(tokens: Sequence[Token]) -> str:
    """Text with the original offsets, every gap filled with spaces."""
    parts = []
    pos = 0
    for t in tokens:
        parts.append(" " * (t.start - pos))
        parts.append(t.surface)
        pos = t.end
    return "".join(parts)


def _aligned(tokens: Sequence[Token], pattern: re.Pattern, text: str | None = None):
    """Pattern matches whose ends fall on token boundaries."""
    if text is None:
        text = render(tokens)
    starts = {t.start for t in tokens}
    ends = {t.end for t in tokens}
    for m in pattern.finditer(text):
        if m.start() in starts and m.end() in ends:
            yield m


# -- numbers -------------------------------------------------------------------


def recognize_numbers(tokens: Sequence[Token]) -> list[CandidateSpan]:
    """Digit-only tokens of two or more digits. Single digits are too generic."""
    return [
        candidate(t.start, t.end, Label.NUM, "number")
        for t in tokens
        if len(t.surface) >= 2 and t.surface.isascii() and t.surface.isdigit()
    ]


# -- dates ---------------------------------------------------------------------

MONTHS = (
    "januari", "februari", "maart", "april", "mei", "juni", "juli",
    "augustus", "september", "oktober", "november", "december",
)
MONTH_ABBREVIATIONS = (
    "jan", "feb", "mrt", "mar", "apr", "jun", "jul", "aug", "sep", "sept",
    "okt", "nov", "dec",
)
_MONTH = "(?:" + "|".join(sorted(MONTHS + MONTH_ABBREVIATIONS, key=len, reverse=True)) + ")"
_DAY = r"(?:3[01]|[12][0-9]|0?[1-9])(?:ste|de|e)?"
_YEAR = r"(?:19|20)[0-9]{2}"

DATE_RE = re.compile(
    rf"""(?<!\w)(?:
        (?P<dmy>{_DAY}\s+{_MONTH}(?:\s*\.)?\s+{_YEAR})
      | (?P<dm>{_DAY}\s+{_MONTH})
      | (?P<my>{_MONTH}(?:\s*\.)?\s+{_YEAR})
      | (?P<num>(?P<d>[0-9]{{1,2}})(?P<sep>[-/.])(?P<m>[0-9]{{1,2}})(?P=sep)(?P<y>[0-9]{{4}}|[0-9]{{2}}))
      | (?P<iso>{_YEAR}-(?:0[1-9]|1[0-2])-(?:0[1-9]|[12][0-9]|3[01]))
      | (?P<year>{_YEAR})
    )(?!\w)""",
    re.IGNORECASE | re.VERBOSE,
)


def recognize_dates(tokens: Sequence[Token]) -> list[CandidateSpan]:
    """Dutch day-month(-year), month-year, numeric dates and bare years 1900-2099.

    Weekday names on their own are not dates.
    """
    spans = []
    for m in _aligned(tokens, DATE_RE):
        if m.group("num") and not (1 <= int(m.group("d")) <= 31 and 1 <= int(m.group("m")) <= 12):
            continue
        spans.append(candidate(m.start(), m.end(), Label.DATE, "date"))
    return spans


# -- e-mail and websites -------------------------------------------------------

_LOCAL = r"[a-z0-9._%+-]+"
_DOMAIN = r"[a-z0-9-]+(?:\.[a-z0-9-]+)*"
_TLD = r"[a-z]{2,}"
# An address broken by a single whitespace character.
EMAIL_REPAIR_RE = re.compile(
    rf"""(?<![\w.%+-])(?:
        {_LOCAL}\s@{_DOMAIN}\.{_TLD}
      | {_LOCAL}@\s{_DOMAIN}\.{_TLD}
      | {_LOCAL}@{_DOMAIN}\s\.{_TLD}
      | {_LOCAL}@{_DOMAIN}\.\s{_TLD}
    )(?![a-z0-9-])""",
    re.IGNORECASE | re.VERBOSE,
)
_EMAIL_FULL = re.compile(EMAIL_PATTERN, re.IGNORECASE)


def recognize_emails(tokens: Sequence[Token], repair: bool = True) -> list[CandidateSpan]:
    text = render(tokens)
    spans = [candidate(m.start(), m.end(), Label.MAIL, "email") for m in _aligned(tokens, EMAIL_RE, text)]
    if repair:
        for m in _aligned(tokens, EMAIL_REPAIR_RE, text):
            head = re.split(r"\s", m.group(), maxsplit=1)[0]
            if _EMAIL_FULL.fullmatch(head):
                continue  # a complete address followed by junk, not a broken one
            spans.append(candidate(m.start(), m.end(), Label.MAIL, "email-repair"))
    return spans


def recognize_websites(tokens: Sequence[Token]) -> list[CandidateSpan]:
    text = render(tokens)
    mail = [m.span() for m in EMAIL_RE.finditer(text)]
    spans = []
    for m in _aligned(tokens, URL_RE, text):
        if "@" in m.group() or any(s < m.end() and m.start() < e for s, e in mail):
            continue
        spans.append(candidate(m.start(), m.end(), Label.WEBSITE, "website"))
    return spans


# -- codes ---------------------------------------------------------------------

IBAN_RE = re.compile(
    r"(?<![\w])[A-Z]{2}[0-9]{2}(?:[A-Z0-9]{10,30}|(?: [A-Z0-9]{4}){2,7}(?: [A-Z0-9]{1,3})?)(?![\w])"
)


def compile_code_patterns(patterns: Iterable[str]) -> tuple[re.Pattern, ...]:
    compiled = []
    for p in patterns:
        try:
            compiled.append(re.compile(p))
        except re.error as exc:
            raise ConfigError(f"invalid code pattern {p!r}: {exc}") from None
    return tuple(compiled)


def recognize_codes(tokens: Sequence[Token], patterns: Sequence[re.Pattern] = ()) -> list[CandidateSpan]:
    """IBAN-shaped strings plus any user-supplied patterns."""
    text = render(tokens)
    spans = []
    for m in _aligned(tokens, IBAN_RE, text):
        body = m.group()[4:].replace(" ", "")
        if 10 <= len(body) <= 30:
            spans.append(candidate(m.start(), m.end(), Label.CODE, "iban"))
    for pattern in patterns:
        for m in _aligned(tokens, pattern, text):
            if m.end() > m.start():
                spans.append(candidate(m.start(), m.end(), Label.CODE, "code-pattern"))
    return spans


# -- titles, prefixed names, gender --------------------------------------------

TUSSENVOEGSELS = frozenset({"van", "de", "der", "den", "ter"})
_CAPITALIZED = re.compile(r"[^\W\d_]+(?:['’-][^\W\d_]+)*")


def is_capitalized(word: str) -> bool:
    return word[:1].isupper() and _CAPITALIZED.fullmatch(word) is not None


def recognize_prefixed_person(tokens: Sequence[Token], title_lexicon: Lexicon,
                              max_names: int = 3) -> list[CandidateSpan]:
    """Title span for each prefix hit, plus a person span for the capitalized
    words (with lowercase surname particles) that follow it."""
    after = {t.end: i + 1 for i, t in enumerate(tokens)}
    spans = []
    for hit in lexicon_match(tokens, title_lexicon, source="prefix"):
        spans.append(candidate(hit.start, hit.end, Label.TITLE, "prefix"))
        j = after[hit.end]
        if j < len(tokens) and tokens[j].surface == "." and tokens[j].start == hit.end:
            j += 1
        first = last = None
        names = 0
        while j < len(tokens) and names < max_names:
            word = tokens[j].surface
            if is_capitalized(word):
                names += 1
                last = j
            elif word not in TUSSENVOEGSELS:
                break
            if first is None:
                first = j
            j += 1
        if last is not None:
            spans.append(candidate(tokens[first].start, tokens[last].end, Label.PER, "prefix"))
    return spans


def recognize_gender(tokens: Sequence[Token], gender_lexicon: Lexicon) -> list[CandidateSpan]:
    return lexicon_match(tokens, gender_lexicon, source="gender")
