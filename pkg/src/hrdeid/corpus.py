"""Documents, standoff annotations, tokens and IOB2 tag sequences.

Offsets everywhere are Python string indices, i.e. Unicode code points.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from hrdeid.errors import InputError


class Label(str, Enum):
    """The eleven personal-identifier classes, in corpus-frequency order."""

    DATE = "DATE"
    NUM = "NUM"
    PER = "PER"
    GENDER = "GENDER"
    ORG = "ORG"
    MAIL = "MAIL"
    LOC = "LOC"
    JOBTITLE = "JOBTITLE"
    CODE = "CODE"
    TITLE = "TITLE"
    WEBSITE = "WEBSITE"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: str) -> Label:
        try:
            return cls(name.strip().upper())
        except ValueError:
            raise ValueError(f"unknown label {name!r}") from None

    @property
    def rank(self) -> int:
        return LABEL_ORDER.index(self)


LABEL_ORDER: tuple[Label, ...] = tuple(Label)


@dataclass(frozen=True)
class Document:
    id: str
    text: str

    def __post_init__(self):
        if not self.id:
            raise ValueError("document id must be non-empty")


@dataclass(frozen=True, order=True)
class Annotation:
    doc_id: str
    start: int
    end: int
    label: Label
    surface: str

    @classmethod
    def from_document(cls, doc: Document, start: int, end: int, label: Label) -> Annotation:
        return cls(doc.id, start, end, label, doc.text[start:end])


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int


@dataclass(frozen=True)
class Tag:
    """An IOB2 tag: prefix is "O", "B" or "I"; label is None only for O."""

    prefix: str
    label: Label | None = None

    def __post_init__(self):
        if self.prefix == "O":
            if self.label is not None:
                raise ValueError("O tag cannot carry a label")
        elif self.prefix in ("B", "I"):
            if self.label is None:
                raise ValueError(f"{self.prefix} tag needs a label")
        else:
            raise ValueError(f"bad IOB2 prefix {self.prefix!r}")

    @classmethod
    def parse(cls, text: str) -> Tag:
        if text == "O":
            return OUTSIDE
        prefix, sep, name = text.partition("-")
        if not sep or prefix not in ("B", "I"):
            raise ValueError(f"malformed IOB2 tag {text!r}")
        return cls(prefix, Label.parse(name))

    def __str__(self) -> str:
        if self.label is None:
            return "O"
        return f"{self.prefix}-{self.label.value}"


OUTSIDE = Tag("O")


@dataclass(frozen=True)
class TaggedToken:
    token: Token
    tag: Tag


# -- escaping shared by the corpus and annotation formats ---------------------

_ESCAPES = {"\\": "\\\\", "\n": "\\n", "\t": "\\t", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "n": "\n", "t": "\t", "r": "\r"}


def escape(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def unescape(text: str) -> str:
    out = []
    chars = iter(text)
    for ch in chars:
        if ch != "\\":
            out.append(ch)
            continue
        nxt = next(chars, None)
        if nxt is None:
            out.append("\\")
        else:
            # unknown escapes are kept verbatim
            out.append(_UNESCAPES.get(nxt, "\\" + nxt))
    return "".join(out)


# -- corpus files --------------------------------------------------------------


def parse_corpus(lines: Iterable[str], path: str = "<corpus>") -> list[Document]:
    docs: list[Document] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        doc_id, sep, body = line.partition("\t")
        if not sep or not doc_id:
            raise InputError("expected '<id><TAB><text>'", path, lineno)
        if doc_id in seen:
            raise InputError(f"duplicate document id {doc_id!r}", path, lineno)
        seen.add(doc_id)
        docs.append(Document(doc_id, unescape(body)))
    return docs


def load_corpus(path: str | Path) -> list[Document]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return parse_corpus(fh, str(path))
    except OSError as exc:
        raise InputError(f"cannot read corpus: {exc.strerror}", str(path)) from exc


def format_corpus(docs: Iterable[Document]) -> str:
    return "".join(f"{d.id}\t{escape(d.text)}\n" for d in docs)


def write_corpus(docs: Iterable[Document], path: str | Path) -> None:
    Path(path).write_text(format_corpus(docs), encoding="utf-8", newline="\n")


# -- annotation files ----------------------------------------------------------

ANNOTATION_HEADER = ("doc_id", "start", "end", "label", "surface")


def find_overlap(spans: Sequence) -> tuple | None:
    """Return the first pair of overlapping spans (by start order), or None."""
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start < prev.end:
            return prev, cur
    return None


def _describe(span) -> str:
    return f"{span.label}({span.start},{span.end})"


def validate_annotation(ann: Annotation, doc: Document) -> None:
    if not 0 <= ann.start < ann.end <= len(doc.text):
        raise ValueError(
            f"offsets ({ann.start},{ann.end}) out of range for document "
            f"{doc.id!r} of length {len(doc.text)}"
        )
    found = doc.text[ann.start : ann.end]
    if found != ann.surface:
        raise ValueError(f"surface mismatch: expected {ann.surface!r}, found {found!r}")


def parse_annotations(
    lines: Iterable[str], corpus: Sequence[Document] | None, path: str = "<annotations>"
) -> list[Annotation]:
    """Parse and validate an annotation TSV. With ``corpus=None`` the records
    are only checked for shape and mutual overlap, not against any text."""
    docs = None if corpus is None else {d.id: d for d in corpus}
    it = iter(lines)
    header = next(it, None)
    if header is None or tuple(header.rstrip("\r\n").split("\t")) != ANNOTATION_HEADER:
        raise InputError("missing header " + "\t".join(ANNOTATION_HEADER), path, 1)

    anns: list[Annotation] = []
    where: dict[Annotation, int] = {}
    for lineno, raw in enumerate(it, 2):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 5:
            raise InputError(f"expected 5 columns, got {len(cols)}", path, lineno)
        doc_id, start, end, label, surface = cols
        if docs is not None and doc_id not in docs:
            raise InputError(f"unknown doc_id {doc_id!r}", path, lineno)
        try:
            ann = Annotation(doc_id, int(start), int(end), Label.parse(label), unescape(surface))
            if docs is None:
                if not 0 <= ann.start < ann.end:
                    raise ValueError(f"bad offsets ({ann.start},{ann.end})")
            else:
                validate_annotation(ann, docs[doc_id])
        except ValueError as exc:
            raise InputError(str(exc), path, lineno) from None
        anns.append(ann)
        where[ann] = lineno

    by_doc = group_by_doc(anns)
    for doc_id, group in by_doc.items():
        pair = find_overlap(group)
        if pair:
            a, b = pair
            raise InputError(
                f"overlapping annotations in {doc_id!r}: {_describe(a)} and {_describe(b)}",
                path,
                where[b],
            )
    return anns


def load_annotations(path: str | Path, corpus: Sequence[Document] | None) -> list[Annotation]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return parse_annotations(fh, corpus, str(path))
    except OSError as exc:
        raise InputError(f"cannot read annotations: {exc.strerror}", str(path)) from exc


def format_annotations(anns: Iterable[Annotation]) -> str:
    buf = io.StringIO()
    buf.write("\t".join(ANNOTATION_HEADER) + "\n")
    for a in anns:
        buf.write(f"{a.doc_id}\t{a.start}\t{a.end}\t{a.label}\t{escape(a.surface)}\n")
    return buf.getvalue()


def write_annotations(anns: Iterable[Annotation], path: str | Path) -> None:
    Path(path).write_text(format_annotations(anns), encoding="utf-8", newline="\n")


def group_by_doc(items: Iterable) -> dict[str, list]:
    out: dict[str, list] = {}
    for item in items:
        out.setdefault(item.doc_id, []).append(item)
    return out


# -- span <-> IOB2 -------------------------------------------------------------


def annotations_to_iob2(
    doc: Document, annotations: Sequence[Annotation], tokens: Sequence[Token]
) -> list[TaggedToken]:
    """Project character spans onto tokens.

    A token belongs to an annotation when their character ranges intersect.
    A token touching two annotations goes to the earlier one.
    """
    pair = find_overlap(annotations)
    if pair:
        a, b = pair
        raise ValueError(f"overlapping annotations {_describe(a)} and {_describe(b)} in {doc.id!r}")

    tags = [OUTSIDE] * len(tokens)
    taken = [False] * len(tokens)
    i = 0
    for ann in sorted(annotations, key=lambda a: a.start):
        while i < len(tokens) and tokens[i].end <= ann.start:
            i += 1
        j = i
        first = True
        while j < len(tokens) and tokens[j].start < ann.end:
            if not taken[j]:
                tags[j] = Tag("B" if first else "I", ann.label)
                taken[j] = True
                first = False
            j += 1
    return [TaggedToken(t, tag) for t, tag in zip(tokens, tags)]


def orphan_index(tags: Sequence[Tag]) -> int | None:
    """Index of the first I tag not continuing a run of the same label."""
    prev = OUTSIDE
    for i, tag in enumerate(tags):
        if tag.prefix == "I" and (prev.prefix == "O" or prev.label != tag.label):
            return i
        prev = tag
    return None


def repair_tags(tags: Sequence[Tag]) -> list[Tag]:
    """Promote every orphan I-x to B-x."""
    out: list[Tag] = []
    prev = OUTSIDE
    for tag in tags:
        if tag.prefix == "I" and (prev.prefix == "O" or prev.label != tag.label):
            tag = Tag("B", tag.label)
        out.append(tag)
        prev = tag
    return out


def iob2_to_spans(
    doc: Document, tagged: Sequence[TaggedToken], repair: bool = False
) -> list[Annotation]:
    tags = [tt.tag for tt in tagged]
    bad = orphan_index(tags)
    if bad is not None:
        if not repair:
            raise ValueError(f"orphan {tags[bad]} at token {bad}")
        tags = repair_tags(tags)

    spans: list[Annotation] = []
    start = end = None
    label = None
    for tt, tag in zip(tagged, tags):
        if tag.prefix == "I":
            end = tt.token.end
            continue
        if label is not None:
            spans.append(Annotation.from_document(doc, start, end, label))
            label = None
        if tag.prefix == "B":
            start, end, label = tt.token.start, tt.token.end, tag.label
    if label is not None:
        spans.append(Annotation.from_document(doc, start, end, label))
    return spans


# -- IOB2 files ----------------------------------------------------------------


def format_iob2(docs: Iterable[Sequence[TaggedToken]]) -> str:
    buf = io.StringIO()
    for tagged in docs:
        orphan = orphan_index([tt.tag for tt in tagged])
        if orphan is not None:
            raise ValueError(f"orphan {tagged[orphan].tag} at token {orphan}")
        for tt in tagged:
            buf.write(f"{tt.token.surface}\t{tt.tag}\n")
        buf.write("\n")
    return buf.getvalue()


def write_iob2(docs: Iterable[Sequence[TaggedToken]], path: str | Path) -> None:
    Path(path).write_text(format_iob2(docs), encoding="utf-8", newline="\n")


def tokens_from_surfaces(surfaces: Sequence[str]) -> list[Token]:
    """Lay surfaces out separated by single spaces. This is how offsets are
    recomputed when reading IOB2, so original offsets are not preserved."""
    tokens = []
    pos = 0
    for s in surfaces:
        tokens.append(Token(s, pos, pos + len(s)))
        pos += len(s) + 1
    return tokens


def parse_iob2(
    lines: Iterable[str], path: str = "<iob2>", repair: bool = False
) -> list[list[TaggedToken]]:
    docs: list[list[TaggedToken]] = []
    surfaces: list[str] = []
    tags: list[Tag] = []
    first_line = 1

    def close(lineno: int):
        nonlocal surfaces, tags
        bad = orphan_index(tags)
        if bad is not None:
            if not repair:
                raise InputError(f"orphan {tags[bad]} (token {bad})", path, first_line + bad)
            tags = repair_tags(tags)
        tokens = tokens_from_surfaces(surfaces)
        docs.append([TaggedToken(t, g) for t, g in zip(tokens, tags)])
        surfaces, tags = [], []

    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if line == "":
            close(lineno)
            first_line = lineno + 1
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise InputError(f"expected 2 columns, got {len(cols)}", path, lineno)
        surface, tag = cols
        if not surface:
            raise InputError("empty token", path, lineno)
        try:
            tags.append(Tag.parse(tag))
        except ValueError as exc:
            raise InputError(str(exc), path, lineno) from None
        surfaces.append(surface)
    if surfaces:
        close(-1)
    return docs


def read_iob2(path: str | Path, repair: bool = False) -> list[list[TaggedToken]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return parse_iob2(fh, str(path), repair)
    except OSError as exc:
        raise InputError(f"cannot read IOB2 file: {exc.strerror}", str(path)) from exc


def document_from_tagged(doc_id: str, tagged: Sequence[TaggedToken]) -> Document:
    """Rebuild a document whose text matches the token offsets."""
    parts: list[str] = []
    pos = 0
    for tt in tagged:
        parts.append(" " * (tt.token.start - pos))
        parts.append(tt.token.surface)
        pos = tt.token.end
    return Document(doc_id, "".join(parts))

