"""Pluggable NER backends.

Two kinds exist. The builtin backend tags tokens from gazetteers. The external
backend is any long-running process speaking a line protocol on its standard
streams::

    request:  <token>\\n ... <token>\\n \\n
    response: <token>\\t<tag>\\n ... \\n

Tags use the backend's own label names and are translated with a label map
(backend label -> Label, or DROP).
"""

from __future__ import annotations

import queue
import subprocess
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from hrdeid.corpus import OUTSIDE, Label, Tag, Token, repair_tags
from hrdeid.errors import (
    BackendError,
    BackendStartError,
    BackendTimeout,
    InputError,
    ProtocolError,
)
from hrdeid.recognizers import Lexicon, lexicon_match


class _Drop:
    """Label-map target for backend labels that are not scored."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "DROP"

    def __reduce__(self):
        return (_Drop, ())


DROP = _Drop()

IDENTITY_MAP: dict[str, Label] = {label.value: label for label in Label}


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "builtin"
    command: tuple[str, ...] = ()
    label_map: Mapping[str, Label | _Drop] = field(default_factory=lambda: dict(IDENTITY_MAP))
    lexicons: tuple[Lexicon, ...] = ()
    timeout: float = 60.0

    def __post_init__(self):
        if self.kind not in ("builtin", "external"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "external" and not self.command:
            raise ValueError("external backend needs a command")


def parse_label_map(lines, path: str = "<label map>") -> dict[str, Label | _Drop]:
    mapping: dict[str, Label | _Drop] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2 or not cols[0]:
            raise InputError("expected '<backend_label><TAB><LABEL or DROP>'", path, lineno)
        source, target = cols[0], cols[1].strip()
        if source in mapping:
            raise InputError(f"backend label {source!r} mapped twice", path, lineno)
        if target.upper() == "DROP":
            mapping[source] = DROP
        else:
            try:
                mapping[source] = Label.parse(target)
            except ValueError as exc:
                raise InputError(str(exc), path, lineno) from None
    return mapping


def load_label_map(path: str | Path) -> dict[str, Label | _Drop]:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_label_map(fh, str(path))
    except OSError as exc:
        raise InputError(f"cannot read label map: {exc.strerror}", str(path)) from exc


def split_tag(tag: str) -> tuple[str, str | None]:
    if tag == "O":
        return "O", None
    prefix, sep, label = tag.partition("-")
    if not sep or prefix not in ("B", "I") or not label:
        raise ProtocolError(f"malformed tag {tag!r}")
    return prefix, label


def map_labels(tags: Sequence[str], label_map: Mapping[str, Label | _Drop]) -> list[Tag]:
    """Translate backend tags to domain tags; dropped labels become O and any
    I tag orphaned by the drop is promoted to B."""
    out = []
    for tag in tags:
        prefix, name = split_tag(tag)
        if name is None:
            out.append(OUTSIDE)
            continue
        if name not in label_map:
            raise BackendError(f"backend label {name!r} missing from label map")
        target = label_map[name]
        out.append(OUTSIDE if target is DROP else Tag(prefix, target))
    return repair_tags(out)


# -- backends ------------------------------------------------------------------


class BuiltinBackend:
    """Gazetteer tagger. Lexicons earlier in the list win ties between equally
    long matches."""

    def __init__(self, lexicons: Sequence[Lexicon] = ()):
        self.lexicons = tuple(lexicons)

    def tag(self, tokens: Sequence[Token]) -> list[str]:
        index = {t.start: i for i, t in enumerate(tokens)}
        ends = {t.end: i for i, t in enumerate(tokens)}
        found = []
        for rank, lexicon in enumerate(self.lexicons):
            for span in lexicon_match(tokens, lexicon):
                first, last = index[span.start], ends[span.end]
                found.append((-(last - first), rank, first, last, span.label))
        tags = ["O"] * len(tokens)
        for _, _, first, last, label in sorted(found, key=lambda f: f[:3]):
            if all(tags[k] == "O" for k in range(first, last + 1)):
                tags[first] = f"B-{label.value}"
                for k in range(first + 1, last + 1):
                    tags[k] = f"I-{label.value}"
        return tags

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class ExternalBackend:
    """A long-lived tagger process. Not safe for concurrent use; give each
    worker its own instance."""

    def __init__(self, command: Sequence[str], timeout: float = 60.0):
        self.command = list(command)
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue | None = None

    def _start(self) -> None:
        try:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0
            )
        except OSError as exc:
            raise BackendStartError(f"cannot start backend {self.command[0]!r}: {exc.strerror}") from exc
        self._lines = queue.Queue()
        threading.Thread(target=self._pump, args=(self._proc, self._lines), daemon=True).start()

    @staticmethod
    def _pump(proc: subprocess.Popen, lines: queue.Queue) -> None:
        for raw in iter(proc.stdout.readline, b""):
            lines.put(raw)
        lines.put(None)

    def _kill(self) -> None:
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None

    def _readline(self, deadline: float) -> str:
        try:
            raw = self._lines.get(timeout=max(0.0, deadline - time.monotonic()))
        except queue.Empty:
            self._kill()
            raise BackendTimeout(f"backend gave no answer within {self.timeout:g} s") from None
        if raw is None:
            self._kill()
            raise ProtocolError("backend exited mid-document")
        if not raw.endswith(b"\n"):
            self._kill()
            raise ProtocolError("backend output ended without newline")
        return raw[:-1].decode("utf-8")

    def tag(self, tokens: Sequence[Token]) -> list[str]:
        if self._proc is None or self._proc.poll() is not None:
            self._start()
        surfaces = [t.surface for t in tokens]
        request = "".join(s + "\n" for s in surfaces) + "\n"
        try:
            self._proc.stdin.write(request.encode("utf-8"))
            self._proc.stdin.flush()
        except OSError as exc:
            self._kill()
            raise BackendError(f"cannot write to backend: {exc}") from exc

        deadline = time.monotonic() + self.timeout
        tags = []
        try:
            while True:
                line = self._readline(deadline)
                if line == "":
                    break
                if len(tags) == len(surfaces):
                    raise ProtocolError(f"expected {len(surfaces)} tagged tokens, got more")
                cols = line.split("\t")
                if len(cols) != 2:
                    raise ProtocolError(f"line {len(tags) + 1}: expected '<token><TAB><tag>'")
                surface, tag = cols
                if surface != surfaces[len(tags)]:
                    raise ProtocolError(
                        f"token {len(tags)}: sent {surfaces[len(tags)]!r}, backend echoed {surface!r}"
                    )
                split_tag(tag)
                tags.append(tag)
        except ProtocolError:
            self._kill()
            raise
        if len(tags) != len(surfaces):
            raise ProtocolError(f"expected {len(surfaces)} tagged tokens, got {len(tags)}")
        return tags

    def close(self) -> None:
        if self._proc is None:
            return
        try:
            self._proc.stdin.close()
            self._proc.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired):
            self._proc.kill()
            self._proc.wait()
        self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_backend(config: BackendConfig) -> BuiltinBackend | ExternalBackend:
    if config.kind == "builtin":
        return BuiltinBackend(config.lexicons)
    return ExternalBackend(config.command, config.timeout)


def tag_tokens(tokens: Sequence[Token], config: BackendConfig, backend=None) -> list[str]:
    """Backend-native tags, one per token. Opens a throwaway backend when none is given."""
    if backend is not None:
        return backend.tag(tokens)
    with open_backend(config) as b:
        return b.tag(tokens)
