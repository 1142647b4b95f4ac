"""Offset-preserving tokenizer.

Whitespace separates tokens. Word characters group into tokens, with hyphens
and apostrophes kept when they sit between word characters ("e-mail",
"03-11-2016"). Every other non-space character is its own token. In the
aware modes, e-mail addresses and URLs are kept whole.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from hrdeid.corpus import Token

EMAIL_PATTERN = r"[a-z0-9._%+-]+@[a-z0-9-]+(?:\.[a-z0-9-]+)*\.[a-z]{2,}(?![a-z0-9-])"

# Common TLDs for bare domains; anything else needs a scheme or "www.".
BARE_TLDS = (
    "nl", "com", "org", "net", "eu", "be", "de", "fr", "uk", "io",
    "gov", "edu", "info", "biz", "nu", "app",
)

_URL_TAIL = r"(?:[^\s<>\"@]*[^\s<>\"@.,;:!?'()\[\]{}’”])?"
URL_PATTERN = (
    r"(?<![\w@.-])(?:[a-z][a-z0-9+.-]*://|www\.)[^\s<>\"@]*[^\s<>\"@.,;:!?'()\[\]{}’”]"
    r"|(?<![\w@.-])(?:[a-z0-9](?:[a-z0-9-]*[a-z0-9])?\.)+(?:" + "|".join(BARE_TLDS) + r")"
    r"(?![\w@-])(?:/" + _URL_TAIL + ")?"
)

EMAIL_RE = re.compile(EMAIL_PATTERN, re.IGNORECASE)
URL_RE = re.compile(URL_PATTERN, re.IGNORECASE)
_BOTH_RE = re.compile(f"(?P<mail>{EMAIL_PATTERN})|(?P<url>{URL_PATTERN})", re.IGNORECASE)

_PIECE_RE = re.compile(r"\w+(?:['’-]\w+)*|\S")
_SPACE_RE = re.compile(r"\S+")


@dataclass(frozen=True)
class TokenizerConfig:
    email_aware: bool = True
    url_aware: bool = True


DEFAULT_CONFIG = TokenizerConfig()


def _protected(text: str, config: TokenizerConfig):
    if config.email_aware and config.url_aware:
        pattern = _BOTH_RE
    elif config.email_aware:
        pattern = EMAIL_RE
    elif config.url_aware:
        pattern = URL_RE
    else:
        return []
    return [m.span() for m in pattern.finditer(text)]


def _split_plain(text: str, lo: int, hi: int, out: list[Token]) -> None:
    for chunk in _SPACE_RE.finditer(text, lo, hi):
        for m in _PIECE_RE.finditer(text, chunk.start(), chunk.end()):
            out.append(Token(m.group(), m.start(), m.end()))


def tokenize(text: str, config: TokenizerConfig = DEFAULT_CONFIG) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    for start, end in _protected(text, config):
        _split_plain(text, pos, start, tokens)
        tokens.append(Token(text[start:end], start, end))
        pos = end
    _split_plain(text, pos, len(text), tokens)
    return tokens
