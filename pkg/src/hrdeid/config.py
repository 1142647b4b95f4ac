"""Pipeline configuration, read from an INI-style file.

Sections: [recognizers], [lexicons], [backend], [tokenizer], [suppression],
[evaluation], [run], and [code_patterns], where each non-comment line is one
regular expression taken verbatim. Relative paths resolve against the
directory holding the config file. Unknown sections and keys are errors.
"""

from __future__ import annotations

import configparser
import re
import shlex
from dataclasses import dataclass, field
from pathlib import Path

from hrdeid.corpus import Label
from hrdeid.errors import ConfigError
from hrdeid.tokenizer import TokenizerConfig

RECOGNIZERS = (
    "numbers",
    "dates",
    "emails",
    "email_repair",
    "websites",
    "codes",
    "prefixed_person",
    "gender",
    "job_titles",
    "gazetteers",
)

LEXICON_KEYS = {
    "per": Label.PER,
    "org": Label.ORG,
    "loc": Label.LOC,
    "jobtitle": Label.JOBTITLE,
    "gender": Label.GENDER,
    "title": Label.TITLE,
}

STRATEGIES = ("label", "numbered")


@dataclass(frozen=True)
class PipelineConfig:
    recognizers: dict[str, bool] = field(default_factory=lambda: dict.fromkeys(RECOGNIZERS, True))
    lexicons: dict[Label, Path] = field(default_factory=dict)
    case_sensitive: frozenset[Label] = frozenset()
    backend_kind: str = "builtin"
    backend_command: tuple[str, ...] = ()
    label_map: Path | None = None
    backend_timeout: float = 60.0
    backend_priority_offset: int = 0
    tokenizer: TokenizerConfig = TokenizerConfig()
    strategy: str = "label"
    code_patterns: tuple[str, ...] = ()
    overlap_fraction: float = 0.0
    workers: int = 1

    def enabled(self, name: str) -> bool:
        return self.recognizers.get(name, False)


_ALLOWED = {
    "recognizers": set(RECOGNIZERS),
    "lexicons": set(LEXICON_KEYS) | {"case_sensitive"},
    "backend": {"kind", "command", "label_map", "timeout", "priority_offset"},
    "tokenizer": {"email_aware", "url_aware"},
    "suppression": {"strategy"},
    "evaluation": {"overlap_fraction"},
    "run": {"workers"},
}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]\s*$")


def _line_of(lines: list[str], section: str, key: str | None = None) -> int | None:
    current = None
    for n, line in enumerate(lines, 1):
        m = _SECTION_RE.match(line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return n
            continue
        if current == section and key is not None:
            name = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            if name == key:
                return n
    return None


def parse_config(text: str, path: str = "<config>", base: Path | None = None) -> PipelineConfig:
    base = base or Path(".")
    lines = text.splitlines()

    # [code_patterns] holds raw regexes, which configparser would mangle.
    patterns: list[str] = []
    ini_lines: list[str] = []
    in_patterns = False
    for line in lines:
        m = _SECTION_RE.match(line)
        if m:
            in_patterns = m.group(1).strip() == "code_patterns"
            ini_lines.append("" if in_patterns else line)
            continue
        if in_patterns:
            stripped = line.strip()
            if stripped and not stripped.startswith("#"):
                patterns.append(stripped)
            ini_lines.append("")
        else:
            ini_lines.append(line)

    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    try:
        parser.read_string("\n".join(ini_lines), source=path)
    except configparser.Error as exc:
        raise ConfigError(str(exc).replace("\n", " "), path) from None

    def fail(message: str, section: str, key: str | None = None):
        raise ConfigError(message, path, _line_of(lines, section, key))

    for section in parser.sections():
        if section not in _ALLOWED:
            fail(f"unknown section [{section}]", section)
        for key in parser[section]:
            if key not in _ALLOWED[section]:
                fail(f"unknown key {key!r} in [{section}]", section, key)

    def get_bool(section, key, default):
        try:
            return parser.getboolean(section, key, fallback=default)
        except ValueError:
            fail(f"{key} must be true or false", section, key)

    def get_number(section, key, default, kind):
        try:
            return kind(parser.get(section, key, fallback=default))
        except ValueError:
            fail(f"{key} must be a number", section, key)

    recognizers = {name: get_bool("recognizers", name, True) for name in RECOGNIZERS}

    lexicons: dict[Label, Path] = {}
    case_sensitive: set[Label] = set()
    if parser.has_section("lexicons"):
        for key, value in parser["lexicons"].items():
            if key == "case_sensitive":
                for name in re.split(r"[,\s]+", value.strip()):
                    if not name:
                        continue
                    if name not in LEXICON_KEYS:
                        fail(f"unknown lexicon {name!r} in case_sensitive", "lexicons", key)
                    case_sensitive.add(LEXICON_KEYS[name])
                continue
            p = Path(value.strip())
            if not p.is_absolute():
                p = base / p
            if not p.is_file():
                fail(f"lexicon file not found: {p}", "lexicons", key)
            lexicons[LEXICON_KEYS[key]] = p

    kind = parser.get("backend", "kind", fallback="builtin").strip()
    if kind not in ("builtin", "external"):
        fail(f"backend kind must be builtin or external, not {kind!r}", "backend", "kind")
    command = tuple(shlex.split(parser.get("backend", "command", fallback="")))
    if kind == "external" and not command:
        fail("external backend needs a command", "backend", "kind")
    label_map = None
    if parser.has_option("backend", "label_map"):
        label_map = Path(parser.get("backend", "label_map").strip())
        if not label_map.is_absolute():
            label_map = base / label_map
        if not label_map.is_file():
            fail(f"label map not found: {label_map}", "backend", "label_map")

    strategy = parser.get("suppression", "strategy", fallback="label").strip()
    if strategy not in STRATEGIES:
        fail(f"strategy must be one of {', '.join(STRATEGIES)}", "suppression", "strategy")

    overlap = get_number("evaluation", "overlap_fraction", 0.0, float)
    if not 0.0 <= overlap <= 1.0:
        fail("overlap_fraction must lie in [0, 1]", "evaluation", "overlap_fraction")
    workers = get_number("run", "workers", 1, int)
    if workers < 1:
        fail("workers must be at least 1", "run", "workers")

    for p in patterns:
        try:
            re.compile(p)
        except re.error as exc:
            raise ConfigError(f"invalid code pattern {p!r}: {exc}", path,
                              next(n for n, line in enumerate(lines, 1) if line.strip() == p))

    return PipelineConfig(
        recognizers=recognizers,
        lexicons=lexicons,
        case_sensitive=frozenset(case_sensitive),
        backend_kind=kind,
        backend_command=command,
        label_map=label_map,
        backend_timeout=get_number("backend", "timeout", 60.0, float),
        backend_priority_offset=get_number("backend", "priority_offset", 0, int),
        tokenizer=TokenizerConfig(
            email_aware=get_bool("tokenizer", "email_aware", True),
            url_aware=get_bool("tokenizer", "url_aware", True),
        ),
        strategy=strategy,
        code_patterns=tuple(patterns),
        overlap_fraction=overlap,
        workers=workers,
    )


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from exc
    return parse_config(text, str(path), path.parent)
