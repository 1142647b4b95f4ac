import time

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import tagger_command
from hrdeid.corpus import Label, Tag, repair_tags
from hrdeid.errors import BackendError, BackendStartError, BackendTimeout, InputError, ProtocolError
from hrdeid.ner_adapter import (
    DROP,
    IDENTITY_MAP,
    BackendConfig,
    BuiltinBackend,
    ExternalBackend,
    load_label_map,
    map_labels,
    parse_label_map,
    tag_tokens,
)
from hrdeid.recognizers import Lexicon, lexicon_match
from hrdeid.tokenizer import tokenize

# backend-native labels of a typical Dutch tagger, mapped onto the taxonomy
TAGGER_MAP = {"person": Label.PER, "institution": Label.ORG, "location": Label.LOC,
               "month": Label.DATE, "misc": DROP}


def test_builtin_backend():
    config = BackendConfig(lexicons=(Lexicon(Label.PER, frozenset({"John"})),))
    assert tag_tokens(tokenize("John wrote"), config) == ["B-PER", "O"]


def test_builtin_longest_wins_across_lexicons():
    per = Lexicon(Label.PER, frozenset({"Jan"}))
    org = Lexicon(Label.ORG, frozenset({"Jan de Wit BV"}))
    assert BuiltinBackend([per, org]).tag(tokenize("bij Jan de Wit BV")) == [
        "O", "B-ORG", "I-ORG", "I-ORG", "I-ORG",
    ]


@given(st.lists(st.sampled_from(["Jan", "de", "Wit", "BV", "x"]), max_size=12),
       st.lists(st.sampled_from(["Jan", "de Wit", "Jan de Wit", "BV", "Wit BV"]), min_size=1, max_size=3))
def test_builtin_equals_lexicon_match(words, entries):
    """A single lexicon: the backend tags exactly what lexicon_match finds."""
    tokens = tokenize(" ".join(words))
    lex = Lexicon(Label.PER, frozenset(entries))
    expected = ["O"] * len(tokens)
    starts = {t.start: i for i, t in enumerate(tokens)}
    for span in lexicon_match(tokens, lex):
        i = starts[span.start]
        expected[i] = "B-PER"
        i += 1
        while i < len(tokens) and tokens[i].end <= span.end:
            expected[i] = "I-PER"
            i += 1
    assert BuiltinBackend([lex]).tag(tokens) == expected


# -- label mapping -----------------------------------------------------------


def test_map_institution():
    assert map_labels(["B-institution", "I-institution"], TAGGER_MAP) == [Tag("B", Label.ORG), Tag("I", Label.ORG)]


def test_map_month():
    assert map_labels(["B-month"], TAGGER_MAP) == [Tag("B", Label.DATE)]


def test_map_drop():
    assert map_labels(["B-misc"], TAGGER_MAP) == [Tag("O")]


def test_drop_repairs_orphans():
    got = map_labels(["B-misc", "I-misc", "I-person"], TAGGER_MAP)
    assert [str(t) for t in got] == ["O", "O", "B-PER"]


def test_unknown_label_is_error():
    with pytest.raises(BackendError, match="'product'"):
        map_labels(["B-product"], TAGGER_MAP)


def test_malformed_tag_is_protocol_error():
    with pytest.raises(ProtocolError):
        map_labels(["X-person"], TAGGER_MAP)


tag_strings = st.lists(
    st.one_of(st.just("O"), st.builds("{}-{}".format, st.sampled_from("BI"), st.sampled_from(sorted(TAGGER_MAP)))),
    max_size=12,
)


@given(tag_strings)
def test_mapping_keeps_outside(tags):
    mapped = map_labels(tags, TAGGER_MAP)
    assert len(mapped) == len(tags)
    for raw, tag in zip(tags, mapped):
        if raw == "O":
            assert tag.prefix == "O"


@given(st.lists(st.sampled_from(["O", "B-PER", "I-PER", "B-DATE", "I-DATE"]), max_size=12))
def test_identity_map_round_trip(raw):
    tags = [str(t) for t in repair_tags([Tag.parse(t) for t in raw])]
    assert [str(t) for t in map_labels(tags, IDENTITY_MAP)] == tags


def test_label_map_file(tmp_path):
    p = tmp_path / "map.tsv"
    p.write_text("# tagger\nper\tPER\nmisc\tDROP\n", encoding="utf-8")
    assert load_label_map(p) == {"per": Label.PER, "misc": DROP}
    with pytest.raises(InputError, match="m:1"):
        parse_label_map(["per\tPERSON\n"], "m")
    with pytest.raises(InputError, match="m:2"):
        parse_label_map(["per\tPER\n", "per\tORG\n"], "m")


# -- external process --------------------------------------------------------

TOKENS = tokenize("Jan schreef aan Piet de Vries")


def test_external_all_outside():
    with ExternalBackend(tagger_command("o")) as b:
        assert b.tag(TOKENS) == ["O"] * len(TOKENS)


def test_external_long_lived_across_documents():
    with ExternalBackend(tagger_command("caps")) as b:
        first = b.tag(TOKENS)
        pid = b._proc.pid
        assert b.tag(tokenize("Anna")) == ["B-person"]
        assert b._proc.pid == pid
    assert first == ["B-person", "O", "O", "B-person", "O", "B-person"]


def test_external_short_answer_names_counts():
    with ExternalBackend(tagger_command("short")) as b:
        with pytest.raises(ProtocolError, match="expected 2 tagged tokens, got 1"):
            b.tag(tokenize("Jan schreef"))


def test_external_echo_mismatch():
    with ExternalBackend(tagger_command("echo")) as b:
        with pytest.raises(ProtocolError, match="echoed 'zzz'"):
            b.tag(TOKENS)


def test_external_malformed_tag():
    with ExternalBackend(tagger_command("bad")) as b:
        with pytest.raises(ProtocolError, match="malformed"):
            b.tag(TOKENS)


def test_external_crash_is_protocol_error_then_restarts():
    with ExternalBackend(tagger_command("crash")) as b:
        b.tag(TOKENS)
        with pytest.raises(ProtocolError, match="exited"):
            b.tag(TOKENS)
        # a fresh process answers the next document
        assert b.tag(TOKENS) == ["O"] * len(TOKENS)


def test_external_timeout_kills():
    with ExternalBackend(tagger_command("sleep"), timeout=0.5) as b:
        t0 = time.monotonic()
        with pytest.raises(BackendTimeout):
            b.tag(TOKENS)
        assert time.monotonic() - t0 < 5
        assert b._proc is None


def test_missing_command_is_start_error():
    config = BackendConfig(kind="external", command=("/nonexistent/tagger",))
    with pytest.raises(BackendStartError, match="/nonexistent/tagger"):
        tag_tokens(TOKENS, config)


def test_non_ascii_surfaces():
    with ExternalBackend(tagger_command("caps")) as b:
        assert b.tag(tokenize("Élise woont in Zürich")) == ["B-person", "O", "O", "B-person"]
