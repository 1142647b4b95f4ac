import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hrdeid.corpus import Annotation, Document, Label
from hrdeid.deidentify import SelectedSpan
from hrdeid.errors import InputError
from hrdeid.evaluation import (
    ConfusionCounts,
    EvalMode,
    cohen_kappa,
    corpus_kappa,
    evaluate_corpus,
    format_report,
    format_table,
    format_tsv,
    kappa_from_agreements,
    load_report,
    match_spans,
    metrics,
    segment_labels,
)
from oracles import kappa_oracle

STRICT, LOOSE = EvalMode.STRICT, EvalMode.LOOSE


def gold(start, end, label, doc="d"):
    return Annotation(doc, start, end, label, "x" * (end - start))


def pred(start, end, label):
    return SelectedSpan(start, end, label, "test")


# -- matching ----------------------------------------------------------------


def test_cross_label_strict():
    got = match_spans([gold(0, 4, Label.PER)], [pred(0, 4, Label.ORG)], STRICT)
    assert got[Label.PER] == ConfusionCounts(0, 0, 1)
    assert got[Label.ORG] == ConfusionCounts(0, 1, 0)


def test_cross_label_loose():
    got = match_spans([gold(0, 4, Label.PER)], [pred(0, 4, Label.ORG)], LOOSE)
    assert got[Label.PER] == ConfusionCounts(1, 0, 0)
    assert got.get(Label.ORG, ConfusionCounts()).fp == 0


@pytest.mark.parametrize("mode", [STRICT, LOOSE])
def test_same_label_hit(mode):
    assert match_spans([gold(0, 4, Label.PER)], [pred(0, 4, Label.PER)], mode)[Label.PER].tp == 1


def test_overlap_fraction():
    g = [gold(0, 10, Label.PER)]
    assert match_spans(g, [pred(0, 3, Label.PER)], STRICT, 0.0)[Label.PER].tp == 1
    assert match_spans(g, [pred(0, 3, Label.PER)], STRICT, 0.5)[Label.PER].fn == 1
    assert match_spans(g, [pred(0, 5, Label.PER)], STRICT, 0.5)[Label.PER].tp == 1
    assert match_spans(g, [pred(0, 9, Label.PER)], STRICT, 1.0)[Label.PER].fn == 1
    assert match_spans(g, [pred(0, 10, Label.PER)], STRICT, 1.0)[Label.PER].tp == 1


def test_one_prediction_covering_two_gold():
    got = match_spans([gold(0, 4, Label.PER), gold(5, 9, Label.PER)], [pred(0, 9, Label.PER)], STRICT)
    assert got[Label.PER] == ConfusionCounts(2, 0, 0)


def test_spurious_prediction_is_fp():
    got = match_spans([], [pred(0, 2, Label.NUM)], STRICT)
    assert got[Label.NUM] == ConfusionCounts(0, 1, 0)


def test_overlapping_gold_rejected():
    with pytest.raises(ValueError):
        match_spans([gold(0, 4, Label.PER), gold(2, 6, Label.PER)], [], STRICT)


# -- metrics -----------------------------------------------------------------


def test_metrics_example():
    r = metrics(ConfusionCounts(9, 1, 1), Label.PER)
    assert (r.precision, r.recall, r.f1) == pytest.approx((0.9, 0.9, 0.9), abs=1e-12)
    assert r.undefined == frozenset()


def test_metrics_all_zero():
    r = metrics(ConfusionCounts(0, 0, 0))
    assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)
    assert r.undefined == {"precision", "recall", "f1"}


def test_equal_p_and_r_gives_same_f1():
    r = metrics(ConfusionCounts(3, 2, 2))
    assert r.precision == r.recall and r.f1 == pytest.approx(r.precision, abs=1e-15)


def test_loose_reports_recall_only():
    r = metrics(ConfusionCounts(3, 5, 1), mode=LOOSE)
    assert r.precision is None and r.f1 is None and r.recall == 0.75 and r.fp == 0


@given(st.integers(0, 500), st.integers(0, 500), st.integers(0, 500))
def test_metrics_formulas(tp, fp, fn):
    r = metrics(ConfusionCounts(tp, fp, fn))
    p = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
    rc = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
    f1 = 2 * p * rc / (p + rc) if p + rc else Fraction(0)
    assert abs(r.precision - p) <= 1e-12 and abs(r.recall - rc) <= 1e-12 and abs(r.f1 - f1) <= 1e-12
    assert min(r.precision, r.recall) - 1e-12 <= r.f1 <= max(r.precision, r.recall) + 1e-12


# -- corpus evaluation -------------------------------------------------------


def test_micro_average():
    g = [gold(0, 4, Label.PER, "a"), gold(5, 9, Label.PER, "a"), gold(0, 4, Label.PER, "b")]
    p = {"a": [pred(0, 4, Label.PER)], "b": [pred(0, 4, Label.PER)]}
    [r] = evaluate_corpus(g, p, mode=LOOSE)
    assert (r.tp, r.fn) == (2, 1)
    assert r.recall == pytest.approx(2 / 3)


def test_empty_corpus():
    assert evaluate_corpus([], {}) == []


def test_unknown_prediction_doc():
    with pytest.raises(ValueError, match="'zz'"):
        evaluate_corpus([gold(0, 1, Label.NUM, "a")], {"zz": [pred(0, 1, Label.NUM)]})


def test_missing_predictions_are_misses():
    [r] = evaluate_corpus([gold(0, 1, Label.NUM, "a")], {}, mode=LOOSE)
    assert r.fn == 1


def test_rows_in_label_order():
    g = [gold(0, 1, Label.LOC), gold(2, 3, Label.DATE), gold(4, 5, Label.PER)]
    assert [r.label for r in evaluate_corpus(g, {})] == [Label.DATE, Label.PER, Label.LOC]


def test_tables():
    g = [gold(0, 4, Label.PER)]
    reports = evaluate_corpus(g, {"d": [pred(0, 4, Label.PER)]})
    assert format_tsv(reports, STRICT).splitlines() == [
        "label\ttp\tfp\tfn\tsupport\tprecision\trecall\tf1",
        "PER\t1\t0\t0\t1\t1.0000\t1.0000\t1.0000",
        "ALL\t1\t0\t0\t1\t1.0000\t1.0000\t1.0000",
    ]
    assert format_table(evaluate_corpus(g, {}, mode=LOOSE), LOOSE).splitlines()[0].split() == [
        "label", "tp", "fn", "support", "recall",
    ]


def test_report_round_trip(tmp_path):
    rows = [("a", pred(0, 4, Label.PER), "[PER]"), ("b", pred(3, 5, Label.NUM), "[NUM-1]")]
    p = tmp_path / "r.tsv"
    p.write_text(format_report(rows), encoding="utf-8")
    assert load_report(p) == {"a": [pred(0, 4, Label.PER)], "b": [pred(3, 5, Label.NUM)]}


def test_report_errors(tmp_path):
    p = tmp_path / "r.tsv"
    p.write_text("doc_id\tstart\tend\tlabel\tsource\treplacement\na\t0\tx\tPER\ts\t[PER]\n", encoding="utf-8")
    with pytest.raises(InputError, match="r.tsv:2"):
        load_report(p)


LABELS = [Label.PER, Label.ORG, Label.LOC, Label.NUM]


def random_spans(rng, length=60, n=6):
    cuts = sorted(rng.sample(range(length + 1), 2 * rng.randint(0, n)))
    return [(s, e, rng.choice(LABELS)) for s, e in zip(cuts[::2], cuts[1::2])]


def test_loose_recall_at_least_strict():
    rng = random.Random(11)
    for _ in range(200):
        g = [gold(s, e, lab) for s, e, lab in random_spans(rng)]
        p = [pred(s, e, lab) for s, e, lab in random_spans(rng)]
        frac = rng.choice([0.0, 0.5, 1.0])
        strict = {r.label: r.recall for r in evaluate_corpus(g, {"d": p}, ["d"], mode=STRICT, overlap_fraction=frac)}
        loose = {r.label: r.recall for r in evaluate_corpus(g, {"d": p}, ["d"], mode=LOOSE, overlap_fraction=frac)}
        for label, rec in strict.items():
            assert loose.get(label, 0.0) >= rec


# -- kappa -------------------------------------------------------------------


def test_kappa_from_agreements_example():
    assert kappa_from_agreements(0.99, 0.82) == pytest.approx(17 / 18, abs=1e-9)


def test_kappa_edge_cases():
    assert cohen_kappa(["PER", None, None], ["PER", None, None]).kappa == 1.0
    assert cohen_kappa([None, None], [None, None]).kappa == 1.0
    assert kappa_from_agreements(0.5, 0.5) == 0.0
    with pytest.raises(ValueError):
        cohen_kappa(["a"], [])


@given(st.lists(st.tuples(st.sampled_from(["O", "PER", "ORG"]), st.sampled_from(["O", "PER", "ORG"])),
                min_size=1, max_size=40))
def test_kappa_matches_contingency_oracle(pairs):
    a = [x for x, _ in pairs]
    b = [y for _, y in pairs]
    got = cohen_kappa(a, b)
    pr_a, pr_e, k = kappa_oracle(a, b)
    assert got.pr_a == pytest.approx(pr_a) and got.pr_e == pytest.approx(pr_e)
    assert got.kappa == pytest.approx(k)


@given(st.lists(st.tuples(st.sampled_from("xyz"), st.sampled_from("xyz")), min_size=1, max_size=30))
def test_kappa_invariant_under_relabeling(pairs):
    perm = {"x": "z", "y": "x", "z": "y"}
    a = [x for x, _ in pairs]
    b = [y for _, y in pairs]
    k1 = cohen_kappa(a, b)
    k2 = cohen_kappa([perm[x] for x in a], [perm[y] for y in b])
    assert k1.kappa == pytest.approx(k2.kappa)


def test_union_segmentation():
    doc = Document("d", "Jan de Vries belt")
    a = [Annotation.from_document(doc, 0, 12, Label.PER)]
    b = [Annotation.from_document(doc, 0, 3, Label.PER), Annotation.from_document(doc, 7, 12, Label.PER)]
    la, lb = segment_labels(doc, a, b)
    assert la == [Label.PER, Label.PER, Label.PER, None]
    assert lb == [Label.PER, None, Label.PER, None]


def test_annotation_boundary_inside_token_splits_it():
    doc = Document("d", "mail j.doe@minfin.nl")
    a = [Annotation.from_document(doc, 5, 20, Label.MAIL)]
    b = [Annotation.from_document(doc, 11, 20, Label.WEBSITE)]
    la, lb = segment_labels(doc, a, b)
    assert la == [None, Label.MAIL, Label.MAIL]
    assert lb == [None, None, Label.WEBSITE]


def test_corpus_kappa_identical():
    docs = [Document("a", "Jan belt"), Document("b", "op 5 mei")]
    anns = [Annotation.from_document(docs[0], 0, 3, Label.PER), Annotation.from_document(docs[1], 3, 8, Label.DATE)]
    r = corpus_kappa(docs, anns, anns)
    assert r.kappa == 1.0 and r.n == 5
