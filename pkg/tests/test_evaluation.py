import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qseg.corpus import LengthMismatch
from qseg.evaluation import (
    Metrics,
    evaluate,
    format_kv,
    format_report,
    query_accuracy,
    recall_iv_ov,
    segment_prf,
    spans,
)


def _segmentations(min_queries=0):
    segment = st.text(alphabet="abc", min_size=1, max_size=3)
    return st.lists(
        st.lists(segment, min_size=1, max_size=4), min_size=min_queries, max_size=6
    )


def test_spans_are_half_open_and_contiguous():
    assert spans(["ab", "c", "def"]) == [(0, 2), (2, 3), (3, 6)]
    assert spans([]) == []


def test_prf_worked_example():
    # gold cuts a 7-char query into 3 parts, prediction into 4; they share
    # the first segment and the (5, 7) tail, so matched = 2
    gold = [["abcde", "fg"], ["hi"]]
    pred = [["abc", "de", "fg"], ["hi"]]
    precision, recall, f1 = segment_prf(pred, gold)
    assert precision == 2 / 4
    assert recall == 2 / 3
    assert abs(f1 - 2 * (0.5 * (2 / 3)) / (0.5 + 2 / 3)) < 1e-15


def test_prf_perfect_and_disjoint():
    gold = [["ab", "cd"]]
    assert segment_prf(gold, gold) == (1.0, 1.0, 1.0)
    # all-singletons vs the whole query share no span
    assert segment_prf([["a", "b"]], [["ab"]]) == (0.0, 0.0, 0.0)


def test_same_string_wrong_place_does_not_match():
    # "a" appears in both, but at different offsets
    pred = [["ab", "a"]]
    gold = [["a", "ba"]]
    precision, recall, _ = segment_prf(pred, gold)
    assert precision == 0.0 and recall == 0.0


def test_mismatched_inputs_rejected():
    with pytest.raises(LengthMismatch):
        segment_prf([["ab"]], [["ab"], ["cd"]])
    with pytest.raises(LengthMismatch):
        segment_prf([["ab"]], [["ac"]])
    with pytest.raises(LengthMismatch):
        query_accuracy([["ab"]], [["abc"]])


def test_query_accuracy_counts_exact_matches_only():
    pred = [["ab", "c"], ["d", "e"], ["fg"]]
    gold = [["ab", "c"], ["de"], ["fg"]]
    assert query_accuracy(pred, gold) == 2 / 3


def test_query_accuracy_empty_input_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assert query_accuracy([], []) == 1.0
    assert len(caught) == 1


def test_recall_partition_worked_example():
    # gold has four segments, two seen in training; the first query is fully
    # recovered ("ab" in-vocab, "cd" out), the second missed entirely
    pred = [["ab", "cd"], ["x", "yz"]]
    gold = [["ab", "cd"], ["xy", "z"]]
    r_iv, r_ov, rate = recall_iv_ov(pred, gold, train_segments={"ab", "xy"})
    assert r_iv == 1 / 2
    assert r_ov == 1 / 2
    assert rate == 1 / 2


def test_recall_partition_absent_sides_are_none():
    pred = gold = [["ab"]]
    r_iv, r_ov, rate = recall_iv_ov(pred, gold, train_segments={"ab"})
    assert (r_iv, r_ov, rate) == (1.0, None, 0.0)
    r_iv, r_ov, rate = recall_iv_ov(pred, gold, train_segments=set())
    assert (r_iv, r_ov, rate) == (None, 1.0, 1.0)


@given(_segmentations(min_queries=1), st.sets(st.text(alphabet="abc", max_size=3)))
@settings(max_examples=100, deadline=None)
def test_partition_recalls_combine_to_overall_recall(gold, train_segments):
    # prediction = gold with every query glued into one segment
    pred = [["".join(q)] for q in gold]
    _, recall, _ = segment_prf(pred, gold)
    r_iv, r_ov, rate = recall_iv_ov(pred, gold, train_segments)
    combined = (0.0 if r_iv is None else r_iv * (1 - rate)) + (
        0.0 if r_ov is None else r_ov * rate
    )
    assert abs(combined - recall) < 1e-12
    assert 0.0 <= rate <= 1.0


@given(_segmentations())
@settings(max_examples=100, deadline=None)
def test_metrics_bounds_and_identity(gold):
    precision, recall, f1 = segment_prf(gold, gold)
    if gold:
        assert (precision, recall, f1) == (1.0, 1.0, 1.0)
    assert query_accuracy(gold, gold) == 1.0 if gold else True


@given(_segmentations(min_queries=2), st.randoms())
@settings(max_examples=50, deadline=None)
def test_corpus_order_does_not_matter(gold, rnd):
    pred = [["".join(q)] for q in gold]
    order = list(range(len(gold)))
    rnd.shuffle(order)
    before = segment_prf(pred, gold)
    after = segment_prf([pred[i] for i in order], [gold[i] for i in order])
    assert before == after


def test_matched_bounded_by_both_totals():
    pred = [["ab", "c", "d"]]
    gold = [["ab", "cd"]]
    m = evaluate(pred, gold)
    assert m.matched <= min(m.total_pred, m.total_gold)
    assert m.matched == 1 and m.total_pred == 3 and m.total_gold == 2


def test_evaluate_fills_partition_fields_only_when_asked():
    pred = gold = [["ab", "cd"]]
    bare = evaluate(pred, gold)
    assert bare.recall_iv is None and bare.oov_rate is None
    full = evaluate(pred, gold, train_segments={"ab"})
    assert full.oov_rate == 0.5
    assert full.recall_iv == 1.0 and full.recall_ov == 1.0


def test_report_formats():
    m = Metrics(
        precision=0.5, recall=2 / 3, f1=4 / 7, query_accuracy=0.0,
        matched=2, total_pred=4, total_gold=3,
        recall_iv=1.0, recall_ov=None, oov_rate=0.25,
    )
    human = format_report(m)
    assert "precision 0.5000" in human
    assert "recall-ov n/a" in human
    assert human.endswith("\n")
    kv = format_kv(m)
    lines = dict(line.split("=", 1) for line in kv.strip().splitlines())
    assert lines["precision"] == "0.500000"
    assert lines["recall_ov"] == "n/a"
    assert lines["matched"] == "2"
