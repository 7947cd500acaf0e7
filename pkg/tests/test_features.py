import io

import pytest
from hypothesis import assume, given, settings, strategies as st

from qseg.context_index import build_index
from qseg.corpus import BOUNDARY_ID, build_vocabulary
from qseg.features import (
    AlignmentMismatch,
    FeatureBag,
    SideFeature,
    build_feature_bags,
    extract_side_features,
    load_feature_bags,
    save_feature_bags,
    subtract_align,
)

letters = st.text(st.sampled_from("abc"), min_size=1, max_size=9)


def test_subtract_align_two_sided_match():
    # sentence zwabcy aligned to query abc at its b
    assert subtract_align("abc", 1, "zwabcy", 3) == (2, 2)


def test_subtract_align_mismatched_center():
    with pytest.raises(AlignmentMismatch):
        subtract_align("abc", 0, "xyz", 1)


def test_subtract_align_includes_center_only():
    assert subtract_align("ab", 0, "xaz", 1) == (1, 1)


@settings(max_examples=80)
@given(letters, st.data())
def test_match_radii_bounds(query, data):
    sentence = data.draw(letters)
    i = data.draw(st.integers(0, len(query) - 1))
    centers = [c for c, ch in enumerate(sentence) if ch == query[i]]
    assume(centers)
    center = data.draw(st.sampled_from(centers))
    k_l, k_r = subtract_align(query, i, sentence, center)
    assert 1 <= k_l <= min(i + 1, center + 1)
    assert 1 <= k_r <= min(len(query) - i, len(sentence) - center)


def test_extract_windows_and_distances():
    vocab = build_vocabulary(["abc", "zwabcy"])
    left, right = extract_side_features("abc", 1, "zwabcy", 3, vocab, t=2, k_max=7)
    assert left == SideFeature((vocab.id("z"), vocab.id("w")), 2)
    assert right == SideFeature((vocab.id("y"), BOUNDARY_ID), 2)


def test_reference_context_example():
    # query and a reconstructed sentence mentioning the dress
    query = "高腰连衣裙白色"
    sentence = "今年流行的连衣裙"
    vocab = build_vocabulary([query, sentence])
    i, center = 3, 6  # both at 衣
    assert subtract_align(query, i, sentence, center) == (2, 2)
    left, right = extract_side_features(query, i, sentence, center, vocab, t=2, k_max=7)
    assert left.window_ids == (vocab.id("行"), vocab.id("的"))
    assert left.distance == 2 and right.distance == 2


def test_distance_clamped_to_k_max():
    query = "abcde"
    sentence = "abcde"
    vocab = build_vocabulary([sentence])
    left, right = extract_side_features(query, 4, sentence, 4, vocab, t=1, k_max=3)
    assert left.distance == 3  # true radius 5, clamped
    assert right.distance == 1


def test_boundary_padding_at_sentence_edges():
    vocab = build_vocabulary(["ab"])
    left, right = extract_side_features("ab", 0, "ab", 0, vocab, t=2, k_max=7)
    assert left.window_ids == (BOUNDARY_ID, BOUNDARY_ID)
    assert right.window_ids == (BOUNDARY_ID, BOUNDARY_ID)


def test_unknown_window_chars_map_to_unk():
    vocab = build_vocabulary(["ab"])
    left, _ = extract_side_features("ab", 1, "xab", 2, vocab, t=1, k_max=7)
    assert left.window_ids == (vocab.id("x"),)  # id lookup falls back to UNK
    assert left.window_ids == (1,)


@settings(max_examples=60)
@given(letters, st.data())
def test_windows_do_not_overlap_match(query, data):
    sentence = data.draw(letters)
    i = data.draw(st.integers(0, len(query) - 1))
    centers = [c for c, ch in enumerate(sentence) if ch == query[i]]
    assume(centers)
    center = data.draw(st.sampled_from(centers))
    vocab = build_vocabulary([query, sentence])
    t = data.draw(st.integers(1, 3))
    left, right = extract_side_features(query, i, sentence, center, vocab, t=t, k_max=9)
    k_l, k_r = subtract_align(query, i, sentence, center)
    assert len(left.window_ids) == t and len(right.window_ids) == t
    assert 1 <= left.distance <= 9 and 1 <= right.distance <= 9
    # windows sit strictly outside the matched span [center-k_l+1, center+k_r-1]
    for off, wid in zip(range(center - k_l - t + 1, center - k_l + 1), left.window_ids):
        if 0 <= off < len(sentence):
            assert wid == vocab.id(sentence[off])
        else:
            assert wid == BOUNDARY_ID


def test_build_feature_bags_shapes_and_cap():
    docs = ["xabcy", "abc", "zzabczz", "ababab"]
    index = build_index(docs)
    vocab = build_vocabulary(docs + ["abc"])
    bags = build_feature_bags("abc", index, vocab, cap=2, seed=5)
    assert len(bags) == 3
    for bag in bags:
        assert len(bag.items) <= 2
        for left, right in bag.items:
            assert len(left.window_ids) == 2 and len(right.window_ids) == 2


def test_build_feature_bags_deterministic():
    docs = ["ab" * 20, "xaby"]
    index = build_index(docs)
    vocab = build_vocabulary(docs)
    a = build_feature_bags("ab", index, vocab, cap=3, seed=9)
    b = build_feature_bags("ab", index, vocab, cap=3, seed=9)
    assert a == b


def test_feature_bag_stream_round_trip():
    docs = ["xabcy", "abc"]
    index = build_index(docs)
    vocab = build_vocabulary(docs)
    per_query = [build_feature_bags(q, index, vocab, cap=5, seed=0) for q in ("abc", "ab")]
    buf = io.BytesIO()
    save_feature_bags(per_query, 2, buf)
    buf.seek(0)
    loaded, t = load_feature_bags(buf)
    assert t == 2
    assert loaded == per_query


def test_empty_bag_round_trip():
    buf = io.BytesIO()
    save_feature_bags([[FeatureBag(())]], 2, buf)
    buf.seek(0)
    loaded, _ = load_feature_bags(buf)
    assert loaded == [[FeatureBag(())]]
