import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gutek.errors import EmptyDocument, MaskMismatch
from gutek.neighborhood import (
    DEFAULT_KERNEL_WIDTH,
    SegmentMask,
    enumerate_local_masks,
    kernel_weight,
    neighborhood_stats,
    reconstruct,
    sample_word_masks,
)
from gutek.segmentation import split_sentences, split_words

from oracles import powerset_in_local_order


def test_mask_validation():
    m = SegmentMask((1, 0, 1))
    assert m.n_units == 3
    assert m.n_removed == 1
    assert m.removed_indices() == (1,)
    with pytest.raises(ValueError):
        SegmentMask((1, 2, 0))
    assert SegmentMask.all_ones(2).bits == (1, 1)
    assert SegmentMask.from_removed(3, (0, 2)).bits == (0, 1, 0)


def test_enumeration_order_n3():
    got = [m.bits for m in enumerate_local_masks(3, 8)]
    removed_sets = [
        (),
        (0,),
        (1,),
        (2,),
        (0, 1),
        (0, 2),
        (1, 2),
        (0, 1, 2),
    ]
    expected = []
    for removed in removed_sets:
        expected.append(tuple(0 if i in removed else 1 for i in range(3)))
    assert got == expected


def test_enumeration_first_layer_exactly_fits():
    got = [m.bits for m in enumerate_local_masks(5, 6)]
    assert got[0] == (1, 1, 1, 1, 1)
    assert all(sum(b) == 4 for b in got[1:])
    assert len(got) == 6


def test_enumeration_single_unit():
    assert [m.bits for m in enumerate_local_masks(1, 10)] == [(1,), (0,)]


def test_enumeration_errors():
    with pytest.raises(EmptyDocument):
        list(enumerate_local_masks(0, 4))
    with pytest.raises(ValueError):
        list(enumerate_local_masks(3, 0))


@pytest.mark.parametrize("n", range(1, 11))
def test_enumeration_matches_powerset_oracle(n):
    got = [m.bits for m in enumerate_local_masks(n, 2**n)]
    assert got == powerset_in_local_order(n)


@given(st.integers(min_value=1, max_value=12), st.integers(min_value=1, max_value=64))
@settings(max_examples=100, deadline=None)
def test_enumeration_budget_and_monotonicity(n, budget):
    masks = list(enumerate_local_masks(n, budget))
    assert len(masks) == min(budget, 2**n)
    assert masks[0].bits == (1,) * n
    removed_counts = [m.n_removed for m in masks]
    assert removed_counts == sorted(removed_counts)
    assert len({m.bits for m in masks}) == len(masks)


def test_sampler_first_mask_and_determinism():
    a = sample_word_masks(6, 10, seed=3)
    b = sample_word_masks(6, 10, seed=3)
    assert [m.bits for m, _ in a] == [m.bits for m, _ in b]
    assert a[0][0].bits == (1,) * 6
    assert a[0][1] == 1.0
    c = sample_word_masks(6, 10, seed=4)
    assert [m.bits for m, _ in a] != [m.bits for m, _ in c]


def test_sampler_kernel_values():
    full_removal = SegmentMask((0, 0, 0, 0))
    assert kernel_weight(full_removal) == pytest.approx(math.exp(-16.0), rel=1e-12)
    assert kernel_weight(SegmentMask((1, 1, 1, 1))) == 1.0
    # weight depends only on the removed fraction
    assert kernel_weight(SegmentMask((0, 1))) == kernel_weight(SegmentMask((1, 0)))
    half = kernel_weight(SegmentMask((0, 1)))
    assert half == pytest.approx(math.exp(-(0.5**2) / DEFAULT_KERNEL_WIDTH**2))


@given(st.integers(min_value=1, max_value=20), st.integers(min_value=1, max_value=40))
@settings(max_examples=100, deadline=None)
def test_sampler_weights_in_unit_interval(n, budget):
    for mask, weight in sample_word_masks(n, budget, seed=0):
        assert 0.0 < weight <= 1.0
        assert weight == kernel_weight(mask)


def test_reconstruct_sentence_fixture():
    doc = split_sentences("A. B. C.")
    assert reconstruct(doc, SegmentMask((1, 0, 1))) == "A. C."
    assert reconstruct(doc, SegmentMask((0, 0, 0))) == ""
    assert reconstruct(doc, SegmentMask((1, 1, 1))) == "A. B. C."


def test_reconstruct_mismatch():
    doc = split_sentences("One. Two.")
    with pytest.raises(MaskMismatch):
        reconstruct(doc, SegmentMask((1, 0, 1)))


@given(st.text(max_size=200), st.integers(min_value=0, max_value=2**30))
@settings(max_examples=150, deadline=None)
def test_reconstruct_word_subsequence(text, seed):
    import random

    doc = split_words(text)
    if doc.n_units == 0:
        return
    rng = random.Random(seed)
    bits = tuple(rng.randint(0, 1) for _ in range(doc.n_units))
    out = reconstruct(doc, SegmentMask(bits))
    kept = [doc.segment_text(i) for i, b in enumerate(bits) if b]
    assert out == " ".join(kept)


def test_stats_paper_constants():
    s = neighborhood_stats(137.7, 20)
    assert s.log2_size == pytest.approx(137.7)
    assert s.size == pytest.approx(2.0**137.7)
    assert s.explored_fraction == pytest.approx(20 / 2**137.7, rel=1e-12)

    s2 = neighborhood_stats(5.1, 20)
    assert 2.0**5.1 == pytest.approx(34.2968, abs=1e-4)
    assert s2.explored_fraction == pytest.approx(0.5831456, abs=1e-6)


def test_stats_fraction_caps_at_one():
    s = neighborhood_stats(2, 100)
    assert s.explored_fraction == 1.0
    assert s.size == 4.0


def test_stats_overflow_to_inf():
    s = neighborhood_stats(5000, 10)
    assert s.size == math.inf
    assert s.log2_size == 5000.0
    assert s.explored_fraction == 0.0


@given(
    st.floats(min_value=0.1, max_value=300, allow_nan=False),
    st.integers(min_value=1, max_value=10**6),
)
@settings(max_examples=200, deadline=None)
def test_stats_fraction_formula(n_units, budget):
    s = neighborhood_stats(n_units, budget)
    assert s.explored_fraction == pytest.approx(
        min(1.0, budget / 2.0**n_units), rel=1e-9
    )
    assert 0.0 <= s.explored_fraction <= 1.0
