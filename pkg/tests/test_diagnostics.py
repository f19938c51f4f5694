import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gutek.builtin import train_builtin_classifier
from gutek.diagnostics import (
    DEFAULT_DEPTH_GRID,
    EmbeddingSet,
    OodResult,
    ood_experiment,
    parse_scheme,
    seg_stats,
    train_forest,
    tree_structure_hashes,
    wasserstein1,
)
from gutek.errors import (
    BadResponse,
    DegenerateLabels,
    DimensionError,
    EmptyDistribution,
    InvalidRequest,
)
from oracles import w1_factorial

finite_floats = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def _cloud(draw_shape):
    return arrays(np.float64, draw_shape, elements=finite_floats)


def test_w1_point_masses():
    assert wasserstein1(np.array([[0.0]]), np.array([[1.0]])) == pytest.approx(1.0)
    assert wasserstein1(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])) == pytest.approx(5.0)


def test_w1_matches_factorial_oracle_fixed():
    a = np.array([[0.0, 0.0], [1.0, 0.0], [5.0, 5.0]])
    b = np.array([[0.2, 0.1], [4.9, 5.2], [1.1, -0.1]])
    assert wasserstein1(a, b) == pytest.approx(w1_factorial(a.tolist(), b.tolist()), abs=1e-12)


@given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 10_000))
@settings(max_examples=80, deadline=None)
def test_w1_matches_factorial_oracle_random(n, dim, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-5, 5, size=(n, dim))
    b = rng.uniform(-5, 5, size=(n, dim))
    assert wasserstein1(a, b) == pytest.approx(
        w1_factorial(a.tolist(), b.tolist()), abs=1e-9
    )


@given(st.integers(2, 5), st.integers(0, 10_000), st.floats(0.05, 20.0))
@settings(max_examples=60, deadline=None)
def test_w1_axioms(n, seed, scale):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-3, 3, size=(n, 2))
    b = rng.uniform(-3, 3, size=(n, 2))
    c = rng.uniform(-3, 3, size=(n, 2))
    dab = wasserstein1(a, b)
    assert dab == pytest.approx(wasserstein1(b, a), abs=1e-12)
    assert dab >= 0.0
    assert wasserstein1(a, c) <= dab + wasserstein1(b, c) + 1e-9
    assert wasserstein1(a * scale, b * scale) == pytest.approx(scale * dab, rel=1e-9)


def test_w1_zero_iff_same_multiset():
    rng = np.random.default_rng(4)
    a = rng.uniform(-1, 1, size=(6, 3))
    shuffled = a[rng.permutation(6)]
    assert wasserstein1(a, shuffled) == pytest.approx(0.0, abs=1e-12)
    moved = a.copy()
    moved[2, 1] += 0.5
    assert wasserstein1(a, moved) > 1e-3


def test_w1_subsamples_larger_side():
    rng = np.random.default_rng(9)
    a = rng.normal(size=(12, 2))
    b = rng.normal(size=(5, 2))
    first = wasserstein1(a, b, seed=3)
    again = wasserstein1(a, b, seed=3)
    assert first == again
    identical = wasserstein1(a, a[:4], seed=0)
    assert identical >= 0.0  # a strict subset may still pay matching cost


def test_w1_errors():
    with pytest.raises(EmptyDistribution):
        wasserstein1(np.empty((0, 2)), np.array([[1.0, 2.0]]))
    with pytest.raises(DimensionError):
        wasserstein1(np.array([[1.0]]), np.array([[1.0, 2.0]]))


def test_embedding_set_roundtrip(tmp_path):
    vectors = np.random.default_rng(1).normal(size=(7, 4))
    out = tmp_path / "cloud.jsonl"
    EmbeddingSet(label="orig", vectors=vectors).to_jsonl(str(out))
    back = EmbeddingSet.from_jsonl(str(out), label="orig")
    assert back.n == 7 and back.dim == 4
    assert np.allclose(back.vectors, vectors)


def test_embedding_set_errors(tmp_path):
    with pytest.raises(EmptyDistribution):
        EmbeddingSet(label="x", vectors=np.empty((0, 3)))
    with pytest.raises(BadResponse):
        EmbeddingSet(label="x", vectors=np.array([[np.nan, 1.0]]))
    ragged = tmp_path / "ragged.jsonl"
    ragged.write_text('{"id":"a","vector":[1.0]}\n{"id":"b","vector":[1.0,2.0]}\n')
    with pytest.raises(DimensionError):
        EmbeddingSet.from_jsonl(str(ragged))
    empty = tmp_path / "empty.jsonl"
    empty.write_text("\n")
    with pytest.raises(EmptyDistribution):
        EmbeddingSet.from_jsonl(str(empty))


def _blobs(n_per=80, dim=4, gap=8.0, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_per, dim))
    b = rng.normal(size=(n_per, dim)) + gap
    x = np.vstack([a, b])
    y = np.array([0] * n_per + [1] * n_per)
    return x, y


def test_forest_separates_blobs():
    x, y = _blobs()
    model = train_forest(x, y, n_trees=60, seed=0)
    assert model.oob_accuracy > 0.95
    assert model.accuracy(x, y) > 0.95
    assert model.max_depth in model.grid_scores
    assert set(model.grid_scores) == set(DEFAULT_DEPTH_GRID)


def test_forest_random_labels_near_chance():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(500, 8))
    y = rng.integers(0, 2, size=500)
    model = train_forest(x, y, n_trees=60, depth_grid=(2, 7, 15), seed=0)
    assert 0.4 <= model.oob_accuracy <= 0.6


def test_forest_deterministic():
    x, y = _blobs(n_per=40)
    a = train_forest(x, y, n_trees=30, seed=5)
    b = train_forest(x, y, n_trees=30, seed=5)
    assert tree_structure_hashes(a) == tree_structure_hashes(b)
    assert a.max_depth == b.max_depth
    c = train_forest(x, y, n_trees=30, seed=6)
    assert tree_structure_hashes(a) != tree_structure_hashes(c)


def test_forest_tie_prefers_smaller_depth():
    # perfectly separable in one split: every depth reaches the same OOB
    x = np.array([[0.0], [0.1], [0.2], [10.0], [10.1], [10.2]] * 10)
    y = np.array([0, 0, 0, 1, 1, 1] * 10)
    model = train_forest(x, y, n_trees=30, depth_grid=(2, 5, 7), seed=0)
    scores = model.grid_scores
    if len(set(scores.values())) == 1:
        assert model.max_depth == 2
    else:
        assert scores[model.max_depth] == max(scores.values())


def test_forest_degenerate_labels():
    x = np.zeros((10, 2))
    with pytest.raises(DegenerateLabels):
        train_forest(x, np.zeros(10), n_trees=10)
    with pytest.raises(DegenerateLabels):
        train_forest(x, np.array([0] * 9 + [1]), n_trees=10)
    with pytest.raises(InvalidRequest):
        train_forest(np.zeros((3, 2)), np.array([0, 1]), n_trees=10)


def test_parse_scheme_identity_and_unknown():
    rng = np.random.default_rng(0)
    assert parse_scheme("identity")("keeps the text", rng) == "keeps the text"
    with pytest.raises(InvalidRequest):
        parse_scheme("shuffle_words")
    with pytest.raises(InvalidRequest):
        parse_scheme("remove_words:0")


def test_parse_scheme_remove_words():
    rng = np.random.default_rng(1)
    scheme = parse_scheme("remove_words:2")
    out = scheme("one two three four five", rng)
    assert out is not None
    assert len(out.split()) == 3
    assert all(w in "one two three four five".split() for w in out.split())
    assert scheme("solo", rng) is None


def test_parse_scheme_remove_sentence():
    rng = np.random.default_rng(2)
    scheme = parse_scheme("remove_sentence")
    text = "First point here. Second point there. Third one closes."
    out = scheme(text, rng)
    assert out is not None
    survivors = [s for s in ("First", "Second", "Third") if s in out]
    assert len(survivors) == 2
    assert scheme("", rng) is None


def test_parse_scheme_remove_last_word():
    rng = np.random.default_rng(3)
    scheme = parse_scheme("remove_last_word")
    assert scheme("walks in the meadow", rng) == "walks in the"
    assert scheme("word", rng) is None


def test_ood_experiment_smoke():
    corpus = [("sunny bright warm", "pos"), ("rainy cold dark", "neg")] * 3
    model = train_builtin_classifier(corpus)
    rng = np.random.default_rng(0)
    words = ["sunny", "rainy", "warm", "cold", "meadow", "stone"]
    texts = [
        " ".join(rng.choice(words, size=6)) + "."
        for _ in range(48)
    ]
    result = ood_experiment(model, texts, schemes=("identity",), seed=0, n_trees=20, depth_grid=(2, 5))
    assert isinstance(result, OodResult)
    one = result.schemes[0]
    assert one.scheme == "identity"
    assert one.n_per_class == 24
    assert one.n_skipped == 0
    assert 0.0 <= one.holdout_accuracy <= 1.0
    assert one.chosen_depth in (2, 5)
    payload = result.to_json()
    assert payload["schemes"][0]["n_per_class"] == 24


def test_ood_experiment_skips_short_texts():
    corpus = [("good fine", "pos"), ("bad poor", "neg")]
    model = train_builtin_classifier(corpus)
    texts = ["good fine bad poor good fine bad poor"] * 20 + ["solo"] * 4
    result = ood_experiment(
        model, texts, schemes=("remove_words:3",), seed=1, n_trees=40, depth_grid=(2,)
    )
    assert result.schemes[0].n_skipped == 4


def test_ood_experiment_errors():
    corpus = [("good", "pos"), ("bad", "neg")]
    model = train_builtin_classifier(corpus)
    with pytest.raises(InvalidRequest):
        ood_experiment(model, [], schemes=("identity",))
    with pytest.raises(InvalidRequest):
        ood_experiment(model, ["a b"] * 4, schemes=("identity",), n_trees=10, depth_grid=(2,))


def test_seg_stats_uniform_sentences():
    text = " ".join(f"Sentence number {i} sits here." for i in range(10))
    stats = seg_stats([text, text, text], segmenter="sentence")
    assert stats.segments_mean == pytest.approx(10.0)
    assert stats.segments_std == pytest.approx(0.0)
    assert stats.n_texts == 3
    assert stats.n_skipped == 0
    # six word tokens per sentence: the terminator counts as a token
    assert stats.words_per_segment_mean == pytest.approx(6.0)


def test_seg_stats_word_granularity():
    stats = seg_stats(["five words sit right here", "three more words"], segmenter="word")
    assert stats.words_per_segment_mean == pytest.approx(1.0)
    assert stats.words_per_segment_std == pytest.approx(0.0)
    assert stats.segments_mean == pytest.approx(4.0)


def test_seg_stats_skips_empty_texts():
    stats = seg_stats(["Real text here.", "   ", ""], segmenter="sentence")
    assert stats.n_texts == 1
    assert stats.n_skipped == 2
    assert stats.seconds_mean >= 0.0


def test_seg_stats_errors():
    with pytest.raises(InvalidRequest):
        seg_stats([], segmenter="sentence")
    with pytest.raises(InvalidRequest):
        seg_stats(["", "  "], segmenter="sentence")
    payload = seg_stats(["One. Two."], segmenter="sentence").to_json()
    assert payload["segmenter"] == "sentence"
    assert payload["n_texts"] == 1
