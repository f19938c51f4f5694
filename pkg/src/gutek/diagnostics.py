"""Distribution-shift and segmentation diagnostics.

These quantify why perturbation granularity matters for a given model
and corpus: the 1-Wasserstein distance between embedding clouds of
original and perturbed texts, a random-forest probe that tries to tell
the two apart (out-of-distribution detectability), and descriptive
segmentation statistics.
"""

from __future__ import annotations

import json
import hashlib
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from sklearn.ensemble import RandomForestClassifier

from .blackbox import (
    DEFAULT_BATCH_SIZE,
    PredictionCache,
    TextModel,
    collect_outputs,
    embed_batch,
)
from .errors import (
    BadResponse,
    DegenerateLabels,
    DimensionError,
    EmptyDistribution,
    InvalidRequest,
)
from .neighborhood import SegmentMask, reconstruct
from .segmentation import segment_text, split_sentences, split_words

__all__ = [
    "EmbeddingSet",
    "wasserstein1",
    "ForestModel",
    "train_forest",
    "tree_structure_hashes",
    "OodSchemeResult",
    "OodResult",
    "ood_experiment",
    "parse_scheme",
    "SegStats",
    "seg_stats",
    "DEFAULT_DEPTH_GRID",
]

DEFAULT_DEPTH_GRID = (2, 5, 7, 10, 15, 20)
_TRAIN_FRACTION = 0.75


@dataclass(frozen=True)
class EmbeddingSet:
    """A labeled cloud of embedding vectors, one row per text."""

    label: str
    vectors: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[0] == 0:
            raise EmptyDistribution(f"embedding set {self.label!r} has no vectors")
        if not np.isfinite(v).all():
            raise BadResponse(f"embedding set {self.label!r} has non-finite entries")
        object.__setattr__(self, "vectors", v)

    @property
    def n(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def to_jsonl(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for i, row in enumerate(self.vectors):
                fh.write(
                    json.dumps(
                        {"id": f"{self.label}-{i}", "vector": [float(v) for v in row]},
                        separators=(",", ":"),
                    )
                    + "\n"
                )

    @classmethod
    def from_jsonl(cls, path: str, label: str | None = None) -> "EmbeddingSet":
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                payload = json.loads(line)
                rows.append([float(v) for v in payload["vector"]])
        if not rows:
            raise EmptyDistribution(f"no vectors in {path!r}")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise DimensionError(f"mixed vector dimensions in {path!r}: {sorted(widths)}")
        return cls(label=label or path, vectors=np.array(rows, dtype=float))


def wasserstein1(
    a: EmbeddingSet | np.ndarray,
    b: EmbeddingSet | np.ndarray,
    seed: int = 0,
) -> float:
    """Empirical 1-Wasserstein distance between two embedding clouds.

    Computed as the mean cost of a minimum-cost perfect matching under
    Euclidean distance, solved exactly.  When the sets differ in size,
    the larger is subsampled (without replacement, seeded) to match.
    """

    va = a.vectors if isinstance(a, EmbeddingSet) else np.asarray(a, dtype=float)
    vb = b.vectors if isinstance(b, EmbeddingSet) else np.asarray(b, dtype=float)
    if va.ndim != 2 or va.shape[0] == 0 or vb.ndim != 2 or vb.shape[0] == 0:
        raise EmptyDistribution("both embedding sets need at least one vector")
    if va.shape[1] != vb.shape[1]:
        raise DimensionError(
            f"embedding dimensions differ: {va.shape[1]} vs {vb.shape[1]}"
        )
    rng = np.random.default_rng(seed)
    if va.shape[0] > vb.shape[0]:
        va = va[rng.choice(va.shape[0], size=vb.shape[0], replace=False)]
    elif vb.shape[0] > va.shape[0]:
        vb = vb[rng.choice(vb.shape[0], size=va.shape[0], replace=False)]
    cost = cdist(va, vb)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / va.shape[0])


@dataclass(frozen=True)
class ForestModel:
    """A depth-limited random forest with its out-of-bag estimate."""

    forest: RandomForestClassifier
    max_depth: int
    oob_accuracy: float
    grid_scores: dict[int, float]

    @property
    def trees(self) -> list:
        return list(self.forest.estimators_)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forest.predict(x)

    def accuracy(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.mean(self.predict(x) == np.asarray(y)))


def train_forest(
    x: np.ndarray,
    y: Sequence,
    n_trees: int = 100,
    depth_grid: Sequence[int] = DEFAULT_DEPTH_GRID,
    seed: int = 0,
) -> ForestModel:
    """Fit bootstrap-bagged forests over a depth grid, keep the best OOB.

    Gini impurity, sqrt(d) feature subsampling, one forest per depth in
    the grid; the depth with the highest out-of-bag accuracy wins, ties
    to the smaller depth.
    """

    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise InvalidRequest("x must be 2-d with one label per row")
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise DegenerateLabels(f"need at least two classes, got {list(classes)}")
    if counts.min() < 2:
        raise DegenerateLabels("every class needs at least two samples")
    if not depth_grid:
        raise InvalidRequest("depth grid is empty")

    grid_scores: dict[int, float] = {}
    forests: dict[int, RandomForestClassifier] = {}
    for depth in depth_grid:
        forest = RandomForestClassifier(
            n_estimators=n_trees,
            criterion="gini",
            max_depth=depth,
            max_features="sqrt",
            bootstrap=True,
            oob_score=True,
            random_state=seed,
        )
        forest.fit(x, y)
        grid_scores[int(depth)] = float(forest.oob_score_)
        forests[int(depth)] = forest
    best_depth = max(sorted(grid_scores), key=lambda d: grid_scores[d])
    return ForestModel(
        forest=forests[best_depth],
        max_depth=best_depth,
        oob_accuracy=grid_scores[best_depth],
        grid_scores=grid_scores,
    )


def tree_structure_hashes(model: ForestModel) -> list[str]:
    """Digest of each tree's split structure, for determinism checks."""

    hashes = []
    for tree in model.trees:
        t = tree.tree_
        digest = hashlib.sha256()
        digest.update(np.asarray(t.feature).tobytes())
        digest.update(np.asarray(t.threshold).round(12).tobytes())
        digest.update(np.asarray(t.children_left).tobytes())
        digest.update(np.asarray(t.children_right).tobytes())
        hashes.append(digest.hexdigest())
    return hashes


def parse_scheme(name: str) -> Callable[[str, np.random.Generator], str | None]:
    """Resolve a perturbation scheme by name.

    ``identity`` returns the text unchanged; ``remove_words:K`` deletes
    K distinct random word tokens; ``remove_sentence`` deletes one
    random sentence; ``remove_last_word`` deletes the final word token.
    A scheme returns None for texts too short for it.
    """

    if name == "identity":
        return lambda text, rng: text
    if name == "remove_last_word":

        def drop_last(text: str, rng: np.random.Generator) -> str | None:
            doc = split_words(text)
            if doc.n_units < 2:
                return None
            mask = SegmentMask.from_removed(doc.n_units, (doc.n_units - 1,))
            return reconstruct(doc, mask)

        return drop_last
    if name == "remove_sentence":

        def drop_sentence(text: str, rng: np.random.Generator) -> str | None:
            doc = split_sentences(text)
            if doc.n_units < 1:
                return None
            idx = int(rng.integers(doc.n_units))
            mask = SegmentMask.from_removed(doc.n_units, (idx,))
            return reconstruct(doc, mask)

        return drop_sentence
    kind, sep, arg = name.partition(":")
    if kind == "remove_words" and sep:
        k = int(arg)
        if k < 1:
            raise InvalidRequest("remove_words needs a positive count")

        def drop_words(text: str, rng: np.random.Generator) -> str | None:
            doc = split_words(text)
            if doc.n_units < k:
                return None
            removed = tuple(
                int(i) for i in rng.choice(doc.n_units, size=k, replace=False)
            )
            mask = SegmentMask.from_removed(doc.n_units, removed)
            return reconstruct(doc, mask)

        return drop_words
    raise InvalidRequest(
        f"unknown scheme {name!r} "
        "(use identity, remove_sentence, remove_last_word, remove_words:K)"
    )


@dataclass(frozen=True)
class OodSchemeResult:
    """How detectable one perturbation scheme is for one model."""

    scheme: str
    n_per_class: int
    n_skipped: int
    chosen_depth: int
    oob_accuracy: float
    holdout_accuracy: float

    def to_json(self) -> dict:
        return {
            "scheme": self.scheme,
            "n_per_class": self.n_per_class,
            "n_skipped": self.n_skipped,
            "chosen_depth": self.chosen_depth,
            "oob_accuracy": self.oob_accuracy,
            "holdout_accuracy": self.holdout_accuracy,
        }


@dataclass(frozen=True)
class OodResult:
    schemes: tuple[OodSchemeResult, ...]

    def to_json(self) -> dict:
        return {"schemes": [s.to_json() for s in self.schemes]}


def _run_scheme(
    model: TextModel,
    texts: Sequence[str],
    scheme_name: str,
    seed: int,
    n_trees: int,
    depth_grid: Sequence[int],
    batch_size: int,
    cache: PredictionCache | None,
) -> OodSchemeResult:
    scheme = parse_scheme(scheme_name)
    rng = np.random.default_rng(seed)
    usable: list[str] = []
    skipped = 0
    for text in texts:
        if scheme(text, rng) is None:
            skipped += 1
            continue
        usable.append(text)
    if len(usable) < 8:
        raise InvalidRequest(f"scheme {scheme_name!r} left {len(usable)} usable texts")

    # Disjoint halves: one half contributes originals, the other its
    # altered form.  Pairing the same text into both classes would let
    # the forest key on memorized twins instead of the shift itself.
    order = rng.permutation(len(usable))
    half = len(usable) // 2
    originals = [usable[i] for i in order[:half]]
    altered = []
    for i in order[half : 2 * half]:
        result = scheme(usable[i], rng)
        # pre-screened above; a scheme must stay usable on a second draw
        if result is None:
            raise InvalidRequest(f"scheme {scheme_name!r} is not stable on retry")
        altered.append(result)

    raw = embed_batch(model, originals + altered, batch_size, cache)
    vectors = collect_outputs(raw)
    x = np.array([v.values for v in vectors], dtype=float)
    y = np.array([0] * len(originals) + [1] * len(altered))

    split = rng.permutation(len(y))
    n_train = int(round(_TRAIN_FRACTION * len(y)))
    train_idx, test_idx = split[:n_train], split[n_train:]
    forest = train_forest(
        x[train_idx],
        y[train_idx],
        n_trees=n_trees,
        depth_grid=depth_grid,
        seed=int(rng.integers(2**31 - 1)),
    )
    return OodSchemeResult(
        scheme=scheme_name,
        n_per_class=half,
        n_skipped=skipped,
        chosen_depth=forest.max_depth,
        oob_accuracy=forest.oob_accuracy,
        holdout_accuracy=forest.accuracy(x[test_idx], y[test_idx]),
    )


def ood_experiment(
    model: TextModel,
    texts: Sequence[str],
    schemes: Sequence[str] = ("remove_words:5", "remove_sentence"),
    seed: int = 0,
    n_trees: int = 100,
    depth_grid: Sequence[int] = DEFAULT_DEPTH_GRID,
    batch_size: int = DEFAULT_BATCH_SIZE,
    cache: PredictionCache | None = None,
) -> OodResult:
    """Train a forest to tell original from perturbed embeddings.

    For each scheme the usable texts are split into two disjoint halves,
    one embedded as-is and one after perturbation, then shuffled into a
    75/25 split and fit with a depth-grid forest selected by out-of-bag
    accuracy; held-out accuracy near 0.5 means the perturbation stays on
    the data manifold, near 1.0 means it is trivially detectable.
    """

    if len(texts) == 0:
        raise InvalidRequest("no texts for the experiment")
    results = []
    for i, scheme_name in enumerate(schemes):
        results.append(
            _run_scheme(
                model,
                texts,
                scheme_name,
                seed + 7919 * i,
                n_trees,
                depth_grid,
                batch_size,
                cache,
            )
        )
    return OodResult(schemes=tuple(results))


@dataclass(frozen=True)
class SegStats:
    """Mean/std of segment counts, words per segment, and split time."""

    segmenter: str
    n_texts: int
    n_skipped: int
    segments_mean: float
    segments_std: float
    words_per_segment_mean: float
    words_per_segment_std: float
    seconds_mean: float
    seconds_std: float

    def to_json(self) -> dict:
        return {
            "segmenter": self.segmenter,
            "n_texts": self.n_texts,
            "n_skipped": self.n_skipped,
            "segments_mean": self.segments_mean,
            "segments_std": self.segments_std,
            "words_per_segment_mean": self.words_per_segment_mean,
            "words_per_segment_std": self.words_per_segment_std,
            "seconds_mean": self.seconds_mean,
            "seconds_std": self.seconds_std,
        }


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    if len(values) == 0:
        return 0.0, 0.0
    mean = sum(values) / len(values)
    if len(values) == 1:
        return float(mean), 0.0
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return float(mean), float(var**0.5)


def seg_stats(corpus: Sequence[str], segmenter: str) -> SegStats:
    """Descriptive segmentation statistics over a corpus.

    Texts that produce no segments are skipped and counted.  The std is
    the unbiased (n-1) estimate, zero for a single text.
    """

    if len(corpus) == 0:
        raise InvalidRequest("empty corpus")
    seg_counts: list[float] = []
    words_per: list[float] = []
    seconds: list[float] = []
    skipped = 0
    for text in corpus:
        t0 = time.perf_counter()
        doc = segment_text(text, segmenter)
        elapsed = time.perf_counter() - t0
        if doc.n_units == 0:
            skipped += 1
            continue
        n_words = split_words(text).n_units
        seg_counts.append(float(doc.n_units))
        words_per.append(n_words / doc.n_units)
        seconds.append(elapsed)
    if not seg_counts:
        raise InvalidRequest("every text in the corpus was unsegmentable")
    sm, ss = _mean_std(seg_counts)
    wm, ws = _mean_std(words_per)
    tm, ts = _mean_std(seconds)
    return SegStats(
        segmenter=segmenter,
        n_texts=len(seg_counts),
        n_skipped=skipped,
        segments_mean=sm,
        segments_std=ss,
        words_per_segment_mean=wm,
        words_per_segment_std=ws,
        seconds_mean=tm,
        seconds_std=ts,
    )
