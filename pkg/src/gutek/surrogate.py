"""Linear surrogate fitting and the end-to-end explanation pipeline.

An explanation perturbs a segmented document, queries the black-box
model on each reconstruction, and fits a (weighted) least-squares line
from mask bits to the probability of the target class.  Coefficients
are the per-segment attributions.

Two methods share the pipeline.  ``gutek`` enumerates removal masks in
locality order and fits an unweighted surrogate; ``lime-word`` samples
Bernoulli word masks and weights records with an exponential kernel on
the removed fraction.  Word-level scores can be re-aggregated onto a
coarser segmentation for side-by-side comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .blackbox import (
    DEFAULT_BATCH_SIZE,
    ModelOutput,
    PredictionCache,
    TextModel,
    collect_outputs,
    predict_batch,
)
from .errors import (
    AlignmentError,
    BadResponse,
    EmptyDocument,
    InsufficientSamples,
    InvalidRequest,
    MaskMismatch,
)
from .neighborhood import (
    DEFAULT_KERNEL_WIDTH,
    SegmentMask,
    enumerate_local_masks,
    reconstruct,
    sample_word_masks,
)
from .segmentation import Document, segment_text, split_words

__all__ = [
    "PerturbationRecord",
    "Explanation",
    "fit_surrogate",
    "explain",
    "aggregate_to_sentences",
    "Explainer",
    "METHODS",
    "AGGREGATION_MODES",
]

METHODS = ("gutek", "lime-word")
AGGREGATION_MODES = ("sum", "max")

_CONDITION_LIMIT = 1e12
_RIDGE_SCALE = 1e-8


@dataclass(slots=True, frozen=True)
class PerturbationRecord:
    """One perturbed text with its mask, model output, and fit weight."""

    mask: SegmentMask
    text: str
    output: ModelOutput
    kernel_weight: float = 1.0


@dataclass(slots=True, frozen=True)
class Explanation:
    """Per-unit attributions for one document and one target class."""

    document: Document
    unit_scores: tuple[float, ...]
    intercept: float
    target_class: int
    fit_r2: float
    n_samples: int
    method: str
    target_label: str | None = None


def fit_surrogate(
    records: Sequence[PerturbationRecord], target_class: int
) -> tuple[np.ndarray, float, float]:
    """Weighted least squares from mask bits to the target-class score.

    Solves the normal equations directly.  If the design is close to
    singular (condition estimate above 1e12) a tiny ridge penalty is
    added to the coefficients only, never the intercept, so a fully
    degenerate design yields zero weights and an intercept equal to the
    weighted mean response.

    Returns (weights, intercept, weighted r squared).
    """

    if len(records) < 2:
        raise InsufficientSamples(f"{len(records)} records cannot constrain a line")
    n_units = records[0].mask.n_units
    for rec in records:
        if rec.mask.n_units != n_units:
            raise MaskMismatch(
                f"record masks disagree: {rec.mask.n_units} bits vs {n_units}"
            )
    if not 0 <= target_class < len(records[0].output.scores):
        raise InvalidRequest(f"target class {target_class} out of range")

    x = np.array([rec.mask.bits for rec in records], dtype=float)
    y = np.array([rec.output.scores[target_class] for rec in records], dtype=float)
    w = np.array([rec.kernel_weight for rec in records], dtype=float)
    if not (np.isfinite(y).all() and np.isfinite(w).all()):
        raise BadResponse("non-finite response or weight in perturbation records")
    if (w < 0).any():
        raise InvalidRequest("kernel weights must be non-negative")
    if w.sum() <= 0:
        raise InvalidRequest("kernel weights must not all be zero")

    design = np.hstack([np.ones((len(records), 1)), x])
    a = design.T @ (design * w[:, None])
    b = design.T @ (w * y)

    condition = np.linalg.cond(a)
    if not np.isfinite(condition) or condition > _CONDITION_LIMIT:
        coef_trace = float(a.diagonal()[1:].sum())
        lam = _RIDGE_SCALE * coef_trace / n_units if coef_trace > 0 else _RIDGE_SCALE
        a = a + np.diag([0.0] + [lam] * n_units)
    try:
        beta = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        beta = np.linalg.lstsq(a, b, rcond=None)[0]

    fitted = design @ beta
    y_mean = float(np.average(y, weights=w))
    ss_res = float(w @ (y - fitted) ** 2)
    ss_tot = float(w @ (y - y_mean) ** 2)
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-24 else -np.inf
    else:
        r2 = 1.0 - ss_res / ss_tot
    return beta[1:], float(beta[0]), float(r2)


def _predict_records(
    model: TextModel,
    doc: Document,
    masks: Sequence[SegmentMask],
    weights: Sequence[float],
    batch_size: int,
    cache: PredictionCache | None,
) -> list[PerturbationRecord]:
    texts = [reconstruct(doc, m) for m in masks]
    outputs = collect_outputs(predict_batch(model, texts, batch_size, cache))
    return [
        PerturbationRecord(mask=m, text=t, output=o, kernel_weight=kw)
        for m, t, o, kw in zip(masks, texts, outputs, weights)
    ]


def explain(
    model: TextModel,
    text: str,
    granularity: str = "sentence",
    budget: int = 10,
    method: str = "gutek",
    seed: int = 0,
    kernel_width: float = DEFAULT_KERNEL_WIDTH,
    target_class: int | None = None,
    aggregation: str = "sum",
    batch_size: int = DEFAULT_BATCH_SIZE,
    cache: PredictionCache | None = None,
    abbreviations: Sequence[str] | None = None,
) -> Explanation:
    """Explain one prediction of ``model`` on ``text``.

    The target class defaults to the model's argmax on the unperturbed
    (all segments kept) text.  With method ``lime-word`` the perturbation
    always runs over word tokens; when a coarser granularity is asked
    for, token scores are aggregated onto it with ``aggregation``.
    """

    if method not in METHODS:
        raise InvalidRequest(f"unknown method {method!r} (known: {METHODS})")
    if budget < 2:
        raise InvalidRequest("budget must be at least 2")

    if method == "lime-word":
        doc = split_words(text)
    else:
        doc = segment_text(text, granularity, abbreviations)
    if doc.n_units == 0:
        raise EmptyDocument("text has no segments at the requested granularity")

    if method == "gutek":
        masks = list(enumerate_local_masks(doc.n_units, budget))
        weights = [1.0] * len(masks)
    else:
        pairs = sample_word_masks(doc.n_units, budget, seed, kernel_width=kernel_width)
        masks = [m for m, _ in pairs]
        weights = [w for _, w in pairs]

    records = _predict_records(model, doc, masks, weights, batch_size, cache)
    if target_class is None:
        target = records[0].output.argmax
    else:
        if not 0 <= target_class < len(model.labels):
            raise InvalidRequest(f"target class {target_class} out of range")
        target = target_class

    unit_weights, intercept, r2 = fit_surrogate(records, target)
    label = model.labels[target] if target < len(model.labels) else None
    explanation = Explanation(
        document=doc,
        unit_scores=tuple(float(v) for v in unit_weights),
        intercept=intercept,
        target_class=target,
        fit_r2=r2,
        n_samples=len(records),
        method=method,
        target_label=label,
    )
    if method == "lime-word" and granularity != "word":
        coarse = segment_text(text, granularity, abbreviations)
        return aggregate_to_sentences(explanation, coarse, mode=aggregation)
    return explanation


def aggregate_to_sentences(
    word_explanation: Explanation, sentence_doc: Document, mode: str = "sum"
) -> Explanation:
    """Fold word-token scores onto a coarser segmentation of the same text.

    Every token must fall inside exactly one coarse segment; segments
    with no tokens score zero.  Intercept, fit quality, and target class
    carry over unchanged.
    """

    if mode not in AGGREGATION_MODES:
        raise InvalidRequest(f"unknown aggregation {mode!r} (known: {AGGREGATION_MODES})")
    word_doc = word_explanation.document
    if word_doc.text != sentence_doc.text:
        raise AlignmentError("word and sentence documents segment different texts")

    grouped: list[list[float]] = [[] for _ in range(sentence_doc.n_units)]
    cursor = 0
    for token, score in zip(word_doc.segments, word_explanation.unit_scores):
        while (
            cursor < sentence_doc.n_units
            and sentence_doc.segments[cursor].char_end <= token.char_start
        ):
            cursor += 1
        if cursor >= sentence_doc.n_units:
            raise AlignmentError(
                f"token at {token.char_start} lies after the last segment"
            )
        seg = sentence_doc.segments[cursor]
        if token.char_start < seg.char_start or token.char_end > seg.char_end:
            raise AlignmentError(
                f"token [{token.char_start}, {token.char_end}) does not nest in"
                f" segment [{seg.char_start}, {seg.char_end})"
            )
        grouped[cursor].append(score)

    if mode == "sum":
        scores = tuple(float(sum(g)) if g else 0.0 for g in grouped)
    else:
        scores = tuple(float(max(g)) if g else 0.0 for g in grouped)
    return replace(
        word_explanation,
        document=sentence_doc,
        unit_scores=scores,
    )


class Explainer:
    """Estimator-style front end over :func:`explain`.

    Holds the method parameters the sklearn way (constructor arguments,
    ``get_params``/``set_params``) so sweeps can clone and reconfigure
    it; ``explain`` is the work method.
    """

    def __init__(
        self,
        granularity: str = "sentence",
        method: str = "gutek",
        budget: int = 10,
        seed: int = 0,
        kernel_width: float = DEFAULT_KERNEL_WIDTH,
        aggregation: str = "sum",
        batch_size: int = DEFAULT_BATCH_SIZE,
    ):
        self.granularity = granularity
        self.method = method
        self.budget = budget
        self.seed = seed
        self.kernel_width = kernel_width
        self.aggregation = aggregation
        self.batch_size = batch_size

    def get_params(self, deep: bool = True) -> dict:
        del deep
        return {
            "granularity": self.granularity,
            "method": self.method,
            "budget": self.budget,
            "seed": self.seed,
            "kernel_width": self.kernel_width,
            "aggregation": self.aggregation,
            "batch_size": self.batch_size,
        }

    def set_params(self, **params: object) -> "Explainer":
        known = self.get_params()
        for key, value in params.items():
            if key not in known:
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def explain(
        self,
        model: TextModel,
        text: str,
        target_class: int | None = None,
        cache: PredictionCache | None = None,
    ) -> Explanation:
        return explain(
            model,
            text,
            granularity=self.granularity,
            budget=self.budget,
            method=self.method,
            seed=self.seed,
            kernel_width=self.kernel_width,
            target_class=target_class,
            aggregation=self.aggregation,
            batch_size=self.batch_size,
            cache=cache,
        )
