"""Granularity-aware local explanations for black-box text classifiers.

The core loop: segment a text into units (words, sentences, paragraphs),
enumerate or sample removal neighborhoods, query the model on each
reconstruction, and fit a linear surrogate whose coefficients score the
units.  Around that sit fidelity metrics, an evaluation harness, and
diagnostics for the perturbation distribution itself.
"""

from .blackbox import (
    EmbeddingVector,
    ItemFailure,
    ModelOutput,
    PredictionCache,
    SubprocessModel,
    TextModel,
    default_cache_dir,
    embed_batch,
    make_model,
    predict_batch,
    text_key,
)
from .builtin import BuiltinModel, TfidfNaiveBayes, train_builtin_classifier
from .diagnostics import (
    EmbeddingSet,
    ForestModel,
    OodResult,
    OodSchemeResult,
    SegStats,
    ood_experiment,
    parse_scheme,
    seg_stats,
    train_forest,
    wasserstein1,
)
from .errors import (
    AlignmentError,
    BadResponse,
    DegenerateCorpus,
    DegenerateLabels,
    DimensionError,
    EmptyCaseSet,
    EmptyDistribution,
    EmptyDocument,
    EmptyScores,
    GutekError,
    InsufficientSamples,
    InvalidRequest,
    MaskMismatch,
    ModelUnavailable,
    ProtocolError,
    UnknownSegmenter,
    UnsupportedCapability,
)
from .harness import (
    FidelityExample,
    FidelityResult,
    FidelityTask,
    InsertionCase,
    InsertionResult,
    build_insertion_cases,
    make_marker_model,
    make_synthetic_fidelity_task,
    make_synthetic_insertion_corpus,
    run_fidelity,
    run_insertion,
)
from .metrics import EvalRecord, MetricReport, aggregate, hpd, iou, snr
from .neighborhood import (
    NeighborhoodStats,
    SegmentMask,
    enumerate_local_masks,
    kernel_weight,
    neighborhood_stats,
    reconstruct,
    sample_word_masks,
)
from .report import explanation_to_json, render_html
from .segmentation import (
    Document,
    Segment,
    get_segmenter,
    load_abbreviations,
    register_segmenter,
    segment_text,
    segmenter_names,
    split_paragraphs,
    split_sentences,
    split_words,
)
from .surrogate import (
    Explainer,
    Explanation,
    PerturbationRecord,
    aggregate_to_sentences,
    explain,
    fit_surrogate,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "BadResponse",
    "BuiltinModel",
    "DegenerateCorpus",
    "DegenerateLabels",
    "DimensionError",
    "Document",
    "EmbeddingSet",
    "EmbeddingVector",
    "EmptyCaseSet",
    "EmptyDistribution",
    "EmptyDocument",
    "EmptyScores",
    "EvalRecord",
    "Explainer",
    "Explanation",
    "FidelityExample",
    "FidelityResult",
    "FidelityTask",
    "ForestModel",
    "GutekError",
    "InsertionCase",
    "InsertionResult",
    "InsufficientSamples",
    "InvalidRequest",
    "ItemFailure",
    "MaskMismatch",
    "MetricReport",
    "ModelOutput",
    "ModelUnavailable",
    "NeighborhoodStats",
    "OodResult",
    "OodSchemeResult",
    "PerturbationRecord",
    "PredictionCache",
    "ProtocolError",
    "SegStats",
    "Segment",
    "SegmentMask",
    "SubprocessModel",
    "TextModel",
    "TfidfNaiveBayes",
    "UnknownSegmenter",
    "UnsupportedCapability",
    "aggregate",
    "aggregate_to_sentences",
    "build_insertion_cases",
    "default_cache_dir",
    "embed_batch",
    "enumerate_local_masks",
    "explain",
    "explanation_to_json",
    "fit_surrogate",
    "get_segmenter",
    "hpd",
    "iou",
    "kernel_weight",
    "load_abbreviations",
    "make_marker_model",
    "make_model",
    "make_synthetic_fidelity_task",
    "make_synthetic_insertion_corpus",
    "neighborhood_stats",
    "ood_experiment",
    "parse_scheme",
    "predict_batch",
    "reconstruct",
    "register_segmenter",
    "render_html",
    "run_fidelity",
    "run_insertion",
    "sample_word_masks",
    "seg_stats",
    "segment_text",
    "segmenter_names",
    "snr",
    "split_paragraphs",
    "split_sentences",
    "split_words",
    "text_key",
    "train_builtin_classifier",
    "train_forest",
    "wasserstein1",
]
