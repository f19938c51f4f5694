"""Exception types raised across the toolkit.

Every error the package raises deliberately derives from GutekError so
callers (and the CLI) can distinguish tool failures from programming
mistakes.
"""

from __future__ import annotations

__all__ = [
    "GutekError",
    "UnknownSegmenter",
    "EmptyDocument",
    "ModelUnavailable",
    "ProtocolError",
    "InvalidRequest",
    "UnsupportedCapability",
    "BadResponse",
    "DegenerateCorpus",
    "MaskMismatch",
    "InsufficientSamples",
    "EmptyScores",
    "DimensionError",
    "EmptyDistribution",
    "DegenerateLabels",
    "AlignmentError",
    "EmptyCaseSet",
]


class GutekError(Exception):
    """Base class for all errors raised by this package."""


class UnknownSegmenter(GutekError):
    """A segmenter name is not present in the registry."""


class EmptyDocument(GutekError):
    """An operation needs at least one segment but the document has none."""


class ModelUnavailable(GutekError):
    """The model backend cannot be reached (dead subprocess, missing file)."""


class ProtocolError(GutekError):
    """The model subprocess violated the line protocol (bad JSON, id desync)."""


class InvalidRequest(GutekError):
    """A request to the model client is malformed (for example no texts)."""


class UnsupportedCapability(GutekError):
    """The model does not advertise the capability an operation needs."""


class BadResponse(GutekError):
    """The model returned scores that fail validation (NaN, wrong shape)."""


class DegenerateCorpus(GutekError):
    """A training corpus has fewer than two distinct labels or no documents."""


class MaskMismatch(GutekError):
    """A mask's bit count does not match the document's segment count."""


class InsufficientSamples(GutekError):
    """Too few perturbation records to fit a surrogate."""


class EmptyScores(GutekError):
    """A metric was asked to score an empty attribution vector."""


class DimensionError(GutekError):
    """Two embedding sets do not share a common vector dimension."""


class EmptyDistribution(GutekError):
    """An embedding set holds no vectors."""


class DegenerateLabels(GutekError):
    """Classifier training data contains a single class."""


class AlignmentError(GutekError):
    """Word tokens do not nest inside the coarser segmentation."""


class EmptyCaseSet(GutekError):
    """No insertion case satisfied the construction constraints."""
