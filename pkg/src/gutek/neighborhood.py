"""Perturbation neighborhoods over segmented documents.

A neighborhood is the set of texts reachable by removing subsets of a
document's segments.  Sentence-level neighborhoods are small enough to
enumerate in locality order (fewest removals first); word-level ones
explode combinatorially, so they are sampled.  The size arithmetic works
in log space because 2**n_units overflows quickly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import EmptyDocument, MaskMismatch
from .segmentation import Document

__all__ = [
    "SegmentMask",
    "NeighborhoodStats",
    "enumerate_local_masks",
    "sample_word_masks",
    "kernel_weight",
    "reconstruct",
    "neighborhood_stats",
    "DEFAULT_KERNEL_WIDTH",
]

DEFAULT_KERNEL_WIDTH = 0.25


@dataclass(slots=True, frozen=True)
class SegmentMask:
    """Bit per segment: 1 keeps the segment, 0 removes it."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("mask bits must be 0 or 1")

    @classmethod
    def all_ones(cls, n: int) -> "SegmentMask":
        return cls(bits=(1,) * n)

    @classmethod
    def from_removed(cls, n: int, removed: tuple[int, ...]) -> "SegmentMask":
        bits = [1] * n
        for idx in removed:
            bits[idx] = 0
        return cls(bits=tuple(bits))

    @property
    def n_units(self) -> int:
        return len(self.bits)

    @property
    def n_removed(self) -> int:
        return len(self.bits) - sum(self.bits)

    def removed_indices(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b == 0)


@dataclass(slots=True, frozen=True)
class NeighborhoodStats:
    """Size of a removal neighborhood and the explored share of it."""

    n_units: float
    log2_size: float
    budget: int
    explored_fraction: float

    @property
    def size(self) -> float:
        # May overflow to inf for large unit counts; log2_size is exact.
        try:
            return 2.0**self.log2_size
        except OverflowError:
            return math.inf


def enumerate_local_masks(n_units: int, budget: int) -> Iterator[SegmentMask]:
    """Yield masks ordered by removal count, nearest the original first.

    The unperturbed all-ones mask comes first, then all single removals,
    then pairs, and so on; ties are broken by the lexicographically
    smallest removed-index set, which is the order itertools.combinations
    produces.  Enumeration stops after ``budget`` masks, or after the
    full power set when the budget exceeds it.
    """

    if n_units <= 0:
        raise EmptyDocument("cannot enumerate masks for a document with no segments")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    emitted = 0
    for k in range(n_units + 1):
        for removed in itertools.combinations(range(n_units), k):
            if emitted >= budget:
                return
            yield SegmentMask.from_removed(n_units, removed)
            emitted += 1


def sample_word_masks(
    n_units: int,
    budget: int,
    seed: int,
    keep_probability: float = 0.5,
    kernel_width: float = DEFAULT_KERNEL_WIDTH,
) -> list[tuple["SegmentMask", float]]:
    """Draw Bernoulli masks with locality weights for word neighborhoods.

    The first mask is always all-ones so the surrogate sees the original
    text; the rest keep each unit independently with ``keep_probability``.
    Duplicates may occur, which matches how the sampled design is used.
    Each mask is paired with its kernel weight.
    """

    if n_units <= 0:
        raise EmptyDocument("cannot sample masks for a document with no segments")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    rng = np.random.default_rng(seed)
    masks = [SegmentMask.all_ones(n_units)]
    if budget > 1:
        draws = rng.random((budget - 1, n_units)) < keep_probability
        masks.extend(SegmentMask(bits=tuple(int(b) for b in row)) for row in draws)
    return [(m, kernel_weight(m, kernel_width)) for m in masks]


def kernel_weight(mask: SegmentMask, width: float = DEFAULT_KERNEL_WIDTH) -> float:
    """Exponential locality kernel on the fraction of removed units."""

    d = mask.n_removed / mask.n_units
    return math.exp(-(d * d) / (width * width))


def reconstruct(doc: Document, mask: SegmentMask) -> str:
    """Join the surviving segments with single spaces.

    Character positions are not preserved; the result is a plain text for
    the model, not a re-alignable document.
    """

    if mask.n_units != doc.n_units:
        raise MaskMismatch(
            f"mask has {mask.n_units} bits for a document with {doc.n_units} segments"
        )
    kept = [doc.segment_text(i) for i, b in enumerate(mask.bits) if b == 1]
    return " ".join(kept).strip()


def neighborhood_stats(n_units: float, budget: int) -> NeighborhoodStats:
    """Report neighborhood size and explored fraction without overflow.

    ``n_units`` may be fractional so corpus averages can be reported
    directly.  ``explored_fraction`` is min(1, budget / 2**n_units),
    computed in log space.
    """

    if n_units <= 0:
        raise EmptyDocument("neighborhood size needs a positive unit count")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    log2_fraction = min(0.0, math.log2(budget) - n_units)
    return NeighborhoodStats(
        n_units=float(n_units),
        log2_size=float(n_units),
        budget=budget,
        explored_fraction=2.0**log2_fraction,
    )
