"""Ground-truth fidelity metrics for saliency over segments.

All three metrics compare a per-unit score vector against a ground-truth
index set:

* iou: argmax set (all indices attaining the maximum) against the
  ground truth, intersection over union.
* hpd: reciprocal rank of the best-ranked ground-truth unit, scores
  sorted descending with ties broken by ascending index.
* snr: squared mean of ground-truth scores over the unbiased variance
  of the rest; undefined (None) with fewer than two non-ground-truth
  units or zero noise variance.

iou and hpd depend only on the ordering of scores, so any strictly
increasing transform leaves them unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyScores, InvalidRequest

__all__ = ["iou", "hpd", "snr", "EvalRecord", "MetricReport", "aggregate"]


def _check(scores: Sequence[float], ground_truth: Iterable[int]) -> frozenset[int]:
    if len(scores) == 0:
        raise EmptyScores("cannot score an empty attribution vector")
    gt = frozenset(int(i) for i in ground_truth)
    if not gt:
        raise InvalidRequest("ground truth set is empty")
    for i in gt:
        if not 0 <= i < len(scores):
            raise InvalidRequest(f"ground truth index {i} out of range")
    return gt


def iou(scores: Sequence[float], ground_truth: Iterable[int]) -> float:
    """Intersection over union of the argmax set and the ground truth."""

    gt = _check(scores, ground_truth)
    top = max(scores)
    pred = {i for i, s in enumerate(scores) if s == top}
    return len(pred & gt) / len(pred | gt)


def hpd(scores: Sequence[float], ground_truth: Iterable[int]) -> float:
    """Reciprocal rank of the best-ranked ground-truth unit."""

    gt = _check(scores, ground_truth)
    best_rank = None
    for g in gt:
        rank = 1
        for j, s in enumerate(scores):
            if s > scores[g] or (s == scores[g] and j < g):
                rank += 1
        if best_rank is None or rank < best_rank:
            best_rank = rank
    return 1.0 / best_rank


def snr(scores: Sequence[float], ground_truth: Iterable[int]) -> float | None:
    """Signal to noise of ground-truth scores against the rest.

    Signal is the squared mean of the ground-truth scores; noise is the
    unbiased (n-1) variance of the remaining scores.  Returns None when
    fewer than two non-ground-truth units exist or the noise is zero.
    """

    gt = _check(scores, ground_truth)
    signal_scores = [scores[i] for i in sorted(gt)]
    noise_scores = [s for i, s in enumerate(scores) if i not in gt]
    if len(noise_scores) < 2:
        return None
    mean_noise = sum(noise_scores) / len(noise_scores)
    variance = sum((s - mean_noise) ** 2 for s in noise_scores) / (
        len(noise_scores) - 1
    )
    if variance == 0.0:
        return None
    mean_signal = sum(signal_scores) / len(signal_scores)
    return (mean_signal * mean_signal) / variance


@dataclass(slots=True, frozen=True)
class EvalRecord:
    """Metrics for one example, kept with its inputs for re-aggregation."""

    scores: tuple[float, ...]
    ground_truth: frozenset[int]
    iou: float
    hpd: float
    snr: float | None

    @classmethod
    def from_scores(
        cls, scores: Sequence[float], ground_truth: Iterable[int]
    ) -> "EvalRecord":
        gt = _check(scores, ground_truth)
        return cls(
            scores=tuple(float(s) for s in scores),
            ground_truth=gt,
            iou=iou(scores, gt),
            hpd=hpd(scores, gt),
            snr=snr(scores, gt),
        )

    def to_json(self) -> dict:
        return {
            "scores": list(self.scores),
            "ground_truth": sorted(self.ground_truth),
            "iou": self.iou,
            "hpd": self.hpd,
            "snr": self.snr,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "EvalRecord":
        return cls.from_scores(payload["scores"], payload["ground_truth"])


@dataclass(slots=True, frozen=True)
class MetricReport:
    """Aggregate over examples; iou and hpd are scaled to 0-100."""

    mean_iou: float
    mean_hpd: float
    mean_snr: float | None
    n_examples: int
    n_snr_omitted: int

    def to_json(self) -> dict:
        return {
            "mean_iou": self.mean_iou,
            "mean_hpd": self.mean_hpd,
            "mean_snr": self.mean_snr,
            "n_examples": self.n_examples,
            "n_snr_omitted": self.n_snr_omitted,
        }


def aggregate(records: Sequence[EvalRecord]) -> MetricReport:
    """Average per-example metrics; snr averages only where defined."""

    if len(records) == 0:
        raise InvalidRequest("no records to aggregate")
    snr_values = [r.snr for r in records if r.snr is not None]
    return MetricReport(
        mean_iou=100.0 * sum(r.iou for r in records) / len(records),
        mean_hpd=100.0 * sum(r.hpd for r in records) / len(records),
        mean_snr=(sum(snr_values) / len(snr_values)) if snr_values else None,
        n_examples=len(records),
        n_snr_omitted=len(records) - len(snr_values),
    )
