"""Evaluation harness: ground-truth fidelity tasks and insertion probes.

A fidelity task is a list of contexts, each with the indices of the
sentences a faithful explainer should single out.  The runner explains
every context, scores the attributions with the ground-truth metrics,
and aggregates.  The insertion probe builds its own ground truth by
splicing a segment of one text into a text of the opposite predicted
class and checking whether the explainer pins the model's shift on the
inserted span.

Synthetic generators make both experiments self-contained: a marker
vocabulary drives a builtin classifier whose sentence-level behavior is
exactly additive, so expected outcomes are known by construction.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .blackbox import (
    DEFAULT_BATCH_SIZE,
    PredictionCache,
    TextModel,
    collect_outputs,
    predict_batch,
)
from .builtin import BuiltinModel, train_builtin_classifier
from .errors import EmptyCaseSet, InvalidRequest
from .metrics import EvalRecord, MetricReport, aggregate
from .segmentation import segment_text, split_sentences, split_words
from .surrogate import Explanation, explain

__all__ = [
    "FidelityExample",
    "FidelityTask",
    "FidelityResult",
    "run_fidelity",
    "InsertionCase",
    "InsertionResult",
    "build_insertion_cases",
    "run_insertion",
    "make_marker_model",
    "make_synthetic_fidelity_task",
    "make_synthetic_insertion_corpus",
    "INTERPRETERS",
]

INTERPRETERS = ("gutek", "lime-word-sum", "lime-word-max")


@dataclass(slots=True, frozen=True)
class FidelityExample:
    """A context whose ground-truth sentences the explainer should find."""

    context: str
    gt_sentences: frozenset[int]
    question: str | None = None

    def to_json(self) -> dict:
        payload: dict = {
            "context": self.context,
            "gt_sentences": sorted(self.gt_sentences),
        }
        if self.question is not None:
            payload["question"] = self.question
        return payload


@dataclass(slots=True, frozen=True)
class FidelityTask:
    examples: tuple[FidelityExample, ...]
    name: str = "task"

    def save_jsonl(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for ex in self.examples:
                fh.write(json.dumps(ex.to_json(), separators=(",", ":")) + "\n")

    @classmethod
    def load_jsonl(cls, path: str, name: str | None = None) -> "FidelityTask":
        examples = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    payload = json.loads(line)
                    gt = frozenset(int(i) for i in payload["gt_sentences"])
                    example = FidelityExample(
                        context=str(payload["context"]),
                        gt_sentences=gt,
                        question=payload.get("question"),
                    )
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise InvalidRequest(f"{path}:{lineno}: bad task line: {exc}")
                if not example.gt_sentences:
                    raise InvalidRequest(f"{path}:{lineno}: empty gt_sentences")
                if min(example.gt_sentences) < 0:
                    raise InvalidRequest(f"{path}:{lineno}: negative sentence index")
                examples.append(example)
        if not examples:
            raise InvalidRequest(f"no examples in {path!r}")
        return cls(examples=tuple(examples), name=name or path)


@dataclass(slots=True, frozen=True)
class FidelityResult:
    """A metric report plus the per-example records behind it."""

    report: MetricReport
    records: tuple[EvalRecord, ...]
    n_skipped: int
    interpreter: str
    budget: int
    seed: int

    def to_json(self) -> dict:
        return {
            "interpreter": self.interpreter,
            "budget": self.budget,
            "seed": self.seed,
            "n_skipped": self.n_skipped,
            "report": self.report.to_json(),
            "records": [r.to_json() for r in self.records],
        }


def _interpreter_explanation(
    model: TextModel,
    text: str,
    interpreter: str,
    granularity: str,
    budget: int,
    seed: int,
    batch_size: int,
    cache: PredictionCache | None,
    target_class: int | None = None,
) -> Explanation:
    if interpreter == "gutek":
        method, mode = "gutek", "sum"
    elif interpreter == "lime-word-sum":
        method, mode = "lime-word", "sum"
    elif interpreter == "lime-word-max":
        method, mode = "lime-word", "max"
    else:
        raise InvalidRequest(
            f"unknown interpreter {interpreter!r} (known: {INTERPRETERS})"
        )
    return explain(
        model,
        text,
        granularity=granularity,
        budget=budget,
        method=method,
        seed=seed,
        target_class=target_class,
        aggregation=mode,
        batch_size=batch_size,
        cache=cache,
    )


def run_fidelity(
    task: FidelityTask,
    model: TextModel,
    interpreter: str = "gutek",
    budget: int = 10,
    seed: int = 0,
    batch_size: int = DEFAULT_BATCH_SIZE,
    cache: PredictionCache | None = None,
    jobs: int = 1,
) -> FidelityResult:
    """Score one interpreter against a task's sentence-level ground truth.

    Contexts that yield no sentences are skipped and counted.  Each
    example runs with its own derived seed, so results do not depend on
    the number of worker threads.
    """

    runnable: list[tuple[int, FidelityExample]] = []
    skipped = 0
    for i, example in enumerate(task.examples):
        if split_sentences(example.context).n_units == 0:
            skipped += 1
            continue
        runnable.append((i, example))
    if not runnable:
        raise InvalidRequest("every context in the task was unsegmentable")

    def score(item: tuple[int, FidelityExample]) -> EvalRecord:
        index, example = item
        explanation = _interpreter_explanation(
            model,
            example.context,
            interpreter,
            granularity="sentence",
            budget=budget,
            seed=seed + index,
            batch_size=batch_size,
            cache=cache,
        )
        return EvalRecord.from_scores(explanation.unit_scores, example.gt_sentences)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(score, runnable))
    else:
        records = [score(item) for item in runnable]
    return FidelityResult(
        report=aggregate(records),
        records=tuple(records),
        n_skipped=skipped,
        interpreter=interpreter,
        budget=budget,
        seed=seed,
    )


@dataclass(slots=True, frozen=True)
class InsertionCase:
    """A host text with a foreign segment spliced in at a unit boundary."""

    source_text: str
    host_text: str
    modified_text: str
    source_class: int
    host_class: int
    inserted_unit_span: tuple[int, int]
    inserted_char_span: tuple[int, int]
    class_flip_margin: float
    segmenter: str

    def to_json(self) -> dict:
        return {
            "source_class": self.source_class,
            "host_class": self.host_class,
            "inserted_unit_span": list(self.inserted_unit_span),
            "inserted_char_span": list(self.inserted_char_span),
            "class_flip_margin": self.class_flip_margin,
            "segmenter": self.segmenter,
            "modified_text": self.modified_text,
        }


@dataclass(slots=True, frozen=True)
class InsertionResult:
    mean_iou: float
    std_iou: float
    per_case: tuple[float, ...]
    interpreter: str
    explain_segmenter: str
    budget: int
    seed: int

    def to_json(self) -> dict:
        return {
            "mean_iou": self.mean_iou,
            "std_iou": self.std_iou,
            "per_case": list(self.per_case),
            "n_cases": len(self.per_case),
            "interpreter": self.interpreter,
            "explain_segmenter": self.explain_segmenter,
            "budget": self.budget,
            "seed": self.seed,
        }


def _predicted_class(
    model: TextModel,
    texts: Sequence[str],
    batch_size: int,
    cache: PredictionCache | None,
) -> list[int]:
    outputs = collect_outputs(predict_batch(model, list(texts), batch_size, cache))
    return [o.argmax for o in outputs]


def build_insertion_cases(
    pos_texts: Sequence[str],
    neg_texts: Sequence[str],
    model: TextModel,
    segmenter: str = "paragraph",
    min_chars: int = 1000,
    margin: float = 0.05,
    seed: int = 0,
    max_cases: int = 32,
    batch_size: int = DEFAULT_BATCH_SIZE,
    cache: PredictionCache | None = None,
) -> list[InsertionCase]:
    """Pair opposite-class texts and splice a random segment across.

    A pair qualifies when the model's probability of the source's class
    on the modified host rises by at least ``margin``.  Texts shorter
    than ``min_chars`` are never used.  Raises EmptyCaseSet when no pair
    qualifies.
    """

    pool = [t for t in list(pos_texts) + list(neg_texts) if len(t) >= min_chars]
    if len(pool) < 2:
        raise EmptyCaseSet(f"fewer than two texts reach {min_chars} characters")
    classes = _predicted_class(model, pool, batch_size, cache)
    pairs = [
        (i, j)
        for i in range(len(pool))
        for j in range(len(pool))
        if i != j and classes[i] != classes[j]
    ]
    if not pairs:
        raise EmptyCaseSet("no opposite-class pairs among the usable texts")

    rng = np.random.default_rng(seed)
    rng.shuffle(pairs)
    joiner = "\n\n" if segmenter == "paragraph" else " "
    cases: list[InsertionCase] = []
    for i, j in pairs:
        if len(cases) >= max_cases:
            break
        source, host = pool[i], pool[j]
        source_doc = segment_text(source, segmenter)
        host_doc = segment_text(host, segmenter)
        if source_doc.n_units == 0 or host_doc.n_units == 0:
            continue
        insert = source_doc.segment_text(int(rng.integers(source_doc.n_units)))
        boundary = int(rng.integers(host_doc.n_units + 1))
        if boundary < host_doc.n_units:
            pos = host_doc.segments[boundary].char_start
            modified = host[:pos] + insert + joiner + host[pos:]
        else:
            pos = len(host)
            modified = host + joiner + insert
            pos += len(joiner)
        char_span = (pos, pos + len(insert))

        before, after = collect_outputs(
            predict_batch(model, [host, modified], batch_size, cache)
        )
        gain = after.scores[classes[i]] - before.scores[classes[i]]
        if gain < margin:
            continue

        modified_doc = segment_text(modified, segmenter)
        hit = [
            u.index
            for u in modified_doc.segments
            if u.char_end > char_span[0] and u.char_start < char_span[1]
        ]
        if not hit:
            continue
        cases.append(
            InsertionCase(
                source_text=source,
                host_text=host,
                modified_text=modified,
                source_class=classes[i],
                host_class=classes[j],
                inserted_unit_span=(min(hit), max(hit) + 1),
                inserted_char_span=char_span,
                class_flip_margin=float(gain),
                segmenter=segmenter,
            )
        )
    if not cases:
        raise EmptyCaseSet(
            f"no pair moved the model by {margin} toward the source class"
        )
    return cases


def _word_index_set(word_doc, char_span: tuple[int, int]) -> set[int]:
    lo, hi = char_span
    return {
        seg.index
        for seg in word_doc.segments
        if seg.char_start >= lo and seg.char_end <= hi
    }


def run_insertion(
    cases: Sequence[InsertionCase],
    model: TextModel,
    interpreter: str = "gutek",
    explain_segmenter: str = "paragraph",
    budget: int = 64,
    seed: int = 0,
    batch_size: int = DEFAULT_BATCH_SIZE,
    cache: PredictionCache | None = None,
) -> InsertionResult:
    """Check whether explanations localize the inserted span.

    Each case is explained against the host's original class, so the
    inserted material should attract negative attribution.  The detected
    IoU is the best word-level overlap between any negatively attributed
    unit and the inserted span; no negative unit scores zero.
    """

    if len(cases) == 0:
        raise EmptyCaseSet("no insertion cases to run")
    per_case: list[float] = []
    for i, case in enumerate(cases):
        explanation = _interpreter_explanation(
            model,
            case.modified_text,
            interpreter,
            granularity=explain_segmenter,
            budget=budget,
            seed=seed + i,
            batch_size=batch_size,
            cache=cache,
            target_class=case.host_class,
        )
        word_doc = split_words(case.modified_text)
        inserted = _word_index_set(word_doc, case.inserted_char_span)
        best = 0.0
        for unit, score in zip(explanation.document.segments, explanation.unit_scores):
            if score >= 0.0:
                continue
            unit_words = _word_index_set(word_doc, (unit.char_start, unit.char_end))
            union = unit_words | inserted
            if union:
                best = max(best, len(unit_words & inserted) / len(union))
        per_case.append(best)

    mean = sum(per_case) / len(per_case)
    if len(per_case) > 1:
        var = sum((v - mean) ** 2 for v in per_case) / (len(per_case) - 1)
        std = var**0.5
    else:
        std = 0.0
    return InsertionResult(
        mean_iou=float(mean),
        std_iou=float(std),
        per_case=tuple(per_case),
        interpreter=interpreter,
        explain_segmenter=explain_segmenter,
        budget=budget,
        seed=seed,
    )


# --------------------------------------------------------------------------
# Synthetic corpora.  A marker vocabulary gives the builtin classifier an
# exactly sentence-additive decision surface: neutral words appear with
# identical statistics in both classes, so only marker counts move the
# posterior.

_NEUTRAL_WORDS = (
    "window", "corridor", "evening", "quietly", "walked", "table",
    "garden", "letter", "morning", "village", "river", "stone",
    "journey", "market", "lantern", "harvest", "meadow", "autumn",
    "weather", "bridge", "cottage", "forest", "shadow", "supper",
    "winter", "candle", "orchard", "pasture", "hillside", "doorway",
)
_POS_MARKERS = ("marvelous", "stellar", "superb", "radiant")
_NEG_MARKERS = ("dreadful", "dismal", "abysmal", "woeful")
_MARKER_LABELS = ("neg", "pos")


def make_marker_model(seed: int = 3) -> BuiltinModel:
    """Train the builtin classifier on a mirrored marker corpus.

    Each neutral base document appears once per class, extended with
    that class's markers (twice each), so neutral words carry exactly
    zero evidence and the log-odds of a text is proportional to its
    marker counts.
    """

    rng = np.random.default_rng(seed)
    corpus: list[tuple[str, str]] = []
    for _ in range(8):
        base = " ".join(rng.choice(_NEUTRAL_WORDS, size=12))
        corpus.append((base + " " + " ".join(_POS_MARKERS * 2), "pos"))
        corpus.append((base + " " + " ".join(_NEG_MARKERS * 2), "neg"))
    return train_builtin_classifier(corpus, projection_seed=seed)


def _neutral_sentence(rng: np.random.Generator, n_words: int) -> str:
    words = [str(w) for w in rng.choice(_NEUTRAL_WORDS, size=n_words)]
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


def _marker_sentence(
    rng: np.random.Generator, markers: Sequence[str], n_markers: int, n_neutral: int
) -> str:
    words = [str(w) for w in rng.choice(_NEUTRAL_WORDS, size=n_neutral)]
    picked = [str(m) for m in rng.choice(markers, size=n_markers, replace=False)]
    for m in picked:
        words.insert(int(rng.integers(len(words) + 1)), m)
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


def make_synthetic_fidelity_task(
    n_examples: int = 200, seed: int = 7
) -> tuple[FidelityTask, BuiltinModel]:
    """Sentence-additive fidelity task with one ground-truth sentence each.

    Exactly one sentence per context carries class markers; the builtin
    marker model's prediction depends on that sentence alone, so a
    faithful sentence-level explanation must rank it first.
    """

    model = make_marker_model(seed=3)
    rng = np.random.default_rng(seed)
    examples = []
    for _ in range(n_examples):
        # At most 9 sentences so a budget of 10 covers every singleton
        # removal and the sentence fit is exactly determined.
        n_sentences = int(rng.integers(7, 10))
        gt_index = int(rng.integers(n_sentences))
        marker_set = _POS_MARKERS if rng.random() < 0.5 else _NEG_MARKERS
        sentences = []
        for s in range(n_sentences):
            if s == gt_index:
                sentences.append(
                    _marker_sentence(rng, marker_set, 2, int(rng.integers(28, 38)))
                )
            else:
                sentences.append(_neutral_sentence(rng, int(rng.integers(30, 43))))
        examples.append(
            FidelityExample(
                context=" ".join(sentences),
                gt_sentences=frozenset({gt_index}),
            )
        )
    return FidelityTask(examples=tuple(examples), name="synthetic-additive"), model


def _paragraph(
    rng: np.random.Generator,
    markers: Sequence[str] | None,
    n_markers: int,
) -> str:
    sentences = []
    n_sentences = int(rng.integers(3, 5))
    marker_slots = (
        sorted(rng.choice(n_sentences, size=min(n_markers, n_sentences), replace=False))
        if n_markers > 0 and markers is not None
        else []
    )
    for s in range(n_sentences):
        if s in marker_slots:
            sentences.append(_marker_sentence(rng, markers, 1, int(rng.integers(8, 12))))
        else:
            sentences.append(_neutral_sentence(rng, int(rng.integers(8, 13))))
    return " ".join(sentences)


def make_synthetic_insertion_corpus(
    n_per_class: int = 10, seed: int = 11, min_chars: int = 1000
) -> tuple[list[str], list[str], BuiltinModel]:
    """Long multi-paragraph texts with mild, spread-out class evidence.

    Each text carries three single-marker sentences, so splicing in one
    paragraph of the opposite class moves the posterior noticeably but
    rarely flips it outright.
    """

    model = make_marker_model(seed=3)
    rng = np.random.default_rng(seed)

    def build(markers: Sequence[str]) -> str:
        n_paragraphs = int(rng.integers(4, 7))
        counts = {p: 0 for p in range(n_paragraphs)}
        for _ in range(3):
            counts[int(rng.integers(n_paragraphs))] += 1
        paragraphs = [
            _paragraph(rng, markers if counts[p] > 0 else None, counts[p])
            for p in range(n_paragraphs)
        ]
        text = "\n\n".join(paragraphs)
        while len(text) < min_chars + 50:
            text += "\n\n" + _paragraph(rng, None, 0)
        return text

    pos_texts = [build(_POS_MARKERS) for _ in range(n_per_class)]
    neg_texts = [build(_NEG_MARKERS) for _ in range(n_per_class)]
    return pos_texts, neg_texts, model
