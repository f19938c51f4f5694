"""Command-line interface.

Subcommands mirror the library surface: ``explain`` renders one
explanation, ``eval`` runs a fidelity task, ``diagnose`` bundles the
distribution diagnostics, ``insertion`` runs the splice experiment, and
``train-builtin`` fits the builtin classifier so the other commands
have a model file to point at.

Deliberate failures print one JSON object to stderr and exit with 2
(bad input or usage) or 3 (model backend trouble); 0 means success.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import diagnostics, harness, report
from .blackbox import (
    CACHE_DIR_ENV,
    DEFAULT_BATCH_SIZE,
    BadResponse,
    ModelUnavailable,
    PredictionCache,
    ProtocolError,
    UnsupportedCapability,
    make_model,
)
from .builtin import train_builtin_classifier
from .errors import GutekError, InvalidRequest
from .neighborhood import neighborhood_stats
from .segmentation import load_abbreviations, segmenter_names
from .surrogate import AGGREGATION_MODES, METHODS, explain

__all__ = ["main", "build_parser"]

_MODEL_ERRORS = (ModelUnavailable, ProtocolError, BadResponse, UnsupportedCapability)


def _read_text_source(value: str) -> str:
    if value == "-":
        return sys.stdin.read()
    try:
        return Path(value).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InvalidRequest(f"no text file at {value!r}")


def _read_texts_jsonl(path: str) -> list[str]:
    texts = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    payload = json.loads(line)
                    texts.append(str(payload["text"]))
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise InvalidRequest(f"{path}:{lineno}: bad text line: {exc}")
    except FileNotFoundError:
        raise InvalidRequest(f"no texts file at {path!r}")
    if not texts:
        raise InvalidRequest(f"no texts in {path!r}")
    return texts


def _read_corpus_jsonl(path: str) -> list[tuple[str, str]]:
    pairs = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    payload = json.loads(line)
                    pairs.append((str(payload["text"]), str(payload["label"])))
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise InvalidRequest(f"{path}:{lineno}: bad corpus line: {exc}")
    except FileNotFoundError:
        raise InvalidRequest(f"no corpus file at {path!r}")
    if not pairs:
        raise InvalidRequest(f"no documents in {path!r}")
    return pairs


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _cache(args: argparse.Namespace) -> PredictionCache:
    directory = getattr(args, "cache_dir", None) or os.environ.get(CACHE_DIR_ENV)
    return PredictionCache(directory or None)


def _int_list(raw: str) -> list[int]:
    try:
        return [int(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise InvalidRequest(f"expected comma-separated integers, got {raw!r}")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--model",
        required=True,
        help="model handle: builtin:PATH or subprocess:'CMD ...'",
    )
    parser.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    parser.add_argument(
        "--cache-dir",
        default=None,
        help=f"prediction cache directory (default: ${CACHE_DIR_ENV} if set)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gutek",
        description="Granularity-aware local explanations for text classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train-builtin", help="fit the builtin classifier")
    p_train.add_argument("--corpus", required=True, help="JSONL with text/label keys")
    p_train.add_argument("--out", required=True, help="where to write the model JSON")
    p_train.add_argument("--projection-seed", type=int, default=0)

    p_explain = sub.add_parser("explain", help="explain one prediction")
    _add_model_flags(p_explain)
    p_explain.add_argument("--text", required=True, help="text file, or - for stdin")
    p_explain.add_argument("--granularity", default="sentence", help="segmenter name")
    p_explain.add_argument("--method", default="gutek", choices=METHODS)
    p_explain.add_argument("--budget", type=int, default=10)
    p_explain.add_argument("--seed", type=int, default=0)
    p_explain.add_argument("--kernel-width", type=float, default=0.25)
    p_explain.add_argument("--target-class", type=int, default=None)
    p_explain.add_argument("--aggregation", default="sum", choices=AGGREGATION_MODES)
    p_explain.add_argument("--abbrev-file", default=None)
    p_explain.add_argument("--output", default="json", choices=("json", "html"))
    p_explain.add_argument("--out", default=None, help="output file (default stdout)")

    p_eval = sub.add_parser("eval", help="run a fidelity task")
    _add_model_flags(p_eval)
    p_eval.add_argument("--task", required=True, help="JSONL fidelity task")
    p_eval.add_argument(
        "--interpreter", default="gutek", choices=harness.INTERPRETERS
    )
    p_eval.add_argument("--budget", type=int, default=10)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--jobs", type=int, default=1)
    p_eval.add_argument("--report", default=None, help="output file (default stdout)")

    p_diag = sub.add_parser("diagnose", help="distribution and segmentation probes")
    diag_sub = p_diag.add_subparsers(dest="probe", required=True)

    p_w = diag_sub.add_parser("wasserstein", help="distance between embedding sets")
    p_w.add_argument("--a", required=True, help="JSONL embedding set")
    p_w.add_argument("--b", required=True, help="JSONL embedding set")
    p_w.add_argument("--seed", type=int, default=0)
    p_w.add_argument("--out", default=None)

    p_ood = diag_sub.add_parser("ood", help="detectability of perturbed texts")
    _add_model_flags(p_ood)
    p_ood.add_argument("--texts", required=True, help="JSONL with a text key per line")
    p_ood.add_argument(
        "--words", type=int, default=5, help="K for the remove_words scheme"
    )
    p_ood.add_argument(
        "--schemes",
        default=None,
        help="comma-separated scheme names (default: remove_words:K,remove_sentence)",
    )
    p_ood.add_argument("--seed", type=int, default=0)
    p_ood.add_argument("--trees", type=int, default=100)
    p_ood.add_argument("--depth-grid", default="2,5,7,10,15,20")
    p_ood.add_argument("--out", default=None)

    p_seg = diag_sub.add_parser("segstats", help="segment counts and timings")
    p_seg.add_argument("--texts", required=True)
    p_seg.add_argument("--segmenter", default="sentence", choices=segmenter_names())
    p_seg.add_argument("--out", default=None)

    p_nb = diag_sub.add_parser("neighborhood", help="neighborhood size arithmetic")
    p_nb.add_argument("--units", type=float, required=True)
    p_nb.add_argument("--budget", type=int, required=True)
    p_nb.add_argument("--out", default=None)

    p_ins = sub.add_parser("insertion", help="splice experiment")
    _add_model_flags(p_ins)
    p_ins.add_argument("--pos", required=True, help="JSONL texts of one class")
    p_ins.add_argument("--neg", required=True, help="JSONL texts of the other class")
    p_ins.add_argument("--build-segmenter", default="paragraph")
    p_ins.add_argument("--explain-segmenter", default="paragraph")
    p_ins.add_argument(
        "--interpreter", default="gutek", choices=harness.INTERPRETERS
    )
    p_ins.add_argument("--budget", type=int, default=64)
    p_ins.add_argument("--margin", type=float, default=0.05)
    p_ins.add_argument("--min-chars", type=int, default=1000)
    p_ins.add_argument("--max-cases", type=int, default=32)
    p_ins.add_argument("--seed", type=int, default=0)
    p_ins.add_argument("--report", default=None)

    return parser


def _cmd_train_builtin(args: argparse.Namespace) -> int:
    corpus = _read_corpus_jsonl(args.corpus)
    model = train_builtin_classifier(corpus, projection_seed=args.projection_seed)
    model.save(args.out)
    sys.stdout.write(
        report.dumps(
            {"model_id": model.model_id, "labels": list(model.labels), "out": args.out}
        )
    )
    return 0


def _cmd_explain(args: argparse.Namespace) -> int:
    text = _read_text_source(args.text)
    abbreviations = (
        load_abbreviations(args.abbrev_file) if args.abbrev_file else None
    )
    cache = _cache(args)
    with make_model(args.model) as model:
        explanation = explain(
            model,
            text,
            granularity=args.granularity,
            budget=args.budget,
            method=args.method,
            seed=args.seed,
            kernel_width=args.kernel_width,
            target_class=args.target_class,
            aggregation=args.aggregation,
            batch_size=args.batch_size,
            cache=cache,
            abbreviations=abbreviations,
        )
        if args.output == "html":
            rendered = report.render_html(
                explanation, model_id=model.model_id, budget=args.budget, seed=args.seed
            )
        else:
            rendered = report.dumps(
                report.explanation_to_json(
                    explanation,
                    model_id=model.model_id,
                    budget=args.budget,
                    seed=args.seed,
                )
            )
    _emit(rendered, args.out)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    task = harness.FidelityTask.load_jsonl(args.task)
    cache = _cache(args)
    if args.jobs < 1:
        raise InvalidRequest("--jobs must be at least 1")
    with make_model(args.model) as model:
        result = harness.run_fidelity(
            task,
            model,
            interpreter=args.interpreter,
            budget=args.budget,
            seed=args.seed,
            batch_size=args.batch_size,
            cache=cache,
            jobs=args.jobs,
        )
        payload = result.to_json()
        payload["task"] = args.task
        payload["model_id"] = model.model_id
    _emit(report.dumps(payload), args.report)
    return 0


def _cmd_wasserstein(args: argparse.Namespace) -> int:
    set_a = diagnostics.EmbeddingSet.from_jsonl(args.a, label="a")
    set_b = diagnostics.EmbeddingSet.from_jsonl(args.b, label="b")
    distance = diagnostics.wasserstein1(set_a, set_b, seed=args.seed)
    _emit(
        report.dumps(
            {
                "wasserstein1": distance,
                "n_a": set_a.n,
                "n_b": set_b.n,
                "n_matched": min(set_a.n, set_b.n),
                "dim": set_a.dim,
                "seed": args.seed,
            }
        ),
        args.out,
    )
    return 0


def _cmd_ood(args: argparse.Namespace) -> int:
    texts = _read_texts_jsonl(args.texts)
    raw_schemes = args.schemes or f"remove_words:{args.words},remove_sentence"
    schemes = [s.strip() for s in raw_schemes.split(",") if s.strip()]
    if not schemes:
        raise InvalidRequest("no schemes given")
    depth_grid = _int_list(args.depth_grid)
    if not depth_grid:
        raise InvalidRequest("empty depth grid")
    cache = _cache(args)
    with make_model(args.model) as model:
        result = diagnostics.ood_experiment(
            model,
            texts,
            schemes=schemes,
            seed=args.seed,
            n_trees=args.trees,
            depth_grid=depth_grid,
            batch_size=args.batch_size,
            cache=cache,
        )
        payload = result.to_json()
        payload["model_id"] = model.model_id
        payload["seed"] = args.seed
    _emit(report.dumps(payload), args.out)
    return 0


def _cmd_segstats(args: argparse.Namespace) -> int:
    texts = _read_texts_jsonl(args.texts)
    stats = diagnostics.seg_stats(texts, args.segmenter)
    _emit(report.dumps(stats.to_json()), args.out)
    return 0


def _cmd_neighborhood(args: argparse.Namespace) -> int:
    stats = neighborhood_stats(args.units, args.budget)
    size = stats.size
    _emit(
        report.dumps(
            {
                "n_units": stats.n_units,
                "log2_size": stats.log2_size,
                "size": size if size != float("inf") else None,
                "budget": stats.budget,
                "explored_fraction": stats.explored_fraction,
            }
        ),
        args.out,
    )
    return 0


def _cmd_insertion(args: argparse.Namespace) -> int:
    pos_texts = _read_texts_jsonl(args.pos)
    neg_texts = _read_texts_jsonl(args.neg)
    cache = _cache(args)
    with make_model(args.model) as model:
        cases = harness.build_insertion_cases(
            pos_texts,
            neg_texts,
            model,
            segmenter=args.build_segmenter,
            min_chars=args.min_chars,
            margin=args.margin,
            seed=args.seed,
            max_cases=args.max_cases,
            batch_size=args.batch_size,
            cache=cache,
        )
        result = harness.run_insertion(
            cases,
            model,
            interpreter=args.interpreter,
            explain_segmenter=args.explain_segmenter,
            budget=args.budget,
            seed=args.seed,
            batch_size=args.batch_size,
            cache=cache,
        )
        payload = result.to_json()
        payload["model_id"] = model.model_id
        payload["build_segmenter"] = args.build_segmenter
        payload["cases"] = [c.to_json() for c in cases]
    _emit(report.dumps(payload), args.report)
    return 0


_COMMANDS = {
    "train-builtin": _cmd_train_builtin,
    "explain": _cmd_explain,
    "eval": _cmd_eval,
    "insertion": _cmd_insertion,
}

_PROBES = {
    "wasserstein": _cmd_wasserstein,
    "ood": _cmd_ood,
    "segstats": _cmd_segstats,
    "neighborhood": _cmd_neighborhood,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "diagnose":
            return _PROBES[args.probe](args)
        return _COMMANDS[args.command](args)
    except GutekError as exc:
        code = 3 if isinstance(exc, _MODEL_ERRORS) else 2
        sys.stderr.write(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
        )
        return code


if __name__ == "__main__":
    sys.exit(main())
