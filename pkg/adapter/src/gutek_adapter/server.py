"""JSONL server wrapping a Hugging Face sequence classifier.

Speaks the same line protocol that ``gutek`` uses for ``subprocess:`` model
handles: one handshake object on startup, then one JSON response per JSON
request, in request order.  ``predict`` returns softmax class probabilities,
``embed`` returns the final-layer [CLS] vector.

Texts are run through the model one at a time so an answer never depends on
what else happened to be in the batch; combined with eval mode this makes
repeated texts give identical vectors.
"""

from __future__ import annotations

import argparse
import json
import sys


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gutek-adapter",
        description="Serve a transformers checkpoint over the gutek model protocol.",
    )
    parser.add_argument("--model", required=True, help="checkpoint name or path")
    parser.add_argument("--device", default="cpu", help="torch device (default: cpu)")
    parser.add_argument(
        "--max-length",
        type=int,
        default=None,
        help="truncate inputs to this many tokens (default: the model's limit)",
    )
    return parser


def _labels(config) -> list:
    # id2label keys may be ints or strings depending on how the config was saved
    id2label = {int(k): v for k, v in config.id2label.items()}
    return [str(id2label[i]) for i in range(config.num_labels)]


def _token_limit(tokenizer, config, requested):
    limit = getattr(tokenizer, "model_max_length", None)
    if limit is None or limit > 1_000_000:  # unset tokenizers use a huge sentinel
        limit = getattr(config, "max_position_embeddings", 512)
    if requested is not None:
        limit = min(limit, requested)
    return int(limit)


class _Runner:
    """Holds the loaded model and answers one op for one text at a time."""

    def __init__(self, model_name: str, device: str, max_length):
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer
        from transformers.utils import logging as hf_logging

        hf_logging.set_verbosity_error()
        hf_logging.disable_progress_bar()  # keep stderr quiet; stdout carries the protocol
        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModelForSequenceClassification.from_pretrained(model_name)
        self.model.to(device)
        self.model.eval()
        self.device = device
        self.model_id = str(model_name)
        self.labels = _labels(self.model.config)
        self.max_length = _token_limit(self.tokenizer, self.model.config, max_length)
        self.embedding_dim = int(self.model.config.hidden_size)

    def _encode(self, text: str):
        enc = self.tokenizer(
            text,
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
        )
        return {k: v.to(self.device) for k, v in enc.items()}

    def predict_one(self, text: str) -> list:
        with self._torch.no_grad():
            logits = self.model(**self._encode(text)).logits[0]
            return self._torch.softmax(logits, dim=-1).tolist()

    def embed_one(self, text: str) -> list:
        with self._torch.no_grad():
            out = self.model(**self._encode(text), output_hidden_states=True)
            return out.hidden_states[-1][0, 0, :].tolist()


def _check_texts(payload):
    texts = payload.get("texts")
    if not isinstance(texts, list):
        raise ValueError("'texts' must be a list of strings")
    for item in texts:
        if not isinstance(item, str):
            raise ValueError("'texts' must be a list of strings")
    return texts


def _answer(runner: _Runner, payload: dict) -> dict:
    rid = payload.get("id")
    op = payload.get("op")
    if op == "predict":
        rows = [runner.predict_one(t) for t in _check_texts(payload)]
        return {"id": rid, "scores": rows}
    if op == "embed":
        rows = [runner.embed_one(t) for t in _check_texts(payload)]
        return {"id": rid, "vectors": rows}
    return {"id": rid, "error": f"unsupported op {op!r}"}


def serve(model_name: str, device: str = "cpu", max_length=None,
          stdin=None, stdout=None) -> int:
    """Emit the handshake, then answer requests until stdin closes."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    runner = _Runner(model_name, device, max_length)
    handshake = {
        "protocol": 1,
        "model_id": runner.model_id,
        "labels": runner.labels,
        "capabilities": ["predict", "embed"],
        "embedding_dim": runner.embedding_dim,
        "max_length": runner.max_length,
    }

    def emit(obj):
        stdout.write(json.dumps(obj) + "\n")
        stdout.flush()

    try:
        emit(handshake)
        for line in stdin:
            line = line.strip()
            if not line:
                continue
            rid = None
            try:
                payload = json.loads(line)
                if not isinstance(payload, dict):
                    raise ValueError("request must be a JSON object")
                rid = payload.get("id")
                response = _answer(runner, payload)
            except Exception as exc:  # a bad request must not kill the server
                response = {"id": rid, "error": f"{type(exc).__name__}: {exc}"}
            emit(response)
    except BrokenPipeError:
        return 0
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return serve(args.model, device=args.device, max_length=args.max_length)
    except Exception as exc:
        print(f"gutek-adapter: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
