"""Uniform client for black-box text models.

Everything downstream (explainers, harness, diagnostics) talks to a
model through ``predict_batch`` and ``embed_batch``.  A model handle is
either the builtin classifier or an external process speaking a
line-delimited JSON protocol on stdin/stdout:

    handshake (one line, process -> client):
        {"protocol": 1, "model_id": "...", "labels": [...],
         "capabilities": ["predict", "embed"]}
    request (client -> process):
        {"id": 7, "op": "predict", "texts": ["..."]}
    response (process -> client):
        {"id": 7, "scores": [[...], ...]}           for predict
        {"id": 7, "vectors": [[...], ...]}          for embed
        {"id": 7, "error": "..."}                   whole-request failure

One request is in flight at a time.  A null entry in "scores"/"vectors"
(optionally explained in a parallel "item_errors" array) marks a
per-text failure without aborting the batch.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
import shlex
import subprocess
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    BadResponse,
    InvalidRequest,
    ModelUnavailable,
    ProtocolError,
    UnsupportedCapability,
)

__all__ = [
    "ModelOutput",
    "EmbeddingVector",
    "ItemFailure",
    "TextModel",
    "SubprocessModel",
    "PredictionCache",
    "predict_batch",
    "embed_batch",
    "make_model",
    "text_key",
    "DEFAULT_BATCH_SIZE",
    "CACHE_DIR_ENV",
]

DEFAULT_BATCH_SIZE = 32
CACHE_DIR_ENV = "GUTEK_CACHE_DIR"
_SCORE_SUM_TOL = 1e-6


@dataclass(slots=True, frozen=True)
class ModelOutput:
    """A validated class distribution for one text."""

    scores: tuple[float, ...]
    class_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.scores) != len(self.class_labels):
            raise BadResponse(
                f"{len(self.scores)} scores for {len(self.class_labels)} labels"
            )
        if not self.scores:
            raise BadResponse("empty score vector")
        total = 0.0
        for s in self.scores:
            if not math.isfinite(s) or s < 0.0 or s > 1.0:
                raise BadResponse(f"score {s!r} outside [0, 1]")
            total += s
        if abs(total - 1.0) > _SCORE_SUM_TOL:
            raise BadResponse(f"scores sum to {total!r}, not 1")

    @property
    def argmax(self) -> int:
        best = 0
        for i, s in enumerate(self.scores):
            if s > self.scores[best]:
                best = i
        return best


@dataclass(slots=True, frozen=True)
class EmbeddingVector:
    """One embedding, tagged with the model that produced it."""

    values: tuple[float, ...]
    model_id: str

    def __post_init__(self) -> None:
        if not self.values:
            raise BadResponse("empty embedding vector")
        if any(not math.isfinite(v) for v in self.values):
            raise BadResponse("non-finite embedding component")


@dataclass(slots=True, frozen=True)
class ItemFailure:
    """Per-text failure slot in a batch result."""

    message: str


def text_key(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class PredictionCache:
    """Memoizes raw model responses by (model_id, op, text hash).

    In-memory always; a directory makes entries survive the process.
    Thread safe, so parallel harness workers can share one instance.
    """

    def __init__(self, directory: str | os.PathLike[str] | None = None):
        self._mem: dict[tuple[str, str, str], tuple[float, ...]] = {}
        self._lock = threading.Lock()
        self._dir = Path(directory) if directory is not None else None
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)

    def _path(self, model_id: str, op: str, key: str) -> Path:
        assert self._dir is not None
        safe_model = hashlib.sha256(model_id.encode("utf-8")).hexdigest()[:16]
        return self._dir / safe_model / op / f"{key}.json"

    def get(self, model_id: str, op: str, key: str) -> tuple[float, ...] | None:
        with self._lock:
            hit = self._mem.get((model_id, op, key))
        if hit is not None:
            return hit
        if self._dir is None:
            return None
        path = self._path(model_id, op, key)
        if not path.exists():
            return None
        values = tuple(float(v) for v in json.loads(path.read_text()))
        with self._lock:
            self._mem[(model_id, op, key)] = values
        return values

    def put(self, model_id: str, op: str, key: str, values: tuple[float, ...]) -> None:
        with self._lock:
            self._mem[(model_id, op, key)] = values
        if self._dir is not None:
            path = self._path(model_id, op, key)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(list(values)))


class TextModel:
    """Base class for model handles.

    Subclasses set ``model_id``, ``labels`` and ``capabilities`` and
    implement the raw batch calls; per-item failures come back as
    message strings in place of vectors.
    """

    model_id: str = "unnamed"
    labels: tuple[str, ...] = ()
    capabilities: frozenset[str] = frozenset()

    def raw_predict(self, texts: Sequence[str]) -> list[list[float] | str]:
        raise NotImplementedError

    def raw_embed(self, texts: Sequence[str]) -> list[list[float] | str]:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self) -> "TextModel":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


class SubprocessModel(TextModel):
    """Handle for an external model process speaking the line protocol."""

    def __init__(self, command: str | Sequence[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise InvalidRequest("empty model command")
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
            )
        except OSError as exc:
            raise ModelUnavailable(f"cannot start model process: {exc}") from exc
        self._lock = threading.Lock()
        self._ids = itertools.count(1)
        handshake = self._read_line()
        try:
            head = json.loads(handshake)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"handshake is not JSON: {handshake[:200]!r}") from exc
        if not isinstance(head, dict) or head.get("protocol") != 1:
            raise ProtocolError(f"unsupported handshake: {handshake[:200]!r}")
        try:
            self.model_id = str(head["model_id"])
            self.labels = tuple(str(x) for x in head["labels"])
            self.capabilities = frozenset(str(c) for c in head["capabilities"])
        except KeyError as exc:
            raise ProtocolError(f"handshake missing {exc}: {handshake[:200]!r}") from exc

    def _read_line(self) -> str:
        assert self._proc.stdout is not None
        line = self._proc.stdout.readline()
        if line == "":
            code = self._proc.poll()
            raise ModelUnavailable(f"model process closed its pipe (exit code {code})")
        return line.rstrip("\n")

    def _request(self, op: str, texts: Sequence[str]) -> dict:
        with self._lock:
            request_id = next(self._ids)
            payload = json.dumps(
                {"id": request_id, "op": op, "texts": list(texts)},
                separators=(",", ":"),
            )
            assert self._proc.stdin is not None
            try:
                self._proc.stdin.write(payload + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise ModelUnavailable(f"model process pipe broke: {exc}") from exc
            line = self._read_line()
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"response is not JSON: {line[:200]!r}") from exc
        if not isinstance(response, dict):
            raise ProtocolError(f"response is not an object: {line[:200]!r}")
        if response.get("id") != request_id:
            raise ProtocolError(
                f"response id {response.get('id')!r} does not match request"
                f" {request_id}: {line[:200]!r}"
            )
        if "error" in response:
            message = str(response["error"])
            if message.startswith("unsupported op"):
                raise UnsupportedCapability(message)
            raise BadResponse(f"model reported: {message}")
        return response

    def _aligned(self, response: dict, field: str, n: int) -> list[list[float] | str]:
        rows = response.get(field)
        if not isinstance(rows, list) or len(rows) != n:
            raise ProtocolError(
                f"{field} must be a list of length {n}: {json.dumps(response)[:200]!r}"
            )
        item_errors = response.get("item_errors")
        out: list[list[float] | str] = []
        for i, row in enumerate(rows):
            if row is None:
                message = "model failed on this text"
                if isinstance(item_errors, list) and i < len(item_errors):
                    if item_errors[i]:
                        message = str(item_errors[i])
                out.append(message)
            else:
                out.append([float(v) for v in row])
        return out

    def raw_predict(self, texts: Sequence[str]) -> list[list[float] | str]:
        response = self._request("predict", texts)
        return self._aligned(response, "scores", len(texts))

    def raw_embed(self, texts: Sequence[str]) -> list[list[float] | str]:
        response = self._request("embed", texts)
        return self._aligned(response, "vectors", len(texts))

    def close(self) -> None:
        if self._proc.poll() is None:
            if self._proc.stdin is not None:
                try:
                    self._proc.stdin.close()
                except OSError:
                    pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


def _check_texts(texts: Sequence[str]) -> None:
    if not isinstance(texts, (list, tuple)) or len(texts) == 0:
        raise InvalidRequest("texts must be a non-empty list of strings")
    for t in texts:
        if not isinstance(t, str):
            raise InvalidRequest(f"texts must be strings, got {type(t).__name__}")


def _batched_query(
    model: TextModel,
    texts: Sequence[str],
    op: str,
    batch_size: int,
    cache: PredictionCache | None,
) -> list[tuple[float, ...] | ItemFailure]:
    keys = [text_key(t) for t in texts]
    resolved: dict[str, tuple[float, ...] | ItemFailure] = {}
    todo: list[tuple[str, str]] = []
    seen = set()
    for key, text in zip(keys, texts):
        if key in seen:
            continue
        seen.add(key)
        hit = cache.get(model.model_id, op, key) if cache is not None else None
        if hit is not None:
            resolved[key] = hit
        else:
            todo.append((key, text))
    raw_call = model.raw_predict if op == "predict" else model.raw_embed
    for start in range(0, len(todo), batch_size):
        chunk = todo[start : start + batch_size]
        rows = raw_call([t for _, t in chunk])
        if len(rows) != len(chunk):
            raise BadResponse(
                f"model returned {len(rows)} rows for {len(chunk)} texts"
            )
        for (key, _), row in zip(chunk, rows):
            if isinstance(row, str):
                resolved[key] = ItemFailure(message=row)
            else:
                values = tuple(float(v) for v in row)
                resolved[key] = values
                if cache is not None:
                    cache.put(model.model_id, op, key, values)
    return [resolved[k] for k in keys]


def predict_batch(
    model: TextModel,
    texts: Sequence[str],
    batch_size: int = DEFAULT_BATCH_SIZE,
    cache: PredictionCache | None = None,
) -> list[ModelOutput | ItemFailure]:
    """Class distributions for each text, aligned with the input order.

    Identical texts in one call are queried once.  A failed text yields
    an ItemFailure slot instead of aborting the whole batch.
    """

    _check_texts(texts)
    if "predict" not in model.capabilities:
        raise UnsupportedCapability(f"model {model.model_id!r} cannot predict")
    if batch_size < 1:
        raise InvalidRequest("batch_size must be at least 1")
    out: list[ModelOutput | ItemFailure] = []
    for item in _batched_query(model, texts, "predict", batch_size, cache):
        if isinstance(item, ItemFailure):
            out.append(item)
            continue
        try:
            out.append(ModelOutput(scores=item, class_labels=model.labels))
        except BadResponse as exc:
            out.append(ItemFailure(message=str(exc)))
    return out


def embed_batch(
    model: TextModel,
    texts: Sequence[str],
    batch_size: int = DEFAULT_BATCH_SIZE,
    cache: PredictionCache | None = None,
) -> list[EmbeddingVector | ItemFailure]:
    """Embedding vectors for each text, aligned with the input order."""

    _check_texts(texts)
    if "embed" not in model.capabilities:
        raise UnsupportedCapability(f"model {model.model_id!r} cannot embed")
    if batch_size < 1:
        raise InvalidRequest("batch_size must be at least 1")
    out: list[EmbeddingVector | ItemFailure] = []
    for item in _batched_query(model, texts, "embed", batch_size, cache):
        if isinstance(item, ItemFailure):
            out.append(item)
            continue
        try:
            out.append(EmbeddingVector(values=item, model_id=model.model_id))
        except BadResponse as exc:
            out.append(ItemFailure(message=str(exc)))
    return out


def default_cache_dir() -> str | None:
    return os.environ.get(CACHE_DIR_ENV) or None


def make_model(spec: str, cache_dir: str | None = None) -> TextModel:
    """Build a model handle from a CLI-style string.

    ``builtin:PATH`` loads a saved builtin classifier; ``subprocess:CMD``
    starts an external process speaking the line protocol.
    """

    del cache_dir  # caching is attached by callers via PredictionCache
    kind, sep, rest = spec.partition(":")
    if not sep or not rest:
        raise InvalidRequest(f"model spec {spec!r} must look like kind:argument")
    if kind == "builtin":
        from .builtin import BuiltinModel

        return BuiltinModel.load(rest)
    if kind == "subprocess":
        return SubprocessModel(rest)
    raise InvalidRequest(f"unknown model kind {kind!r} (use builtin: or subprocess:)")


def collect_outputs(items: Iterable) -> list:
    """Unwrap a batch result, raising BadResponse on any failed item."""

    outputs = []
    for item in items:
        if isinstance(item, ItemFailure):
            raise BadResponse(item.message)
        outputs.append(item)
    return outputs
