"""Builtin deterministic text classifier.

A multinomial Naive Bayes over lowercased word tokens, with TF-IDF
document vectors behind the embedding capability.  Everything is exact
and reproducible: the vocabulary is sorted, likelihoods use add-one
smoothing over the mean per-document token count of each class, and the
64-dimensional embedding projection is regenerated from a recorded seed.

Using mean counts per document (rather than raw totals) keeps the
posterior exactly invariant when the training corpus is duplicated.
Tokens outside the vocabulary are ignored at predict time, so an empty
text scores exactly the label frequencies.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .blackbox import TextModel, text_key
from .errors import DegenerateCorpus, InvalidRequest
from .segmentation import split_words

__all__ = ["TfidfNaiveBayes", "BuiltinModel", "train_builtin_classifier"]

EMBED_DIM = 64


def _tokenize(text: str) -> list[str]:
    doc = split_words(text)
    return [doc.segment_text(i).lower() for i in range(doc.n_units)]


class TfidfNaiveBayes(BaseEstimator, ClassifierMixin):
    """Naive Bayes classifier with a TF-IDF embedding side channel.

    Parameters
    ----------
    projection_seed:
        Seed for the random projection matrix behind ``embed``.
    embed_dim:
        Dimension of the projected document embedding.
    """

    def __init__(self, projection_seed: int = 0, embed_dim: int = EMBED_DIM):
        self.projection_seed = projection_seed
        self.embed_dim = embed_dim

    def fit(self, texts: Sequence[str], y: Sequence[str]) -> "TfidfNaiveBayes":
        if len(texts) != len(y):
            raise InvalidRequest(f"{len(texts)} texts for {len(y)} labels")
        if len(texts) == 0:
            raise DegenerateCorpus("training corpus is empty")
        labels = sorted(set(str(label) for label in y))
        if len(labels) < 2:
            raise DegenerateCorpus(
                f"training corpus has {len(labels)} distinct label(s), need 2"
            )
        tokenized = [_tokenize(t) for t in texts]
        vocab = sorted(set(tok for doc in tokenized for tok in doc))
        if not vocab:
            raise DegenerateCorpus("training corpus contains no tokens")
        vocab_index = {w: i for i, w in enumerate(vocab)}
        label_index = {c: i for i, c in enumerate(labels)}
        n_classes, n_words = len(labels), len(vocab)

        doc_counts = np.zeros(n_classes)
        totals = np.zeros((n_classes, n_words))
        df = np.zeros(n_words)
        for doc, label in zip(tokenized, y):
            ci = label_index[str(label)]
            doc_counts[ci] += 1
            counts = Counter(doc)
            for tok, cnt in counts.items():
                totals[ci, vocab_index[tok]] += cnt
                df[vocab_index[tok]] += 1

        # Mean token count per document of the class; add-one smoothing on
        # that statistic keeps posteriors invariant under corpus duplication.
        mean_counts = totals / doc_counts[:, None]
        mean_lengths = mean_counts.sum(axis=1)
        self.feature_log_prob_ = np.log(mean_counts + 1.0) - np.log(
            mean_lengths[:, None] + n_words
        )
        self.class_log_prior_ = np.log(doc_counts) - math.log(len(texts))
        self.classes_ = np.array(labels)
        self.vocabulary_ = vocab_index
        self.idf_ = np.log((1.0 + len(texts)) / (1.0 + df)) + 1.0
        self._projection = None
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "classes_"):
            raise NotFittedError("fit this classifier before using it")

    def _log_posterior(self, text: str) -> np.ndarray:
        lp = self.class_log_prior_.copy()
        for tok, cnt in Counter(_tokenize(text)).items():
            idx = self.vocabulary_.get(tok)
            if idx is not None:
                lp += cnt * self.feature_log_prob_[:, idx]
        return lp

    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        self._check_fitted()
        out = np.empty((len(texts), len(self.classes_)))
        for row, text in enumerate(texts):
            lp = self._log_posterior(text)
            lp -= lp.max()
            p = np.exp(lp)
            out[row] = p / p.sum()
        return out

    def predict(self, texts: Sequence[str]) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(texts), axis=1)]

    def _projection_matrix(self) -> np.ndarray:
        if getattr(self, "_projection", None) is None:
            rng = np.random.default_rng(self.projection_seed)
            n_words = len(self.vocabulary_)
            self._projection = rng.standard_normal(
                (self.embed_dim, n_words)
            ) / math.sqrt(self.embed_dim)
        return self._projection

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Project each text's L2-normalized TF-IDF vector to embed_dim."""

        self._check_fitted()
        projection = self._projection_matrix()
        out = np.zeros((len(texts), self.embed_dim))
        for row, text in enumerate(texts):
            vec = np.zeros(len(self.vocabulary_))
            for tok, cnt in Counter(_tokenize(text)).items():
                idx = self.vocabulary_.get(tok)
                if idx is not None:
                    vec[idx] = cnt * self.idf_[idx]
            norm = np.linalg.norm(vec)
            if norm > 0.0:
                vec /= norm
            out[row] = projection @ vec
        return out

    def to_payload(self) -> dict:
        self._check_fitted()
        vocab = [w for w, _ in sorted(self.vocabulary_.items(), key=lambda kv: kv[1])]
        return {
            "vocab": vocab,
            "class_log_priors": [float(v) for v in self.class_log_prior_],
            "log_likelihoods": [
                [float(v) for v in row] for row in self.feature_log_prob_
            ],
            "labels": [str(c) for c in self.classes_],
            "projection_seed": int(self.projection_seed),
            "idf": [float(v) for v in self.idf_],
            "embed_dim": int(self.embed_dim),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "TfidfNaiveBayes":
        est = cls(
            projection_seed=int(payload["projection_seed"]),
            embed_dim=int(payload.get("embed_dim", EMBED_DIM)),
        )
        vocab = list(payload["vocab"])
        est.vocabulary_ = {w: i for i, w in enumerate(vocab)}
        est.classes_ = np.array([str(c) for c in payload["labels"]])
        est.class_log_prior_ = np.array(payload["class_log_priors"], dtype=float)
        est.feature_log_prob_ = np.array(payload["log_likelihoods"], dtype=float)
        est.idf_ = np.array(
            payload.get("idf", [1.0] * len(vocab)), dtype=float
        )
        est._projection = None
        return est


class BuiltinModel(TextModel):
    """Model handle wrapping a fitted TfidfNaiveBayes."""

    capabilities = frozenset({"predict", "embed"})

    def __init__(self, estimator: TfidfNaiveBayes):
        estimator._check_fitted()
        self.estimator = estimator
        self.labels = tuple(str(c) for c in estimator.classes_)
        payload = json.dumps(estimator.to_payload(), sort_keys=True)
        self.model_id = f"builtin-nb-{text_key(payload)[:12]}"

    def raw_predict(self, texts: Sequence[str]) -> list[list[float] | str]:
        return [list(map(float, row)) for row in self.estimator.predict_proba(texts)]

    def raw_embed(self, texts: Sequence[str]) -> list[list[float] | str]:
        return [list(map(float, row)) for row in self.estimator.embed(texts)]

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.estimator.to_payload(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "BuiltinModel":
        from .errors import ModelUnavailable

        try:
            with open(path, encoding="utf-8") as fh:
                payload = json.load(fh)
        except FileNotFoundError as exc:
            raise ModelUnavailable(f"no builtin model file at {path!r}") from exc
        except json.JSONDecodeError as exc:
            raise ModelUnavailable(f"builtin model file {path!r} is not JSON") from exc
        return cls(TfidfNaiveBayes.from_payload(payload))


def train_builtin_classifier(
    corpus: Iterable[tuple[str, str]],
    projection_seed: int = 0,
) -> BuiltinModel:
    """Fit the builtin classifier on (text, label) pairs."""

    pairs = list(corpus)
    if not pairs:
        raise DegenerateCorpus("training corpus is empty")
    texts = [t for t, _ in pairs]
    labels = [c for _, c in pairs]
    est = TfidfNaiveBayes(projection_seed=projection_seed).fit(texts, labels)
    return BuiltinModel(est)
