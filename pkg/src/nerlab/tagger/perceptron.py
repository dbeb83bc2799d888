"""Averaged structured perceptron with first-order Viterbi decoding over B/I/O.

One model per annotation layer. ``O -> I`` and ``<s> -> I`` transitions are
forbidden outright, so decoded sequences are always well formed.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from ..core import CorpusError, Document, Sentence, TagSequence, encode_bio
from ..evaluate.chunking import chunk_prf
from .features import FeatureExtractor

log = logging.getLogger(__name__)

TAGS = ("B", "I", "O")
START = "<s>"
FORBIDDEN = frozenset({("O", "I"), (START, "I")})
MODEL_VERSION = 1


class TrainingError(CorpusError):
    pass


@dataclass
class TaggerModel:
    layer: str
    weights: dict[str, dict[str, float]] = field(default_factory=dict)
    transitions: dict[str, dict[str, float]] = field(default_factory=dict)
    extractor: FeatureExtractor = field(default_factory=FeatureExtractor)
    epochs: int = 0
    seed: int = 0
    trace: list[dict] = field(default_factory=list)

    def emission(self, feats: Sequence[str]) -> dict[str, float]:
        score = {t: 0.0 for t in TAGS}
        for f in feats:
            row = self.weights.get(f)
            if row:
                for t, w in row.items():
                    score[t] += w
        return score

    def transition(self, prev: str, tag: str) -> float:
        if (prev, tag) in FORBIDDEN:
            return -math.inf
        return self.transitions.get(prev, {}).get(tag, 0.0)

    def to_json(self) -> dict:
        def clean(table):
            return {k: {t: v for t, v in sorted(row.items()) if v != 0.0}
                    for k, row in sorted(table.items()) if any(v != 0.0 for v in row.values())}
        return {
            "format": "nerlab-perceptron",
            "version": MODEL_VERSION,
            "layer": self.layer,
            "tags": list(TAGS),
            "epochs": self.epochs,
            "seed": self.seed,
            "features": self.extractor.to_json(),
            "transitions": clean(self.transitions),
            "weights": clean(self.weights),
            "trace": self.trace,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "TaggerModel":
        if raw.get("format") != "nerlab-perceptron" or raw.get("version") != MODEL_VERSION:
            raise CorpusError("not a version-1 perceptron model file")
        return cls(layer=raw["layer"], weights=raw["weights"], transitions=raw["transitions"],
                   extractor=FeatureExtractor.from_json(raw["features"]),
                   epochs=raw["epochs"], seed=raw["seed"], trace=raw.get("trace", []))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False, sort_keys=True,
                                         indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TaggerModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def viterbi(model: TaggerModel, feats: Sequence[Sequence[str]]) -> list[str]:
    n = len(feats)
    if n == 0:
        return []
    emit = [model.emission(f) for f in feats]
    best = [{t: model.transition(START, t) + emit[0][t] for t in TAGS}]
    back = [{}]
    for i in range(1, n):
        row, ptr = {}, {}
        for t in TAGS:
            cand = max(TAGS, key=lambda p: (best[i - 1][p] + model.transition(p, t), -TAGS.index(p)))
            row[t] = best[i - 1][cand] + model.transition(cand, t) + emit[i][t]
            ptr[t] = cand
        best.append(row)
        back.append(ptr)
    last = max(TAGS, key=lambda t: (best[-1][t], -TAGS.index(t)))
    path = [last]
    for i in range(n - 1, 0, -1):
        path.append(back[i][path[-1]])
    return path[::-1]


class _Averager:
    """Lazy-timestamp weight averaging."""

    def __init__(self):
        self.w: dict[tuple, float] = {}
        self.total: dict[tuple, float] = {}
        self.stamp: dict[tuple, int] = {}
        self.clock = 0

    def update(self, key: tuple, delta: float) -> None:
        w = self.w.get(key, 0.0)
        self.total[key] = self.total.get(key, 0.0) + (self.clock - self.stamp.get(key, 0)) * w
        self.stamp[key] = self.clock
        self.w[key] = w + delta

    def averaged(self) -> dict[tuple, float]:
        if self.clock == 0:
            return dict(self.w)
        out = {}
        for key, w in self.w.items():
            total = self.total.get(key, 0.0) + (self.clock - self.stamp.get(key, 0)) * w
            out[key] = total / self.clock
        return out


def _to_tables(flat: dict[tuple, float]):
    weights: dict[str, dict[str, float]] = {}
    transitions: dict[str, dict[str, float]] = {}
    for key, v in flat.items():
        kind, a, tag = key
        table = weights if kind == "f" else transitions
        table.setdefault(a, {})[tag] = v
    return weights, transitions


def gold_tags(doc: Document, sent: Sentence, layer: str) -> list[str]:
    """Gold BIO for one sentence, with I-after-O rewritten to B (the model cannot emit it)."""
    tags = list(encode_bio(sent, doc.mentions, layer).tags)
    prev = "O"
    for i, t in enumerate(tags):
        if t == "I" and prev == "O":
            tags[i] = "B"
        prev = tags[i]
    return tags


def training_samples(docs: Sequence[Document], layer: str, extractor: FeatureExtractor):
    samples = []
    for d in docs:
        for s in d.sentences:
            samples.append((extractor.sentence_features(s, d), gold_tags(d, s, layer)))
    return samples


def _score_f1(model: TaggerModel, samples) -> dict:
    gold = [TagSequence(model.layer, g) for _, g in samples]
    pred = [TagSequence(model.layer, viterbi(model, f)) for f, _ in samples]
    c = chunk_prf(gold, pred).micro
    return {"precision": c.precision, "recall": c.recall, "f1": c.f1}


def train(docs: Sequence[Document], layer: str, epochs: int = 5, seed: int = 0,
          extractor: Optional[FeatureExtractor] = None, trace: bool = True) -> TaggerModel:
    """Train one layer's model. Identical inputs and seed give identical weights."""
    if epochs < 1:
        raise TrainingError("epochs must be >= 1")
    extractor = extractor or FeatureExtractor()
    extractor.fit_markers(docs)
    samples = training_samples(docs, layer, extractor)
    if not samples:
        raise TrainingError("no training sentences")

    avg = _Averager()
    model = TaggerModel(layer=layer, extractor=extractor, seed=seed)
    rng = random.Random(seed)
    order = list(range(len(samples)))
    for epoch in range(1, epochs + 1):
        rng.shuffle(order)
        mistakes = 0
        for idx in order:
            feats, gold = samples[idx]
            avg.clock += 1
            pred = viterbi(model, feats)
            if pred == gold:
                continue
            mistakes += 1
            prev_g = prev_p = START
            for f, g, p in zip(feats, gold, pred):
                if g != p:
                    for name in f:
                        _bump(avg, model.weights, ("f", name, g), 1.0)
                        _bump(avg, model.weights, ("f", name, p), -1.0)
                if (prev_g, g) != (prev_p, p):
                    _bump(avg, model.transitions, ("t", prev_g, g), 1.0)
                    _bump(avg, model.transitions, ("t", prev_p, p), -1.0)
                prev_g, prev_p = g, p
        model.epochs = epoch
        if trace:
            snapshot = TaggerModel(layer, *_to_tables(avg.averaged()), extractor=extractor)
            row = {"epoch": epoch, "layer": layer, "mistakes": mistakes, **_score_f1(snapshot, samples)}
            model.trace.append(row)
            log.info("epoch %d layer %s mistakes %d F1 %.2f", epoch, layer, mistakes, row["f1"])
    weights, transitions = _to_tables(avg.averaged())
    model.weights, model.transitions = weights, transitions
    return model


def _bump(avg: _Averager, table: dict, key: tuple, delta: float) -> None:
    avg.update(key, delta)
    _, a, tag = key
    table.setdefault(a, {})[tag] = avg.w[key]


def tag_sentences(model: TaggerModel, sentences: Sequence[Sentence],
                  doc: Optional[Document] = None) -> list[TagSequence]:
    return [TagSequence(model.layer, viterbi(model, model.extractor.sentence_features(s, doc)))
            for s in sentences]


def tag(model: TaggerModel, docs: Sequence[Document]) -> list[list[TagSequence]]:
    """Tag every sentence of every document; one list of sequences per document."""
    return [tag_sentences(model, d.sentences, d) for d in docs]


def trace_csv(trace: Sequence[dict]) -> str:
    lines = ["epoch,layer,precision,recall,f1"]
    for row in trace:
        lines.append(f"{row['epoch']},{row['layer']},{row['precision']:.4f},"
                     f"{row['recall']:.4f},{row['f1']:.4f}")
    return "\n".join(lines) + "\n"
