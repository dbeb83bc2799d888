"""Descriptive corpus statistics.

Conventions: "words" for saturation are non-punctuation tokens; a token
covered by several mentions of one layer counts once.
"""

from __future__ import annotations

import csv
import io
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .core import CorpusError, Document, Mention, classify_mention, covered_tokens, layers_of
from .evaluate.report import pct

POSITIVE_LABELS = frozenset({"BNE-Pos"})
NEGATIVE_LABELS = frozenset({"Worse", "ADE-Neg", "NegatedADE"})
MIXED = "mixed"


class UndefinedInputError(CorpusError):
    pass


class StatsConfigError(CorpusError):
    pass


def word_count(docs: Iterable[Document]) -> int:
    return sum(1 for d in docs for t in d.tokens if not t.is_punct)


def saturation_value(mentions: int, words: int) -> float:
    if words <= 0:
        raise UndefinedInputError("saturation undefined for a corpus without words")
    return 1000.0 * mentions / words


def saturation(docs: Sequence[Document], layer: str) -> float:
    """Mentions of ``layer`` per thousand corpus words."""
    count = sum(len(d.layer(layer)) for d in docs)
    return saturation_value(count, word_count(docs))


def ttr(doc: Document) -> float:
    tokens = doc.tokens
    if not tokens:
        raise UndefinedInputError(f"document {doc.id} has no tokens")
    missing = [t for t in tokens if t.lemma is None]
    if missing:
        raise UndefinedInputError(
            f"document {doc.id}: token {missing[0].text!r} at offset {missing[0].span.start} has no lemma")
    return len({t.lemma for t in tokens}) / len(tokens)


@dataclass
class ComplexityRow:
    total: int = 0
    multiword: int = 0
    singleword: int = 0
    cells: Counter = None

    def __post_init__(self):
        if self.cells is None:
            self.cells = Counter()

    @property
    def empty(self) -> bool:
        return self.total == 0

    def percentages(self, places: Optional[int] = None) -> dict:
        def p(n):
            if not self.total:
                return 0.0
            v = 100.0 * n / self.total
            return v if places is None else pct(v, places)
        out = {"mentions": self.total, "empty": self.empty,
               "multiword": p(self.multiword), "singleword": p(self.singleword)}
        for cont in ("discontinuous", "continuous"):
            for ov in ("non-overlapping", "overlapping"):
                out[f"{cont}, {ov}"] = p(self.cells[(cont, ov)])
        return out


def complexity_table(docs: Sequence[Document], layers: Optional[Sequence[str]] = None,
                     same_layer_only: bool = False, places: Optional[int] = None) -> dict[str, dict]:
    """Share of multiword / discontinuous / overlapping mentions per layer (%).

    A mention is overlapping when one of its tokens is covered by any other
    mention of the document, or of the same layer with ``same_layer_only``.
    """
    rows: dict[str, ComplexityRow] = defaultdict(ComplexityRow)
    if layers is None:
        layers = layers_of(m for d in docs for m in d.mentions)
    for d in docs:
        for layer in layers:
            mine = d.layer(layer)
            others = mine if same_layer_only else list(d.mentions)
            for m in mine:
                cls = classify_mention(m, [o for o in others if o is not m], d)
                row = rows[layer]
                row.total += 1
                if cls.word_arity == "multiword":
                    row.multiword += 1
                else:
                    row.singleword += 1
                row.cells[(cls.continuity, cls.overlap)] += 1
    return {layer: rows[layer].percentages(places) for layer in layers}


def coverage(docs: Sequence[Document], layers: Optional[Sequence[str]] = None) -> dict[str, dict]:
    """Per layer: mention count, tokens inside mentions, documents with a mention."""
    if layers is None:
        layers = layers_of(m for d in docs for m in d.mentions)
    out = {}
    for layer in layers:
        mentions = words = reviews = 0
        for d in docs:
            ms = d.layer(layer)
            if not ms:
                continue
            reviews += 1
            mentions += len(ms)
            tokens = d.tokens
            covered = set()
            for m in ms:
                covered.update(covered_tokens(m.spans, tokens))
            words += len(covered)
        out[layer] = {"mentions": mentions, "words_in_mentions": words, "reviews": reviews}
    return out


def _groups_in(doc: Document, layer: str, mapping: Mapping[str, str],
               allowed: Optional[set]) -> set[str]:
    found = set()
    for m in doc.layer(layer):
        key = (m.normalized_term or m.text(doc.text)).lower()
        if key not in mapping:
            raise StatsConfigError(f"document {doc.id}: {layer} mention {key!r} has no group")
        label = mapping[key]
        if allowed is not None and label not in allowed:
            raise StatsConfigError(f"unknown group label {label!r}")
        found.add(label)
    return found


def source_of(doc: Document, source_groups: Mapping[str, str], layer: str = "SourceInfodrug",
              allowed: Optional[set] = None) -> Optional[str]:
    """Single source group of a review, ``"mixed"`` for several, None for none."""
    found = _groups_in(doc, layer, source_groups, allowed)
    if not found:
        return None
    return next(iter(found)) if len(found) == 1 else MIXED


def cooccurrence(docs: Sequence[Document], drug_groups: Mapping[str, str],
                 source_groups: Mapping[str, str], drug_layer: str = "Drugname",
                 source_layer: str = "SourceInfodrug", drugs: Optional[Sequence[str]] = None,
                 sources: Optional[Sequence[str]] = None) -> dict[str, dict[str, float]]:
    """Percentage of a drug's reviews citing each source (or several: ``mixed``).

    ``drug_groups``/``source_groups`` map lowercased mention text (or its
    normalized term) to a group label. Reviews citing no source stay in the
    denominator only, so a row may sum below 100.
    """
    drug_set = set(drugs) if drugs is not None else None
    src_set = set(sources) if sources is not None else None
    per_drug: dict[str, Counter] = defaultdict(Counter)
    totals: Counter = Counter()
    for d in docs:
        ds = _groups_in(d, drug_layer, drug_groups, drug_set)
        if not ds:
            continue
        src = source_of(d, source_groups, source_layer, src_set)
        for drug in ds:
            totals[drug] += 1
            if src is not None:
                per_drug[drug][src] += 1
    columns = sorted(src_set) if src_set is not None else sorted(
        {s for c in per_drug.values() for s in c if s != MIXED})
    columns.append(MIXED)
    rows = drugs if drugs is not None else sorted(totals)
    matrix = {}
    for drug in rows:
        n = totals[drug]
        matrix[drug] = {s: (100.0 * per_drug[drug][s] / n if n else 0.0) for s in columns}
    return matrix


def matrix_csv(matrix: Mapping[str, Mapping[str, float]]) -> str:
    buf = io.StringIO()
    rows = list(matrix)
    cols = list(next(iter(matrix.values()))) if matrix else []
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["drug"] + cols)
    for r in rows:
        w.writerow([r] + [f"{pct(matrix[r][c], 2):.2f}" for c in cols])
    return buf.getvalue()


def review_tonality(doc: Document) -> str:
    labels = {m.label for m in doc.mentions}
    pos = bool(labels & POSITIVE_LABELS)
    neg = bool(labels & NEGATIVE_LABELS)
    if pos and neg:
        return "mixed"
    if pos:
        return "positive"
    if neg:
        return "negative"
    return "neutral"


def tonality(docs: Sequence[Document], source_groups: Mapping[str, str],
             source_layer: str = "SourceInfodrug") -> dict[str, dict[str, int]]:
    """Positive/negative review counts per source group.

    Reviews with both effects are counted as ``mixed`` and excluded from the
    positive and negative columns. Reviews without a source go under ``none``.
    """
    out: dict[str, Counter] = defaultdict(Counter)
    for d in docs:
        src = source_of(d, source_groups, source_layer) or "none"
        out[src][review_tonality(d)] += 1
    keys = ("positive", "negative", "neutral", "mixed")
    return {s: {k: out[s][k] for k in keys} for s in sorted(out)}


def corpus_stats(docs: Sequence[Document], layers: Optional[Sequence[str]] = None) -> dict:
    if not docs:
        raise UndefinedInputError("empty corpus")
    if layers is None:
        layers = layers_of(m for d in docs for m in d.mentions)
    words = word_count(docs)
    counts = {layer: sum(len(d.layer(layer)) for d in docs) for layer in layers}
    entities = sum(len(d.mentions) for d in docs)
    tokenized = [d for d in docs if d.tokens]
    ttrs = [ttr(d) for d in tokenized if all(t.lemma is not None for t in d.tokens)]
    out = {
        "documents": len(docs),
        "words": words,
        "avg_sentences": pct(sum(len(d.sentences) for d in docs) / len(docs), 2),
        "avg_tokens": pct(sum(len(d.tokens) for d in docs) / len(docs), 2),
        "avg_lemmas": pct(sum(len({t.lemma for t in d.tokens if t.lemma}) for d in docs) / len(docs), 2),
        "avg_ttr": pct(sum(ttrs) / len(ttrs), 2) if ttrs else None,
        "saturation": {k: (pct(saturation_value(v, words), 2) if words else None)
                       for k, v in counts.items()},
        "coverage": coverage(docs, layers),
        "complexity": complexity_table(docs, layers, places=2),
    }
    adr = counts.get("ADR", sum(len(d.layer("ADR")) for d in docs))
    ind = sum(len(d.layer("Indication")) for d in docs)
    out["adr_to_entities"] = pct(adr / entities, 2) if entities else None
    out["adr_to_indication"] = pct(adr / ind, 2) if ind else None
    return out


def stats_text(stats: dict) -> str:
    lines = [
        f"documents        {stats['documents']}",
        f"words            {stats['words']}",
        f"avg sentences    {stats['avg_sentences']:.2f}",
        f"avg tokens       {stats['avg_tokens']:.2f}",
        f"avg lemmas       {stats['avg_lemmas']:.2f}",
        f"avg TTR          {stats['avg_ttr'] if stats['avg_ttr'] is not None else 'n/a'}",
        f"ADR/entities     {stats['adr_to_entities']}",
        f"ADR/Indication   {stats['adr_to_indication']}",
        "",
        "layer            mentions  words  reviews  saturation",
    ]
    for layer, c in stats["coverage"].items():
        sat = stats["saturation"].get(layer)
        lines.append(f"{layer:<16} {c['mentions']:>8} {c['words_in_mentions']:>6} "
                     f"{c['reviews']:>8}  {sat if sat is not None else 'n/a':>10}")
    lines += ["", "layer            multi  single  disc/non-ov  cont/non-ov  disc/ov  cont/ov"]
    for layer, row in stats["complexity"].items():
        lines.append(
            f"{layer:<16} {row['multiword']:>5.2f} {row['singleword']:>7.2f} "
            f"{row['discontinuous, non-overlapping']:>12.2f} {row['continuous, non-overlapping']:>12.2f} "
            f"{row['discontinuous, overlapping']:>8.2f} {row['continuous, overlapping']:>8.2f}")
    return "\n".join(lines) + "\n"
