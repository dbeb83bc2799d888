"""In-memory corpus model, multi-label BIO encoding and mention classification.

Everything here is immutable once built. Character offsets are counted in
Unicode code points (Python ``str`` indices), never bytes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

log = logging.getLogger(__name__)

ENTITIES = ("Medication", "Disease", "ADR", "Note")

MEDICATION_ATTRIBUTES = (
    "Drugname", "DrugBrand", "Drugform", "Drugclass", "MedMaker", "MedFrom",
    "Frequency", "Dosage", "Duration", "Route", "SourceInfodrug",
)
DISEASE_ATTRIBUTES = (
    "Diseasename", "Indication", "BNE-Pos", "ADE-Neg", "NegatedADE", "Worse",
)
ATTRIBUTES = {
    "Medication": MEDICATION_ATTRIBUTES,
    "Disease": DISEASE_ATTRIBUTES,
    "ADR": (),
    "Note": (),
}
ALL_LABELS = ENTITIES + MEDICATION_ATTRIBUTES + DISEASE_ATTRIBUTES

CODE_SCHEMES = ("ICD-10", "ATC", "MedDRA", "SRD")

UPOS_TAGS = (
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
)

BIO = ("B", "I", "O")


class CorpusError(ValueError):
    """Base class for every data error raised by the toolkit."""


class ValidationError(CorpusError):
    pass


class AlignmentError(CorpusError):
    pass


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValidationError(f"bad span [{self.start}, {self.end})")

    def __len__(self):
        return self.end - self.start

    def intersects(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end


def spans_of(pairs: Iterable[Sequence[int]]) -> tuple[Span, ...]:
    return tuple(Span(int(s), int(e)) for s, e in pairs)


@dataclass(frozen=True)
class Mention:
    """One entity or attribute annotation, possibly split into several spans.

    ``label`` is the most specific tag: the attribute when present, otherwise
    the entity.
    """

    id: str
    entity: str
    spans: tuple[Span, ...]
    attribute: Optional[str] = None
    normalized_term: Optional[str] = None
    codes: tuple[tuple[str, str], ...] = ()
    meta: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(self.spans))
        object.__setattr__(self, "codes", tuple(tuple(c) for c in self.codes))
        if not self.spans:
            raise ValidationError(f"mention {self.id}: no spans")
        if self.entity not in ENTITIES:
            raise ValidationError(f"mention {self.id}: unknown entity {self.entity!r}")
        if self.attribute is not None and self.attribute not in ATTRIBUTES[self.entity]:
            raise ValidationError(
                f"mention {self.id}: attribute {self.attribute!r} not valid for {self.entity}")
        for a, b in zip(self.spans, self.spans[1:]):
            if b.start < a.end:
                raise ValidationError(
                    f"mention {self.id}: spans unsorted or overlapping at offset {b.start}")
        for scheme, _ in self.codes:
            if scheme not in CODE_SCHEMES:
                raise ValidationError(f"mention {self.id}: unknown code scheme {scheme!r}")

    @property
    def label(self) -> str:
        return self.attribute or self.entity

    @property
    def start(self) -> int:
        return self.spans[0].start

    @property
    def end(self) -> int:
        return self.spans[-1].end

    def in_layer(self, layer: str) -> bool:
        return self.entity == layer or self.attribute == layer

    def text(self, doc_text: str, sep: str = " ") -> str:
        return sep.join(doc_text[s.start:s.end] for s in self.spans)


@dataclass(frozen=True)
class Token:
    text: str
    span: Span
    lemma: Optional[str] = None
    pos: Optional[str] = None
    head: Optional[int] = None
    deprel: Optional[str] = None
    feats: Optional[str] = None

    @property
    def is_punct(self) -> bool:
        if self.pos is not None:
            return self.pos == "PUNCT"
        import unicodedata
        return all(unicodedata.category(ch).startswith("P") for ch in self.text)


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValidationError("empty sentence")
        for a, b in zip(self.tokens, self.tokens[1:]):
            if b.span.start < a.span.end:
                raise ValidationError(f"tokens overlap or unsorted at offset {b.span.start}")

    def __len__(self):
        return len(self.tokens)

    @property
    def start(self) -> int:
        return self.tokens[0].span.start

    @property
    def end(self) -> int:
        return self.tokens[-1].span.end


@dataclass(frozen=True)
class CorefChain:
    id: str
    elements: tuple[tuple[Span, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(tuple(e) for e in self.elements))
        if len(self.elements) < 2:
            raise ValidationError(f"chain {self.id}: fewer than 2 elements")


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    meta: dict = field(default_factory=dict, hash=False)
    sentences: tuple[Sentence, ...] = ()
    mentions: tuple[Mention, ...] = ()
    chains: tuple[CorefChain, ...] = ()

    def __post_init__(self):
        for name in ("sentences", "mentions", "chains"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        n = len(self.text)
        seen = set()
        for m in self.mentions:
            if m.id in seen:
                raise ValidationError(f"document {self.id}: duplicate mention id {m.id}")
            seen.add(m.id)
            if m.end > n:
                raise ValidationError(
                    f"document {self.id}: mention {m.id} ends at {m.end} beyond text length {n}")
        for s in self.sentences:
            if s.end > n:
                raise ValidationError(
                    f"document {self.id}: token ends at {s.end} beyond text length {n}")
        for c in self.chains:
            for el in c.elements:
                if not el or el[-1].end > n:
                    raise ValidationError(f"document {self.id}: chain {c.id} element out of range")

    @property
    def tokens(self) -> list[Token]:
        return [t for s in self.sentences for t in s.tokens]

    def layer(self, layer: str) -> list[Mention]:
        return [m for m in self.mentions if m.in_layer(layer)]


@dataclass(frozen=True)
class TagSequence:
    layer: str
    tags: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))
        bad = [t for t in self.tags if t not in BIO]
        if bad:
            raise ValidationError(f"invalid BIO tag {bad[0]!r}")

    def __len__(self):
        return len(self.tags)

    def prefixed(self) -> list[str]:
        """Tags in conlleval form: ``O``, ``B-<layer>``, ``I-<layer>``."""
        return [t if t == "O" else f"{t}-{self.layer}" for t in self.tags]


@dataclass(frozen=True)
class ComplexityClass:
    word_arity: str   # singleword | multiword
    continuity: str   # continuous | discontinuous
    overlap: str      # overlapping | non-overlapping


# -- token alignment ---------------------------------------------------------

def covered_tokens(spans: Sequence[Span], tokens: Sequence[Token]) -> list[int]:
    """Indices of tokens intersecting any span.

    A span that cuts through a token covers the whole token. Raises
    AlignmentError when some span touches no token at all.
    """
    covered = []
    for sp in spans:
        hit = [i for i, t in enumerate(tokens) if t.span.intersects(sp)]
        if not hit:
            raise AlignmentError(f"span [{sp.start}, {sp.end}) at offset {sp.start} "
                                 "is not aligned to any token")
        covered.extend(hit)
    return sorted(set(covered))


def _span_token_groups(m: Mention, tokens: Sequence[Token]) -> list[list[int]]:
    groups = []
    for sp in m.spans:
        hit = [i for i, t in enumerate(tokens) if t.span.intersects(sp)]
        if hit:
            groups.append(hit)
    return groups


def classify_mention(m: Mention, others: Sequence[Mention], doc: Document) -> ComplexityClass:
    tokens = doc.tokens
    mine = set(covered_tokens(m.spans, tokens))
    overlapping = False
    for o in others:
        if o is m or (o.id == m.id and o.spans == m.spans):
            continue
        theirs = {i for i, t in enumerate(tokens) if any(t.span.intersects(s) for s in o.spans)}
        if mine & theirs:
            overlapping = True
            break
    return ComplexityClass(
        word_arity="multiword" if len(mine) >= 2 else "singleword",
        continuity="discontinuous" if len(m.spans) >= 2 else "continuous",
        overlap="overlapping" if overlapping else "non-overlapping",
    )


# -- BIO ---------------------------------------------------------------------

@dataclass
class EncodeReport:
    """Lossiness counters collected while flattening mentions into BIO."""

    conflicts: int = 0
    discontinuous_split: int = 0
    warnings: list[str] = field(default_factory=list)


def encode_bio(sent: Sentence, mentions: Sequence[Mention], layer: str,
               report: Optional[EncodeReport] = None) -> TagSequence:
    tokens = sent.tokens
    tags = ["O"] * len(tokens)
    owner: list[Optional[str]] = [None] * len(tokens)
    relevant = [m for m in mentions
                if m.in_layer(layer) and m.start < sent.end and m.end > sent.start]
    # earlier start wins; tie goes to the longer mention
    relevant.sort(key=lambda m: (m.start, -sum(len(s) for s in m.spans), m.id))
    for m in relevant:
        groups = _span_token_groups(m, tokens)
        if not groups:
            continue
        flat = sorted({i for g in groups for i in g})
        first = True
        prev = None
        for i in flat:
            if owner[i] is not None and owner[i] != m.id:
                if report is not None:
                    report.conflicts += 1
                    report.warnings.append(
                        f"token {i} claimed by {owner[i]}, dropped from {m.id} ({layer})")
                log.warning("BIO conflict on token %d: %s keeps it over %s", i, owner[i], m.id)
                prev = i
                continue
            if prev is not None and i != prev + 1 and report is not None:
                report.discontinuous_split += 1
            owner[i] = m.id
            tags[i] = "B" if first else "I"
            first = False
            prev = i
    return TagSequence(layer, tags)


def bio_runs(tags: Sequence[str]) -> list[tuple[str, int, int]]:
    """Chunks of a conlleval tag sequence as ``(type, first, last)`` token indices.

    ``I-X`` after ``O``, after a chunk of another type, or at the start of the
    sequence opens a new chunk, exactly as ``B-X`` would. Bare ``B``/``I``
    tags are read as type ``""``.
    """
    runs = []
    cur = None
    for i, tag in enumerate(tags):
        if tag == "O" or not tag:
            if cur:
                runs.append(tuple(cur))
            cur = None
            continue
        prefix, _, kind = tag.partition("-")
        if prefix not in ("B", "I"):
            raise ValidationError(f"invalid tag {tag!r} at position {i}")
        if prefix == "I" and cur is not None and cur[0] == kind:
            cur[2] = i
            continue
        if cur:
            runs.append(tuple(cur))
        cur = [kind, i, i]
    if cur:
        runs.append(tuple(cur))
    return runs


def decode_bio(tags: TagSequence, sent: Sentence) -> list[Mention]:
    if len(tags) != len(sent):
        raise AlignmentError(f"{len(tags)} tags for {len(sent)} tokens")
    entity = tags.layer if tags.layer in ENTITIES else _entity_of(tags.layer)
    attribute = None if tags.layer in ENTITIES else tags.layer
    out = []
    for n, (_, a, b) in enumerate(bio_runs(list(tags.tags))):
        span = Span(sent.tokens[a].span.start, sent.tokens[b].span.end)
        out.append(Mention(id=f"{tags.layer}-{span.start}-{n}", entity=entity,
                           attribute=attribute, spans=(span,)))
    return out


def _entity_of(attribute: str) -> str:
    for ent, attrs in ATTRIBUTES.items():
        if attribute in attrs:
            return ent
    raise ValidationError(f"unknown layer {attribute!r}")


def token_extent(m: Mention, sent: Sentence) -> tuple[int, ...]:
    """Token indices a mention covers within one sentence."""
    return tuple(sorted({i for g in _span_token_groups(m, sent.tokens) for i in g}))


def layers_of(mentions: Iterable[Mention]) -> list[str]:
    seen = {}
    for m in mentions:
        seen.setdefault(m.entity, None)
        if m.attribute:
            seen.setdefault(m.attribute, None)
    return [lab for lab in ALL_LABELS if lab in seen]
