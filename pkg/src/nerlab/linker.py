"""Linking corpus words to thesaurus concepts.

Two independent methods:

* cosine: the concept whose embedding is closest to the word's embedding,
  accepted when the cosine reaches ``T`` (default 0.55);
* syntactic: each word and each concept word get a lexical context set
  (the word and its neighbours) and a syntactic set (the word and its
  dependency parent). Lexical involvement and cohesiveness are F1 overlaps
  of those sets, centrality checks whether the word's parent occurs in the
  concept word's syntactic set. Their mean must exceed 0.6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .core import CorpusError, Sentence, Token
from .formats import VectorTable

FUNCTION_POS = frozenset({"ADP", "PART", "PUNCT", "CCONJ", "SCONJ", "DET", "AUX"})


class PreprocessError(CorpusError):
    pass


class LinkerConfigError(CorpusError):
    pass


@dataclass(frozen=True)
class Word:
    """A token that survived preprocessing, with its position in the sentence."""

    index: int
    form: str
    parent: Optional[int] = None   # sentence index of the head token, None at root


def _keep(tok: Token, min_len: int, max_df: Optional[float],
          freq: Optional[Mapping[str, float]]) -> Optional[str]:
    if tok.lemma is None or tok.pos is None:
        raise PreprocessError(f"token {tok.text!r} at offset {tok.span.start} lacks lemma or PoS")
    if tok.pos in FUNCTION_POS:
        return None
    form = tok.lemma.lower()
    if len(form) < min_len:
        return None
    if freq is not None and max_df is not None and freq.get(form, 0.0) > max_df:
        return None
    return form


def preprocess(tokens: Sequence[Token], min_len: int = 1,
               freq: Optional[Mapping[str, float]] = None,
               max_df: Optional[float] = None) -> list[Word]:
    """Lowercased lemmas of content words, keeping sentence positions.

    ``freq`` maps lemma -> document frequency; with ``max_df`` set, lemmas
    above that ceiling are dropped. The filter is off by default.
    """
    out = []
    for i, tok in enumerate(tokens):
        form = _keep(tok, min_len, max_df, freq)
        if form is None:
            continue
        parent = tok.head - 1 if tok.head else None
        out.append(Word(i, form, parent))
    return out


def preprocess_words(tokens: Sequence[Token], **kw) -> list[str]:
    return [w.form for w in preprocess(tokens, **kw)]


@dataclass(frozen=True)
class ContextSets:
    word: str
    lexical: frozenset
    syntactic: frozenset
    parent: Optional[str] = None


def context_sets(words: Sequence[Word]) -> list[ContextSets]:
    """Context sets for each filtered word.

    Neighbours are adjacent in the filtered sequence. A parent counts only if
    it survived preprocessing itself.
    """
    by_index = {w.index: w for w in words}
    out = []
    for k, w in enumerate(words):
        lex = {w.form}
        if k > 0:
            lex.add(words[k - 1].form)
        if k + 1 < len(words):
            lex.add(words[k + 1].form)
        parent = by_index.get(w.parent) if w.parent is not None else None
        syn = {w.form} | ({parent.form} if parent else set())
        out.append(ContextSets(w.form, frozenset(lex), frozenset(syn),
                               parent.form if parent else None))
    return out


def _f1_overlap(x: frozenset, y: frozenset) -> float:
    common = len(x & y)
    if not common:
        return 0.0
    p, r = common / len(x), common / len(y)
    return 2 * p * r / (p + r)


def lexical_involvement(w: ContextSets, c: ContextSets) -> float:
    return _f1_overlap(w.lexical, c.lexical)


def cohesiveness(w: ContextSets, c: ContextSets) -> float:
    return _f1_overlap(w.syntactic, c.syntactic)


def centrality(w: ContextSets, c: ContextSets) -> int:
    return int(w.parent is not None and w.parent in c.syntactic)


def syntactic_similarity(w: ContextSets, c: ContextSets) -> float:
    return (lexical_involvement(w, c) + cohesiveness(w, c) + centrality(w, c)) / 3.0


@dataclass
class ConceptEntry:
    text: str
    code: str
    words: list[str] = field(default_factory=list)
    contexts: list[ContextSets] = field(default_factory=list)
    vector: Optional[list[float]] = None

    @classmethod
    def from_tokens(cls, text: str, code: str, tokens: Sequence[Token],
                    vector: Optional[Sequence[float]] = None, **pre) -> "ConceptEntry":
        words = preprocess(tokens, **pre)
        return cls(text, code, [w.form for w in words], context_sets(words),
                   list(vector) if vector is not None else None)

    @classmethod
    def from_text(cls, text: str, code: str,
                  vector: Optional[Sequence[float]] = None) -> "ConceptEntry":
        """Unparsed concept: whitespace words, no syntactic structure."""
        words = [Word(i, w.lower()) for i, w in enumerate(text.split())]
        return cls(text, code, [w.form for w in words], context_sets(words),
                   list(vector) if vector is not None else None)


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    if len(u) != len(v):
        raise LinkerConfigError(f"vector dimensions differ: {len(u)} vs {len(v)}")
    nu = math.sqrt(sum(x * x for x in u))
    nv = math.sqrt(sum(x * x for x in v))
    if nu == 0 or nv == 0:
        return 0.0
    return sum(x * y for x, y in zip(u, v)) / (nu * nv)


def concept_vector(concept: ConceptEntry, vectors: VectorTable) -> Optional[list[float]]:
    """Stored vector, else the mean of the concept words' vectors, else None."""
    if concept.vector is not None:
        if len(concept.vector) != vectors.dimension:
            raise LinkerConfigError(
                f"concept {concept.code}: vector has {len(concept.vector)} dims, "
                f"table has {vectors.dimension}")
        return concept.vector
    found = [vectors.entries[w] for w in concept.words if w in vectors.entries]
    if not found:
        return None
    return [sum(col) / len(found) for col in zip(*found)]


@dataclass(frozen=True)
class Link:
    word: str
    code: str
    score: float
    method: str

    def tsv(self) -> str:
        return f"{self.word}\t{self.code}\t{self.score:.6f}\t{self.method}"


def link_cosine(word: str, concepts: Sequence[ConceptEntry], vectors: VectorTable,
                threshold: float = 0.55) -> Optional[Link]:
    """Best concept by cosine; linked iff the best cosine is >= threshold.

    Out-of-vocabulary words never link. Ties keep the earlier concept.
    """
    vec = vectors.get(word)
    if vec is None:
        return None
    best, best_score = None, -math.inf
    for c in concepts:
        cv = concept_vector(c, vectors)
        if cv is None:
            continue
        score = cosine(vec, cv)
        if score > best_score:
            best, best_score = c, score
    if best is None or best_score < threshold:
        return None
    return Link(word, best.code, best_score, "cosine")


def concept_score(w: ContextSets, concept: ConceptEntry) -> float:
    """Max over the concept's words of the three-metric mean."""
    return max((syntactic_similarity(w, c) for c in concept.contexts), default=0.0)


def link_syntactic(index: int, sentence: Sentence, concepts: Sequence[ConceptEntry],
                   threshold: float = 0.6, **pre) -> Optional[Link]:
    """Link the token at ``index`` of a parsed sentence, or None.

    The token must survive preprocessing. Linked iff the best concept score
    is strictly greater than ``threshold``.
    """
    if any(t.head is None for t in sentence.tokens):
        raise PreprocessError("sentence has no dependency parse")
    words = preprocess(sentence.tokens, **pre)
    contexts = context_sets(words)
    target = next((cs for w, cs in zip(words, contexts) if w.index == index), None)
    if target is None:
        return None
    return _best_syntactic(target, concepts, threshold)


def _best_syntactic(target: ContextSets, concepts, threshold) -> Optional[Link]:
    best, best_score = None, -math.inf
    for c in concepts:
        score = concept_score(target, c)
        if score > best_score:
            best, best_score = c, score
    if best is None or not best_score > threshold:
        return None
    return Link(target.word, best.code, best_score, "syntactic")


def link_sentence(sentence: Sentence, concepts: Sequence[ConceptEntry], method: str,
                  vectors: Optional[VectorTable] = None, threshold: Optional[float] = None,
                  **pre) -> list[tuple[int, Optional[Link]]]:
    """Link every preprocessed word of a sentence. Returns (token index, link) pairs."""
    words = preprocess(sentence.tokens, **pre)
    if method == "cosine":
        if vectors is None:
            raise LinkerConfigError("cosine linking needs a vector table")
        t = 0.55 if threshold is None else threshold
        return [(w.index, link_cosine(w.form, concepts, vectors, t)) for w in words]
    if method == "syntactic":
        if any(tok.head is None for tok in sentence.tokens):
            raise PreprocessError("sentence has no dependency parse")
        t = 0.6 if threshold is None else threshold
        return [(w.index, _best_syntactic(cs, concepts, t))
                for w, cs in zip(words, context_sets(words))]
    raise LinkerConfigError(f"unknown linking method {method!r}")
