"""Token- and document-level feature extractors."""

from __future__ import annotations

import bisect
import unicodedata
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..core import Document, Sentence, Token
from ..formats import Lexicon

COMMON_FEATURE_NAMES = (
    "all_caps", "all_lower", "first_cap", "has_digit", "mostly_digits",
    "all_digits", "all_latin",
)

PSYCHOLING_NAMES = (
    "verbs_per_adj", "verbs_per_noun", "verb_forms_share",
    "questions", "exclamations", "mean_sentence_len",
)


def _is_latin(ch: str) -> bool:
    return unicodedata.name(ch, "").startswith("LATIN")


def common_features(text: str) -> tuple[int, ...]:
    """Seven orthographic bits, in the order of ``COMMON_FEATURE_NAMES``.

    Case and script questions are about letters only, so a token without
    letters answers 0 to all of them.
    """
    if not text:
        raise ValueError("empty token")
    letters = [c for c in text if c.isalpha()]
    digits = sum(c.isdigit() for c in text)
    return (
        int(bool(letters) and all(c.isupper() for c in letters)),
        int(bool(letters) and all(c.islower() for c in letters)),
        int(text[0].isupper()),
        int(digits > 0),
        int(digits > len(text) / 2),
        int(digits == len(text)),
        int(bool(letters) and all(_is_latin(c) for c in letters)),
    )


def _lookup_form(token, use_lemma: bool) -> str:
    if isinstance(token, str):
        return token.lower()
    if use_lemma and token.lemma:
        return token.lemma.lower()
    return token.text.lower()


def emotion_features(token, dictionaries: Sequence[Lexicon], use_lemma: bool = True) -> tuple[int, ...]:
    """Bit i is set when the token (its lemma by default) is in dictionary i."""
    form = _lookup_form(token, use_lemma)
    return tuple(int(form in d.entries) for d in dictionaries)


def dict_features(token, lexicon: Lexicon, categories: Optional[Sequence[str]] = None,
                  use_lemma: bool = True) -> tuple[int, ...]:
    """One bit per lexicon category; every term of a category shares its bit."""
    if categories is None:
        categories = lexicon.categories
    form = _lookup_form(token, use_lemma)
    cat = lexicon.entries.get(form)
    if cat is None and not isinstance(token, str):
        cat = lexicon.entries.get(token.text.lower())
    return tuple(int(cat == c) for c in categories)


def code_features(code: Optional[str], vocabulary: Sequence[str]) -> tuple[int, ...]:
    """One-hot over a capped code vocabulary; unknown or missing codes give zeros."""
    return tuple(int(code == v) for v in vocabulary)


@dataclass(frozen=True)
class PsycholingMarkers:
    values: tuple[float, ...]
    undefined: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, float]:
        return dict(zip(PSYCHOLING_NAMES, self.values))


def _verb_kind(tok: Token) -> Optional[str]:
    if tok.pos != "VERB":
        return None
    feats = dict(kv.split("=", 1) for kv in (tok.feats or "").split("|") if "=" in kv)
    form = feats.get("VerbForm")
    if form == "Part":
        return "participle"
    if form == "Conv":
        return "converb"
    return "verb"


def psycholing_markers(doc: Document) -> PsycholingMarkers:
    """Part-of-speech ratios, punctuation counts and mean sentence length.

    Participles and adverbial participles are recognised through
    ``VerbForm=Part`` / ``VerbForm=Conv`` in FEATS. A ratio whose denominator
    is zero is reported as 0 and its name listed in ``undefined``.
    """
    tokens = doc.tokens
    kinds = [_verb_kind(t) for t in tokens]
    verbs = kinds.count("verb")
    verb_forms = verbs + kinds.count("participle") + kinds.count("converb")
    adjs = sum(t.pos == "ADJ" for t in tokens)
    nouns = sum(t.pos == "NOUN" for t in tokens)
    words = sum(not t.is_punct for t in tokens)
    undefined = []

    def ratio(num, den, name):
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    values = (
        ratio(verbs, adjs, "verbs_per_adj"),
        ratio(verbs, nouns, "verbs_per_noun"),
        ratio(verb_forms, words, "verb_forms_share"),
        float(doc.text.count("?")),
        float(doc.text.count("!")),
        ratio(len(tokens), len(doc.sentences), "mean_sentence_len"),
    )
    return PsycholingMarkers(values, tuple(undefined))


def quintile_cuts(values: Sequence[float]) -> list[float]:
    """Cut points at the 20/40/60/80th percentiles (nearest-rank)."""
    xs = sorted(values)
    if not xs:
        return []
    return [xs[min(len(xs) - 1, (len(xs) * q) // 5)] for q in (1, 2, 3, 4)]


def bucket(value: float, cuts: Sequence[float]) -> int:
    return bisect.bisect_right(cuts, value) if cuts else 0


@dataclass
class FeatureExtractor:
    """Builds the sparse string features the perceptron consumes.

    Token features of positions i-2..i+2 are conjoined with their relative
    offset. Document markers enter as quintile buckets.
    """

    window: int = 2
    lexicons: list[Lexicon] = field(default_factory=list)
    emotions: list[Lexicon] = field(default_factory=list)
    marker_cuts: list[list[float]] = field(default_factory=list)
    use_markers: bool = True

    def fit_markers(self, docs: Sequence[Document]) -> None:
        if not self.use_markers or not docs:
            self.marker_cuts = []
            return
        table = [psycholing_markers(d).values for d in docs]
        self.marker_cuts = [quintile_cuts([row[k] for row in table])
                            for k in range(len(PSYCHOLING_NAMES))]

    def doc_features(self, doc: Optional[Document]) -> list[str]:
        if doc is None or not self.marker_cuts:
            return []
        values = psycholing_markers(doc).values
        return [f"doc:{name}=q{bucket(v, cuts)}"
                for name, v, cuts in zip(PSYCHOLING_NAMES, values, self.marker_cuts)]

    def token_features(self, tok: Token) -> list[str]:
        form = tok.text.lower()
        feats = [f"w={form}", f"suf3={form[-3:]}"]
        if tok.lemma:
            feats.append(f"lem={tok.lemma.lower()}")
        if tok.pos:
            feats.append(f"pos={tok.pos}")
        feats.extend(name for name, bit in zip(COMMON_FEATURE_NAMES, common_features(tok.text)) if bit)
        for lex in self.lexicons:
            cat = lex.entries.get(_lookup_form(tok, True)) or lex.entries.get(form)
            if cat is not None:
                feats.append(f"dict:{lex.name}={cat}")
        for k, bit in enumerate(emotion_features(tok, self.emotions)):
            if bit:
                feats.append(f"emo:{self.emotions[k].name}")
        return feats

    def sentence_features(self, sent: Sentence, doc: Optional[Document] = None) -> list[list[str]]:
        base = [self.token_features(t) for t in sent.tokens]
        shared = ["bias"] + self.doc_features(doc)
        out = []
        n = len(base)
        for i in range(n):
            feats = list(shared)
            for off in range(-self.window, self.window + 1):
                j = i + off
                if 0 <= j < n:
                    feats.extend(f"{off}:{f}" for f in base[j])
                else:
                    feats.append(f"{off}:<pad>")
            out.append(feats)
        return out

    def to_json(self) -> dict:
        return {
            "window": self.window,
            "use_markers": self.use_markers,
            "marker_cuts": self.marker_cuts,
            "lexicons": [{"name": x.name, "entries": dict(sorted(x.entries.items()))} for x in self.lexicons],
            "emotions": [{"name": x.name, "entries": dict(sorted(x.entries.items()))} for x in self.emotions],
        }

    @classmethod
    def from_json(cls, raw: dict) -> "FeatureExtractor":
        return cls(
            window=raw["window"],
            use_markers=raw.get("use_markers", True),
            marker_cuts=[list(c) for c in raw.get("marker_cuts", [])],
            lexicons=[Lexicon(x["name"], dict(x["entries"])) for x in raw.get("lexicons", [])],
            emotions=[Lexicon(x["name"], dict(x["entries"])) for x in raw.get("emotions", [])],
        )
