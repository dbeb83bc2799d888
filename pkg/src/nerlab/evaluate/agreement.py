"""Inter-annotator agreement on span annotations.

Per document, agreement is ``100 * matched / max(|A|, |B|)`` where
``matched`` is the size of a maximum one-to-one matching between the two
annotators' mentions. Pairs are admissible according to two switches: span
strictness (exact spans or any character overlap) and tag strictness
(labels must match or are ignored).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..core import CorpusError, Mention

SPAN_MODES = ("strict", "intersection")
TAG_MODES = ("strict", "ignored")


@dataclass(frozen=True)
class AgreementConfig:
    span: str = "strict"
    tag: str = "strict"

    def __post_init__(self):
        if self.span not in SPAN_MODES:
            raise ValueError(f"span strictness must be one of {SPAN_MODES}, got {self.span!r}")
        if self.tag not in TAG_MODES:
            raise ValueError(f"tag strictness must be one of {TAG_MODES}, got {self.tag!r}")


def admissible(a: Mention, b: Mention, cfg: AgreementConfig) -> bool:
    if cfg.tag == "strict" and a.label != b.label:
        return False
    if cfg.span == "strict":
        return a.spans == b.spans
    return any(x.intersects(y) for x in a.spans for y in b.spans)


def match_mentions(A: Sequence[Mention], B: Sequence[Mention], cfg: AgreementConfig) -> int:
    """Size of a maximum bipartite matching (augmenting paths)."""
    adj = [[j for j, b in enumerate(B) if admissible(a, b, cfg)] for a in A]
    owner = [-1] * len(B)

    def augment(i, seen):
        for j in adj[i]:
            if j in seen:
                continue
            seen.add(j)
            if owner[j] == -1 or augment(owner[j], seen):
                owner[j] = i
                return True
        return False

    return sum(1 for i in range(len(A)) if augment(i, set()))


def agreement_pair(A: Sequence[Mention], B: Sequence[Mention], cfg: AgreementConfig) -> float:
    if not A and not B:
        return 100.0
    return 100.0 * match_mentions(A, B, cfg) / max(len(A), len(B))


def pair_average(a_docs: Mapping[str, Sequence[Mention]], b_docs: Mapping[str, Sequence[Mention]],
                 cfg: AgreementConfig) -> float:
    shared = [d for d in a_docs if d in b_docs]
    if not shared:
        raise CorpusError("annotators share no documents")
    return sum(agreement_pair(a_docs[d], b_docs[d], cfg) for d in shared) / len(shared)


def agreement_average(annotations: Mapping[str, Mapping[str, Sequence[Mention]]],
                      cfg: AgreementConfig) -> float:
    """Mean over annotator pairs of each pair's mean per-document agreement."""
    if len(annotations) < 2:
        raise CorpusError("agreement needs at least two annotators")
    names = sorted(annotations)
    scores = [pair_average(annotations[x], annotations[y], cfg)
              for x, y in itertools.combinations(names, 2)]
    return sum(scores) / len(scores)


def pairwise_table(annotations, cfg: AgreementConfig) -> dict[tuple[str, str], float]:
    names = sorted(annotations)
    return {(x, y): pair_average(annotations[x], annotations[y], cfg)
            for x, y in itertools.combinations(names, 2)}
