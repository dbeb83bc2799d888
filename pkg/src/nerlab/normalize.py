"""Grouping of mention surface forms and code assignment for normalization.

Grouping is an incremental single pass: each surface joins the existing group
whose mean Ratcliff/Obershelp similarity to all group items (duplicates
included) is highest, provided that mean strictly exceeds the threshold;
otherwise it founds a new group. The result depends on input order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence


def _longest_match(a: str, alo: int, ahi: int, b: str, blo: int, bhi: int):
    """Longest common substring of a[alo:ahi] and b[blo:bhi].

    Among equally long candidates the one starting earliest in ``a`` wins,
    then the one starting earliest in ``b``.
    """
    best_i, best_j, best_k = alo, blo, 0
    prev: dict[int, int] = {}
    for i in range(alo, ahi):
        cur = {}
        ch = a[i]
        for j in range(blo, bhi):
            if b[j] == ch:
                k = prev.get(j - 1, 0) + 1
                cur[j] = k
                if k > best_k:
                    best_i, best_j, best_k = i - k + 1, j - k + 1, k
        prev = cur
    return best_i, best_j, best_k


def matching_blocks(a: str, b: str) -> list[tuple[int, int, int]]:
    blocks = []
    stack = [(0, len(a), 0, len(b))]
    while stack:
        alo, ahi, blo, bhi = stack.pop()
        i, j, k = _longest_match(a, alo, ahi, b, blo, bhi)
        if k:
            blocks.append((i, j, k))
            if alo < i and blo < j:
                stack.append((alo, i, blo, j))
            if i + k < ahi and j + k < bhi:
                stack.append((i + k, ahi, j + k, bhi))
    return sorted(blocks)


def ratcliff_similarity(a: str, b: str) -> float:
    """Ratcliff/Obershelp gestalt similarity ``2*M / (|a| + |b|)``, case-insensitive.

    The lexicographically smaller string is always scanned first, which
    makes the score symmetric.
    """
    a, b = sorted((a.lower(), b.lower()))
    if not a and not b:
        return 1.0
    matched = sum(k for _, _, k in matching_blocks(a, b))
    return 2.0 * matched / (len(a) + len(b))


@dataclass
class MentionGroup:
    members: list[str] = field(default_factory=list)
    codes: dict[str, str] = field(default_factory=dict)
    concept_less: bool = False

    @property
    def name(self) -> str:
        counts = Counter(self.members)
        top = max(counts.values())
        return min(s for s, n in counts.items() if n == top)

    @property
    def size(self) -> int:
        return len(self.members)

    def to_json(self) -> dict:
        counts = Counter(self.members)
        return {
            "name": self.name,
            "size": self.size,
            "members": {s: counts[s] for s in sorted(counts)},
            "codes": dict(sorted(self.codes.items())),
            "concept_less": self.concept_less,
        }


def group_mentions(surfaces: Sequence[str], threshold: float = 0.8,
                   keys: Optional[Sequence[str]] = None) -> list[MentionGroup]:
    """Group surface forms by mean similarity.

    ``keys`` optionally gives a comparison string per surface (for example
    the space-joined lemmas of the mention); surfaces themselves are stored
    as members either way. Surfaces with identical keys always share a group
    when ``threshold < 1``.
    """
    if not 0 < threshold:
        raise ValueError(f"threshold must be positive, got {threshold}")
    if keys is None:
        keys = surfaces
    if len(keys) != len(surfaces):
        raise ValueError("keys and surfaces differ in length")

    groups: list[MentionGroup] = []
    group_keys: list[list[str]] = []
    home: dict[str, int] = {}
    cache: dict[tuple[str, str], float] = {}

    def sim(x: str, y: str) -> float:
        pair = (x, y) if x <= y else (y, x)
        if pair not in cache:
            cache[pair] = ratcliff_similarity(x, y)
        return cache[pair]

    for surface, key in zip(surfaces, keys):
        norm = key.lower()
        target = home.get(norm) if threshold < 1 else None
        if target is None:
            best, best_score = None, threshold
            for gi, gkeys in enumerate(group_keys):
                score = sum(sim(norm, k) for k in gkeys) / len(gkeys)
                if score > best_score:
                    best, best_score = gi, score
            target = best
        if target is None:
            groups.append(MentionGroup())
            group_keys.append([])
            target = len(groups) - 1
        groups[target].members.append(surface)
        group_keys[target].append(norm)
        home.setdefault(norm, target)
    return groups


def assign_codes(groups: Sequence[MentionGroup],
                 mapping: Mapping[str, Mapping[str, str]]) -> list[MentionGroup]:
    """Attach codes to groups whose name is in ``mapping`` (name -> {scheme: code}).

    Lookup is case-insensitive. Unmatched groups are flagged ``concept_less``.
    """
    lowered = {k.lower(): v for k, v in mapping.items()}
    out = []
    for g in groups:
        codes = dict(lowered.get(g.name.lower(), {}))
        out.append(MentionGroup(members=list(g.members), codes=codes, concept_less=not codes))
    return out


def groups_tsv(groups: Sequence[MentionGroup]) -> str:
    lines = ["name\tsize\tmembers\tcodes"]
    for g in groups:
        counts = Counter(g.members)
        members = "|".join(f"{s}:{counts[s]}" for s in sorted(counts))
        codes = "|".join(f"{k}:{v}" for k, v in sorted(g.codes.items())) or (
            "concept_less" if g.concept_less else "")
        lines.append(f"{g.name}\t{g.size}\t{members}\t{codes}")
    return "\n".join(lines) + "\n"
