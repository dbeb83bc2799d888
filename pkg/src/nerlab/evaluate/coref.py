"""Coreference scores: MUC, B-cubed, entity-based CEAF and their CoNLL mean.

Chains are sets of elements; an element is whatever hashable key identifies a
mention (here, its tuple of spans). Scores are percentages.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..core import CorefChain, ValidationError
from .report import f1


class ChainSet:
    def __init__(self, chains: Iterable[Iterable[Hashable]]):
        self.chains: list[frozenset] = []
        seen = {}
        for k, chain in enumerate(chains):
            members = frozenset(chain)
            if len(members) < 2:
                raise ValidationError(f"chain {k} has fewer than 2 distinct elements")
            for el in members:
                if el in seen:
                    raise ValidationError(f"element {el!r} appears in chains {seen[el]} and {k}")
                seen[el] = k
            self.chains.append(members)
        self._index = seen

    @classmethod
    def from_chains(cls, chains: Sequence[CorefChain]) -> "ChainSet":
        return cls([c.elements for c in chains])

    def chain_of(self, el):
        k = self._index.get(el)
        return None if k is None else self.chains[k]

    def __len__(self):
        return len(self.chains)

    def __iter__(self):
        return iter(self.chains)


@dataclass(frozen=True)
class Fractions:
    """Numerators/denominators so document scores can be pooled."""

    p_num: float = 0.0
    p_den: float = 0.0
    r_num: float = 0.0
    r_den: float = 0.0

    def __add__(self, other: "Fractions") -> "Fractions":
        return Fractions(self.p_num + other.p_num, self.p_den + other.p_den,
                         self.r_num + other.r_num, self.r_den + other.r_den)

    def prf(self) -> tuple[float, float, float]:
        p = 100.0 * self.p_num / self.p_den if self.p_den else 0.0
        r = 100.0 * self.r_num / self.r_den if self.r_den else 0.0
        return p, r, f1(p, r)


def _muc_side(keys: ChainSet, response: ChainSet) -> tuple[float, float]:
    num = den = 0
    for chain in keys:
        parts = set()
        for el in chain:
            other = response.chain_of(el)
            parts.add(other if other is not None else ("__alone__", el))
        num += len(chain) - len(parts)
        den += len(chain) - 1
    return num, den


def muc_counts(gold: ChainSet, pred: ChainSet) -> Fractions:
    r_num, r_den = _muc_side(gold, pred)
    p_num, p_den = _muc_side(pred, gold)
    return Fractions(p_num, p_den, r_num, r_den)


def _b3_side(keys: ChainSet, response: ChainSet) -> tuple[float, float]:
    num = 0.0
    den = 0
    for chain in keys:
        den += len(chain)
        for other in response:
            common = len(chain & other)
            if common:
                num += common * common / len(chain)
    return num, den


def b3_counts(gold: ChainSet, pred: ChainSet) -> Fractions:
    r_num, r_den = _b3_side(gold, pred)
    p_num, p_den = _b3_side(pred, gold)
    return Fractions(p_num, p_den, r_num, r_den)


def phi4(k: frozenset, r: frozenset) -> float:
    return 2.0 * len(k & r) / (len(k) + len(r))


def ceafe_alignment(gold: ChainSet, pred: ChainSet) -> tuple[float, list[tuple[int, int]]]:
    """Optimal one-to-one chain alignment maximising the summed phi4 similarity."""
    if not len(gold) or not len(pred):
        return 0.0, []
    sim = np.array([[phi4(k, r) for r in pred] for k in gold])
    rows, cols = linear_sum_assignment(sim, maximize=True)
    pairs = [(int(i), int(j)) for i, j in zip(rows, cols) if sim[i, j] > 0]
    return float(sum(sim[i, j] for i, j in pairs)), pairs


def ceafe_counts(gold: ChainSet, pred: ChainSet) -> Fractions:
    total, _ = ceafe_alignment(gold, pred)
    return Fractions(total, len(pred), total, len(gold))


def muc_prf(gold: ChainSet, pred: ChainSet):
    return muc_counts(gold, pred).prf()


def b3_prf(gold: ChainSet, pred: ChainSet):
    return b3_counts(gold, pred).prf()


def ceafe_prf(gold: ChainSet, pred: ChainSet):
    return ceafe_counts(gold, pred).prf()


def conll_avg(muc_f1: float, b3_f1: float, ceafe_f1: float) -> float:
    return (muc_f1 + b3_f1 + ceafe_f1) / 3.0


def coref_scores(pairs: Iterable[tuple[ChainSet, ChainSet]]) -> dict:
    """Pool (gold, pred) chain sets over documents and score all metric families."""
    totals = {"muc": Fractions(), "b3": Fractions(), "ceafe": Fractions()}
    for gold, pred in pairs:
        totals["muc"] += muc_counts(gold, pred)
        totals["b3"] += b3_counts(gold, pred)
        totals["ceafe"] += ceafe_counts(gold, pred)
    out = {}
    for name, fr in totals.items():
        p, r, f = fr.prf()
        out[name] = {"precision": p, "recall": r, "f1": f}
    out["avg_f1"] = conll_avg(out["muc"]["f1"], out["b3"]["f1"], out["ceafe"]["f1"])
    return out
