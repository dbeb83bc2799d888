"""CoNLL-2000 style chunk scoring over ``O`` / ``B-X`` / ``I-X`` tag sequences."""

from __future__ import annotations

from collections import Counter
from typing import Sequence

from ..core import AlignmentError, TagSequence, bio_runs
from .report import Counts, MetricReport


def _prefixed(seq) -> list[str]:
    return seq.prefixed() if isinstance(seq, TagSequence) else list(seq)


def extract_chunks(sequences) -> set[tuple[int, str, int, int]]:
    """All chunks as ``(sentence, type, first_token, last_token)``."""
    chunks = set()
    for k, seq in enumerate(sequences):
        for kind, a, b in bio_runs(_prefixed(seq)):
            chunks.add((k, kind, a, b))
    return chunks


def chunk_prf(gold: Sequence, pred: Sequence) -> MetricReport:
    """Score predicted chunks against gold chunks, per type and micro-averaged.

    ``gold`` and ``pred`` are parallel lists of per-sentence tag sequences
    (either prefixed strings or :class:`TagSequence`). A chunk is correct only
    when type, first and last token all agree.
    """
    if len(gold) != len(pred):
        raise AlignmentError(f"{len(gold)} gold vs {len(pred)} predicted sentences")
    for k, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise AlignmentError(f"sentence {k}: {len(g)} gold vs {len(p)} predicted tags")
    g_chunks = extract_chunks(gold)
    p_chunks = extract_chunks(pred)
    g_by = Counter(c[1] for c in g_chunks)
    p_by = Counter(c[1] for c in p_chunks)
    ok_by = Counter(c[1] for c in g_chunks & p_chunks)
    report = MetricReport()
    for kind in sorted(set(g_by) | set(p_by)):
        report.per_type[kind] = Counts(g_by[kind], p_by[kind], ok_by[kind])
    return report
