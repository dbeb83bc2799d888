from .agreement import (AgreementConfig, agreement_average, agreement_pair,
                        match_mentions, pairwise_table)
from .chunking import chunk_prf, extract_chunks
from .coref import (ChainSet, b3_prf, ceafe_alignment, ceafe_prf, conll_avg,
                    coref_scores, muc_prf)
from .report import Counts, MetricReport, f1, pct

__all__ = [
    "AgreementConfig", "agreement_average", "agreement_pair", "match_mentions",
    "pairwise_table", "chunk_prf", "extract_chunks", "ChainSet", "b3_prf",
    "ceafe_alignment", "ceafe_prf", "conll_avg", "coref_scores", "muc_prf",
    "Counts", "MetricReport", "f1", "pct",
]
