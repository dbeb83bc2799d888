from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal


def pct(value: float, places: int = 1) -> float:
    """Round a percentage half-up (``Decimal`` semantics, not banker's)."""
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


def f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class Counts:
    gold_count: int = 0
    pred_count: int = 0
    correct_count: int = 0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.gold_count + other.gold_count,
                      self.pred_count + other.pred_count,
                      self.correct_count + other.correct_count)

    @property
    def precision(self) -> float:
        return 100.0 * self.correct_count / self.pred_count if self.pred_count else 0.0

    @property
    def recall(self) -> float:
        return 100.0 * self.correct_count / self.gold_count if self.gold_count else 0.0

    @property
    def f1(self) -> float:
        return f1(self.precision, self.recall)

    def as_dict(self, places: int | None = 1) -> dict:
        r = (lambda v: pct(v, places)) if places is not None else (lambda v: v)
        return {
            "precision": r(self.precision), "recall": r(self.recall), "f1": r(self.f1),
            "gold_count": self.gold_count, "pred_count": self.pred_count,
            "correct_count": self.correct_count,
        }


@dataclass
class MetricReport:
    per_type: dict[str, Counts] = field(default_factory=dict)

    @property
    def micro(self) -> Counts:
        total = Counts()
        for c in self.per_type.values():
            total = total + c
        return total

    def to_json(self, places: int | None = 1) -> dict:
        return {
            "per_type": {k: self.per_type[k].as_dict(places) for k in sorted(self.per_type)},
            "micro": self.micro.as_dict(places),
        }

    def to_text(self) -> str:
        rows = [("type", "gold", "pred", "correct", "P", "R", "F1")]
        for name in sorted(self.per_type):
            rows.append(_row(name, self.per_type[name]))
        rows.append(_row("overall", self.micro))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = []
        for r in rows:
            lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                                   for i, (c, w) in enumerate(zip(r, widths))).rstrip())
        return "\n".join(lines) + "\n"


def _row(name: str, c: Counts) -> tuple:
    return (name, str(c.gold_count), str(c.pred_count), str(c.correct_count),
            f"{pct(c.precision):.1f}", f"{pct(c.recall):.1f}", f"{pct(c.f1):.1f}")
