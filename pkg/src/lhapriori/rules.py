"""Association rules from frequent itemsets: derivation, filtering and ranking."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from ._numeric import as_fraction, format_decimal
from .mining import FrequentItemsetTable, VerticalIndex
from .transactions import Itemset, format_itemset


@dataclass(frozen=True)
class Rule:
    """``antecedent -> consequent`` with the counts its metrics come from.

    Metrics are exact fractions; use ``float()`` for display.
    """

    antecedent: Itemset
    consequent: Itemset
    count: int
    antecedent_count: int
    consequent_count: int
    transaction_count: int

    @property
    def key(self) -> tuple[Itemset, Itemset]:
        return (self.antecedent, self.consequent)

    @property
    def support(self) -> Fraction:
        return Fraction(self.count, self.transaction_count)

    @property
    def confidence(self) -> Fraction:
        return Fraction(self.count, self.antecedent_count)

    @property
    def lift(self) -> Fraction:
        return Fraction(self.count * self.transaction_count,
                        self.antecedent_count * self.consequent_count)

    @property
    def metrics(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.support, self.confidence, self.lift)

    def label(self) -> str:
        return f"{format_itemset(self.antecedent)} -> {format_itemset(self.consequent)}"

    def __str__(self) -> str:
        s, c, l = self.metrics
        return f"{self.label()} (support={float(s):.4f}, confidence={float(c):.4f}, lift={float(l):.4f})"


@dataclass(frozen=True)
class MiningConfig:
    """Thresholds for one mining run.

    Support and confidence are inclusive lower bounds; lift must strictly
    exceed ``min_lift``. ``top_k`` caps the ranked rule list per run.
    """

    min_support: float | Fraction = 0.20
    min_confidence: float | Fraction = 0.60
    min_lift: float | Fraction = 1.0
    top_k: int = 30

    def __post_init__(self) -> None:
        if not 0 < as_fraction(self.min_support) <= 1:
            raise ValueError(f"min_support must be in (0, 1], got {self.min_support}")
        if not 0 < as_fraction(self.min_confidence) <= 1:
            raise ValueError(f"min_confidence must be in (0, 1], got {self.min_confidence}")
        if as_fraction(self.min_lift) < 0:
            raise ValueError(f"min_lift must be >= 0, got {self.min_lift}")
        if isinstance(self.top_k, bool) or not isinstance(self.top_k, int) or self.top_k < 1:
            raise ValueError(f"top_k must be a positive integer, got {self.top_k}")


def passes(rule: Rule, min_support, min_confidence, min_lift) -> bool:
    return (
        rule.support >= as_fraction(min_support)
        and rule.confidence >= as_fraction(min_confidence)
        and rule.lift > as_fraction(min_lift)
    )


def derive_rules(
    table: FrequentItemsetTable,
    min_confidence: float | Fraction,
    min_lift: float | Fraction,
) -> list[Rule]:
    """Every rule A -> C with A u C frequent, confidence >= ``min_confidence``
    and lift > ``min_lift``, over all splits of each itemset into two
    non-empty parts."""
    min_conf = as_fraction(min_confidence)
    lift_floor = as_fraction(min_lift)
    n = table.transaction_count
    rules: list[Rule] = []
    for items in table.ordered():
        if len(items) < 2:
            continue
        joint = table.count(items)
        for size in range(1, len(items)):
            for antecedent in combinations(items, size):
                consequent = tuple(i for i in items if i not in antecedent)
                rule = Rule(antecedent, consequent, joint,
                            table.count(antecedent), table.count(consequent), n)
                if rule.confidence >= min_conf and rule.lift > lift_floor:
                    rules.append(rule)
    return rules


def _sort_key(rule: Rule):
    return (-rule.lift, -rule.confidence, -rule.support,
            format_itemset(rule.antecedent), format_itemset(rule.consequent))


def rank_rules(rules: Iterable[Rule], top_k: int) -> list[Rule]:
    """Descending lift, then confidence, then support, then rule text; first ``top_k``."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    return sorted(rules, key=_sort_key)[:top_k]


def rule_from_index(index: VerticalIndex, antecedent: Itemset, consequent: Itemset) -> Rule | None:
    """Metrics for an arbitrary rule by direct counting; ``None`` when the
    antecedent or consequent never occurs (confidence or lift undefined)."""
    a = index.count(antecedent)
    c = index.count(consequent)
    if a == 0 or c == 0:
        return None
    return Rule(antecedent, consequent, index.count(antecedent + consequent), a, c,
                index.transaction_count)


def explain_absence(
    index: VerticalIndex,
    antecedent: Itemset,
    consequent: Itemset,
    min_support,
    min_confidence,
    min_lift,
) -> str | None:
    """Why a rule is not reported at the given thresholds, or ``None`` if it passes.

    Checks run support, then confidence, then lift, so a support shortfall is
    reported even when confidence would also fail.
    """
    n = index.transaction_count
    joint = index.count(tuple(antecedent) + tuple(consequent))
    support = Fraction(joint, n)
    s_min, c_min, l_min = (as_fraction(x) for x in (min_support, min_confidence, min_lift))
    if support < s_min:
        return f"support {support_text(support)} < {threshold_text(s_min)}"
    rule = rule_from_index(index, antecedent, consequent)
    assert rule is not None  # joint > 0 here, so both sides occur
    if rule.confidence < c_min:
        return f"confidence {support_text(rule.confidence)} < {threshold_text(c_min)}"
    if rule.lift <= l_min:
        return f"lift {support_text(rule.lift)} <= {threshold_text(l_min)}"
    return None


def support_text(value: Fraction) -> str:
    return f"{float(value):.3f}"


def threshold_text(value: Fraction) -> str:
    return f"{float(value):.2f}"


RULE_COLUMNS = ["antecedent", "consequent", "support", "confidence", "lift"]


def rules_csv(rules: Sequence[Rule]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RULE_COLUMNS)
    for r in rules:
        writer.writerow([
            format_itemset(r.antecedent),
            format_itemset(r.consequent),
            format_decimal(r.support),
            format_decimal(r.confidence),
            format_decimal(r.lift),
        ])
    return buf.getvalue()
