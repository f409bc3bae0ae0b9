"""Subgroup mining and the cross-cohort comparisons built on it."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Sequence

from ._numeric import format_decimal
from .mining import FrequentItemsetTable, VerticalIndex, frequent_itemsets
from .rules import MiningConfig, Rule, derive_rules, explain_absence, rank_rules
from .transactions import (
    SOLVED,
    UNSOLVED,
    CohortRates,
    CohortSpec,
    SessionRecord,
    Transaction,
    cohort_rates,
    encode_transactions,
    filter_cohort,
    format_itemset,
)


class EmptyCohortError(ValueError):
    def __init__(self, spec: CohortSpec):
        super().__init__(f"cohort {spec.name!r} has no records")
        self.spec = spec


@dataclass(frozen=True)
class CohortResult:
    spec: CohortSpec
    config: MiningConfig
    record_count: int
    stats: CohortRates
    transactions: tuple[Transaction, ...]
    itemsets: FrequentItemsetTable
    rules: list[Rule]

    @cached_property
    def index(self) -> VerticalIndex:
        return VerticalIndex(self.transactions)

    def absence_reason(self, antecedent, consequent) -> str:
        reason = explain_absence(self.index, antecedent, consequent, self.config.min_support,
                                 self.config.min_confidence, self.config.min_lift)
        return reason or f"outside top {self.config.top_k}"


def mine_cohort(
    records: Sequence[SessionRecord],
    spec: CohortSpec,
    config: MiningConfig = MiningConfig(),
    *,
    workers: int = 1,
) -> CohortResult:
    members = filter_cohort(records, spec)
    if not members:
        raise EmptyCohortError(spec)
    transactions = tuple(encode_transactions(members))
    table = frequent_itemsets(transactions, config.min_support, workers=workers)
    rules = rank_rules(derive_rules(table, config.min_confidence, config.min_lift), config.top_k)
    return CohortResult(spec, config, len(members), cohort_rates(members, spec.name),
                        transactions, table, rules)


@dataclass(frozen=True)
class ComparisonRow:
    antecedent: tuple
    consequent: tuple
    a: Rule | None
    b: Rule | None
    absent_reason: str = ""

    @property
    def label(self) -> str:
        return f"{format_itemset(self.antecedent)} -> {format_itemset(self.consequent)}"

    @property
    def delta(self) -> Fraction | None:
        """Lift in cohort b minus lift in cohort a."""
        if self.a is None or self.b is None:
            return None
        return self.b.lift - self.a.lift

    @property
    def max_lift(self) -> Fraction:
        return max(r.lift for r in (self.a, self.b) if r is not None)


@dataclass(frozen=True)
class ComparisonReport:
    cohort_a: str
    cohort_b: str
    rows: list[ComparisonRow]

    def row(self, antecedent, consequent) -> ComparisonRow:
        for r in self.rows:
            if r.antecedent == tuple(antecedent) and r.consequent == tuple(consequent):
                return r
        raise KeyError((antecedent, consequent))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rule", "cohort_a_lift", "cohort_b_lift", "delta", "cohort_a_conf",
                         "cohort_b_conf", "cohort_a_support", "cohort_b_support", "absent_reason"])
        for row in self.rows:
            cell = lambda r, attr: "ABSENT" if r is None else format_decimal(getattr(r, attr))  # noqa: E731
            delta = row.delta
            writer.writerow([
                row.label,
                cell(row.a, "lift"),
                cell(row.b, "lift"),
                "" if delta is None else format_decimal(delta),
                cell(row.a, "confidence"),
                cell(row.b, "confidence"),
                cell(row.a, "support"),
                cell(row.b, "support"),
                row.absent_reason,
            ])
        return buf.getvalue()


def compare_cohorts(a: CohortResult, b: CohortResult) -> ComparisonReport:
    """Side-by-side metrics for every rule in either cohort's ranked list."""
    if a.config != b.config:
        raise ValueError(f"cohorts mined with different configs: {a.config} vs {b.config}")
    in_a = {r.key: r for r in a.rules}
    in_b = {r.key: r for r in b.rules}
    rows = []
    for key in in_a.keys() | in_b.keys():
        ra, rb = in_a.get(key), in_b.get(key)
        reason = ""
        if ra is None:
            reason = f"{a.spec.name}: {a.absence_reason(*key)}"
        elif rb is None:
            reason = f"{b.spec.name}: {b.absence_reason(*key)}"
        rows.append(ComparisonRow(key[0], key[1], ra, rb, reason))
    rows.sort(key=lambda r: (-r.max_lift, r.label))
    return ComparisonReport(a.spec.name, b.spec.name, rows)


def outcome_rules(result: CohortResult) -> tuple[list[Rule], list[Rule]]:
    """Ranked rules predicting exactly Status=SOLVED and exactly Status=UNSOLVED."""
    solved = [r for r in result.rules if r.consequent == (SOLVED,)]
    unsolved = [r for r in result.rules if r.consequent == (UNSOLVED,)]
    return solved, unsolved


def outcome_csv(result: CohortResult) -> str:
    solved, unsolved = outcome_rules(result)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["outcome", "rank", "antecedent", "consequent", "support", "confidence", "lift"])
    for outcome, rules in (("SOLVED", solved), ("UNSOLVED", unsolved)):
        for rank, r in enumerate(rules, start=1):
            writer.writerow([outcome, rank, format_itemset(r.antecedent), format_itemset(r.consequent),
                             format_decimal(r.support), format_decimal(r.confidence),
                             format_decimal(r.lift)])
    return buf.getvalue()
