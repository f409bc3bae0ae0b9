"""Threshold-grid sweeps and the tracked-rule stability table.

A rule's support, confidence and lift depend only on the data, so each
cohort is mined once at the loosest grid cell and every other cell is a
filter over that rule set.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

from ._numeric import as_fraction, format_decimal
from .mining import VerticalIndex, frequent_itemsets
from .rules import Rule, derive_rules, explain_absence, passes, rank_rules, rule_from_index
from .transactions import (
    HINT_NO,
    MISTAKE_YES,
    SKIPPED_NO,
    SKIPPED_YES,
    SOLVED,
    UNSOLVED,
    CohortSpec,
    Itemset,
    SessionRecord,
    encode_transactions,
    filter_cohort,
    format_itemset,
    itemset,
    parse_itemset,
)
from .cohorts import EmptyCohortError


@dataclass(frozen=True)
class ThresholdGrid:
    support_levels: tuple[Fraction, ...] = (Fraction("0.15"), Fraction("0.20"), Fraction("0.25"))
    confidence_levels: tuple[Fraction, ...] = (Fraction("0.50"), Fraction("0.60"), Fraction("0.70"))
    min_lift: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        for name in ("support_levels", "confidence_levels"):
            levels = tuple(as_fraction(x) for x in getattr(self, name))
            if not levels:
                raise ValueError(f"{name} must not be empty")
            if any(not 0 < x <= 1 for x in levels):
                raise ValueError(f"{name} must lie in (0, 1]")
            if any(b <= a for a, b in zip(levels, levels[1:])):
                raise ValueError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, levels)
        object.__setattr__(self, "min_lift", as_fraction(self.min_lift))
        if self.min_lift < 0:
            raise ValueError("min_lift must be >= 0")

    @property
    def cells(self) -> list[tuple[Fraction, Fraction]]:
        return list(product(self.support_levels, self.confidence_levels))


def cell_label(cell: tuple[Fraction, Fraction]) -> str:
    return f"s={float(cell[0]):.2f}/c={float(cell[1]):.2f}"


@dataclass(frozen=True)
class TrackedRule:
    antecedent: Itemset
    consequent: Itemset
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "antecedent", itemset(self.antecedent))
        object.__setattr__(self, "consequent", itemset(self.consequent))
        if not self.antecedent or not self.consequent:
            raise ValueError("tracked rule sides must be non-empty")
        if set(self.antecedent) & set(self.consequent):
            raise ValueError("tracked rule sides must be disjoint")
        if not self.name:
            object.__setattr__(self, "name", self.label)

    @property
    def label(self) -> str:
        return f"{format_itemset(self.antecedent)} -> {format_itemset(self.consequent)}"

    @classmethod
    def parse(cls, text: str, name: str = "") -> TrackedRule:
        """``Skipped=YES;HintUsed=NO->Status=UNSOLVED``."""
        left, sep, right = text.partition("->")
        if not sep:
            raise ValueError(f"tracked rule must look like A;B->C, got {text!r}")
        return cls(parse_itemset(left), parse_itemset(right), name)


DEFAULT_TRACKED: tuple[TrackedRule, ...] = (
    TrackedRule((SKIPPED_YES,), (UNSOLVED,), "{Skipped} -> {Unsolved}"),
    TrackedRule((SKIPPED_YES, HINT_NO), (UNSOLVED,), "{Skipped, No Hint} -> {Unsolved}"),
    TrackedRule((MISTAKE_YES, SKIPPED_YES), (UNSOLVED,), "{Mistake, Skipped} -> {Unsolved}"),
    TrackedRule((SKIPPED_NO,), (SOLVED,), "{Not Skipped} -> {Solved}"),
)


@dataclass(frozen=True)
class CellOutcome:
    cell: tuple[Fraction, Fraction]
    present: bool
    reason: str | None = None


@dataclass(frozen=True)
class StabilityRow:
    cohort: str
    rule: TrackedRule
    lift: Fraction | None
    cells: tuple[CellOutcome, ...]
    observed: Rule | None = None

    @property
    def present_cells(self) -> list[tuple[Fraction, Fraction]]:
        return [c.cell for c in self.cells if c.present]

    @property
    def absent_cells(self) -> list[CellOutcome]:
        return [c for c in self.cells if not c.present]


@dataclass(frozen=True)
class StabilityTable:
    grid: ThresholdGrid
    rows: list[StabilityRow]
    cell_rules: dict[tuple[str, Fraction, Fraction], list[Rule]] = field(repr=False)
    cell_lifts: dict[tuple[str, str, Fraction, Fraction], Fraction] = field(repr=False)

    def row(self, cohort: str, rule: TrackedRule | str) -> StabilityRow:
        name = rule if isinstance(rule, str) else rule.name
        for r in self.rows:
            if r.cohort == cohort and r.rule.name == name:
                return r
        raise KeyError((cohort, name))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["cohort", "rule", "lift", "cells_present", "cells_absent", "absence_detail"])
        for r in self.rows:
            writer.writerow([
                r.cohort,
                r.rule.label,
                "" if r.lift is None else format_decimal(r.lift),
                " ".join(cell_label(c) for c in r.present_cells),
                " ".join(cell_label(c.cell) for c in r.absent_cells),
                " | ".join(f"{cell_label(c.cell)}: {c.reason}" for c in r.absent_cells),
            ])
        return buf.getvalue()

    def render_text(self) -> str:
        """Aligned table: cohorts down, tracked rules across, footnotes for partial presence."""
        cohorts = list(dict.fromkeys(r.cohort for r in self.rows))
        tracked = list(dict.fromkeys(r.rule.name for r in self.rows))
        notes: list[str] = []
        body: list[list[str]] = []
        total = len(self.grid.cells)
        for cohort in cohorts:
            line = [cohort]
            for name in tracked:
                row = self.row(cohort, name)
                present = row.present_cells
                if not present:
                    line.append("-")
                    continue
                text = f"{float(row.lift):.3f}"
                if len(present) < total:
                    notes.append(
                        f"{'*' * (len(notes) + 1)} {cohort}, {name}: not detected at "
                        + "; ".join(f"{cell_label(c.cell)} ({c.reason})" for c in row.absent_cells)
                    )
                    text += "*" * len(notes)
                line.append(text)
            body.append(line)
        header = ["Subgroup", *tracked]
        widths = [max(len(r[k]) for r in [header, *body]) for k in range(len(header))]
        fmt = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()  # noqa: E731
        lines = [fmt(header), fmt(["-" * w for w in widths])]
        lines += [fmt(r) for r in body]
        supports = ", ".join(f"{float(s):.2f}" for s in self.grid.support_levels)
        confs = ", ".join(f"{float(c):.2f}" for c in self.grid.confidence_levels)
        lines.append("")
        lines.append(f"Grid: support in {{{supports}}}; confidence in {{{confs}}}; "
                     f"lift > {float(self.grid.min_lift):.2f}. A dash means the rule met no cell.")
        lines += notes
        return "\n".join(lines) + "\n"


def sweep_grid(
    records: Sequence[SessionRecord],
    cohorts: Sequence[CohortSpec],
    grid: ThresholdGrid = ThresholdGrid(),
    tracked: Sequence[TrackedRule] = DEFAULT_TRACKED,
    *,
    top_k: int = 30,
    workers: int = 1,
) -> StabilityTable:
    """Presence and lift of each tracked rule for every cohort x grid cell.

    A tracked rule is present in a cell when it clears that cell's support,
    confidence and lift thresholds; ``top_k`` only truncates the per-cell rule
    lists kept in ``cell_rules``.
    """
    if not cohorts:
        raise ValueError("no cohorts to sweep")
    rows: list[StabilityRow] = []
    cell_rules: dict[tuple[str, Fraction, Fraction], list[Rule]] = {}
    cell_lifts: dict[tuple[str, str, Fraction, Fraction], Fraction] = {}
    loosest_support = grid.support_levels[0]
    loosest_conf = grid.confidence_levels[0]
    for spec in cohorts:
        members = filter_cohort(records, spec)
        if not members:
            raise EmptyCohortError(spec)
        transactions = encode_transactions(members)
        table = frequent_itemsets(transactions, loosest_support, workers=workers)
        pool = derive_rules(table, loosest_conf, grid.min_lift)
        by_key = {r.key: r for r in pool}
        for s, c in grid.cells:
            selected = [r for r in pool if passes(r, s, c, grid.min_lift)]
            cell_rules[(spec.name, s, c)] = rank_rules(selected, top_k)
            for rule in tracked:
                hit = by_key.get((rule.antecedent, rule.consequent))
                if hit is not None and passes(hit, s, c, grid.min_lift):
                    cell_lifts[(spec.name, rule.name, s, c)] = hit.lift

        index = VerticalIndex(transactions)
        for rule in tracked:
            outcomes = []
            for s, c in grid.cells:
                if (spec.name, rule.name, s, c) in cell_lifts:
                    outcomes.append(CellOutcome((s, c), True))
                else:
                    reason = explain_absence(index, rule.antecedent, rule.consequent, s, c, grid.min_lift)
                    outcomes.append(CellOutcome((s, c), False, reason))
            hit = by_key.get((rule.antecedent, rule.consequent))
            present = any(o.present for o in outcomes)
            rows.append(StabilityRow(
                spec.name,
                rule,
                hit.lift if present else None,
                tuple(outcomes),
                rule_from_index(index, rule.antecedent, rule.consequent),
            ))
    return StabilityTable(grid, rows, cell_rules, cell_lifts)


def parse_levels(text: str) -> tuple[Fraction, ...]:
    return tuple(as_fraction(x) for x in text.split(",") if x.strip())

