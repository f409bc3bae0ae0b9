"""Session-log ingestion: parsing, cleaning, transaction encoding and cohort filters.

The input is the tutoring system's spreadsheet export, one row per session::

    Account,MistakeOccurred,HintUsed,Skipped,Status,TotalSteps,TotalHints,TotalAnswerAttempts,TimeSpent,With Intervention,Label

Only the four behavioural indicators become items. Account, the count
columns and the two grouping columns are validated and kept on the record
but never enter pattern mining.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import re
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Sequence

from ._numeric import format_decimal

HEADER: tuple[str, ...] = (
    "Account",
    "MistakeOccurred",
    "HintUsed",
    "Skipped",
    "Status",
    "TotalSteps",
    "TotalHints",
    "TotalAnswerAttempts",
    "TimeSpent",
    "With Intervention",
    "Label",
)
HEADER_LINE = ",".join(HEADER)


class SchemaError(ValueError):
    """The input cannot be read as a session log at all (bad header, empty file)."""


class Status(enum.Enum):
    SOLVED = "SOLVED"
    UNSOLVED = "UNSOLVED"


class LHLabel(enum.Enum):
    LOW = "Low"
    HIGH = "High"


class Intervention(enum.Enum):
    WITH = "WITH"
    WITHOUT = "WITHOUT"


# Item attributes use the CSV column names so exported itemsets read like the input.
MISTAKE = "MistakeOccurred"
HINT = "HintUsed"
SKIPPED = "Skipped"
STATUS = "Status"

_ATTRIBUTE_RANK = {MISTAKE: 0, HINT: 1, SKIPPED: 2, STATUS: 3}
_VALUE_RANK = {"YES": 0, "NO": 1, "SOLVED": 0, "UNSOLVED": 1}


@total_ordering
@dataclass(frozen=True)
class Item:
    """An ``attribute=value`` token.

    Ordering puts the four indicator attributes first in column order, with
    YES before NO and SOLVED before UNSOLVED. Any other attribute or value
    (synthetic vocabularies in tests) sorts after them by name, so the engine
    works on arbitrary vocabularies.
    """

    attribute: str
    value: str

    @property
    def sort_key(self) -> tuple[int, str, int, str]:
        return (
            _ATTRIBUTE_RANK.get(self.attribute, len(_ATTRIBUTE_RANK)),
            self.attribute,
            _VALUE_RANK.get(self.value, len(_VALUE_RANK)),
            self.value,
        )

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, Item):
            return NotImplemented
        return self.sort_key < other.sort_key

    def __str__(self) -> str:
        return f"{self.attribute}={self.value}"

    @classmethod
    def parse(cls, text: str) -> Item:
        """Parse ``Skipped=YES``; attribute matching and values are case-insensitive."""
        attribute, sep, value = text.strip().partition("=")
        if not sep or not attribute.strip() or not value.strip():
            raise ValueError(f"item must look like Attribute=VALUE, got {text!r}")
        attribute = attribute.strip()
        for known in _ATTRIBUTE_RANK:
            if known.lower() == attribute.lower():
                attribute = known
                break
        return cls(attribute, value.strip().upper())


MISTAKE_YES, MISTAKE_NO = Item(MISTAKE, "YES"), Item(MISTAKE, "NO")
HINT_YES, HINT_NO = Item(HINT, "YES"), Item(HINT, "NO")
SKIPPED_YES, SKIPPED_NO = Item(SKIPPED, "YES"), Item(SKIPPED, "NO")
SOLVED, UNSOLVED = Item(STATUS, "SOLVED"), Item(STATUS, "UNSOLVED")

VOCABULARY: tuple[Item, ...] = (
    MISTAKE_YES, MISTAKE_NO, HINT_YES, HINT_NO, SKIPPED_YES, SKIPPED_NO, SOLVED, UNSOLVED,
)

Itemset = tuple[Item, ...]
Transaction = Itemset


def itemset(items: Iterable[Item]) -> Itemset:
    """Canonical form: sorted, duplicates removed."""
    return tuple(sorted(set(items)))


def format_itemset(items: Iterable[Item]) -> str:
    return ";".join(str(i) for i in items)


def parse_itemset(text: str) -> Itemset:
    parts = [p for p in text.split(";") if p.strip()]
    if not parts:
        raise ValueError("empty itemset")
    return itemset(Item.parse(p) for p in parts)


@dataclass(frozen=True)
class SessionRecord:
    account: str
    mistake_occurred: bool
    hint_used: bool
    skipped: bool
    status: Status
    total_steps: int
    total_hints: int
    total_answer_attempts: int
    time_spent: float
    with_intervention: bool
    lh_label: LHLabel

    def __post_init__(self) -> None:
        if not self.account.strip():
            raise ValueError("account must be non-empty")
        for name in ("total_steps", "total_hints", "total_answer_attempts"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not (self.time_spent >= 0 and math.isfinite(self.time_spent)):
            raise ValueError("time_spent must be a non-negative number")

    @property
    def intervention(self) -> Intervention:
        return Intervention.WITH if self.with_intervention else Intervention.WITHOUT

    def to_row(self) -> list[str]:
        yn = lambda b: "YES" if b else "NO"  # noqa: E731
        time = self.time_spent
        return [
            self.account,
            yn(self.mistake_occurred),
            yn(self.hint_used),
            yn(self.skipped),
            self.status.value,
            str(self.total_steps),
            str(self.total_hints),
            str(self.total_answer_attempts),
            str(int(time)) if float(time).is_integer() else format(Decimal(repr(float(time))), "f"),
            yn(self.with_intervention),
            self.lh_label.value,
        ]


@dataclass(frozen=True)
class RowDiagnostic:
    row: int
    message: str

    def __str__(self) -> str:
        return f"row {self.row}: {self.message}"


@dataclass(frozen=True)
class ParseResult:
    records: list[SessionRecord]
    rejects: list[RowDiagnostic]


_FLAGS = {"YES": True, "NO": False}
_STATUSES = {s.value: s for s in Status}
_LABELS = {label.value.upper(): label for label in LHLabel}


_COUNT = re.compile(r"[0-9]+")
_SECONDS = re.compile(r"[0-9]+(\.[0-9]+)?")


def _parse_count(text: str) -> int:
    if not _COUNT.fullmatch(text):
        raise ValueError(text)
    return int(text)


def _parse_seconds(text: str) -> float:
    if not _SECONDS.fullmatch(text):
        raise ValueError(text)
    seconds = float(text)
    if not math.isfinite(seconds):
        raise ValueError(text)
    return seconds


def _parse_row(fields: Sequence[str]) -> tuple[SessionRecord | None, list[str]]:
    values = dict(zip(HEADER, (f.strip() for f in fields)))
    problems: list[str] = []
    parsed: dict[str, object] = {}

    def take(column: str, convert, vocabulary: str | None = None):
        raw = values[column]
        if raw == "":
            problems.append(f"missing {column}")
            return None
        try:
            return convert(raw)
        except (KeyError, ValueError):
            if vocabulary:
                problems.append(f"invalid {column} {raw!r} (expected {vocabulary})")
            else:
                problems.append(f"invalid {column} {raw!r}")
            return None

    flag = lambda s: _FLAGS[s.upper()]  # noqa: E731
    parsed["account"] = take("Account", str)
    parsed["mistake_occurred"] = take("MistakeOccurred", flag, "YES/NO")
    parsed["hint_used"] = take("HintUsed", flag, "YES/NO")
    parsed["skipped"] = take("Skipped", flag, "YES/NO")
    parsed["status"] = take("Status", lambda s: _STATUSES[s.upper()], "SOLVED/UNSOLVED")
    parsed["total_steps"] = take("TotalSteps", _parse_count, None)
    parsed["total_hints"] = take("TotalHints", _parse_count, None)
    parsed["total_answer_attempts"] = take("TotalAnswerAttempts", _parse_count, None)
    parsed["time_spent"] = take("TimeSpent", _parse_seconds, None)
    parsed["with_intervention"] = take("With Intervention", flag, "YES/NO")
    parsed["lh_label"] = take("Label", lambda s: _LABELS[s.upper()], "Low/High")
    if problems:
        return None, problems
    try:
        return SessionRecord(**parsed), []  # type: ignore[arg-type]
    except ValueError as exc:
        return None, [str(exc)]


def parse_records(data: bytes | str) -> ParseResult:
    """Parse and clean a session-log CSV.

    Rows with a blank, unparsable or out-of-vocabulary field are dropped and
    reported as ``row N: ...`` where N is the spreadsheet row (header is row 1).
    A wrong header or an empty file raises :class:`SchemaError`.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError(f"input is not valid UTF-8 ({exc.reason} at byte {exc.start})") from None
    else:
        text = data
    text = text.removeprefix("\ufeff")
    if not text.strip():
        raise SchemaError("empty input: expected a header row")

    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = [h.strip() for h in next(reader)]
    except csv.Error as exc:
        raise SchemaError(f"unreadable header: {exc}") from None
    if tuple(header) != HEADER:
        raise SchemaError(f"unexpected header {','.join(header)!r}; expected {HEADER_LINE!r}")

    records: list[SessionRecord] = []
    rejects: list[RowDiagnostic] = []
    row_number = 1
    while True:
        row_number += 1
        try:
            fields = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            # the reader resynchronises on the next line
            rejects.append(RowDiagnostic(row_number, f"malformed CSV: {exc}"))
            continue
        if not any(f.strip() for f in fields):
            rejects.append(RowDiagnostic(row_number, "blank row"))
            continue
        if len(fields) != len(HEADER):
            rejects.append(
                RowDiagnostic(row_number, f"expected {len(HEADER)} fields, got {len(fields)}")
            )
            continue
        record, problems = _parse_row(fields)
        if record is None:
            rejects.append(RowDiagnostic(row_number, "; ".join(problems)))
        else:
            records.append(record)
    return ParseResult(records, rejects)


def records_to_csv(records: Iterable[SessionRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for r in records:
        writer.writerow(r.to_row())
    return buf.getvalue()


def encode(record: SessionRecord) -> Transaction:
    return (
        MISTAKE_YES if record.mistake_occurred else MISTAKE_NO,
        HINT_YES if record.hint_used else HINT_NO,
        SKIPPED_YES if record.skipped else SKIPPED_NO,
        SOLVED if record.status is Status.SOLVED else UNSOLVED,
    )


def encode_transactions(records: Iterable[SessionRecord]) -> list[Transaction]:
    return [encode(r) for r in records]


def decode(transaction: Transaction) -> tuple[bool, bool, bool, Status]:
    """Inverse of :func:`encode` on the four indicator fields."""
    by_attr = {item.attribute: item.value for item in transaction}
    if len(by_attr) != 4 or len(transaction) != 4:
        raise ValueError(f"not an encoded session: {format_itemset(transaction)}")
    return (
        by_attr[MISTAKE] == "YES",
        by_attr[HINT] == "YES",
        by_attr[SKIPPED] == "YES",
        Status(by_attr[STATUS]),
    )


@dataclass(frozen=True)
class CohortSpec:
    name: str = "all"
    lh_filter: LHLabel | None = None
    intervention_filter: Intervention | None = None

    def matches(self, record: SessionRecord) -> bool:
        if self.lh_filter is not None and record.lh_label is not self.lh_filter:
            return False
        if self.intervention_filter is not None and record.intervention is not self.intervention_filter:
            return False
        return True


OVERALL = CohortSpec("all")
LOW = CohortSpec("low", lh_filter=LHLabel.LOW)
HIGH = CohortSpec("high", lh_filter=LHLabel.HIGH)
WITH = CohortSpec("with", intervention_filter=Intervention.WITH)
WITHOUT = CohortSpec("without", intervention_filter=Intervention.WITHOUT)
STANDARD_COHORTS: tuple[CohortSpec, ...] = (LOW, HIGH, WITH, WITHOUT)
COHORTS_BY_NAME = {c.name: c for c in (OVERALL, *STANDARD_COHORTS)}


def filter_cohort(records: Iterable[SessionRecord], spec: CohortSpec) -> list[SessionRecord]:
    return [r for r in records if spec.matches(r)]


@dataclass(frozen=True)
class CohortRates:
    """Indicator rates for one cohort; rates are ``None`` when the cohort is empty."""

    cohort: str
    sessions: int
    mistake: Fraction | None
    hint: Fraction | None
    skipped: Fraction | None
    solved: Fraction | None


def cohort_rates(records: Sequence[SessionRecord], name: str = "all") -> CohortRates:
    n = len(records)
    if n == 0:
        return CohortRates(name, 0, None, None, None, None)
    return CohortRates(
        name,
        n,
        Fraction(sum(r.mistake_occurred for r in records), n),
        Fraction(sum(r.hint_used for r in records), n),
        Fraction(sum(r.skipped for r in records), n),
        Fraction(sum(r.status is Status.SOLVED for r in records), n),
    )


def descriptive_stats(records: Sequence[SessionRecord]) -> list[CohortRates]:
    """Rates for the whole input followed by the low, high, with and without cohorts."""
    if not records:
        raise ValueError("no records")
    rows = [cohort_rates(records, OVERALL.name)]
    for spec in STANDARD_COHORTS:
        rows.append(cohort_rates(filter_cohort(records, spec), spec.name))
    return rows


def stats_csv(rows: Iterable[CohortRates]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["cohort", "sessions", "mistake_rate", "hint_rate", "skip_rate", "solve_rate"])
    for row in rows:
        rates = (row.mistake, row.hint, row.skipped, row.solved)
        writer.writerow(
            [row.cohort, row.sessions, *("" if r is None else format_decimal(r) for r in rates)]
        )
    return buf.getvalue()
