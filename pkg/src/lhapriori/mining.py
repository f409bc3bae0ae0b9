"""Level-wise Apriori over encoded transactions.

Support counting is done on a vertical layout: each item owns a bitmap (a
Python int) with bit ``i`` set when transaction ``i`` contains the item. The
support of an itemset is the popcount of the AND of its members' bitmaps,
and a k-candidate's bitmap is the AND of the two (k-1)-itemsets it was joined
from, so every level costs one AND per candidate.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, groupby
from typing import Iterable, Mapping, Sequence

from ._numeric import as_fraction, format_decimal
from .transactions import Item, Itemset, Transaction, format_itemset


class VerticalIndex:
    """Item -> transaction bitmap, built once per transaction list."""

    def __init__(self, transactions: Sequence[Iterable[Item]]):
        self.transaction_count = len(transactions)
        positions: dict[Item, bytearray] = {}
        width = (self.transaction_count + 7) // 8
        for tid, transaction in enumerate(transactions):
            byte, bit = tid >> 3, 1 << (tid & 7)
            for item in transaction:
                buf = positions.get(item)
                if buf is None:
                    buf = positions[item] = bytearray(width)
                buf[byte] |= bit
        self.bitmaps: dict[Item, int] = {
            item: int.from_bytes(buf, "little") for item, buf in positions.items()
        }
        self._all = (1 << self.transaction_count) - 1

    @property
    def items(self) -> list[Item]:
        return sorted(self.bitmaps)

    def bitmap(self, items: Iterable[Item]) -> int:
        bits = self._all
        for item in items:
            bits &= self.bitmaps.get(item, 0)
            if not bits:
                break
        return bits

    def count(self, items: Iterable[Item]) -> int:
        return self.bitmap(items).bit_count()


@dataclass(frozen=True)
class FrequentItemsetTable:
    """Frequent itemsets with exact integer counts.

    ``support`` values are exact fractions ``count / transaction_count``.
    """

    counts: Mapping[Itemset, int]
    transaction_count: int
    min_support: Fraction = field(default=Fraction(0))

    def __post_init__(self) -> None:
        if self.transaction_count <= 0:
            raise ValueError("transaction_count must be positive")

    def __contains__(self, items: object) -> bool:
        return items in self.counts

    def __len__(self) -> int:
        return len(self.counts)

    def count(self, items: Itemset) -> int:
        return self.counts[items]

    def support(self, items: Itemset) -> Fraction:
        return Fraction(self.counts[items], self.transaction_count)

    @property
    def entries(self) -> dict[Itemset, Fraction]:
        return {k: self.support(k) for k in self.ordered()}

    def ordered(self) -> list[Itemset]:
        """Itemsets by size, then canonical item order."""
        return sorted(self.counts, key=lambda s: (len(s), [i.sort_key for i in s]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["itemset", "support"])
        for items in self.ordered():
            writer.writerow([format_itemset(items), format_decimal(self.support(items))])
        return buf.getvalue()


def _meets(count: int, total: int, threshold: Fraction) -> bool:
    # count / total >= p / q  <=>  count * q >= p * total
    return count * threshold.denominator >= threshold.numerator * total


def generate_candidates(frequent: Sequence[Itemset]) -> list[Itemset]:
    """Join (k-1)-itemsets sharing their first k-2 items, then prune any
    candidate with an infrequent (k-1)-subset."""
    if not frequent:
        return []
    sizes = {len(s) for s in frequent}
    if len(sizes) != 1:
        raise ValueError(f"itemsets of mixed sizes {sorted(sizes)}")
    size = sizes.pop()
    if size == 0:
        raise ValueError("itemsets must be non-empty")
    known = set(frequent)
    ordered = sorted(known)
    out: list[Itemset] = []
    for _, group in groupby(ordered, key=lambda s: s[:-1]):
        members = list(group)
        for a, b in combinations(members, 2):
            candidate = a + (b[-1],)
            if all(candidate[:i] + candidate[i + 1:] in known for i in range(size + 1)):
                out.append(candidate)
    return out


def count_support(candidates: Iterable[Itemset], transactions: Sequence[Transaction]) -> dict[Itemset, int]:
    """Exact number of transactions containing every item of each candidate."""
    candidates = list(candidates)
    if not candidates:
        return {}
    index = VerticalIndex(transactions)
    return {c: index.count(c) for c in candidates}


def _and_counts(pairs: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    out = []
    for left, right in pairs:
        bits = left & right
        out.append((bits, bits.bit_count()))
    return out


def frequent_itemsets(
    transactions: Sequence[Transaction],
    min_support: float | Fraction,
    *,
    workers: int = 1,
) -> FrequentItemsetTable:
    """Every itemset with support >= ``min_support`` (inclusive, exact).

    ``workers > 1`` spreads each level's bitmap intersections over a thread
    pool; results are merged in candidate order so the table is identical to
    the sequential one.
    """
    if not transactions:
        raise ValueError("no transactions")
    threshold = as_fraction(min_support)
    if not 0 < threshold <= 1:
        raise ValueError(f"min_support must be in (0, 1], got {min_support}")

    index = VerticalIndex(transactions)
    n = index.transaction_count
    counts: dict[Itemset, int] = {}
    level: dict[Itemset, int] = {}
    for item in index.items:
        bits = index.bitmaps[item]
        c = bits.bit_count()
        if _meets(c, n, threshold):
            counts[(item,)] = c
            level[(item,)] = bits

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while level:
            candidates = generate_candidates(list(level))
            if not candidates:
                break
            pairs = [(level[c[:-1]], level[c[:-2] + c[-1:]]) for c in candidates]
            if pool is None:
                results = _and_counts(pairs)
            else:
                chunk = max(1, -(-len(pairs) // workers))
                chunks = [pairs[i:i + chunk] for i in range(0, len(pairs), chunk)]
                results = [r for part in pool.map(_and_counts, chunks) for r in part]
            level = {}
            for candidate, (bits, c) in zip(candidates, results):
                if _meets(c, n, threshold):
                    counts[candidate] = c
                    level[candidate] = bits
    finally:
        if pool is not None:
            pool.shutdown()

    return FrequentItemsetTable(counts, n, threshold)
