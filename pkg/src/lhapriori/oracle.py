"""Brute-force reference for frequent itemsets and rules.

Enumerates every non-empty subset of the observed vocabulary and counts it
by scanning all transactions. No candidate generation, no pruning, no
bitmaps shared with :mod:`lhapriori.mining`. Used only by tests.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from ._numeric import as_fraction
from .mining import FrequentItemsetTable
from .rules import Rule
from .transactions import Item, Itemset, Transaction

MAX_ITEMS = 20


def _subset_counts(transactions: Sequence[Transaction]) -> tuple[list[Item], dict[Itemset, int]]:
    if not transactions:
        raise ValueError("no transactions")
    vocabulary = sorted({item for t in transactions for item in t})
    if len(vocabulary) > MAX_ITEMS:
        raise ValueError(f"vocabulary of {len(vocabulary)} items exceeds the oracle cap of {MAX_ITEMS}")
    position = {item: k for k, item in enumerate(vocabulary)}
    masks = np.array(
        [sum(1 << position[item] for item in set(t)) for t in transactions], dtype=np.int64
    )
    counts: dict[Itemset, int] = {}
    for subset in range(1, 1 << len(vocabulary)):
        hits = int(np.count_nonzero((masks & subset) == subset))
        members = tuple(vocabulary[k] for k in range(len(vocabulary)) if subset >> k & 1)
        counts[members] = hits
    return vocabulary, counts


def _check_support(min_support) -> Fraction:
    threshold = as_fraction(min_support)
    if not 0 < threshold <= 1:
        raise ValueError(f"min_support must be a fraction in (0, 1], got {min_support}")
    return threshold


def enumerate_frequent(transactions: Sequence[Transaction], min_support) -> FrequentItemsetTable:
    threshold = _check_support(min_support)
    _, counts = _subset_counts(transactions)
    n = len(transactions)
    kept = {s: c for s, c in counts.items() if Fraction(c, n) >= threshold}
    return FrequentItemsetTable(kept, n, threshold)


def enumerate_rules(transactions: Sequence[Transaction], min_support, min_confidence, min_lift) -> list[Rule]:
    threshold = _check_support(min_support)
    min_conf = as_fraction(min_confidence)
    lift_floor = as_fraction(min_lift)
    _, counts = _subset_counts(transactions)
    n = len(transactions)
    rules = []
    for union, joint in counts.items():
        if len(union) < 2 or Fraction(joint, n) < threshold:
            continue
        for size in range(1, len(union)):
            for antecedent in combinations(union, size):
                consequent = tuple(i for i in union if i not in antecedent)
                a, c = counts[antecedent], counts[consequent]
                confidence = Fraction(joint, a)
                lift = Fraction(joint * n, a * c)
                if confidence >= min_conf and lift > lift_floor:
                    rules.append(Rule(antecedent, consequent, joint, a, c, n))
    return rules
