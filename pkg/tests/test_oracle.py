from __future__ import annotations

import random
from fractions import Fraction

import pytest

from lhapriori.mining import frequent_itemsets
from lhapriori.oracle import MAX_ITEMS, enumerate_frequent, enumerate_rules
from lhapriori.transactions import Item

from conftest import random_dataset

A, B, C = (Item("X", v) for v in "ABC")


def test_one_transaction():
    table = enumerate_frequent([(A, B, C)], 1.0)
    assert set(table.counts) == {(A,), (B,), (C,), (A, B), (A, C), (B, C), (A, B, C)}


def test_support_domain():
    with pytest.raises(ValueError):
        enumerate_frequent([(A,)], 1.5)
    with pytest.raises(ValueError):
        enumerate_frequent([], 0.5)


def test_vocabulary_cap():
    wide = [tuple(Item("W", str(k)) for k in range(MAX_ITEMS + 1))]
    with pytest.raises(ValueError, match=str(MAX_ITEMS)):
        enumerate_frequent(wide, 0.5)


def test_identical_transactions_have_no_rules():
    data = [(A, B, C)] * 7
    everything = enumerate_rules(data, 0.1, 0.1, 0)
    assert everything and all(r.confidence == 1 and r.lift == 1 for r in everything)
    assert enumerate_rules(data, 0.1, 0.1, 1.0) == []


def test_consequent_never_empty():
    rules = enumerate_rules([(A, B), (A,), (B, C)], 0.1, 0.1, 0)
    assert all(r.antecedent and r.consequent for r in rules)


def test_order_independence():
    rng = random.Random(11)
    for _ in range(10):
        data = random_dataset(rng, 8, 80)
        shuffled = [tuple(rng.sample(t, len(t))) for t in data]
        rng.shuffle(shuffled)
        assert enumerate_frequent(data, 0.1).counts == enumerate_frequent(shuffled, 0.1).counts
        rules = lambda d: {(r.key, r.metrics) for r in enumerate_rules(d, 0.1, 0.3, 1.0)}  # noqa: E731
        assert rules(data) == rules(shuffled)


def test_agrees_with_mining_on_micro(micro_transactions):
    for s in (Fraction(1, 17), 0.2, 0.35, 1.0):
        assert enumerate_frequent(micro_transactions, s).counts == frequent_itemsets(micro_transactions, s).counts
