from __future__ import annotations

import random
from pathlib import Path

import pytest

from lhapriori.transactions import Item, encode_transactions, parse_records

DATA = Path(__file__).parent / "data"
MICRO = DATA / "micro_sessions.csv"


@pytest.fixture(scope="session")
def micro_path() -> Path:
    return MICRO


@pytest.fixture(scope="session")
def micro_records():
    result = parse_records(MICRO.read_bytes())
    assert not result.rejects
    return result.records


@pytest.fixture(scope="session")
def micro_transactions(micro_records):
    return encode_transactions(micro_records)


def random_dataset(rng: random.Random, max_items: int = 12, max_transactions: int = 500):
    """Random transactions over a small vocabulary.

    Half the datasets are free-form (each item independently present), half
    mimic encoded sessions (one value per attribute) so mutually exclusive
    items show up too.
    """
    n = rng.randint(1, max_transactions)
    if rng.random() < 0.5:
        m = rng.randint(1, max_items)
        vocab = [Item("I", f"{k:02d}") for k in range(m)]
        probs = [rng.random() for _ in vocab]
        return [tuple(sorted(i for i, p in zip(vocab, probs) if rng.random() < p)) for _ in range(n)]
    attrs = rng.randint(1, max_items // 2)
    weights = [rng.random() for _ in range(attrs)]
    return [
        tuple(sorted(Item(f"A{a}", "YES" if rng.random() < w else "NO") for a, w in enumerate(weights)))
        for _ in range(n)
    ]


# -- acceptance reporting ---------------------------------------------------

_ACCEPTANCE: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        previous = _ACCEPTANCE.get(label, "PASS")
        _ACCEPTANCE[label] = "PASS" if previous == "PASS" and report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=lambda s: int(s.split(":")[0].lstrip("AC"))):
        terminalreporter.write_line(f"[{_ACCEPTANCE[label]}] {label}")
