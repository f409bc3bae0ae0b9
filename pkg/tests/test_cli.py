from __future__ import annotations

import csv
import hashlib
import json
import shutil

import pytest

from lhapriori.cli import main


def run(*argv):
    return main(["-q", *map(str, argv)])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_stats(micro_path, tmp_path, capsys):
    assert run("stats", "--input", micro_path, "--out-dir", tmp_path) == 0
    rows = {r["cohort"]: r for r in read_csv(tmp_path / "stats.csv")}
    assert rows["all"]["skip_rate"] == "0.352941"
    assert rows["without"]["sessions"] == "0"
    assert "0.352941" in capsys.readouterr().out


def test_stats_cohort_low(micro_path, tmp_path):
    assert run("stats", "--input", micro_path, "--out-dir", tmp_path, "--cohort", "low") == 0
    (row,) = read_csv(tmp_path / "stats.csv")
    assert row["cohort"] == "low" and row["sessions"] == "5"
    assert row["skip_rate"] == "0.200000" and row["mistake_rate"] == "0.800000"


def test_missing_file(tmp_path, caplog):
    missing = tmp_path / "nope.csv"
    assert run("stats", "--input", missing, "--out-dir", tmp_path) == 1
    assert str(missing) in caplog.text


def test_bad_header_file(tmp_path, caplog):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert run("mine", "--input", bad, "--out-dir", tmp_path / "o") == 1
    assert "expected" in caplog.text


def test_mine_defaults(micro_path, tmp_path):
    assert run("mine", "--input", micro_path, "--out-dir", tmp_path) == 0
    rules = read_csv(tmp_path / "rules.csv")
    lifts = [float(r["lift"]) for r in rules]
    assert lifts == sorted(lifts, reverse=True)
    # {Skipped} -> {Mistake, Unsolved} (25/17 x ...) outranks the plain skip rule
    assert rules[0]["lift"] == "1.57407"
    skip = [r for r in rules if (r["antecedent"], r["consequent"]) == ("Skipped=YES", "Status=UNSOLVED")]
    assert skip and skip[0]["lift"] == "1.30769"
    itemsets = read_csv(tmp_path / "itemsets.csv")
    assert {"itemset": "Skipped=YES;Status=UNSOLVED", "support": "0.352941"} in itemsets
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    for name in ("rules.csv", "itemsets.csv"):
        digest = hashlib.sha256((tmp_path / name).read_bytes()).hexdigest()
        assert manifest["artifacts"][name] == digest
    assert manifest["config"]["min_support"] == "1/5"


def test_mine_top_k_one(micro_path, tmp_path):
    assert run("mine", "--input", micro_path, "--out-dir", tmp_path, "--top-k", 1) == 0
    assert len(read_csv(tmp_path / "rules.csv")) == 1


@pytest.mark.parametrize("flag, value", [
    ("--min-support", "1.1"),
    ("--min-support", "0"),
    ("--min-confidence", "abc"),
    ("--top-k", "0"),
    ("--cohort", "medium"),
])
def test_mine_usage_errors(micro_path, tmp_path, flag, value):
    with pytest.raises(SystemExit) as exc:
        run("mine", "--input", micro_path, "--out-dir", tmp_path, flag, value)
    assert exc.value.code == 2


def test_mine_empty_cohort(micro_path, tmp_path):
    assert run("mine", "--input", micro_path, "--out-dir", tmp_path, "--cohort", "without") == 1


def test_cohorts(micro_path, tmp_path, caplog):
    assert run("cohorts", "--input", micro_path, "--out-dir", tmp_path) == 0
    assert "without" in caplog.text
    assert not (tmp_path / "rules_without.csv").exists()
    rows = read_csv(tmp_path / "compare_low_vs_high.csv")
    row = next(r for r in rows if r["rule"] == "Skipped=YES -> Status=UNSOLVED")
    # many low-cohort rules tie at lift 1.25, pushing this one past the cut
    assert row["cohort_a_lift"] == "ABSENT" and row["absent_reason"] == "low: outside top 30"
    assert not (tmp_path / "compare_with_vs_without.csv").exists()
    outcomes = read_csv(tmp_path / "outcomes_all.csv")
    assert outcomes and all(r["outcome"] == "UNSOLVED" for r in outcomes)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["cohorts"] == ["all", "low", "high", "with"]


def test_cohorts_wide_top_k(micro_path, tmp_path):
    assert run("cohorts", "--input", micro_path, "--out-dir", tmp_path, "--top-k", 500) == 0
    rows = read_csv(tmp_path / "compare_low_vs_high.csv")
    row = next(r for r in rows if r["rule"] == "Skipped=YES -> Status=UNSOLVED")
    assert (row["cohort_a_lift"], row["cohort_b_lift"], row["delta"]) == ("1.25000", "1.33333", "0.0833333")


def test_sweep(micro_path, tmp_path, capsys):
    assert run("sweep", "--input", micro_path, "--out-dir", tmp_path) == 0
    rows = read_csv(tmp_path / "stability.csv")
    skip = next(r for r in rows if r["cohort"] == "all" and r["rule"] == "Skipped=YES -> Status=UNSOLVED")
    assert skip["lift"] == "1.30769" and skip["cells_absent"] == ""
    assert len(skip["cells_present"].split()) == 9
    assert "{Skipped} -> {Unsolved}" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["grid"]["support_levels"] == ["3/20", "1/5", "1/4"]


def test_sweep_single_cell_and_custom_rule(micro_path, tmp_path):
    assert run("sweep", "--input", micro_path, "--out-dir", tmp_path, "--support-levels", "0.2",
               "--confidence-levels", "0.6", "--cohort", "high",
               "--track", "Skipped=YES->Status=UNSOLVED") == 0
    (row,) = read_csv(tmp_path / "stability.csv")
    assert row["cohort"] == "high" and row["lift"] == "1.33333"
    assert row["cells_present"] == "s=0.20/c=0.60"


def test_sweep_bad_grid(micro_path, tmp_path):
    assert run("sweep", "--input", micro_path, "--out-dir", tmp_path,
               "--support-levels", "0.3,0.2") == 1


def test_synth_is_reproducible(tmp_path):
    for d in ("a", "b"):
        assert run("synth", "--seed", 7, "--students-per-cell", 3, "--out-dir", tmp_path / d) == 0
    for name in ("sessions.csv", "sessions.manifest.json", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert run("stats", "--input", tmp_path / "a" / "sessions.csv", "--out-dir", tmp_path / "s") == 0


def test_synth_zero_sessions(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run("synth", "--sessions-per-student", 0, "--out-dir", tmp_path)
    assert exc.value.code == 2


def test_rejected_rows_reported(micro_path, tmp_path, caplog):
    dirty = tmp_path / "dirty.csv"
    shutil.copy(micro_path, dirty)
    with open(dirty, "a") as fh:
        fh.write("ABIS09,YES,NO,NO,,1,0,1,1,YES,Low\n")
    assert main(["mine", "--input", str(dirty), "--out-dir", str(tmp_path / "o")]) == 0
    assert "row 19: missing Status" in caplog.text
