from __future__ import annotations

import json

import pytest

from lhapriori.cohorts import mine_cohort
from lhapriori.rules import rule_from_index
from lhapriori.synthgen import (
    CELLS,
    BehaviorProfile,
    GeneratorSpec,
    default_profiles,
    generate_csv,
    generate_sessions,
)
from lhapriori.transactions import (
    HIGH,
    LOW,
    WITH,
    WITHOUT,
    SKIPPED_NO,
    SOLVED,
    Intervention,
    LHLabel,
    Status,
    cohort_rates,
    filter_cohort,
    parse_records,
)


@pytest.fixture(scope="module")
def large():
    # 667 students x 15 sessions = 10,005 sessions per cell
    return generate_sessions(GeneratorSpec(seed=2024, students_per_cell=667))


def test_same_spec_same_output():
    spec = GeneratorSpec(seed=42, students_per_cell=3)
    assert generate_sessions(spec) == generate_sessions(spec)
    assert generate_csv(spec) == generate_csv(spec)
    assert generate_sessions(GeneratorSpec(seed=43, students_per_cell=3)) != generate_sessions(spec)


def test_degenerate_profile():
    profile = BehaviorProfile(0.5, 0.5, 1.0, 0.0, 0.3)
    spec = GeneratorSpec(seed=1, students_per_cell=2, profiles={c: profile for c in CELLS})
    records = generate_sessions(spec)
    assert all(r.skipped and r.status is Status.UNSOLVED for r in records)


def test_output_parses_cleanly():
    spec = GeneratorSpec(seed=3, students_per_cell=4, sessions_per_student=5)
    text, manifest = generate_csv(spec)
    result = parse_records(text)
    assert result.rejects == [] and len(result.records) == spec.session_count == 80
    assert result.records[0].account == "S0001"
    meta = json.loads(manifest)
    assert meta["seed"] == 3 and meta["sessions"] == 80 and len(meta["profiles"]) == 4


@pytest.mark.parametrize("kwargs", [
    {"students_per_cell": 0},
    {"sessions_per_student": 0},
    {"seed": 2**64},
])
def test_invalid_spec(kwargs):
    with pytest.raises(ValueError):
        GeneratorSpec(**kwargs)


def test_profile_validation():
    with pytest.raises(ValueError):
        BehaviorProfile(1.2, 0.5, 0.5, 0.1, 0.1)
    with pytest.raises(ValueError):
        BehaviorProfile(0.2, 0.5, 0.5, 0.1, 0.1, steps=(3, 1))
    with pytest.raises(ValueError, match="unreachable"):
        BehaviorProfile.from_marginals(p_mistake=0.1, p_hint=0.1, p_skip=0.9, p_solve=0.05,
                                       p_solve_given_skip=0.5)


def test_profile_marginal_identity():
    for profile in default_profiles().values():
        assert 0 < profile.p_solve_given_skip < profile.p_solve < profile.p_solve_given_noskip < 1


def test_hint_counts_follow_hint_flag(large):
    assert all((r.total_hints > 0) == r.hint_used for r in large[:2000])


@pytest.mark.parametrize("spec, field, target", [
    (WITH, "skipped", 0.537),
    (WITHOUT, "skipped", 0.351),
    (WITH, "solved", 0.188),
    (WITHOUT, "solved", 0.201),
    (WITH, "hint", 0.141),
    (WITHOUT, "hint", 0.342),
    (LOW, "hint", 0.283),
    (HIGH, "hint", 0.211),
    (LOW, "mistake", 0.418),
    (HIGH, "mistake", 0.444),
    (LOW, "solved", 0.207),
    (HIGH, "solved", 0.168),
])
def test_marginals_converge(large, spec, field, target):
    rates = cohort_rates(filter_cohort(large, spec))
    assert abs(float(getattr(rates, field)) - target) <= 0.02


def test_cell_sizes(large):
    for lh, iv in CELLS:
        members = [r for r in large if r.lh_label is lh and r.intervention is iv]
        assert len(members) == 667 * 15


def test_persistence_lift_direction(large):
    lift = {}
    for spec in (LOW, HIGH, WITH, WITHOUT):
        result = mine_cohort(large, spec)
        lift[spec.name] = rule_from_index(result.index, (SKIPPED_NO,), (SOLVED,)).lift
    assert lift["low"] > lift["high"]
    assert lift["without"] > lift["with"]


def test_cells_enumerate_all_combinations():
    assert set(CELLS) == {(lh, iv) for lh in LHLabel for iv in Intervention}
