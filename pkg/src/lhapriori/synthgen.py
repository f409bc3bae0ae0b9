"""Seeded synthetic session logs in the tutoring-export schema.

Each (LH label, intervention) cell has its own behaviour profile. Mistakes
and hint use are independent draws; solving depends only on whether the
session was skipped. The default profiles are built from two families of
published group rates, one per intervention condition and one per LH level,
combined multiplicatively per cell.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import asdict, dataclass, field
from typing import Mapping

from .transactions import LHLabel, Intervention, SessionRecord, Status, records_to_csv

Cell = tuple[LHLabel, Intervention]
CELLS: tuple[Cell, ...] = (
    (LHLabel.LOW, Intervention.WITH),
    (LHLabel.LOW, Intervention.WITHOUT),
    (LHLabel.HIGH, Intervention.WITH),
    (LHLabel.HIGH, Intervention.WITHOUT),
)

# Group rates the defaults are calibrated to.
INTERVENTION_RATES = {
    Intervention.WITH: {"hint": 0.141, "skip": 0.537, "solve": 0.188},
    Intervention.WITHOUT: {"hint": 0.342, "skip": 0.351, "solve": 0.201},
}
LH_RATES = {
    LHLabel.LOW: {"hint": 0.283, "mistake": 0.418, "solve": 0.207},
    LHLabel.HIGH: {"hint": 0.211, "mistake": 0.444, "solve": 0.168},
}
# P(solve | skipped) as a fraction of the cell's solve rate. Must stay below 1
# so skipping still lowers the solve rate. Larger in the with-intervention and
# high-LH cells, which flattens their not-skipped -> solved lift.
SKIP_SOLVE_RATIO = {
    Intervention.WITH: 0.7,
    Intervention.WITHOUT: 0.1,
    LHLabel.LOW: 0.8,
    LHLabel.HIGH: 1.2,
}


@dataclass(frozen=True)
class BehaviorProfile:
    p_mistake: float
    p_hint: float
    p_skip: float
    p_solve_given_skip: float
    p_solve_given_noskip: float
    steps: tuple[int, int] = (0, 3)
    hints: tuple[int, int] = (1, 3)
    attempts: tuple[int, int] = (0, 12)
    time: tuple[int, int] = (0, 480)

    def __post_init__(self) -> None:
        for name in ("p_mistake", "p_hint", "p_skip", "p_solve_given_skip", "p_solve_given_noskip"):
            p = getattr(self, name)
            if not 0 <= p <= 1:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        for name in ("steps", "hints", "attempts", "time"):
            lo, hi = getattr(self, name)
            if lo < 0 or lo > hi:
                raise ValueError(f"{name} range must satisfy 0 <= lo <= hi, got {(lo, hi)}")

    @property
    def p_solve(self) -> float:
        return self.p_skip * self.p_solve_given_skip + (1 - self.p_skip) * self.p_solve_given_noskip

    @classmethod
    def from_marginals(cls, *, p_mistake: float, p_hint: float, p_skip: float, p_solve: float,
                       p_solve_given_skip: float, **ranges) -> BehaviorProfile:
        """Solve for P(solve | not skipped) so the overall solve rate is ``p_solve``."""
        if p_skip >= 1:
            noskip = 0.0
        else:
            noskip = (p_solve - p_skip * p_solve_given_skip) / (1 - p_skip)
        if not 0 <= noskip <= 1:
            raise ValueError("solve marginal unreachable with this skip-conditional rate")
        return cls(p_mistake, p_hint, p_skip, p_solve_given_skip, noskip, **ranges)


def _combine(key: str) -> dict[Cell, float]:
    # cell rate = intervention rate * LH rate / geometric mean of the two family averages,
    # so each family's average over its cells stays close to the published rate
    iv_mean = sum(r[key] for r in INTERVENTION_RATES.values()) / len(INTERVENTION_RATES)
    lh_mean = sum(r[key] for r in LH_RATES.values()) / len(LH_RATES)
    scale = math.sqrt(iv_mean * lh_mean)
    return {(lh, iv): INTERVENTION_RATES[iv][key] * LH_RATES[lh][key] / scale for lh, iv in CELLS}


def default_profiles() -> dict[Cell, BehaviorProfile]:
    hint = _combine("hint")
    solve = _combine("solve")
    profiles = {}
    for lh, iv in CELLS:
        p_solve = solve[(lh, iv)]
        profiles[(lh, iv)] = BehaviorProfile.from_marginals(
            p_mistake=LH_RATES[lh]["mistake"],
            p_hint=hint[(lh, iv)],
            p_skip=INTERVENTION_RATES[iv]["skip"],
            p_solve=p_solve,
            p_solve_given_skip=p_solve * SKIP_SOLVE_RATIO[iv] * SKIP_SOLVE_RATIO[lh],
        )
    return profiles


@dataclass(frozen=True)
class GeneratorSpec:
    seed: int = 0
    students_per_cell: int = 62
    sessions_per_student: int = 15
    profiles: Mapping[Cell, BehaviorProfile] = field(default_factory=default_profiles)

    def __post_init__(self) -> None:
        if not -(2**63) <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.students_per_cell < 1:
            raise ValueError("students_per_cell must be >= 1")
        if self.sessions_per_student < 1:
            raise ValueError("sessions_per_student must be >= 1")
        missing = [c for c in CELLS if c not in self.profiles]
        if missing:
            raise ValueError(f"no profile for cells {missing}")

    @property
    def session_count(self) -> int:
        return len(CELLS) * self.students_per_cell * self.sessions_per_student


def generate_sessions(spec: GeneratorSpec) -> list[SessionRecord]:
    """All sessions, cell by cell, student by student, from one ``random.Random(seed)`` stream."""
    rng = random.Random(spec.seed)
    width = max(4, len(str(len(CELLS) * spec.students_per_cell)))
    records: list[SessionRecord] = []
    student = 0
    for lh, iv in CELLS:
        profile = spec.profiles[(lh, iv)]
        for _ in range(spec.students_per_cell):
            student += 1
            account = f"S{student:0{width}d}"
            for _ in range(spec.sessions_per_student):
                mistake = rng.random() < profile.p_mistake
                hint = rng.random() < profile.p_hint
                skipped = rng.random() < profile.p_skip
                p_solve = profile.p_solve_given_skip if skipped else profile.p_solve_given_noskip
                solved = rng.random() < p_solve
                hints_lo, hints_hi = profile.hints
                records.append(SessionRecord(
                    account=account,
                    mistake_occurred=mistake,
                    hint_used=hint,
                    skipped=skipped,
                    status=Status.SOLVED if solved else Status.UNSOLVED,
                    total_steps=rng.randint(*profile.steps),
                    total_hints=rng.randint(max(hints_lo, 1), max(hints_hi, 1)) if hint else 0,
                    total_answer_attempts=rng.randint(*profile.attempts),
                    time_spent=rng.randint(*profile.time),
                    with_intervention=iv is Intervention.WITH,
                    lh_label=lh,
                ))
    return records


def manifest(spec: GeneratorSpec, csv_text: str) -> dict:
    """Provenance sidecar for a generated corpus."""
    return {
        "seed": spec.seed,
        "students_per_cell": spec.students_per_cell,
        "sessions_per_student": spec.sessions_per_student,
        "sessions": spec.session_count,
        "profiles": {
            f"{lh.value}/{iv.value}": {**asdict(p), "p_solve": p.p_solve}
            for (lh, iv), p in ((c, spec.profiles[c]) for c in CELLS)
        },
        "sha256": hashlib.sha256(csv_text.encode("utf-8")).hexdigest(),
    }


def generate_csv(spec: GeneratorSpec) -> tuple[str, str]:
    """Corpus CSV and its JSON manifest."""
    text = records_to_csv(generate_sessions(spec))
    return text, json.dumps(manifest(spec, text), indent=2, sort_keys=True) + "\n"
