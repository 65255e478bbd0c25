"""Shared fixtures: the tiny reference instance and randomized builders."""

from __future__ import annotations

import numpy as np
import pytest

from ttmpp import (
    ConflictPair,
    Course,
    FacultyMember,
    Instance,
    Scenario,
    SectionDelta,
    TimeSlot,
    baseline_demand,
)


def make_t1() -> Instance:
    """Two courses, two faculty, three slots; f1 must teach exactly two
    sections, f2 at most one.  The obsolete schedule: f1 has A@s1 and
    B@s2, f2 has A@s3."""
    courses = [Course("A", "Course A"), Course("B", "Course B")]
    faculty = [FacultyMember("f1", "Faculty One", 2, 2),
               FacultyMember("f2", "Faculty Two", 0, 1)]
    slots = [TimeSlot("s1", "Slot 1"), TimeSlot("s2", "Slot 2"),
             TimeSlot("s3", "Slot 3")]
    x = np.zeros((2, 2, 3), dtype=np.int8)
    x[0, 0, 0] = 1   # A, f1, s1
    x[1, 0, 1] = 1   # B, f1, s2
    x[0, 1, 2] = 1   # A, f2, s3
    instance = Instance(
        courses=courses, faculty=faculty, slots=slots, conflicts=frozenset(),
        obsolete_schedule=x,
        preferences=np.ones((2, 3)),
        swap_penalties=np.ones((2, 2)),
        demand=np.zeros((2, 3), dtype=np.int64),
        eligibility=np.ones((2, 2), dtype=np.int8),
    )
    return Instance(
        courses=instance.courses, faculty=instance.faculty,
        slots=instance.slots, conflicts=instance.conflicts,
        obsolete_schedule=instance.obsolete_schedule,
        preferences=instance.preferences,
        swap_penalties=instance.swap_penalties,
        demand=baseline_demand(instance),
        eligibility=instance.eligibility,
    )


CANCEL_A_S3 = Scenario(name="cancel-a-s3",
                       section_deltas=(SectionDelta("A", "s3", -1),))


@pytest.fixture
def t1() -> Instance:
    return make_t1()


_DIMS = [(2, 2, 3), (2, 3, 2), (3, 2, 2), (2, 2, 2), (1, 3, 4), (2, 2, 4),
         (1, 4, 5), (2, 3, 3), (3, 2, 3), (2, 4, 3)]

_W_CHOICES = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0])
_ALPHA_CHOICES = np.array([0.0, 0.5, 1.0, 2.0])
_H_CHOICES = np.array([1.0, 1.0, 1.0, 1.5])


def random_instance(seed: int) -> Instance:
    """A small valid instance with a seeded mix of structure.

    The obsolete schedule respects eligibility, availability, one section
    per (faculty, slot), and slot conflicts; demand starts at the baseline
    and takes a few random signed edits, so the resulting problem may or
    may not be feasible.  All weights are dyadic rationals so objective
    comparisons in tests are exact.
    """
    rng = np.random.default_rng(seed)
    ni, nj, nt = _DIMS[int(rng.integers(len(_DIMS)))]

    courses = [Course(f"c{i}", f"Course {i}",
                      float(rng.choice(_H_CHOICES))) for i in range(ni)]
    slots = [TimeSlot(f"t{t}", f"Slot {t}") for t in range(nt)]

    w = rng.choice(_W_CHOICES, size=(nj, nt),
                   p=[0.15, 0.2, 0.3, 0.15, 0.15, 0.05])
    alpha = rng.choice(_ALPHA_CHOICES, size=(ni, nj), p=[0.15, 0.25, 0.4, 0.2])
    elig = (rng.random((ni, nj)) < 0.8).astype(np.int8)

    conflicts = set()
    if nt >= 2 and rng.random() < 0.5:
        t1_, t2_ = sorted(int(v) for v in rng.choice(nt, size=2, replace=False))
        conflicts.add(ConflictPair(f"t{t1_}", f"t{t2_}"))
    pair_list = [(int(p.slot_a[1:]), int(p.slot_b[1:])) for p in conflicts]

    def clashes(j: int, t: int, x: np.ndarray) -> bool:
        for ta, tb in pair_list:
            other = tb if t == ta else ta if t == tb else None
            if other is not None and x[:, j, other].sum() >= 1:
                return True
        return False

    x = np.zeros((ni, nj, nt), dtype=np.int8)
    cells = [(i, j, t) for i in range(ni) for j in range(nj) for t in range(nt)]
    rng.shuffle(cells)
    target = int(rng.integers(1, ni * nj * nt // 2 + 2))
    for i, j, t in cells:
        if x.sum() >= target:
            break
        if not elig[i, j] or w[j, t] <= 0 or x[:, j, t].sum() >= 1:
            continue
        if clashes(j, t, x):
            continue
        x[i, j, t] = 1

    h = np.array([c.load_units for c in courses])
    loads = h @ x.sum(axis=2).astype(np.float64)
    faculty = []
    for j in range(nj):
        slack_down = float(rng.choice([0.0, 0.0, 1.0]))
        slack_up = float(rng.choice([0.0, 1.0, 2.0]))
        faculty.append(FacultyMember(
            f"f{j}", f"Faculty {j}",
            float(max(0.0, loads[j] - slack_down)), float(loads[j] + slack_up)))

    demand = x.sum(axis=1).astype(np.int64)
    for _ in range(int(rng.integers(0, 3))):
        i = int(rng.integers(ni))
        t = int(rng.integers(nt))
        if rng.random() < 0.6 and demand[i, t] > 0:
            demand[i, t] -= 1
        else:
            demand[i, t] += 1

    return Instance(courses=courses, faculty=faculty, slots=slots,
                    conflicts=frozenset(conflicts), obsolete_schedule=x,
                    preferences=w, swap_penalties=alpha, demand=demand,
                    eligibility=elig)
