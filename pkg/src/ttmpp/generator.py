"""Seeded synthetic instances shaped like a mid-sized math department.

The generated department offers 57 sections of 17 courses across 24 time
slots, staffed by 13 full-time faculty (exactly 3 sections each) and 9
part-timers (0 to 2 sections).  Preference and penalty weights are all
ones.  Eligibility is grouped by subdiscipline: part-timers teach any
lower-division course, "pure" full-timers add the pure upper-division
courses, "applied" full-timers the applied ones.

Construction guarantees, verified before returning:
  * the obsolete schedule is a feasible assignment for its own demand;
  * the largest course has 8 sections at 8 distinct slots, exactly 3
    taught part-time and 5 full-time (so cancelling 3 part-time + 1
    full-time section forces a cross-course reassignment);
  * a full-time-taught single-section cell exists whose course also has
    a part-time-taught section at a slot the full-timer could take over.

Helpers build the three canonical what-if cancellation scenarios used in
tests and demos.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import (
    ConflictPair,
    Course,
    FacultyMember,
    Instance,
    Scenario,
    SectionDelta,
    TimeSlot,
    baseline_demand,
    validate_instance,
)
from .model import check_feasible

SECTION_COUNTS = (8, 6, 5, 5, 4, 4, 4, 3, 3, 3, 2, 2, 2, 2, 2, 1, 1)
NUM_LOWER = 10            # courses 0..9: open to everyone
PURE_UPPER = tuple(range(10, 14))
APPLIED_UPPER = tuple(range(14, 17))
NUM_FT_PURE = 7
NUM_FT_APPLIED = 6
NUM_FT = NUM_FT_PURE + NUM_FT_APPLIED
NUM_PT = 9
FT_LOAD = 3.0
PT_LOAD_MAX = 2.0

_TIMES = (("08:10", "09:05"), ("09:15", "10:10"), ("10:20", "11:15"),
          ("11:25", "12:20"), ("12:30", "13:25"), ("13:35", "14:30"),
          ("14:40", "15:35"), ("15:45", "16:40"))
# First six start times carry three mutually overlapping day patterns;
# the last two use TR instead of MWRF, which does not overlap MWF.
_PATTERNS_DENSE = ("MWF", "MTWR", "MWRF")
_PATTERNS_SPARSE = ("MWF", "MTWR", "TR")

_OVERLAPS = {
    frozenset(("MWF", "MTWR")), frozenset(("MWF", "MWRF")),
    frozenset(("MTWR", "MWRF")), frozenset(("MTWR", "TR")),
}


def _patterns(time_index: int) -> tuple[str, ...]:
    return _PATTERNS_DENSE if time_index < 6 else _PATTERNS_SPARSE


def _build_slots() -> tuple[list[TimeSlot], frozenset[ConflictPair]]:
    slots: list[TimeSlot] = []
    conflicts: set[ConflictPair] = set()
    for k, (start, end) in enumerate(_TIMES):
        names = _patterns(k)
        ids = [f"{p.lower()}-{start.replace(':', '')}" for p in names]
        for p, sid in zip(names, ids):
            slots.append(TimeSlot(sid, f"{p} {start}-{end}"))
        for a in range(len(names)):
            for b in range(a + 1, len(names)):
                if frozenset((names[a], names[b])) in _OVERLAPS:
                    conflicts.add(ConflictPair(ids[a], ids[b]))
    return slots, frozenset(conflicts)


def _slot_time_index(t: int) -> int:
    return t // 3


def generate_department_instance(seed: int) -> Instance:
    """Deterministically generate one valid department instance."""
    for attempt in range(64):
        instance = _generate_once(np.random.default_rng((seed, attempt)))
        if instance is not None:
            return instance
    raise RuntimeError(f"could not satisfy structure guarantees for seed {seed}")


def _generate_once(rng: np.random.Generator) -> Instance | None:
    ni = len(SECTION_COUNTS)
    slots, conflicts = _build_slots()
    nt = len(slots)

    courses = [Course(f"c{i + 1:02d}", f"Course {i + 1:02d}") for i in range(ni)]
    faculty = (
        [FacultyMember(f"ft{j + 1:02d}", f"Full-time {j + 1:02d}", FT_LOAD, FT_LOAD)
         for j in range(NUM_FT)]
        + [FacultyMember(f"pt{j + 1:02d}", f"Part-time {j + 1:02d}", 0.0, PT_LOAD_MAX)
           for j in range(NUM_PT)]
    )
    nj = len(faculty)
    ft = list(range(NUM_FT))
    pure_ft = ft[:NUM_FT_PURE]
    applied_ft = ft[NUM_FT_PURE:]
    pt = list(range(NUM_FT, NUM_FT + NUM_PT))

    elig = np.zeros((ni, nj), dtype=np.int8)
    elig[:NUM_LOWER, :] = 1
    for i in PURE_UPPER:
        elig[i, pure_ft] = 1
    for i in APPLIED_UPPER:
        elig[i, applied_ft] = 1

    quota = np.array([FT_LOAD] * NUM_FT + [PT_LOAD_MAX] * NUM_PT)

    def take(pool: list[int], count: int) -> list[int] | None:
        open_slots = [j for j in pool if quota[j] >= 1]
        if len(open_slots) < count:
            return None
        picked = list(rng.choice(open_slots, size=count, replace=False))
        for j in picked:
            quota[j] -= 1
        return [int(j) for j in picked]

    teachers: list[tuple[int, int]] = []   # (course, faculty)

    # Upper-division sections stay within their subdiscipline.
    for i in PURE_UPPER:
        got = take(pure_ft, SECTION_COUNTS[i])
        if got is None:
            return None
        teachers += [(i, j) for j in got]
    for i in APPLIED_UPPER:
        got = take(applied_ft, SECTION_COUNTS[i])
        if got is None:
            return None
        teachers += [(i, j) for j in got]

    # The 8-section course: exactly 3 distinct part-timers, 5 full-timers.
    c0_pt = take(pt, 3)
    c0_ft = take(ft, 5)
    if c0_pt is None or c0_ft is None:
        return None
    teachers += [(0, j) for j in c0_pt + c0_ft]

    # The 6-section course: at least two on each side of the line.
    c1_pt = take(pt, 2)
    c1_ft = take(ft, 2)
    if c1_pt is None or c1_ft is None:
        return None
    teachers += [(1, j) for j in c1_pt + c1_ft]

    remaining = [(1, None)] * (SECTION_COUNTS[1] - 4)
    for i in range(2, NUM_LOWER):
        remaining += [(i, None)] * SECTION_COUNTS[i]
    rng.shuffle(remaining)
    for i, _ in remaining:
        got = take(list(range(nj)), 1)
        if got is None:
            return None
        teachers.append((i, got[0]))

    # Slot assignment: every teacher uses distinct start times, which by
    # construction also avoids all conflict pairs; the 8-section course
    # additionally occupies 8 distinct slots.
    x = np.zeros((ni, nj, nt), dtype=np.int8)
    used_times: dict[int, set[int]] = {j: set() for j in range(nj)}

    c0_sections = [(i, j) for i, j in teachers if i == 0]
    other_sections = [(i, j) for i, j in teachers if i != 0]
    slot_order = list(rng.permutation(nt))
    c0_slots = slot_order[:len(c0_sections)]
    for (i, j), t in zip(c0_sections, c0_slots):
        x[i, j, t] = 1
        used_times[j].add(_slot_time_index(t))

    rng.shuffle(other_sections)
    for i, j in other_sections:
        options = [t for t in rng.permutation(nt)
                   if _slot_time_index(t) not in used_times[j]]
        if not options:
            return None
        t = int(options[0])
        x[i, j, t] = 1
        used_times[j].add(_slot_time_index(t))

    instance = Instance(
        courses=courses, faculty=faculty, slots=slots, conflicts=conflicts,
        obsolete_schedule=x,
        preferences=np.ones((nj, nt)),
        swap_penalties=np.ones((ni, nj)),
        demand=np.zeros((ni, nt), dtype=np.int64),
        eligibility=elig)
    instance = Instance(
        courses=instance.courses, faculty=instance.faculty,
        slots=instance.slots, conflicts=instance.conflicts,
        obsolete_schedule=instance.obsolete_schedule,
        preferences=instance.preferences,
        swap_penalties=instance.swap_penalties,
        demand=baseline_demand(instance),
        eligibility=instance.eligibility)

    if not validate_instance(instance).ok:
        return None
    if not check_feasible(instance, np.zeros((ni, nj, nt), dtype=int)).ok:
        return None
    if find_full_time_swap_target(instance) is None:
        return None
    if find_forced_swap_cells(instance) is None:
        return None
    return instance


# -- canonical what-if scenarios ----------------------------------------


def is_part_time(member: FacultyMember) -> bool:
    """Part-timers have a load range; full-timers an exact requirement."""
    return member.load_min < member.load_max


@dataclass(frozen=True)
class SectionRef:
    course: str
    faculty: str
    slot: str


def _sole_teacher_cells(instance: Instance):
    """Cells (i, j, t) where faculty j teaches the only section of i at t."""
    x = instance.obsolete_schedule
    for i, t in np.argwhere(instance.demand == 1):
        js = np.flatnonzero(x[i, :, t])
        if len(js) == 1:
            yield int(i), int(js[0]), int(t)


def _compatible(instance: Instance, j: int, t_new: int,
                busy: set[int]) -> bool:
    """Can faculty j add slot t_new given their other busy slots?"""
    if t_new in busy:
        return False
    if instance.obsolete_schedule[:, j, t_new].any():
        return False
    pairs = set(map(tuple, instance.conflict_index_pairs()))
    for t_busy in busy:
        if (min(t_busy, t_new), max(t_busy, t_new)) in pairs:
            return False
    return True


def find_part_time_removal_target(instance: Instance) -> SectionRef | None:
    """A single-section cell taught by a part-timer."""
    for i, j, t in _sole_teacher_cells(instance):
        if is_part_time(instance.faculty[j]):
            return SectionRef(instance.courses[i].id, instance.faculty[j].id,
                              instance.slots[t].id)
    return None


def find_full_time_swap_target(instance: Instance) -> SectionRef | None:
    """A single-section cell taught by a full-timer whose course also has a
    part-time-taught section at a slot the full-timer could take over."""
    x = instance.obsolete_schedule
    for i, j, t in _sole_teacher_cells(instance):
        if is_part_time(instance.faculty[j]):
            continue
        busy = set(np.flatnonzero(x[:, j, :].any(axis=0))) - {t}
        for p, t2 in np.argwhere(x[i].astype(bool)):
            if not is_part_time(instance.faculty[p]) or t2 == t:
                continue
            if _compatible(instance, j, int(t2), busy):
                return SectionRef(instance.courses[i].id,
                                  instance.faculty[j].id,
                                  instance.slots[t].id)
    return None


def find_forced_swap_cells(instance: Instance) -> list[SectionRef] | None:
    """Cancellation cells that force a cross-course reassignment: all
    part-time sections of the largest course plus one full-time section,
    chosen so the bereft full-timer can pick up some part-time section."""
    x = instance.obsolete_schedule
    i0 = int(np.argmax([instance.demand[i].sum()
                        for i in range(instance.num_courses)]))
    pt_cells = [(j, t) for j, t in np.argwhere(x[i0].astype(bool))
                if is_part_time(instance.faculty[j])]
    ft_cells = [(j, t) for j, t in np.argwhere(x[i0].astype(bool))
                if not is_part_time(instance.faculty[j])]
    if len(pt_cells) != 3 or not ft_cells:
        return None
    cancelled_pt = {(int(j), int(t)) for j, t in pt_cells}

    for j_ft, t_ft in ft_cells:
        busy = set(np.flatnonzero(x[:, j_ft, :].any(axis=0))) - {int(t_ft)}
        for p in range(instance.num_faculty):
            if not is_part_time(instance.faculty[p]):
                continue
            for i2, t2 in np.argwhere(x[:, p, :].astype(bool)):
                if (int(p), int(t2)) in cancelled_pt and i2 == i0:
                    continue
                if _compatible(instance, int(j_ft), int(t2), busy):
                    cells = [SectionRef(instance.courses[i0].id,
                                        instance.faculty[j].id,
                                        instance.slots[t].id)
                             for j, t in pt_cells]
                    cells.append(SectionRef(instance.courses[i0].id,
                                            instance.faculty[int(j_ft)].id,
                                            instance.slots[int(t_ft)].id))
                    return cells
    return None


def cancel_part_time_section(instance: Instance) -> Scenario:
    target = find_part_time_removal_target(instance)
    if target is None:
        raise ValueError("no part-time-taught single section to cancel")
    return Scenario(
        name="cancel-part-time-section",
        description=f"Cancel {target.course} at {target.slot} "
                    f"(taught part-time by {target.faculty})",
        section_deltas=(SectionDelta(target.course, target.slot, -1),))


def cancel_full_time_section(instance: Instance) -> Scenario:
    target = find_full_time_swap_target(instance)
    if target is None:
        raise ValueError("no full-time-taught section with a same-course "
                         "part-time alternative")
    return Scenario(
        name="cancel-full-time-section",
        description=f"Cancel {target.course} at {target.slot} "
                    f"(taught full-time by {target.faculty})",
        section_deltas=(SectionDelta(target.course, target.slot, -1),))


def cancel_course_sections(instance: Instance) -> Scenario:
    cells = find_forced_swap_cells(instance)
    if cells is None:
        raise ValueError("largest course lacks the 3 part-time + full-time "
                         "section structure")
    return Scenario(
        name="cancel-course-sections",
        description=f"Cancel 4 sections of {cells[0].course} "
                    "(3 part-time, 1 full-time)",
        section_deltas=tuple(SectionDelta(c.course, c.slot, -1) for c in cells))
