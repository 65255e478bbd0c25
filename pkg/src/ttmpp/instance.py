"""Domain model: courses, faculty, time slots, and the full parameter set.

Index convention used everywhere in this package: course ``i``, faculty
``j``, time slot ``t``, in that order.  The obsolete schedule ``X`` is
indexed ``[i][j][t]``, preferences ``W[j][t]``, swap penalties
``alpha[i][j]``, demand ``M[i][t]``, eligibility ``C[i][j]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError, ScenarioError


@dataclass(frozen=True)
class Course:
    """A course; ``load_units`` is what it counts as against teaching load
    (1 for per-course contracts, credit hours otherwise)."""

    id: str
    label: str
    load_units: float = 1.0


@dataclass(frozen=True)
class FacultyMember:
    """A teacher with a required load range [load_min, load_max]."""

    id: str
    label: str
    load_min: float
    load_max: float


@dataclass(frozen=True)
class TimeSlot:
    """A teaching slot; the label usually carries day pattern + clock range."""

    id: str
    label: str


@dataclass(frozen=True, order=True)
class ConflictPair:
    """An unordered pair of slots one person may not teach in combination.

    Stored canonically with ``slot_a < slot_b`` regardless of construction
    order.
    """

    slot_a: str
    slot_b: str

    def __post_init__(self):
        if self.slot_a == self.slot_b:
            raise ValueError(f"conflict pair must name two distinct slots, got {self.slot_a!r} twice")
        if self.slot_a > self.slot_b:
            a, b = self.slot_b, self.slot_a
            object.__setattr__(self, "slot_a", a)
            object.__setattr__(self, "slot_b", b)


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Instance:
    """All parameters of one rescheduling problem.

    Immutable after construction; operations on instances are pure
    functions, so instances can be shared freely across threads and
    concurrent solver runs.  Construction is permissive about shapes and
    values: use :func:`validate_instance` as the gate.
    """

    courses: tuple[Course, ...]
    faculty: tuple[FacultyMember, ...]
    slots: tuple[TimeSlot, ...]
    conflicts: frozenset[ConflictPair]
    obsolete_schedule: np.ndarray   # X[i][j][t] in {0,1}
    preferences: np.ndarray         # W[j][t] >= 0
    swap_penalties: np.ndarray      # alpha[i][j] >= 0
    demand: np.ndarray              # M[i][t] non-negative int
    eligibility: np.ndarray         # C[i][j] in {0,1}

    def __post_init__(self):
        object.__setattr__(self, "courses", tuple(self.courses))
        object.__setattr__(self, "faculty", tuple(self.faculty))
        object.__setattr__(self, "slots", tuple(self.slots))
        object.__setattr__(self, "conflicts", frozenset(self.conflicts))
        object.__setattr__(self, "obsolete_schedule",
                           _frozen_array(self.obsolete_schedule, np.int8))
        object.__setattr__(self, "preferences",
                           _frozen_array(self.preferences, np.float64))
        object.__setattr__(self, "swap_penalties",
                           _frozen_array(self.swap_penalties, np.float64))
        object.__setattr__(self, "demand", _frozen_array(self.demand, np.int64))
        object.__setattr__(self, "eligibility",
                           _frozen_array(self.eligibility, np.int8))

    # -- index helpers -------------------------------------------------

    @property
    def num_courses(self) -> int:
        return len(self.courses)

    @property
    def num_faculty(self) -> int:
        return len(self.faculty)

    @property
    def num_slots(self) -> int:
        return len(self.slots)

    @property
    def shape(self) -> tuple[int, int, int]:
        """(courses, faculty, slots)."""
        return (self.num_courses, self.num_faculty, self.num_slots)

    @property
    def load_units(self) -> np.ndarray:
        """H[i]: load units per course."""
        return np.array([c.load_units for c in self.courses], dtype=np.float64)

    @property
    def load_min(self) -> np.ndarray:
        return np.array([f.load_min for f in self.faculty], dtype=np.float64)

    @property
    def load_max(self) -> np.ndarray:
        return np.array([f.load_max for f in self.faculty], dtype=np.float64)

    def course_index(self, course_id: str) -> int:
        try:
            return self._course_lookup[course_id]
        except KeyError:
            raise KeyError(f"unknown course id {course_id!r}") from None

    def faculty_index(self, faculty_id: str) -> int:
        try:
            return self._faculty_lookup[faculty_id]
        except KeyError:
            raise KeyError(f"unknown faculty id {faculty_id!r}") from None

    def slot_index(self, slot_id: str) -> int:
        try:
            return self._slot_lookup[slot_id]
        except KeyError:
            raise KeyError(f"unknown slot id {slot_id!r}") from None

    @property
    def _course_lookup(self) -> dict[str, int]:
        return {c.id: i for i, c in enumerate(self.courses)}

    @property
    def _faculty_lookup(self) -> dict[str, int]:
        return {f.id: j for j, f in enumerate(self.faculty)}

    @property
    def _slot_lookup(self) -> dict[str, int]:
        return {s.id: t for t, s in enumerate(self.slots)}

    def conflict_index_pairs(self) -> list[tuple[int, int]]:
        """Conflicts as sorted (t1, t2) index pairs, deterministic order."""
        lookup = self._slot_lookup
        pairs = sorted(
            tuple(sorted((lookup[p.slot_a], lookup[p.slot_b])))
            for p in self.conflicts
        )
        return pairs

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.courses == other.courses
            and self.faculty == other.faculty
            and self.slots == other.slots
            and self.conflicts == other.conflicts
            and np.array_equal(self.obsolete_schedule, other.obsolete_schedule)
            and np.array_equal(self.preferences, other.preferences)
            and np.array_equal(self.swap_penalties, other.swap_penalties)
            and np.array_equal(self.demand, other.demand)
            and np.array_equal(self.eligibility, other.eligibility)
        )


# -- validation --------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    """One violated structural invariant, with enough indices to locate it."""

    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def messages(self) -> list[str]:
        return [v.message for v in self.violations]


def validate_instance(instance: Instance) -> ValidationReport:
    """Check every structural invariant of the parameter set.

    Returns a report listing all violations (empty means valid).  Malformed
    dimensions are reported as violations, never raised.  This does not
    attempt to decide whether the optimization problem is feasible.
    """
    out: list[Violation] = []
    ni, nj, nt = instance.shape

    def bad(code: str, message: str):
        out.append(Violation(code, message))

    for kind, items in (("course", instance.courses),
                        ("faculty", instance.faculty),
                        ("slot", instance.slots)):
        seen: set[str] = set()
        for item in items:
            if item.id in seen:
                bad("duplicate-id", f"duplicate {kind} id {item.id!r}")
            seen.add(item.id)

    for i, course in enumerate(instance.courses):
        if not course.load_units > 0:
            bad("nonpositive-load-units",
                f"course {course.id!r} has load_units {course.load_units}, must be > 0")
    for j, member in enumerate(instance.faculty):
        if member.load_min < 0 or member.load_min > member.load_max:
            bad("bad-load-range",
                f"faculty {member.id!r} load range [{member.load_min}, {member.load_max}] "
                "must satisfy 0 <= min <= max")

    slot_ids = {s.id for s in instance.slots}
    for pair in sorted(instance.conflicts):
        for sid in (pair.slot_a, pair.slot_b):
            if sid not in slot_ids:
                bad("unknown-conflict-slot",
                    f"conflict pair ({pair.slot_a!r}, {pair.slot_b!r}) names unknown slot {sid!r}")

    expected = {
        "obsolete_schedule": (instance.obsolete_schedule, (ni, nj, nt)),
        "preferences": (instance.preferences, (nj, nt)),
        "swap_penalties": (instance.swap_penalties, (ni, nj)),
        "demand": (instance.demand, (ni, nt)),
        "eligibility": (instance.eligibility, (ni, nj)),
    }
    shapes_ok = True
    for name, (arr, shape) in expected.items():
        if arr.shape != shape:
            shapes_ok = False
            bad("dimension-mismatch",
                f"{name} has shape {arr.shape}, expected {shape}")
    if not shapes_ok:
        return ValidationReport(tuple(out))

    x = instance.obsolete_schedule
    if not np.isin(x, (0, 1)).all():
        i, j, t = np.argwhere(~np.isin(x, (0, 1)))[0]
        bad("nonbinary-schedule",
            f"obsolete_schedule[{i}][{j}][{t}] = {x[i, j, t]}, must be 0 or 1")
    if not np.isin(instance.eligibility, (0, 1)).all():
        i, j = np.argwhere(~np.isin(instance.eligibility, (0, 1)))[0]
        bad("nonbinary-eligibility",
            f"eligibility[{i}][{j}] = {instance.eligibility[i, j]}, must be 0 or 1")
    for i, j in np.argwhere(instance.swap_penalties < 0):
        bad("negative-swap-penalty",
            f"negative swap penalty: swap_penalties[{i}][{j}] = "
            f"{instance.swap_penalties[i, j]} for course {instance.courses[i].id!r}, "
            f"faculty {instance.faculty[j].id!r}")
    for j, t in np.argwhere(instance.preferences < 0):
        bad("negative-preference",
            f"preferences[{j}][{t}] = {instance.preferences[j, t]}, must be >= 0")
    for i, t in np.argwhere(instance.demand < 0):
        bad("negative-demand",
            f"demand[{i}][{t}] = {instance.demand[i, t]}, must be >= 0")

    # The obsolete schedule must respect eligibility and availability.
    if np.isin(x, (0, 1)).all():
        for i, j, t in np.argwhere(x == 1):
            if instance.eligibility[i, j] != 1:
                bad("assignment-ineligible",
                    f"assignment of ineligible faculty: X[{i}][{j}][{t}] = 1 but "
                    f"eligibility[{i}][{j}] = 0 "
                    f"({instance.courses[i].id!r} / {instance.faculty[j].id!r})")
            if not instance.preferences[j, t] > 0:
                bad("assignment-unavailable",
                    f"assignment in unavailable slot: X[{i}][{j}][{t}] = 1 but "
                    f"preferences[{j}][{t}] = 0 "
                    f"({instance.faculty[j].id!r} @ {instance.slots[t].id!r})")

    return ValidationReport(tuple(out))


# -- derived quantities ------------------------------------------------


def derive_availability(instance: Instance) -> np.ndarray:
    """F[j][t] = 1 exactly where the preference score is positive."""
    return (instance.preferences > 0).astype(np.int8)


def baseline_demand(instance: Instance) -> np.ndarray:
    """Demand implied by the obsolete schedule: result[i][t] = sum_j X[i][j][t].

    Scenarios are expressed as signed deltas against this baseline.
    """
    return instance.obsolete_schedule.sum(axis=1, dtype=np.int64)


# -- scenarios ---------------------------------------------------------


@dataclass(frozen=True)
class SectionDelta:
    """Signed change to the demand cell (course, slot); negative cancels."""

    course: str
    slot: str
    delta: int


@dataclass(frozen=True)
class WeightOverride:
    """Replacement preference value for one (faculty, slot) cell."""

    faculty: str
    slot: str
    value: float


@dataclass(frozen=True)
class PenaltyOverride:
    """Replacement swap-penalty value for one (course, faculty) cell."""

    course: str
    faculty: str
    value: float


@dataclass(frozen=True)
class Scenario:
    """A named edit set: section cancellations/additions plus optional
    preference and penalty overrides, applied on top of a base instance."""

    name: str
    description: str = ""
    base_instance: str | None = None
    section_deltas: tuple[SectionDelta, ...] = ()
    weight_overrides: tuple[WeightOverride, ...] = ()
    penalty_overrides: tuple[PenaltyOverride, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "section_deltas", tuple(self.section_deltas))
        object.__setattr__(self, "weight_overrides", tuple(self.weight_overrides))
        object.__setattr__(self, "penalty_overrides", tuple(self.penalty_overrides))

    def is_empty(self) -> bool:
        return not (self.section_deltas or self.weight_overrides or self.penalty_overrides)


def apply_scenario(instance: Instance, scenario: Scenario) -> Instance:
    """Return a new instance with the scenario's edits applied.

    Demand is adjusted by the signed section deltas; preference/penalty
    overrides replace individual cells.  The obsolete schedule is never
    touched.  Cancelling below zero demand is rejected with the offending
    (course, slot) named.
    """
    demand = np.array(instance.demand, dtype=np.int64)
    for edit in scenario.section_deltas:
        try:
            i = instance.course_index(edit.course)
            t = instance.slot_index(edit.slot)
        except KeyError as exc:
            raise ScenarioError(str(exc)) from None
        demand[i, t] += edit.delta
        if demand[i, t] < 0:
            raise ScenarioError(
                f"cancellation below zero demand at course {edit.course!r}, "
                f"slot {edit.slot!r}: {demand[i, t] - edit.delta} scheduled, "
                f"delta {edit.delta}")

    preferences = np.array(instance.preferences, dtype=np.float64)
    for w_edit in scenario.weight_overrides:
        try:
            j = instance.faculty_index(w_edit.faculty)
            t = instance.slot_index(w_edit.slot)
        except KeyError as exc:
            raise ScenarioError(str(exc)) from None
        if w_edit.value < 0:
            raise ScenarioError(
                f"preference override must be >= 0, got {w_edit.value} at "
                f"({w_edit.faculty!r}, {w_edit.slot!r})")
        preferences[j, t] = w_edit.value

    penalties = np.array(instance.swap_penalties, dtype=np.float64)
    for a_edit in scenario.penalty_overrides:
        try:
            i = instance.course_index(a_edit.course)
            j = instance.faculty_index(a_edit.faculty)
        except KeyError as exc:
            raise ScenarioError(str(exc)) from None
        if a_edit.value < 0:
            raise ScenarioError(
                f"penalty override must be >= 0, got {a_edit.value} at "
                f"({a_edit.course!r}, {a_edit.faculty!r})")
        penalties[i, j] = a_edit.value

    return replace(instance, demand=demand, preferences=preferences,
                   swap_penalties=penalties)


def require_shape(arr: np.ndarray, shape: tuple[int, ...], what: str) -> None:
    """Raise DimensionMismatchError unless ``arr`` has exactly ``shape``."""
    arr = np.asarray(arr)
    if arr.shape != shape:
        raise DimensionMismatchError(
            f"{what} has shape {arr.shape}, expected {shape}")
