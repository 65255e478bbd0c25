"""Builds the integer program for one instance in solver-neutral form.

Variables are the perturbation entries ``P[i][j][t]`` (add/remove/keep a
section) and the auxiliary ``T[i][j]`` that linearize the per-course
change magnitude ``|sum_t P[i][j][t]|`` in the objective.

The "new schedule is binary" conditions ``0 <= X + P <= 1`` are realized
as variable bounds on P rather than constraint rows: X is a 0/1 constant,
so they tighten each P to the two-value range {-X, 1-X}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError
from .instance import Instance, baseline_demand, derive_availability, require_shape

SENSE_LE = "<="
SENSE_EQ = "="
SENSE_GE = ">="

FAMILY_NEW_VARIABLE = "New variable constraints"
FAMILY_BINARY_SCHEDULE = "New schedule is binary"
FAMILY_ASSIGN_ALL = "Assign all courses"
FAMILY_CHOICE_LIST = "Faculty teach only courses from their choice list"
FAMILY_AVAILABILITY = "Faculty teach only during their available times"
FAMILY_LOAD = "Teaching load requirements"
FAMILY_CONFLICTS = "Avoid time slot conflicts"


@dataclass(frozen=True)
class VariableRef:
    """Reference to one decision variable; T variables carry no slot."""

    kind: str            # "P" or "T"
    course: int
    faculty: int
    slot: int | None = None

    def name(self) -> str:
        if self.kind == "P":
            return f"P_{self.course}_{self.faculty}_{self.slot}"
        return f"T_{self.course}_{self.faculty}"


@dataclass(frozen=True)
class LinearConstraint:
    """One row: sum of terms (sense) rhs, tagged with its family and indices."""

    terms: tuple[tuple[VariableRef, float], ...]
    sense: str
    rhs: float
    tag: str


@dataclass
class IlpModel:
    """Variables, integer bounds, rows, and maximize-objective.

    Treated as immutable once built; variable order is deterministic:
    all P in (course, faculty, slot) lexicographic order, then all T in
    (course, faculty) order.
    """

    variables: list[VariableRef]
    lower: np.ndarray
    upper: np.ndarray
    constraints: list[LinearConstraint]
    objective: list[tuple[VariableRef, float]]
    shape: tuple[int, int, int]

    _index: dict[VariableRef, int] = field(default=None, repr=False)
    _arrays: tuple = field(default=None, repr=False)

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_p(self) -> int:
        ni, nj, nt = self.shape
        return ni * nj * nt

    def p_index(self, i: int, j: int, t: int) -> int:
        ni, nj, nt = self.shape
        return (i * nj + j) * nt + t

    def t_index(self, i: int, j: int) -> int:
        ni, nj, nt = self.shape
        return ni * nj * nt + i * nj + j

    def index_of(self, ref: VariableRef) -> int:
        if self._index is None:
            self._index = {ref: k for k, ref in enumerate(self.variables)}
        return self._index[ref]

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.num_variables)
        for ref, coef in self.objective:
            c[self.index_of(ref)] += coef
        return c

    def constraint_arrays(self) -> tuple[sp.csc_matrix, np.ndarray, np.ndarray]:
        """Rows as (A, senses, rhs); senses is an array of SENSE_* strings."""
        if self._arrays is None:
            rows, cols, vals = [], [], []
            senses = np.empty(len(self.constraints), dtype=object)
            rhs = np.zeros(len(self.constraints))
            for r, con in enumerate(self.constraints):
                senses[r] = con.sense
                rhs[r] = con.rhs
                for ref, coef in con.terms:
                    rows.append(r)
                    cols.append(self.index_of(ref))
                    vals.append(coef)
            a = sp.csc_matrix(
                (vals, (rows, cols)),
                shape=(len(self.constraints), self.num_variables))
            self._arrays = (a, senses, rhs)
        return self._arrays

    def split_values(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split a flat variable vector into (P array, T array)."""
        ni, nj, nt = self.shape
        p = np.asarray(x[: ni * nj * nt]).reshape(ni, nj, nt)
        t = np.asarray(x[ni * nj * nt:]).reshape(ni, nj)
        return p, t

    def violated_constraints(self, x: np.ndarray, tol: float = 1e-9) -> list[str]:
        """Tags of all rows (and bounds) the assignment ``x`` violates.

        Used in tests to cross-validate the instance-level feasibility
        checker against this row representation.
        """
        bad = []
        if (x < self.lower - tol).any() or (x > self.upper + tol).any():
            k = int(np.argmax((x < self.lower - tol) | (x > self.upper + tol)))
            bad.append(f"{FAMILY_BINARY_SCHEDULE} [bounds at {self.variables[k].name()}]")
        a, senses, rhs = self.constraint_arrays()
        activity = a @ x
        for r, con in enumerate(self.constraints):
            v = activity[r]
            if con.sense == SENSE_LE and v > rhs[r] + tol:
                bad.append(con.tag)
            elif con.sense == SENSE_GE and v < rhs[r] - tol:
                bad.append(con.tag)
            elif con.sense == SENSE_EQ and abs(v - rhs[r]) > tol:
                bad.append(con.tag)
        return bad


def build_model(instance: Instance) -> IlpModel:
    """Translate a validated instance into its integer program."""
    ni, nj, nt = instance.shape
    x = instance.obsolete_schedule.astype(np.int64)
    w = instance.preferences
    alpha = instance.swap_penalties
    m = instance.demand
    c_elig = instance.eligibility
    f_avail = derive_availability(instance).astype(np.int64)
    h = instance.load_units

    p_refs = [VariableRef("P", i, j, t)
              for i in range(ni) for j in range(nj) for t in range(nt)]
    t_refs = [VariableRef("T", i, j) for i in range(ni) for j in range(nj)]
    variables = p_refs + t_refs

    lower = np.concatenate([-x.reshape(-1).astype(np.float64),
                            np.zeros(ni * nj)])
    upper = np.concatenate([(1 - x).reshape(-1).astype(np.float64),
                            np.full(ni * nj, float(nt))])

    def pref(i, j, t):
        return p_refs[(i * nj + j) * nt + t]

    def tref(i, j):
        return t_refs[i * nj + j]

    constraints: list[LinearConstraint] = []

    # T[i][j] >= +-sum_t P[i][j][t]
    for i in range(ni):
        for j in range(nj):
            for sign, label in ((-1.0, "+"), (1.0, "-")):
                terms = [(tref(i, j), 1.0)]
                terms += [(pref(i, j, t), sign) for t in range(nt)]
                constraints.append(LinearConstraint(
                    tuple(terms), SENSE_GE, 0.0,
                    f"{FAMILY_NEW_VARIABLE} [i={i},j={j},{label}]"))

    # sum_j (X + P) = M, X moved to the right-hand side
    x_it = x.sum(axis=1)
    for i in range(ni):
        for t in range(nt):
            terms = [(pref(i, j, t), 1.0) for j in range(nj)]
            constraints.append(LinearConstraint(
                tuple(terms), SENSE_EQ, float(m[i, t] - x_it[i, t]),
                f"{FAMILY_ASSIGN_ALL} [i={i},t={t}]"))

    # sum_t (X + P) <= C * total sections of the course
    x_ij = x.sum(axis=2)
    m_i = m.sum(axis=1)
    for i in range(ni):
        for j in range(nj):
            terms = [(pref(i, j, t), 1.0) for t in range(nt)]
            constraints.append(LinearConstraint(
                tuple(terms), SENSE_LE,
                float(c_elig[i, j] * m_i[i] - x_ij[i, j]),
                f"{FAMILY_CHOICE_LIST} [i={i},j={j}]"))

    # sum_i (X + P) <= F
    x_jt = x.sum(axis=0)
    for j in range(nj):
        for t in range(nt):
            terms = [(pref(i, j, t), 1.0) for i in range(ni)]
            constraints.append(LinearConstraint(
                tuple(terms), SENSE_LE, float(f_avail[j, t] - x_jt[j, t]),
                f"{FAMILY_AVAILABILITY} [j={j},t={t}]"))

    # N- <= sum_i H_i sum_t (X + P) <= N+
    x_load = h @ x_ij.astype(np.float64)
    for j in range(nj):
        terms = [(pref(i, j, t), float(h[i]))
                 for i in range(ni) for t in range(nt)]
        constraints.append(LinearConstraint(
            tuple(terms), SENSE_LE,
            float(instance.faculty[j].load_max - x_load[j]),
            f"{FAMILY_LOAD} [j={j},max]"))
        constraints.append(LinearConstraint(
            tuple(terms), SENSE_GE,
            float(instance.faculty[j].load_min - x_load[j]),
            f"{FAMILY_LOAD} [j={j},min]"))

    # sum_i (X + P) at t1 plus at t2 <= 1 for conflicting (t1, t2)
    for j in range(nj):
        for t1, t2 in instance.conflict_index_pairs():
            terms = [(pref(i, j, t1), 1.0) for i in range(ni)]
            terms += [(pref(i, j, t2), 1.0) for i in range(ni)]
            constraints.append(LinearConstraint(
                tuple(terms), SENSE_LE,
                float(1 - x_jt[j, t1] - x_jt[j, t2]),
                f"{FAMILY_CONFLICTS} [j={j},t'={t1},t''={t2}]"))

    objective: list[tuple[VariableRef, float]] = []
    for i in range(ni):
        for j in range(nj):
            for t in range(nt):
                objective.append((pref(i, j, t), float(w[j, t])))
    for i in range(ni):
        for j in range(nj):
            objective.append((tref(i, j), -float(alpha[i, j])))

    return IlpModel(variables=variables, lower=lower, upper=upper,
                    constraints=constraints, objective=objective,
                    shape=(ni, nj, nt))


def expected_constraint_count(instance: Instance) -> int:
    """Row count the builder must produce for this instance's dimensions."""
    ni, nj, nt = instance.shape
    return (2 * ni * nj          # new variable
            + ni * nt            # assign all
            + ni * nj            # choice list
            + nj * nt            # availability
            + 2 * nj             # load
            + nj * len(instance.conflicts))


def evaluate_objective(instance: Instance, p: np.ndarray,
                       t_aux: np.ndarray) -> float:
    """Recompute the objective value of a perturbation, solver-free.

    Preference term minus penalty term, exactly as modelled; raises
    DimensionMismatchError on badly shaped inputs.
    """
    ni, nj, nt = instance.shape
    require_shape(p, (ni, nj, nt), "perturbation array")
    require_shape(t_aux, (ni, nj), "auxiliary change array")
    p = np.asarray(p, dtype=np.float64)
    t_aux = np.asarray(t_aux, dtype=np.float64)
    preference = float((instance.preferences * p.sum(axis=0)).sum())
    penalty = float((instance.swap_penalties * t_aux).sum())
    return preference - penalty


def canonical_t(p: np.ndarray) -> np.ndarray:
    """The canonical auxiliary values |sum_t P| per (course, faculty)."""
    return np.abs(np.asarray(p).sum(axis=2))


@dataclass(frozen=True)
class FamilyCheck:
    family: str
    ok: bool
    detail: str = ""


@dataclass(frozen=True)
class FeasibilityReport:
    checks: tuple[FamilyCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failed_families(self) -> list[str]:
        return [c.family for c in self.checks if not c.ok]

    def describe(self) -> str:
        lines = []
        for c in self.checks:
            status = "pass" if c.ok else "FAIL"
            suffix = f" — {c.detail}" if c.detail else ""
            lines.append(f"{status}  {c.family}{suffix}")
        return "\n".join(lines)


def check_feasible(instance: Instance, p: np.ndarray) -> FeasibilityReport:
    """Evaluate every constraint family directly against the instance.

    Deliberately bypasses the IlpModel row representation so it can serve
    as an independent validator of solver output.  The auxiliary T is not
    an input; the change magnitudes are taken as |sum_t P| directly.
    """
    ni, nj, nt = instance.shape
    require_shape(p, (ni, nj, nt), "perturbation array")
    p = np.asarray(p, dtype=np.int64)
    y = instance.obsolete_schedule.astype(np.int64) + p
    checks: list[FamilyCheck] = []

    def add(family: str, ok: bool, detail: str = ""):
        checks.append(FamilyCheck(family, bool(ok), detail if not ok else ""))

    binary_bad = np.argwhere((y < 0) | (y > 1))
    add(FAMILY_BINARY_SCHEDULE, binary_bad.size == 0,
        "" if binary_bad.size == 0 else
        "new schedule not 0/1 at (i={}, j={}, t={})".format(*binary_bad[0]))

    assigned = y.sum(axis=1)
    assign_bad = np.argwhere(assigned != instance.demand)
    add(FAMILY_ASSIGN_ALL, assign_bad.size == 0,
        "" if assign_bad.size == 0 else
        "residual {} at (i={}, t={})".format(
            int((assigned - instance.demand)[tuple(assign_bad[0])]),
            *assign_bad[0]))

    sections_per_pair = y.sum(axis=2)
    cap = instance.eligibility.astype(np.int64) * instance.demand.sum(axis=1)[:, None]
    choice_bad = np.argwhere(sections_per_pair > cap)
    add(FAMILY_CHOICE_LIST, choice_bad.size == 0,
        "" if choice_bad.size == 0 else
        "ineligible or excess assignment at (i={}, j={})".format(*choice_bad[0]))

    f_avail = derive_availability(instance).astype(np.int64)
    slot_use = y.sum(axis=0)
    avail_bad = np.argwhere(slot_use > f_avail)
    add(FAMILY_AVAILABILITY, avail_bad.size == 0,
        "" if avail_bad.size == 0 else
        "unavailable or double-booked at (j={}, t={})".format(*avail_bad[0]))

    loads = instance.load_units @ sections_per_pair.astype(np.float64)
    load_low = np.argwhere(loads < instance.load_min - 1e-9)
    load_high = np.argwhere(loads > instance.load_max + 1e-9)
    detail = ""
    if load_low.size:
        j = int(load_low[0][0])
        detail = f"load {loads[j]} below minimum {instance.load_min[j]} at j={j}"
    elif load_high.size:
        j = int(load_high[0][0])
        detail = f"load {loads[j]} above maximum {instance.load_max[j]} at j={j}"
    add(FAMILY_LOAD, not detail, detail)

    conflict_detail = ""
    for t1, t2 in instance.conflict_index_pairs():
        both = slot_use[:, t1] + slot_use[:, t2]
        if (both > 1).any():
            j = int(np.argmax(both > 1))
            conflict_detail = f"faculty j={j} teaches both t={t1} and t={t2}"
            break
    add(FAMILY_CONFLICTS, not conflict_detail, conflict_detail)

    return FeasibilityReport(tuple(checks))
