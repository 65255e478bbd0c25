"""Synthetic department generator: dimensions, structure, guarantees."""

import numpy as np
import pytest

from ttmpp import build_model, check_feasible, validate_instance
from ttmpp.generator import (
    APPLIED_UPPER,
    NUM_FT,
    NUM_LOWER,
    PURE_UPPER,
    SECTION_COUNTS,
    cancel_course_sections,
    cancel_full_time_section,
    cancel_part_time_section,
    find_forced_swap_cells,
    find_full_time_swap_target,
    find_part_time_removal_target,
    generate_department_instance,
    is_part_time,
)

SEEDS = [0, 1, 2, 3, 4]


@pytest.fixture(scope="module")
def dept():
    return generate_department_instance(seed=1)


class TestShape:
    def test_dimensions(self, dept):
        assert dept.shape == (17, 22, 24)

    def test_variable_count(self, dept):
        assert build_model(dept).num_variables == 9350

    def test_sections_total(self, dept):
        assert int(dept.demand.sum()) == 57
        assert [int(dept.demand[i].sum()) for i in range(17)] == list(SECTION_COUNTS)

    def test_faculty_mix(self, dept):
        full_time = [f for f in dept.faculty if not is_part_time(f)]
        part_time = [f for f in dept.faculty if is_part_time(f)]
        assert len(full_time) == 13 and len(part_time) == 9
        assert all(f.load_min == f.load_max == 3 for f in full_time)
        assert all(f.load_min == 0 and f.load_max == 2 for f in part_time)

    def test_all_ones_weights(self, dept):
        assert (dept.preferences == 1).all()
        assert (dept.swap_penalties == 1).all()

    def test_conflict_pairs(self, dept):
        assert len(dept.conflicts) == 22
        # conflicts only between same-start-time patterns
        for t1, t2 in dept.conflict_index_pairs():
            assert t1 // 3 == t2 // 3

    def test_eligibility_grouping(self, dept):
        elig = dept.eligibility
        part_time_cols = [j for j, f in enumerate(dept.faculty) if is_part_time(f)]
        assert (elig[:NUM_LOWER, :] == 1).all()
        for i in list(PURE_UPPER) + list(APPLIED_UPPER):
            assert elig[i, part_time_cols].sum() == 0
        for i in PURE_UPPER:
            assert elig[i, :NUM_FT].sum() == 7
        for i in APPLIED_UPPER:
            assert elig[i, :NUM_FT].sum() == 6


class TestValidity:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_valid_and_feasible(self, seed):
        inst = generate_department_instance(seed)
        assert validate_instance(inst).ok
        zero = np.zeros(inst.shape, dtype=int)
        assert check_feasible(inst, zero).ok

    def test_deterministic(self):
        assert generate_department_instance(7) == generate_department_instance(7)

    def test_seed_changes_schedule(self):
        a = generate_department_instance(1)
        b = generate_department_instance(2)
        assert not np.array_equal(a.obsolete_schedule, b.obsolete_schedule)


class TestStructureGuarantees:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_largest_course_composition(self, seed):
        inst = generate_department_instance(seed)
        x0 = inst.obsolete_schedule[0]
        teachers = np.argwhere(x0 == 1)
        assert len(teachers) == 8
        part_time = sum(is_part_time(inst.faculty[j]) for j, _ in teachers)
        assert part_time == 3
        # eight distinct slots, each demand exactly 1
        slots = [t for _, t in teachers]
        assert len(set(slots)) == 8
        assert all(inst.demand[0, t] == 1 for t in slots)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_scenario_targets_exist(self, seed):
        inst = generate_department_instance(seed)
        assert find_part_time_removal_target(inst) is not None
        assert find_full_time_swap_target(inst) is not None
        cells = find_forced_swap_cells(inst)
        assert cells is not None and len(cells) == 4

    def test_scenarios_buildable(self, dept):
        for builder in (cancel_part_time_section, cancel_full_time_section,
                        cancel_course_sections):
            scenario = builder(dept)
            assert scenario.section_deltas
            assert all(d.delta == -1 for d in scenario.section_deltas)

    def test_no_faculty_double_booked(self, dept):
        x = dept.obsolete_schedule
        assert (x.sum(axis=0) <= 1).all()
        pairs = dept.conflict_index_pairs()
        for j in range(dept.num_faculty):
            busy = set(np.flatnonzero(x[:, j, :].sum(axis=0)))
            for t1, t2 in pairs:
                assert not (t1 in busy and t2 in busy)


class TestPublishedAccounting:
    def test_row_count_formula(self, dept):
        model = build_model(dept)
        assert len(model.constraints) == 2586

    def test_row_accounting_with_bounds_as_rows(self, dept):
        """The published figure counts the binary-schedule family and every
        variable bound as separate rows; with this accounting the model has
        exactly 39238 constraints."""
        model = build_model(dept)
        num_p = model.num_p
        num_t = model.num_variables - num_p
        total = (len(model.constraints)    # families a, c, d, e, f, g
                 + 2 * num_p               # 0 <= X+P <= 1 as rows
                 + 2 * num_p               # -1 <= P <= 1 as rows
                 + 2 * num_t)              # 0 <= T <= 1 as rows
        assert total == 39238
