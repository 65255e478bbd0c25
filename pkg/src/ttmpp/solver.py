"""Exact solver: branch and bound over the LP relaxation, plus an
exhaustive oracle for tiny instances.

Branch and bound uses best-bound node selection (ties broken toward
deeper nodes, so the search dives for incumbents), floor/ceil branching
on a fractional perturbation variable, and re-solves each node's
relaxation from the all-slack basis.  Only the perturbation variables are
branched on: for any integer perturbation the auxiliary change variables
are optimal at their canonical values |sum_t P|, which are integers, so
relaxing their integrality never changes the optimum.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import BudgetExceededError, SolverNumericalError
from .instance import Instance
from .model import IlpModel, canonical_t, evaluate_objective
from . import simplex
from .simplex import LpProblem, LpSolution, solve_lp

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
LIMIT_REACHED = "limit_reached"

BRANCH_MOST_FRACTIONAL = "most_fractional"
BRANCH_FIRST_FRACTIONAL = "first_fractional"

_BOUND_TOL = 1e-9


@dataclass(frozen=True)
class SolveOptions:
    integrality_tolerance: float = 1e-6
    lp_pivot_tolerance: float = 1e-9
    node_limit: int | None = None
    time_limit: float | None = None
    min_change_phase: bool = True
    branching_rule: str = BRANCH_MOST_FRACTIONAL

    def __post_init__(self):
        if self.integrality_tolerance <= 0 or self.lp_pivot_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.node_limit is not None and self.node_limit <= 0:
            raise ValueError("node_limit must be positive when set")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive when set")
        if self.branching_rule not in (BRANCH_MOST_FRACTIONAL,
                                       BRANCH_FIRST_FRACTIONAL):
            raise ValueError(f"unknown branching rule {self.branching_rule!r}")


@dataclass(frozen=True)
class SolveStats:
    nodes: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0
    best_bound: float | None = None


@dataclass(frozen=True)
class Solution:
    """Solver output; p/t_aux/objective are None unless an incumbent exists.

    t_aux is always canonical: t_aux[i][j] = |sum_t p[i][j][t]|.
    """

    status: str
    p: np.ndarray | None
    t_aux: np.ndarray | None
    objective: float | None
    change_count: int | None
    stats: SolveStats = field(default_factory=SolveStats)

    @property
    def has_schedule(self) -> bool:
        return self.p is not None


def model_to_lp(model: IlpModel) -> LpProblem:
    a, senses, rhs = model.constraint_arrays()
    return LpProblem(c=model.objective_vector(), a=a, senses=senses, b=rhs,
                     lower=np.asarray(model.lower, dtype=np.float64),
                     upper=np.asarray(model.upper, dtype=np.float64))


def solve_lp_relaxation(model: IlpModel, *,
                        pivot_tol: float = 1e-9) -> LpSolution:
    """Solve the continuous relaxation; the objective of an optimal result
    is a valid upper bound on the integer optimum."""
    return solve_lp(model_to_lp(model), pivot_tol=pivot_tol)


@dataclass
class _TreeResult:
    status: str
    x: np.ndarray | None
    objective: float | None
    best_bound: float | None
    nodes: int
    lp_iterations: int


def _fractionality(values: np.ndarray) -> np.ndarray:
    return np.abs(values - np.round(values))


def _branch_and_bound(problem: LpProblem, int_indices: np.ndarray,
                      options: SolveOptions,
                      deadline: float | None) -> _TreeResult:
    nodes = 0
    lp_iterations = 0
    incumbent_x: np.ndarray | None = None
    incumbent_obj = -math.inf
    hit_limit = False
    int_tol = options.integrality_tolerance

    seq = 0
    heap: list[tuple[float, int, int, np.ndarray, np.ndarray]] = []
    heapq.heappush(heap, (-math.inf, 0, seq, problem.lower, problem.upper))
    open_bound = math.inf

    while heap:
        neg_bound, neg_depth, _, lower, upper = heapq.heappop(heap)
        parent_bound = -neg_bound
        if incumbent_x is not None and parent_bound <= incumbent_obj + _BOUND_TOL:
            break  # best-bound order: nothing left can beat the incumbent
        if options.node_limit is not None and nodes >= options.node_limit:
            hit_limit = True
            open_bound = parent_bound
            break
        if deadline is not None and time.perf_counter() > deadline:
            hit_limit = True
            open_bound = parent_bound
            break

        nodes += 1
        relax = solve_lp(replace(problem, lower=lower, upper=upper),
                         pivot_tol=options.lp_pivot_tolerance,
                         deadline=deadline)
        lp_iterations += relax.iterations
        if relax.status == simplex.LP_INFEASIBLE:
            continue
        if relax.status == simplex.LP_TIME_LIMIT:
            hit_limit = True
            open_bound = parent_bound
            break
        if relax.status != simplex.LP_OPTIMAL:
            raise SolverNumericalError(
                f"LP relaxation failed with status {relax.status!r}")
        bound = relax.objective
        if incumbent_x is not None and bound <= incumbent_obj + _BOUND_TOL:
            continue

        x = relax.x
        frac = _fractionality(x[int_indices])
        if frac.max(initial=0.0) <= int_tol:
            candidate = x.copy()
            candidate[int_indices] = np.round(candidate[int_indices])
            cand_obj = float(problem.c @ candidate)
            if cand_obj > incumbent_obj:
                incumbent_x = candidate
                incumbent_obj = cand_obj
            continue

        if options.branching_rule == BRANCH_FIRST_FRACTIONAL:
            pick = int(np.argmax(frac > int_tol))
        else:
            pick = int(np.argmax(frac))
        var = int(int_indices[pick])
        value = x[var]

        lower_child = lower.copy()
        upper_child = upper.copy()
        upper_child[var] = math.floor(value)
        seq += 1
        heapq.heappush(heap, (-bound, neg_depth - 1, seq, lower, upper_child))
        lower_child[var] = math.ceil(value)
        seq += 1
        heapq.heappush(heap, (-bound, neg_depth - 1, seq, lower_child, upper))

    if hit_limit:
        best_bound = open_bound
        if heap:
            best_bound = max(best_bound, -heap[0][0])
        if incumbent_x is not None:
            best_bound = max(best_bound, incumbent_obj)
        return _TreeResult(LIMIT_REACHED, incumbent_x,
                           incumbent_obj if incumbent_x is not None else None,
                           best_bound if math.isfinite(best_bound) else None,
                           nodes, lp_iterations)
    if incumbent_x is None:
        return _TreeResult(INFEASIBLE, None, None, None, nodes, lp_iterations)
    return _TreeResult(OPTIMAL, incumbent_x, incumbent_obj, incumbent_obj,
                       nodes, lp_iterations)


def _solution_from_x(model: IlpModel, x: np.ndarray, status: str,
                     stats: SolveStats) -> Solution:
    p_float, _ = model.split_values(x)
    p = np.round(p_float).astype(np.int64)
    t_aux = canonical_t(p).astype(np.int64)
    full = np.concatenate([p.reshape(-1).astype(np.float64),
                           t_aux.reshape(-1).astype(np.float64)])
    objective = float(model.objective_vector() @ full)
    return Solution(status=status, p=p, t_aux=t_aux, objective=objective,
                    change_count=int(np.abs(p).sum()), stats=stats)


def solve(model: IlpModel, options: SolveOptions = SolveOptions()) -> Solution:
    """Maximize the model exactly; optionally refine ties to fewest changes.

    Optimal status certifies a global maximizer; Infeasible certifies that
    no integer point satisfies all constraints; LimitReached returns the
    best incumbent found (if any) together with a valid bound in stats.
    """
    start = time.perf_counter()
    deadline = start + options.time_limit if options.time_limit else None
    problem = model_to_lp(model)
    int_indices = np.arange(model.num_p)

    tree = _branch_and_bound(problem, int_indices, options, deadline)
    stats = SolveStats(nodes=tree.nodes, lp_iterations=tree.lp_iterations,
                       wall_time=time.perf_counter() - start,
                       best_bound=tree.best_bound)
    if tree.x is None:
        return Solution(status=tree.status, p=None, t_aux=None,
                        objective=None, change_count=None, stats=stats)
    if tree.status == OPTIMAL and options.min_change_phase:
        refined = min_change_refine(model, tree.objective,
                                    replace(options, time_limit=None),
                                    deadline=deadline)
        if refined.status == OPTIMAL:
            stats = SolveStats(
                nodes=stats.nodes + refined.stats.nodes,
                lp_iterations=stats.lp_iterations + refined.stats.lp_iterations,
                wall_time=time.perf_counter() - start,
                best_bound=tree.best_bound)
            return replace(refined, stats=stats)
    stats = replace(stats, wall_time=time.perf_counter() - start)
    return _solution_from_x(model, tree.x, tree.status, stats)


def min_change_refine(model: IlpModel, z_star: float,
                      options: SolveOptions = SolveOptions(), *,
                      deadline: float | None = None) -> Solution:
    """Among solutions achieving objective z_star, find one with the fewest
    changed schedule cells.

    Solves a second integer program: minimize sum |P| (linear under the
    tightened P bounds) subject to the original rows plus a row pinning
    the original objective to z_star.
    """
    start = time.perf_counter()
    if deadline is None and options.time_limit:
        deadline = start + options.time_limit
    base = model_to_lp(model)
    num_p = model.num_p

    # (1 - 2X) P equals |P| within bounds; X is recoverable from the lower
    # bound of each P variable.  Maximize the negated sum.
    c_changes = np.zeros(model.num_variables)
    c_changes[:num_p] = -(1.0 + 2.0 * base.lower[:num_p])

    a = sp.vstack([base.a, sp.csr_matrix(base.c)], format="csc")
    senses = np.concatenate([base.senses, np.array([simplex.SENSE_EQ], dtype=object)])
    rhs = np.concatenate([base.b, [z_star]])
    problem = LpProblem(c=c_changes, a=a, senses=senses, b=rhs,
                        lower=base.lower, upper=base.upper)

    tree = _branch_and_bound(problem, np.arange(num_p), options, deadline)
    stats = SolveStats(nodes=tree.nodes, lp_iterations=tree.lp_iterations,
                       wall_time=time.perf_counter() - start,
                       best_bound=tree.best_bound)
    if tree.x is None:
        return Solution(status=tree.status, p=None, t_aux=None,
                        objective=None, change_count=None, stats=stats)
    return _solution_from_x(model, tree.x, tree.status, stats)


# -- exhaustive oracle ---------------------------------------------------

ENUMERATION_BUDGET = 24
_CHUNK_BITS = 16


def brute_force(instance: Instance) -> Solution:
    """Ground truth by enumeration, for instances with at most 24 cells.

    Every integer perturbation within bounds corresponds to one binary new
    schedule, so all 2^(courses*faculty*slots) schedules are enumerated,
    filtered by the constraint families, and scored by the objective.
    Ties break by smallest change count, then lexicographically smallest
    perturbation in (course, faculty, slot) order.

    Each constraint family and both objective terms are linear in the flat
    binary schedule, so a chunk of candidates is screened with a single
    matrix product against a stacked check matrix; the cheap section-count
    equalities run first and eliminate almost everything.
    """
    start = time.perf_counter()
    ni, nj, nt = instance.shape
    cells = ni * nj * nt
    if cells > ENUMERATION_BUDGET:
        raise BudgetExceededError(
            f"{cells} cells exceed the enumeration budget of {ENUMERATION_BUDGET}")

    x_flat = instance.obsolete_schedule.astype(np.float64).reshape(-1)
    w = instance.preferences
    alpha_flat = instance.swap_penalties.reshape(-1)
    cap_flat = (instance.eligibility.astype(np.int64)
                * instance.demand.sum(axis=1)[:, None]).reshape(-1)
    f_flat = (instance.preferences > 0).astype(np.int64).reshape(-1)
    demand_flat = instance.demand.reshape(-1)
    pairs = instance.conflict_index_pairs()

    # Column layout of the linear check/score matrix, rows = flat cells.
    idx_i, idx_j, idx_t = np.unravel_index(np.arange(cells), (ni, nj, nt))
    assign = np.zeros((cells, ni * nt))
    assign[np.arange(cells), idx_i * nt + idx_t] = 1.0
    per_pair = np.zeros((cells, ni * nj))          # sum_t Y per (i, j)
    per_pair[np.arange(cells), idx_i * nj + idx_j] = 1.0
    avail = np.zeros((cells, nj * nt))
    avail[np.arange(cells), idx_j * nt + idx_t] = 1.0
    load = np.zeros((cells, nj))
    load[np.arange(cells), idx_j] = instance.load_units[idx_i]
    conflict = np.zeros((cells, len(pairs) * nj))
    for k, (t1, t2) in enumerate(pairs):
        hit = (idx_t == t1) | (idx_t == t2)
        conflict[np.flatnonzero(hit), k * nj + idx_j[hit]] = 1.0
    w_col = w[idx_j, idx_t][:, None]
    change_col = (1.0 - 2.0 * x_flat)[:, None]
    lex_col = (1 << np.arange(cells - 1, -1, -1)).astype(np.float64)[:, None]

    score_matrix = np.hstack([per_pair, avail, load, conflict,
                              w_col, change_col, lex_col])
    b0 = ni * nj
    b1 = b0 + nj * nt
    b2 = b1 + nj
    b3 = b2 + len(pairs) * nj

    x_pair = per_pair.T @ x_flat                   # sum_t X per (i, j)
    pref_const = float(w_col[:, 0] @ x_flat)
    changes_const = float(x_flat.sum())

    # Enumerate in two levels: all patterns of the low cells are unpacked
    # and scored once; each high-cell pattern then contributes one row.
    low = min(cells, _CHUNK_BITS)
    high = cells - low
    low_ks = np.arange(1 << low, dtype=np.uint64)
    bits_low = ((low_ks[:, None] >> np.arange(low, dtype=np.uint64)) & 1
                ).astype(np.float64)
    counts_low = bits_low @ assign[:low]
    score_low = bits_low @ score_matrix[:low]

    best_obj: float | None = None
    best_key: tuple[int, int] | None = None
    best_p: np.ndarray | None = None

    for high_k in range(1 << high):
        hrow = ((high_k >> np.arange(high, dtype=np.uint64)) & 1
                ).astype(np.float64)
        target = demand_flat - hrow @ assign[low:]
        sel = np.flatnonzero((counts_low == target).all(axis=1))
        if not sel.size:
            continue
        g = score_low[sel] + hrow @ score_matrix[low:]

        ok = (g[:, :b0] <= cap_flat).all(axis=1)
        ok &= (g[:, b0:b1] <= f_flat).all(axis=1)
        ok &= ((g[:, b1:b2] >= instance.load_min - 1e-9)
               & (g[:, b1:b2] <= instance.load_max + 1e-9)).all(axis=1)
        ok &= (g[:, b2:b3] <= 1.0).all(axis=1)
        if not ok.any():
            continue
        sel, g = sel[ok], g[ok]
        bits = np.hstack([bits_low[sel],
                          np.broadcast_to(hrow, (sel.size, high))])

        pref = g[:, b3] - pref_const
        pen = np.abs(g[:, :b0] - x_pair) @ alpha_flat
        objs = pref - pen
        changes = (g[:, b3 + 1] + changes_const).astype(np.int64)
        lex = g[:, b3 + 2].astype(np.int64)

        chunk_best = objs.max()
        if best_obj is None or chunk_best > best_obj:
            best_obj = float(chunk_best)
            best_key = None
        if chunk_best == best_obj:
            tie = objs == chunk_best
            keys = np.stack([changes[tie], lex[tie]], axis=1)
            order = np.lexsort((keys[:, 1], keys[:, 0]))
            winner = int(order[0])
            key = (int(keys[winner, 0]), int(keys[winner, 1]))
            if best_key is None or key < best_key:
                best_key = key
                best_p = (bits[tie][winner] - x_flat).reshape(ni, nj, nt)

    wall = time.perf_counter() - start
    if best_p is None:
        return Solution(status=INFEASIBLE, p=None, t_aux=None, objective=None,
                        change_count=None, stats=SolveStats(wall_time=wall))
    t_aux = canonical_t(best_p).astype(np.int64)
    objective = evaluate_objective(instance, best_p, t_aux)
    return Solution(status=OPTIMAL, p=best_p.astype(np.int64), t_aux=t_aux,
                    objective=objective, change_count=int(np.abs(best_p).sum()),
                    stats=SolveStats(wall_time=wall))
