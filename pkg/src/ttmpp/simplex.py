"""Bounded-variable primal simplex for maximization problems.

Self-contained: rows are converted to equalities with bounded slacks and
the method runs two phases over the same machinery.  Phase 1 minimizes
total bound infeasibility of the basic solution (composite objective, no
artificial variables), phase 2 maximizes the true objective.

The basis inverse is kept in product form: the initial all-slack basis is
the identity, each pivot appends one eta column, and FTRAN/BTRAN apply
the eta chain in O(m) per eta.  When the chain grows long the basis is
refactorized into a dense LU.  Dantzig pricing with a Bland fallback
after a run of degenerate steps keeps iterations deterministic and
cycle-free.

The solver never returns a wrong answer on numerical failure: singular
bases and stalled states surface as a distinct status.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

SENSE_LE = "<="
SENSE_EQ = "="
SENSE_GE = ">="

LP_OPTIMAL = "optimal"
LP_INFEASIBLE = "infeasible"
LP_UNBOUNDED = "unbounded"
LP_NUMERICAL = "numerical"
LP_ITERATION_LIMIT = "iteration_limit"
LP_TIME_LIMIT = "time_limit"

_DEGENERATE_RUN_BEFORE_BLAND = 64
_ETAS_BEFORE_REFACTOR = 512


@dataclass(frozen=True)
class LpProblem:
    """maximize c @ x  subject to  A x (senses) b,  lower <= x <= upper."""

    c: np.ndarray
    a: sp.csc_matrix
    senses: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


@dataclass(frozen=True)
class LpSolution:
    """Result of one relaxation solve; ``x`` covers structural variables."""

    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int

    @property
    def ok(self) -> bool:
        return self.status == LP_OPTIMAL


def _slack_bounds(senses: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = len(senses)
    lo = np.zeros(m)
    up = np.zeros(m)
    for r, sense in enumerate(senses):
        if sense == SENSE_LE:
            lo[r], up[r] = 0.0, np.inf
        elif sense == SENSE_GE:
            lo[r], up[r] = -np.inf, 0.0
        elif sense == SENSE_EQ:
            lo[r], up[r] = 0.0, 0.0
        else:
            raise ValueError(f"unknown constraint sense {sense!r}")
    return lo, up


class _SingularBasis(Exception):
    pass


class _Tableau:
    """Mutable simplex state over the slack-extended column set."""

    def __init__(self, problem: LpProblem, pivot_tol: float):
        n = problem.a.shape[1]
        m = problem.a.shape[0]
        slack_lo, slack_up = _slack_bounds(problem.senses)
        self.n = n
        self.m = m
        self.cf = np.concatenate([problem.c, np.zeros(m)])
        self.lo = np.concatenate([problem.lower, slack_lo])
        self.up = np.concatenate([problem.upper, slack_up])
        if not np.all(np.isfinite(self.lo) | np.isfinite(self.up)):
            raise ValueError("every variable needs at least one finite bound")
        self.afull = sp.hstack(
            [problem.a.tocsc(), sp.identity(m, format="csc")], format="csc")
        self.at = self.afull.T.tocsr()
        self.b = np.asarray(problem.b, dtype=np.float64)
        self.pivot_tol = pivot_tol

        # Nonbasic variables start at the finite bound closest to zero.
        xval = np.where(np.isfinite(self.lo), self.lo, self.up)
        take_upper = (np.isfinite(self.up)
                      & (~np.isfinite(self.lo) | (np.abs(self.up) < np.abs(self.lo))))
        xval = np.where(take_upper, self.up, xval)
        self.xval = xval
        self.at_upper = take_upper

        self.basis = np.arange(n, n + m)
        self.in_basis = np.zeros(n + m, dtype=bool)
        self.in_basis[self.basis] = True
        self.lu = None                    # None: base inverse is the identity
        self.etas: list[tuple[int, np.ndarray]] = []
        self.xb = self.b - problem.a @ xval[:n]

    # -- basis inverse in product form --------------------------------

    def ftran(self, v: np.ndarray) -> np.ndarray:
        """Solve B u = v given the factorized basis."""
        u = scipy.linalg.lu_solve(self.lu, v) if self.lu is not None else v.copy()
        for r, eta in self.etas:
            ur = u[r]
            if ur != 0.0:
                u[r] = 0.0
                u += eta * ur
        return u

    def btran(self, v: np.ndarray) -> np.ndarray:
        """Solve y B = v given the factorized basis."""
        u = v.copy()
        for r, eta in reversed(self.etas):
            u[r] = u @ eta
        if self.lu is not None:
            u = scipy.linalg.lu_solve(self.lu, u, trans=1)
        return u

    def column(self, q: int) -> np.ndarray:
        a = self.afull
        col = np.zeros(self.m)
        col[a.indices[a.indptr[q]:a.indptr[q + 1]]] = \
            a.data[a.indptr[q]:a.indptr[q + 1]]
        return col

    def push_eta(self, r: int, w: np.ndarray) -> None:
        eta = -w / w[r]
        eta[r] = 1.0 / w[r]
        self.etas.append((r, eta))

    def refactorize(self) -> None:
        bmat = self.afull[:, self.basis].toarray()
        try:
            lu = scipy.linalg.lu_factor(bmat)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise _SingularBasis from exc
        if np.abs(np.diag(lu[0])).min() < 1e-12:
            raise _SingularBasis
        self.lu = lu
        self.etas = []
        self.recompute_xb()

    def recompute_xb(self) -> None:
        xv = self.xval.copy()
        xv[self.basis] = 0.0
        self.xb = self.ftran(self.b - self.afull @ xv)

    def residual(self) -> float:
        x = self.assemble()
        return float(np.abs(self.afull @ x - self.b).max(initial=0.0))

    def assemble(self) -> np.ndarray:
        out = self.xval.copy()
        out[self.basis] = self.xb
        return out


def solve_lp(problem: LpProblem, *, pivot_tol: float = 1e-9,
             feas_tol: float = 1e-7, opt_tol: float = 1e-7,
             max_iter: int | None = None,
             deadline: float | None = None) -> LpSolution:
    """Solve the LP to proven optimality over its bounded variables.

    The returned objective is exact for the basic solution found; for a
    maximization this is a valid upper bound on any integer-restricted
    optimum of the same problem.
    """
    tab = _Tableau(problem, pivot_tol)
    n, m = tab.n, tab.m
    if max_iter is None:
        max_iter = 200 * (m + n) + 2000

    movable = (tab.up - tab.lo) > 0
    iterations = 0
    degenerate_run = 0
    verified_clean = True      # no pivots since the last exact recompute
    resid_scale = 1.0 + float(np.abs(tab.b).max(initial=0.0))

    while True:
        if iterations >= max_iter:
            return LpSolution(LP_ITERATION_LIMIT, None, None, iterations)
        if deadline is not None and iterations % 32 == 0 and time.perf_counter() > deadline:
            return LpSolution(LP_TIME_LIMIT, None, None, iterations)
        if len(tab.etas) >= _ETAS_BEFORE_REFACTOR:
            try:
                tab.refactorize()
            except _SingularBasis:
                return LpSolution(LP_NUMERICAL, None, None, iterations)
            verified_clean = True

        lob = tab.lo[tab.basis]
        upb = tab.up[tab.basis]
        below = tab.xb < lob - feas_tol
        above = tab.xb > upb + feas_tol
        phase_one = bool(below.any() or above.any())

        if phase_one:
            marker = np.zeros(m)
            marker[below] = -1.0
            marker[above] = 1.0
            y = tab.btran(marker)
            score = tab.at @ y
        else:
            y = tab.btran(tab.cf[tab.basis])
            score = tab.cf - tab.at @ y

        can_enter = movable & ~tab.in_basis
        gain = np.where(can_enter & ~tab.at_upper, score, 0.0) \
            + np.where(can_enter & tab.at_upper, -score, 0.0)
        eligible = gain > opt_tol

        if not eligible.any():
            if not verified_clean:
                # Rule out accumulated round-off before declaring a verdict.
                if tab.residual() > 1e-7 * resid_scale:
                    try:
                        tab.refactorize()
                    except _SingularBasis:
                        return LpSolution(LP_NUMERICAL, None, None, iterations)
                verified_clean = True
                continue
            if phase_one:
                return LpSolution(LP_INFEASIBLE, None, None, iterations)
            x = tab.assemble()
            objective = float(tab.cf @ x)
            return LpSolution(LP_OPTIMAL, x[:n], objective, iterations)

        if degenerate_run >= _DEGENERATE_RUN_BEFORE_BLAND:
            q = int(np.argmax(eligible))          # lowest eligible index
        else:
            q = int(np.argmax(gain))
        sign = -1.0 if tab.at_upper[q] else 1.0

        w = tab.ftran(tab.column(q))
        v = sign * w

        # Largest step before a basic variable hits a bound.  In phase 1,
        # variables beyond a bound block where they re-enter their range.
        theta = np.full(m, np.inf)
        hit_lower = np.zeros(m, dtype=bool)
        feas = ~(below | above)
        dec = v > pivot_tol
        inc = v < -pivot_tol

        sel = feas & dec & np.isfinite(lob)
        theta[sel] = (tab.xb[sel] - lob[sel]) / v[sel]
        hit_lower[sel] = True
        sel = feas & inc & np.isfinite(upb)
        theta[sel] = (tab.xb[sel] - upb[sel]) / v[sel]
        sel = below & inc
        theta[sel] = (tab.xb[sel] - lob[sel]) / v[sel]
        hit_lower[sel] = True
        sel = above & dec
        theta[sel] = (tab.xb[sel] - upb[sel]) / v[sel]
        theta = np.maximum(theta, 0.0)

        flip_range = tab.up[q] - tab.lo[q]
        theta_basic = theta.min() if m else np.inf
        theta_star = min(theta_basic, flip_range)

        if not np.isfinite(theta_star):
            if phase_one:
                return LpSolution(LP_NUMERICAL, None, None, iterations)
            return LpSolution(LP_UNBOUNDED, None, None, iterations)

        iterations += 1
        degenerate_run = degenerate_run + 1 if theta_star <= 1e-12 else 0

        if flip_range <= theta_basic:
            # Bound flip: the entering variable crosses to its other bound.
            tab.xb -= v * flip_range
            tab.at_upper[q] = not tab.at_upper[q]
            tab.xval[q] = tab.up[q] if tab.at_upper[q] else tab.lo[q]
            verified_clean = False
            continue

        blocking = np.flatnonzero(theta <= theta_star + 1e-12)
        if degenerate_run >= _DEGENERATE_RUN_BEFORE_BLAND:
            r = min(blocking, key=lambda i: tab.basis[i])
        else:
            r = min(blocking, key=lambda i: (-abs(v[i]), tab.basis[i]))
        r = int(r)

        if abs(w[r]) < pivot_tol:
            return LpSolution(LP_NUMERICAL, None, None, iterations)
        leaving = int(tab.basis[r])
        entering_value = tab.xval[q] + sign * theta_star
        tab.xb -= v * theta_star
        tab.xval[leaving] = lob[r] if hit_lower[r] else upb[r]
        tab.at_upper[leaving] = not hit_lower[r]
        tab.in_basis[leaving] = False
        tab.in_basis[q] = True
        tab.basis[r] = q
        tab.xb[r] = entering_value
        tab.push_eta(r, w)
        verified_clean = False
