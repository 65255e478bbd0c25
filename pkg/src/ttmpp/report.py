"""Human-facing swap plans: the diff between old and new schedules.

A report lists removed and added (course, faculty, slot) triples in a
fixed two-sided table layout, plus the objective decomposition into the
preference and penalty terms so users can see which term drove a swap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ReportError
from .instance import Instance
from .model import evaluate_objective
from .solver import Solution

REMOVED = "removed"
ADDED = "added"

REPORT_SCHEMA_VERSION = 1

PLAIN_TABLE = "plain_table"
JSON_FORMAT = "json"


@dataclass(frozen=True)
class SwapEntry:
    """One changed schedule cell, rendered with configured labels."""

    direction: str   # REMOVED or ADDED
    course: str
    faculty: str
    slot: str


@dataclass(frozen=True)
class ActivatedPenalty:
    """A (course, faculty) pair whose change magnitude is positive."""

    course: str
    faculty: str
    change: int


@dataclass(frozen=True)
class SwapReport:
    entries: tuple[SwapEntry, ...]
    objective: float
    preference_delta: float
    penalty_total: float
    activated_penalties: tuple[ActivatedPenalty, ...]

    @property
    def removed(self) -> tuple[SwapEntry, ...]:
        return tuple(e for e in self.entries if e.direction == REMOVED)

    @property
    def added(self) -> tuple[SwapEntry, ...]:
        return tuple(e for e in self.entries if e.direction == ADDED)


def diff_schedules(instance: Instance, solution: Solution) -> SwapReport:
    """One entry per nonzero perturbation cell, removed side first.

    Refuses solutions that carry no schedule (infeasible runs or limit
    hits without an incumbent).
    """
    if not solution.has_schedule:
        raise ReportError(
            f"solution with status {solution.status!r} has no schedule to diff")
    p = solution.p
    t_aux = solution.t_aux

    def label_entry(direction: str, i: int, j: int, t: int) -> SwapEntry:
        return SwapEntry(direction, instance.courses[i].label,
                         instance.faculty[j].label, instance.slots[t].label)

    removed = sorted(
        (label_entry(REMOVED, i, j, t) for i, j, t in np.argwhere(p == -1)),
        key=lambda e: (e.course, e.faculty, e.slot))
    added = sorted(
        (label_entry(ADDED, i, j, t) for i, j, t in np.argwhere(p == 1)),
        key=lambda e: (e.course, e.faculty, e.slot))

    preference_delta = float((instance.preferences * p.sum(axis=0)).sum())
    penalty_total = float((instance.swap_penalties * t_aux).sum())
    objective = evaluate_objective(instance, p, t_aux)

    activated = sorted(
        (ActivatedPenalty(instance.courses[i].label,
                          instance.faculty[j].label, int(t_aux[i, j]))
         for i, j in np.argwhere(t_aux > 0)),
        key=lambda a: (a.course, a.faculty))

    return SwapReport(entries=tuple(removed + added), objective=objective,
                      preference_delta=preference_delta,
                      penalty_total=penalty_total,
                      activated_penalties=tuple(activated))


def render_report(report: SwapReport, format: str = PLAIN_TABLE) -> str:
    if format == PLAIN_TABLE:
        return _render_plain(report)
    if format == JSON_FORMAT:
        return _render_json(report)
    raise ValueError(f"unknown report format {format!r}")


_HEADERS = ("Course", "Faculty", "Time slot")


def _side_rows(entries) -> list[tuple[str, str, str]]:
    return [(e.course, e.faculty, e.slot) for e in entries]


def _render_plain(report: SwapReport) -> str:
    left = _side_rows(report.removed) or [("(None)", "", "")]
    right = _side_rows(report.added) or [("(None)", "", "")]

    widths = [len(h) for h in _HEADERS]
    for rows in (left, right):
        for row in rows:
            for k, cell in enumerate(row):
                widths[k] = max(widths[k], len(cell))

    def fmt(row) -> str:
        return "  ".join(cell.ljust(widths[k]) for k, cell in enumerate(row)).rstrip()

    side_width = sum(widths) + 4
    lines = []
    lines.append("Sections removed".ljust(side_width) + " | Sections added")
    lines.append(fmt(_HEADERS).ljust(side_width) + " | " + fmt(_HEADERS))
    for k in range(max(len(left), len(right))):
        lhs = fmt(left[k]) if k < len(left) else ""
        rhs = fmt(right[k]) if k < len(right) else ""
        lines.append((lhs.ljust(side_width) + " | " + rhs).rstrip())
    lines.append("")
    lines.append(f"Objective: {report.objective:g}  "
                 f"(preference delta {report.preference_delta:g}, "
                 f"penalty total {report.penalty_total:g})")
    if report.activated_penalties:
        parts = [f"{a.course} / {a.faculty} ({a.change})"
                 for a in report.activated_penalties]
        lines.append("Activated penalties: " + "; ".join(parts))
    else:
        lines.append("Activated penalties: (none)")
    return "\n".join(lines) + "\n"


def _render_json(report: SwapReport) -> str:
    doc = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "removed": [{"course": e.course, "faculty": e.faculty, "slot": e.slot}
                    for e in report.removed],
        "added": [{"course": e.course, "faculty": e.faculty, "slot": e.slot}
                  for e in report.added],
        "objective": report.objective,
        "preference_delta": report.preference_delta,
        "penalty_total": report.penalty_total,
        "activated_penalties": [
            {"course": a.course, "faculty": a.faculty, "change": a.change}
            for a in report.activated_penalties],
    }
    return json.dumps(doc, indent=2) + "\n"


def swap_report_from_json(text: str | bytes | dict) -> SwapReport:
    doc = json.loads(text) if not isinstance(text, dict) else text
    version = doc.get("schema_version")
    if version != REPORT_SCHEMA_VERSION:
        raise ValueError(f"unsupported swap report schema_version {version!r}")
    entries = tuple(
        [SwapEntry(REMOVED, e["course"], e["faculty"], e["slot"])
         for e in doc["removed"]]
        + [SwapEntry(ADDED, e["course"], e["faculty"], e["slot"])
           for e in doc["added"]])
    activated = tuple(ActivatedPenalty(a["course"], a["faculty"], int(a["change"]))
                      for a in doc["activated_penalties"])
    return SwapReport(entries=entries, objective=float(doc["objective"]),
                      preference_delta=float(doc["preference_delta"]),
                      penalty_total=float(doc["penalty_total"]),
                      activated_penalties=activated)
