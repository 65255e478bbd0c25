"""Command-line entry point.

Subcommands: validate, solve, perturb, export-lp, gen-paper-instance,
serve.  Exit codes: 0 success/Optimal, 1 validation violations,
2 Infeasible, 3 LimitReached, 64 usage errors, 74 I/O or data errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import TtmppError
from .generator import generate_department_instance
from .instance import Scenario, SectionDelta, apply_scenario, validate_instance
from .lpformat import write_lp
from .model import build_model
from .report import JSON_FORMAT, PLAIN_TABLE, diff_schedules, render_report
from .solver import INFEASIBLE, LIMIT_REACHED, OPTIMAL, SolveOptions, solve
from .storage import (
    FORMAT_CSV_BUNDLE,
    FORMAT_JSON,
    parse_document,
    parse_scenario,
    serialize_instance,
    serialize_scenario,
)

STORE_ENV_VAR = "TTMPP_STORE"

_EXIT_BY_STATUS = {OPTIMAL: 0, INFEASIBLE: 2, LIMIT_REACHED: 3}
EXIT_VIOLATIONS = 1
EXIT_USAGE = 64
EXIT_IO = 74


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttmpp",
        description="Re-optimize teaching assignments after last-minute "
                    "section changes, minimizing course swaps.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance file's invariants")
    p.add_argument("instance")

    p = sub.add_parser("solve", help="solve an instance and print the swap plan")
    p.add_argument("instance")
    p.add_argument("--scenario", help="scenario file to apply before solving")
    p.add_argument("--no-min-change", action="store_true",
                   help="skip the fewest-changes tie-break phase")
    p.add_argument("--time-limit", type=float, metavar="SECONDS")
    p.add_argument("--node-limit", type=int, metavar="NODES")
    p.add_argument("--report", choices=["plain", "json"], default="plain")
    p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("perturb", help="write a scenario file from edits")
    p.add_argument("instance")
    p.add_argument("--cancel", action="append", default=[],
                   metavar="COURSE@SLOT[:COUNT]")
    p.add_argument("--add", action="append", default=[],
                   metavar="COURSE@SLOT[:COUNT]")
    p.add_argument("--name", default="cli-scenario")
    p.add_argument("--out", help="write the scenario here instead of stdout")

    p = sub.add_parser("export-lp", help="write the model in LP text format")
    p.add_argument("instance")
    p.add_argument("--out", required=True)

    p = sub.add_parser("gen-paper-instance",
                       help="emit a seeded synthetic department instance "
                            "(17 courses, 22 faculty, 24 slots)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=[FORMAT_JSON, FORMAT_CSV_BUNDLE],
                   default=FORMAT_JSON)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--store", default=os.environ.get(STORE_ENV_VAR),
                   help=f"store directory (default: ${STORE_ENV_VAR})")
    p.add_argument("--listen", default="127.0.0.1:8000", metavar="HOST:PORT")

    return parser


def _load_document(path: str, *, enforce_validation: bool = True):
    data = Path(path).read_bytes()
    format = FORMAT_CSV_BUNDLE if path.endswith(".zip") else FORMAT_JSON
    return parse_document(data, format, enforce_validation=enforce_validation)


def _write_output(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_edit(spec: str, sign: int) -> SectionDelta:
    head, _, count = spec.partition(":")
    course, sep, slot = head.partition("@")
    if not sep or not course or not slot:
        raise ValueError(f"edit {spec!r} must look like COURSE@SLOT[:COUNT]")
    n = int(count) if count else 1
    if n <= 0:
        raise ValueError(f"edit {spec!r} must have a positive count")
    return SectionDelta(course, slot, sign * n)


def _cmd_validate(args) -> int:
    doc = _load_document(args.instance, enforce_validation=False)
    report = validate_instance(doc.instance)
    if report.ok:
        return 0
    for message in report.messages():
        print(message, file=sys.stderr)
    return EXIT_VIOLATIONS


def _cmd_solve(args) -> int:
    doc = _load_document(args.instance)
    instance = doc.instance
    if args.scenario:
        scenario = parse_scenario(Path(args.scenario).read_bytes())
        instance = apply_scenario(instance, scenario)
    options = SolveOptions(min_change_phase=not args.no_min_change,
                           time_limit=args.time_limit,
                           node_limit=args.node_limit)
    solution = solve(build_model(instance), options)
    if solution.has_schedule:
        report = diff_schedules(instance, solution)
        format = PLAIN_TABLE if args.report == "plain" else JSON_FORMAT
        _write_output(render_report(report, format), args.out)
    else:
        print(f"no schedule produced: solver status is {solution.status}",
              file=sys.stderr)
    return _EXIT_BY_STATUS[solution.status]


def _cmd_perturb(args) -> int:
    doc = _load_document(args.instance)
    deltas = [_parse_edit(spec, -1) for spec in args.cancel]
    deltas += [_parse_edit(spec, +1) for spec in args.add]
    if not deltas:
        raise ValueError("nothing to do: pass --cancel and/or --add")
    scenario = Scenario(name=args.name, section_deltas=tuple(deltas))
    apply_scenario(doc.instance, scenario)   # fail fast on bad targets
    _write_output(serialize_scenario(scenario).decode(), args.out)
    return 0


def _cmd_export_lp(args) -> int:
    doc = _load_document(args.instance)
    Path(args.out).write_text(write_lp(build_model(doc.instance)))
    return 0


def _cmd_generate(args) -> int:
    instance = generate_department_instance(args.seed)
    data = serialize_instance(instance, args.format,
                              name=f"synthetic-department-{args.seed}",
                              description="Seeded synthetic department: 57 "
                                          "sections of 17 courses, 13 full-time "
                                          "and 9 part-time faculty, 24 slots")
    Path(args.out).write_bytes(data)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    from .storage import ScenarioStore

    if not args.store:
        raise ValueError(f"--store or ${STORE_ENV_VAR} is required")
    host, _, port = args.listen.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"--listen must look like HOST:PORT, got {args.listen!r}")
    app = create_app(ScenarioStore(args.store))
    uvicorn.run(app, host=host, port=int(port), log_level="warning")
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "solve": _cmd_solve,
    "perturb": _cmd_perturb,
    "export-lp": _cmd_export_lp,
    "gen-paper-instance": _cmd_generate,
    "serve": _cmd_serve,
}


def run(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, TtmppError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
