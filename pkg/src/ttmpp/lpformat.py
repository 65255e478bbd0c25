"""Writer for the fixed industry text format for linear programs.

Produces the objective, constraint rows, bounds, and integer section in
deterministic, byte-stable order so exports can be diffed and re-read by
external tooling.  Row comments carry the constraint tags.
"""

from __future__ import annotations

from .model import IlpModel, SENSE_EQ, SENSE_GE, SENSE_LE

_SENSE_TEXT = {SENSE_LE: "<=", SENSE_EQ: "=", SENSE_GE: ">="}


def _num(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def _terms(pairs, wrap_at: int = 72) -> list[str]:
    """Render coefficient/name pairs as wrapped '+ c name' runs."""
    parts = []
    for name, coef in pairs:
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_num(abs(coef))} {name}")
    lines, current = [], ""
    for part in parts:
        if current and len(current) + len(part) + 1 > wrap_at:
            lines.append(current)
            current = part
        else:
            current = f"{current} {part}" if current else part
    if current:
        lines.append(current)
    return lines or ["0"]


def write_lp(model: IlpModel, name: str = "reassignment") -> str:
    lines = [f"\\ Problem: {name}"]
    lines.append("Maximize")
    objective = [(ref.name(), coef) for ref, coef in model.objective if coef != 0.0]
    body = _terms(objective)
    lines.append(f" obj: {body[0]}")
    lines.extend(f"      {extra}" for extra in body[1:])

    lines.append("Subject To")
    for k, con in enumerate(model.constraints):
        lines.append(f"\\ {con.tag}")
        body = _terms((ref.name(), coef) for ref, coef in con.terms)
        sense = _SENSE_TEXT[con.sense]
        head = f" r{k}: {body[0]}"
        if len(body) == 1:
            lines.append(f"{head} {sense} {_num(con.rhs)}")
        else:
            lines.append(head)
            lines.extend(f"      {extra}" for extra in body[1:-1])
            lines.append(f"      {body[-1]} {sense} {_num(con.rhs)}")

    lines.append("Bounds")
    for k, ref in enumerate(model.variables):
        lines.append(f" {_num(model.lower[k])} <= {ref.name()} <= {_num(model.upper[k])}")

    lines.append("Generals")
    current = ""
    for ref in model.variables:
        token = ref.name()
        if current and len(current) + len(token) + 1 > 72:
            lines.append(f" {current}")
            current = token
        else:
            current = f"{current} {token}" if current else token
    if current:
        lines.append(f" {current}")
    lines.append("End")
    return "\n".join(lines) + "\n"
