"""
CPLEX LP-format export of a MilpModel.

Covered subset: objective, general constraints, bounds and binaries. Names
are sanitized to the characters the format accepts.
"""
import math
import re
from pathlib import Path
from typing import Dict

from p2h.milp.model import MilpModel, Sense

_BAD_CHARS = re.compile(r"[^A-Za-z0-9_.\[\]]")
_SENSE = {Sense.LE: "<=", Sense.GE: ">=", Sense.EQ: "="}
_LINE_WIDTH = 200


def _name(raw: str, used: Dict[str, int]) -> str:
    name = _BAD_CHARS.sub("_", raw) or "v"
    if name[0].isdigit() or name[0] in ".":
        name = f"_{name}"
    if name in used:
        used[name] += 1
        name = f"{name}_{used[name]}"
    else:
        used[name] = 0
    return name


def _number(value: float) -> str:
    return repr(float(value))


def _linear(coeffs, names) -> str:
    terms = []
    for j in sorted(coeffs):
        a = coeffs[j]
        sign = "-" if a < 0 else "+"
        terms.append(f"{sign} {_number(abs(a))} {names[j]}")
    if not terms:
        return "0"
    text = " ".join(terms)
    if text.startswith("+ "):
        text = text[2:]
    return _wrap(text)


def _wrap(text: str) -> str:
    lines, current = [], ""
    for token in text.split(" "):
        if len(current) + len(token) + 1 > _LINE_WIDTH:
            lines.append(current)
            current = "   " + token
        else:
            current = f"{current} {token}" if current else token
    lines.append(current)
    return "\n".join(lines)


def to_lp(model: MilpModel) -> str:
    used: Dict[str, int] = {}
    names = [_name(v.name, used) for v in model.variables]
    row_used: Dict[str, int] = {}
    out = [f"\\ Problem: {model.name}", "Maximize"]
    objective = _linear(model.objective, names)
    if model.objective_constant:
        objective = f"{objective} + {_number(model.objective_constant)} __constant"
    out.append(f" obj: {objective}")
    out.append("Subject To")
    for con in model.constraints:
        out.append(f" {_name(con.name, row_used)}: {_linear(con.coeffs, names)} {_SENSE[con.sense]} {_number(con.rhs)}")
    if model.objective_constant:
        out.append(" __constant_fix: __constant = 1")
    out.append("Bounds")
    for name, var in zip(names, model.variables):
        if var.is_binary:
            continue
        lo = "-inf" if math.isinf(var.lb) else _number(var.lb)
        hi = "+inf" if math.isinf(var.ub) else _number(var.ub)
        if math.isinf(var.lb) and math.isinf(var.ub):
            out.append(f" {name} free")
        else:
            out.append(f" {lo} <= {name} <= {hi}")
    binaries = [name for name, var in zip(names, model.variables) if var.is_binary]
    if binaries:
        out.append("Binaries")
        out.append(_wrap(" " + " ".join(binaries)))
    out.append("End")
    return "\n".join(out) + "\n"


def dump_lp(model: MilpModel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_lp(model), encoding="utf-8")
    return path
