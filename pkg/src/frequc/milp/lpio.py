"""LP-format text export/import and solution-file exchange.

``export_model`` writes the standard LP text format (Minimize / Subject To /
Bounds / Binaries / End) so a model can be handed to any external solver.
``import_model`` reads the same dialect back, which gives the round-trip
guarantee a test can lean on.  Solution files are a small documented format:

    status <status word>
    objective <number>
    <variable name> <value>        (one line per variable)

``import_solution`` re-checks such a file against the model locally, so a
foreign solver's claim of optimality never goes unverified.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import MilpModel

_SENSE_TOKENS = {"<=": "<=", "=<": "<=", "<": "<=", ">=": ">=", "=>": ">=", ">": ">=", "=": "="}


class LpioError(ValueError):
    """Malformed LP or solution text."""


def _num(x: float) -> str:
    return repr(float(x))


def _wrap_terms(parts: list[str], indent: str = "   ") -> list[str]:
    lines = []
    line = ""
    for part in parts:
        if line and len(line) + len(part) + 1 > 200:
            lines.append(line)
            line = indent + part
        else:
            line = part if not line else line + " " + part
    if line:
        lines.append(line)
    return lines


def _format_terms(coeffs: dict[int, float], model: MilpModel, constant: float = 0.0) -> list[str]:
    parts: list[str] = []
    for j in sorted(coeffs):
        c = coeffs[j]
        sign = "-" if c < 0 else "+"
        if not parts and sign == "+":
            parts.extend([_num(abs(c)), model.variables[j].name])
        else:
            parts.extend([sign, _num(abs(c)), model.variables[j].name])
    if constant != 0.0:
        sign = "-" if constant < 0 else "+"
        if not parts and sign == "+":
            parts.append(_num(abs(constant)))
        else:
            parts.extend([sign, _num(abs(constant))])
    if not parts:
        parts.append("0")
    return parts


def export_model(model: MilpModel) -> str:
    """Render the model as LP-format text."""
    model.validate()
    out: list[str] = [f"\\ Problem: {model.name}"]
    out.append("Minimize")
    obj_parts = _format_terms(model.objective, model, model.objective_constant)
    out.extend(_wrap_terms(["obj:"] + obj_parts, indent="   "))
    out.append("Subject To")
    for i, row in enumerate(model.rows):
        label = row.label if row.label else f"r{i}"
        parts = [f"{label}:"] + _format_terms(row.coeffs, model)
        parts.extend([row.sense, _num(row.rhs)])
        out.extend(_wrap_terms(parts, indent="   "))
    out.append("Bounds")
    for v in model.variables:
        out.append(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}")
    bins = [model.variables[j].name for j in model.binary_indices()]
    if bins:
        out.append("Binaries")
        out.extend(_wrap_terms(bins, indent=" "))
    out.append("End")
    return "\n".join(out) + "\n"


# -- LP parsing ----------------------------------------------------------------


def _strip_comments(text: str) -> str:
    lines = []
    for line in text.splitlines():
        cut = line.find("\\")
        lines.append(line if cut < 0 else line[:cut])
    return "\n".join(lines)


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _split_sections(text: str) -> dict[str, list[str]]:
    """Break LP text into section -> token list (bounds kept line-oriented)."""
    body = _strip_comments(text)
    lower = body.lower()
    markers = []
    for kw, canon in [("minimize", "objective"), ("maximize", "maximize"),
                      ("subject to", "rows"), ("such that", "rows"),
                      ("s.t.", "rows"), ("st.", "rows"),
                      ("bounds", "bounds"), ("binaries", "binaries"),
                      ("binary", "binaries"), ("general", "general"),
                      ("end", "end")]:
        start = 0
        while True:
            pos = lower.find(kw, start)
            if pos < 0:
                break
            pre = lower[pos - 1] if pos > 0 else "\n"
            post = lower[pos + len(kw)] if pos + len(kw) < len(lower) else "\n"
            if pre in "\n\r\t " and post in "\n\r\t ":
                markers.append((pos, pos + len(kw), canon))
                start = pos + len(kw)
            else:
                start = pos + 1
    markers.sort()
    sections: dict[str, list[str]] = {}
    for k, (pos, endpos, canon) in enumerate(markers):
        chunk_end = markers[k + 1][0] if k + 1 < len(markers) else len(body)
        chunk = body[endpos:chunk_end]
        if canon == "bounds":
            sections.setdefault("bounds_lines", []).extend(
                [ln.strip() for ln in chunk.splitlines() if ln.strip()])
        else:
            sections.setdefault(canon, []).extend(chunk.split())
    return sections


def _parse_terms(tokens: list[str], pos: int, stop_tokens: set[str]):
    """Parse [sign] [coeff] name ... until a stop token; returns (coeffs_by_name,
    constant, next_pos)."""
    coeffs: dict[str, float] = {}
    constant = 0.0
    sign = 1.0
    pending: float | None = None
    while pos < len(tokens):
        tok = tokens[pos]
        if tok in stop_tokens:
            break
        if tok == "+":
            if pending is not None:
                constant += sign * pending
                pending = None
            sign = 1.0
        elif tok == "-":
            if pending is not None:
                constant += sign * pending
                pending = None
            sign = -1.0
        elif _is_number(tok):
            if pending is not None:
                constant += sign * pending
            pending = float(tok)
        else:
            coeff = sign * (pending if pending is not None else 1.0)
            coeffs[tok] = coeffs.get(tok, 0.0) + coeff
            pending = None
            sign = 1.0
        pos += 1
    if pending is not None:
        constant += sign * pending
    return coeffs, constant, pos


def import_model(text: str, name: str = "imported") -> MilpModel:
    """Parse LP-format text produced by :func:`export_model`."""
    sections = _split_sections(text)
    if "maximize" in sections:
        raise LpioError("only Minimize problems are supported")
    if "general" in sections:
        raise LpioError("general integer variables are not supported")
    if "objective" not in sections:
        raise LpioError("missing Minimize section")

    bounds: dict[str, tuple[float, float]] = {}
    for line in sections.get("bounds_lines", []):
        toks = line.split()
        # forms: "l <= name <= u", "name <= u", "name >= l", "name = v"
        if len(toks) == 5 and toks[1] in _SENSE_TOKENS and toks[3] in _SENSE_TOKENS:
            bounds[toks[2]] = (float(toks[0]), float(toks[4]))
        elif len(toks) == 3 and toks[1] in _SENSE_TOKENS:
            sense = _SENSE_TOKENS[toks[1]]
            if _is_number(toks[0]):
                name_, val = toks[2], float(toks[0])
                lo, hi = bounds.get(name_, (0.0, np.inf))
                bounds[name_] = (val, hi) if sense == "<=" else ((lo, val) if sense == ">=" else (val, val))
            else:
                name_, val = toks[0], float(toks[2])
                lo, hi = bounds.get(name_, (0.0, np.inf))
                if sense == "<=":
                    bounds[name_] = (lo, val)
                elif sense == ">=":
                    bounds[name_] = (val, hi)
                else:
                    bounds[name_] = (val, val)
        else:
            raise LpioError(f"unparsable bounds line: {line!r}")

    binaries = set(sections.get("binaries", []))

    obj_tokens = sections["objective"]
    pos = 0
    if obj_tokens and obj_tokens[0].endswith(":"):
        pos = 1
    obj_by_name, obj_const, _ = _parse_terms(obj_tokens, pos, set())

    rows: list[tuple[str, dict[str, float], str, float]] = []
    row_tokens = sections.get("rows", [])
    pos = 0
    auto = 0
    while pos < len(row_tokens):
        label = ""
        if row_tokens[pos].endswith(":") and len(row_tokens[pos]) > 1:
            label = row_tokens[pos][:-1]
            pos += 1
        else:
            label = f"r{auto}"
        auto += 1
        coeffs, const, pos = _parse_terms(row_tokens, pos, set(_SENSE_TOKENS))
        if pos >= len(row_tokens):
            raise LpioError(f"row {label!r}: missing sense")
        sense = _SENSE_TOKENS[row_tokens[pos]]
        pos += 1
        if pos >= len(row_tokens) or not _is_number(row_tokens[pos]):
            raise LpioError(f"row {label!r}: missing right-hand side")
        rhs = float(row_tokens[pos]) - const
        pos += 1
        rows.append((label, coeffs, sense, rhs))

    ordered: list[str] = []
    seen: set[str] = set()
    for nm in list(obj_by_name) + [nm for _, cf, _, _ in rows for nm in cf] + list(bounds):
        if nm not in seen:
            seen.add(nm)
            ordered.append(nm)

    model = MilpModel(name)
    for nm in ordered:
        lo, hi = bounds.get(nm, (0.0, 1.0) if nm in binaries else (0.0, np.inf))
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise LpioError(f"variable {nm}: unbounded after parsing")
        model.add_variable(nm, lo, hi, integer=nm in binaries)
    name_to_idx = {nm: k for k, nm in enumerate(ordered)}
    model.set_objective({name_to_idx[nm]: v for nm, v in obj_by_name.items()}, obj_const)
    for label, coeffs, sense, rhs in rows:
        for nm in coeffs:
            if nm not in name_to_idx:
                raise LpioError(f"row {label!r}: unknown variable {nm!r}")
        model.add_row({name_to_idx[nm]: v for nm, v in coeffs.items()}, sense, rhs, label)
    return model


def models_equivalent(m1: MilpModel, m2: MilpModel, tol: float = 1e-12) -> bool:
    """Structural equality by name: variables, bounds, rows, objective."""
    n1 = {v.name: v for v in m1.variables}
    n2 = {v.name: v for v in m2.variables}
    if set(n1) != set(n2):
        return False
    for nm, v in n1.items():
        w = n2[nm]
        if abs(v.lb - w.lb) > tol or abs(v.ub - w.ub) > tol or v.is_integer != w.is_integer:
            return False
    if abs(m1.objective_constant - m2.objective_constant) > tol:
        return False

    def named(model, coeffs):
        return {model.variables[j].name: c for j, c in coeffs.items() if c != 0.0}

    o1, o2 = named(m1, m1.objective), named(m2, m2.objective)
    if set(o1) != set(o2) or any(abs(o1[k] - o2[k]) > tol for k in o1):
        return False
    if len(m1.rows) != len(m2.rows):
        return False
    rows2 = {r.label: r for r in m2.rows}
    for r in m1.rows:
        s = rows2.get(r.label)
        if s is None or s.sense != r.sense or abs(s.rhs - r.rhs) > tol:
            return False
        c1, c2 = named(m1, r.coeffs), named(m2, s.coeffs)
        if set(c1) != set(c2) or any(abs(c1[k] - c2[k]) > tol for k in c1):
            return False
    return True


# -- solution files --------------------------------------------------------------


@dataclass
class ImportedSolution:
    status: str
    objective: float | None
    values: np.ndarray
    violations: list[str] = field(default_factory=list)
    objective_mismatch: bool = False


def write_solution(model: MilpModel, status: str, objective: float | None,
                   values: np.ndarray | None) -> str:
    lines = [f"status {status}"]
    if objective is not None:
        lines.append(f"objective {_num(objective)}")
    if values is not None:
        for v in model.variables:
            lines.append(f"{v.name} {_num(values[v.index])}")
    return "\n".join(lines) + "\n"


def import_solution(model: MilpModel, text: str, tol: float = 1e-6) -> ImportedSolution:
    """Parse a solution file and re-check it against the model.

    Raises LpioError on unknown variable names, malformed numbers, or missing
    variable values; row violations are reported, not raised.
    """
    status: str | None = None
    objective: float | None = None
    values = np.full(model.n_vars, np.nan)
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise LpioError(f"unparsable solution line: {raw!r}")
        key, val = parts
        if key == "status":
            status = val
        elif key == "objective":
            try:
                objective = float(val)
            except ValueError as exc:
                raise LpioError(f"malformed objective value {val!r}") from exc
        else:
            if not model.has_variable(key):
                raise LpioError(f"unknown variable name {key!r}")
            try:
                values[model.variable_by_name(key).index] = float(val)
            except ValueError as exc:
                raise LpioError(f"malformed value for {key!r}: {val!r}") from exc
    if status is None:
        raise LpioError("missing status line")
    if status == "optimal":
        missing = [v.name for v in model.variables if np.isnan(values[v.index])]
        if missing:
            raise LpioError(f"missing values for: {', '.join(missing[:5])}")
        violations = model.check_feasible(values, tol)
        mismatch = False
        if objective is not None:
            computed = model.objective_value(values)
            mismatch = abs(computed - objective) > tol * max(1.0, abs(objective))
        return ImportedSolution(status, objective, values, violations, mismatch)
    return ImportedSolution(status, objective, values)
