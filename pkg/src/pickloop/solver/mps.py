"""Fixed-format MPS writer for handing models to external MILP solvers."""

from __future__ import annotations

import math
import os
from pathlib import Path

from pickloop.model import BINARY, EQ, GE, INTEGER, LE, MilpModel
from pickloop.solver.common import check_model

OBJ_ROW = "OBJ"
_SENSE_CODE = {LE: "L", GE: "G", EQ: "E"}


def _num(value: float) -> str:
    """Shortest representation of ``value`` that fits the 12-character field."""
    v = float(value)
    if v == int(v) and abs(v) < 1e11:
        return str(int(v))
    text = repr(v)
    if len(text) <= 12:
        return text
    for digits in range(11, 0, -1):
        text = f"{v:.{digits}g}"
        if len(text) <= 12:
            return text
    raise ValueError(f"cannot format {value!r} in 12 characters")


def _field_line(code: str, name: str, pairs: list[tuple[str, str]]) -> str:
    line = f" {code:<2} {name:<8}"
    for i, (label, val) in enumerate(pairs):
        line += ("  " if i == 0 else "   ") + f"{label:<8}  {val:>12}"
    return line.rstrip()


def col_name(j: int) -> str:
    return f"C{j + 1:07d}"


def row_name(i: int) -> str:
    return f"R{i + 1:07d}"


def render_mps(model: MilpModel) -> str:
    check_model(model)
    A = model.A.tocsc()
    name = "".join(ch for ch in (model.name or "MODEL") if not ch.isspace()) or "MODEL"
    out = [
        f"* {model.name}: {model.n_vars} columns, {model.n_rows} rows",
        "* maximization written as minimization: objective coefficients are negated",
        "* columns C0000001.. follow declaration order (x, then y, then z); rows R0000001.. follow row order",
        f"NAME          {name}",
        "ROWS",
        f" N  {OBJ_ROW}",
    ]
    out += [f" {_SENSE_CODE[s]}  {row_name(i)}" for i, s in enumerate(model.senses)]
    out.append("COLUMNS")
    for j in range(model.n_vars):
        entries = []
        if model.objective[j] != 0:
            entries.append((OBJ_ROW, _num(-model.objective[j])))
        lo, hi = A.indptr[j], A.indptr[j + 1]
        for i, a in zip(A.indices[lo:hi], A.data[lo:hi]):
            entries.append((row_name(int(i)), _num(a)))
        if not entries:
            # keep every declared column visible to readers
            entries.append((OBJ_ROW, "0"))
        for k in range(0, len(entries), 2):
            out.append(_field_line("", col_name(j), entries[k:k + 2]))
    out.append("RHS")
    nz = [(row_name(i), _num(b)) for i, b in enumerate(model.rhs) if b != 0]
    for k in range(0, len(nz), 2):
        out.append(_field_line("", "RHS", nz[k:k + 2]))
    out.append("BOUNDS")
    for j, kind in enumerate(model.var_kinds):
        lo, hi = float(model.lower[j]), float(model.upper[j])
        c = col_name(j)
        if lo == hi:
            out.append(_field_line("FX", "BND", [(c, _num(lo))]))
        elif kind == BINARY and lo == 0 and hi == 1:
            out.append(_field_line("BV", "BND", [(c, "")]).rstrip())
        elif kind in (BINARY, INTEGER):
            out.append(_field_line("LI", "BND", [(c, _num(lo))]))
            if math.isfinite(hi):
                out.append(_field_line("UI", "BND", [(c, _num(hi))]))
        else:
            if lo != 0:
                out.append(_field_line("LO" if math.isfinite(lo) else "MI", "BND",
                                       [(c, _num(lo) if math.isfinite(lo) else "")]).rstrip())
            if math.isfinite(hi):
                out.append(_field_line("UP", "BND", [(c, _num(hi))]))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def export_mps(model: MilpModel, destination: str | os.PathLike) -> int:
    """Write ``model`` as fixed-format MPS; returns the number of bytes written."""
    data = render_mps(model).encode("ascii")
    path = Path(destination)
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write MPS file {path}: {exc.strerror or exc}") from exc
    return len(data)


def read_mps_summary(text: str) -> dict:
    """Section counts of an MPS text: columns, constraint rows and nonzero RHS entries."""
    section = None
    rows = 0
    cols: list[str] = []
    rhs = 0
    for line in text.splitlines():
        if not line or line.startswith("*"):
            continue
        if not line.startswith(" "):
            section = line.split()[0]
            continue
        parts = line.split()
        if section == "ROWS" and parts[0] != "N":
            rows += 1
        elif section == "COLUMNS" and (not cols or cols[-1] != parts[0]):
            cols.append(parts[0])
        elif section == "RHS":
            rhs += (len(parts) - 1) // 2
    return {"columns": len(cols), "rows": rows, "rhs_nonzeros": rhs}
