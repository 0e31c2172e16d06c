"""Run records: JSON-lines storage and table rendering."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

CAP_STATUS = "No"


@dataclass
class RunRecord:
    instance: str
    problem: str
    L: int
    formulation: str
    fragment_set: str
    fragment_count: int = 0
    network_time: float = 0.0
    solver_cpu: float = 0.0
    total_time: float = 0.0
    obj: Optional[float] = None
    lb: Optional[float] = None
    gap: Optional[float] = None
    status: str = ""
    note: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False)

    @classmethod
    def from_json(cls, line: str) -> "RunRecord":
        raw = json.loads(line)
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in raw.items() if k in names})


def write_records(records: Iterable[RunRecord], path: str | Path, append: bool = False) -> None:
    with open(path, "a" if append else "w") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_records(path: str | Path) -> list[RunRecord]:
    return [RunRecord.from_json(line) for line in Path(path).read_text().splitlines() if line.strip()]


def to_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = [f.name for f in fields(RunRecord)]
    w.writerow(names)
    for r in records:
        w.writerow(["" if getattr(r, k) is None else getattr(r, k) for k in names])
    return buf.getvalue()


def _num(x: Optional[float], digits: int = 1) -> str:
    return "-" if x is None else f"{x:.{digits}f}"


def _avg(values: list) -> Optional[float]:
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


COLUMNS = ("Instance", "Frags", "Net(s)", "CPU(s)", "Total(s)", "OBJ", "LB", "Gap(%)", "Status")


def _row(r: RunRecord) -> list[str]:
    if r.status == CAP_STATUS:
        return [r.instance, str(r.fragment_count), _num(r.network_time), "-", _num(r.total_time), "No", "-", "-", r.status]
    gap = None if r.gap is None else 100 * r.gap
    return [r.instance, str(r.fragment_count), _num(r.network_time), _num(r.solver_cpu), _num(r.total_time),
            _num(r.obj), _num(r.lb), _num(gap, 2), r.status]


def _average_row(label: str, rs: list[RunRecord]) -> list[str]:
    gaps = [None if r.gap is None else 100 * r.gap for r in rs]
    return [label, _num(_avg([r.fragment_count for r in rs]), 0), _num(_avg([r.network_time for r in rs])),
            _num(_avg([r.solver_cpu for r in rs])), _num(_avg([r.total_time for r in rs])),
            _num(_avg([r.obj for r in rs])), _num(_avg([r.lb for r in rs])), _num(_avg(gaps), 2), ""]


def render_table(records: Sequence[RunRecord]) -> str:
    """Fixed-width table grouped by configuration, with Avg-A / Avg-B rows."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.problem, r.L, r.formulation, r.fragment_set), []).append(r)
    out = []
    for (problem, L, form, fset), rs in groups.items():
        title = f"{problem.upper()} L={L} {form.upper()}" + (f"(S_{fset.upper()})" if fset else "")
        rows = [_row(r) for r in rs]
        for prefix in ("a", "b"):
            sub = [r for r in rs if r.instance.lower().startswith(prefix) and r.status != CAP_STATUS]
            if sub:
                rows.append(_average_row(f"Avg-{prefix.upper()}", sub))
        widths = [max(len(c), *(len(row[k]) for row in rows)) for k, c in enumerate(COLUMNS)]
        line = "  ".join(c.rjust(w) for c, w in zip(COLUMNS, widths))
        out += [title, line, "-" * len(line)]
        out += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in rows]
        out.append("")
    return "\n".join(out)
