"""Backend-agnostic MILP container and solve loop.

Two backends are wired in: SCIP (through PySCIPOpt), which can call a cut
separator on every candidate incumbent and inject lazy constraints, and
HiGHS (through highspy), which has no such hook and runs a solve-and-cut
loop instead: solve, separate on the optimum, add violated cuts, re-solve.
"""
from __future__ import annotations

import logging
import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

BINARY, INTEGER, CONTINUOUS = "B", "I", "C"
LE, GE, EQ = "<=", ">=", "=="
INT_TOL = 1e-5

OPTIMAL, FEASIBLE, INFEASIBLE, TIME_LIMIT = "optimal", "feasible", "infeasible", "time-limit"


class BackendError(RuntimeError):
    def __init__(self, backend: str, message: str):
        super().__init__(f"{backend}: {message}")
        self.backend = backend
        self.solver_message = message


@dataclass
class Cut:
    """Linear constraint ``sum(coef * x[idx]) <sense> rhs`` produced by a separator."""
    idx: list[int]
    coef: list[float]
    sense: str
    rhs: float
    name: str = ""

    def activity(self, x: Sequence[float]) -> float:
        return float(sum(c * x[i] for i, c in zip(self.idx, self.coef)))

    def violated(self, x: Sequence[float], tol: float = 1e-6) -> bool:
        act = self.activity(x)
        if self.sense == LE:
            return act > self.rhs + tol
        if self.sense == GE:
            return act < self.rhs - tol
        return abs(act - self.rhs) > tol


CutSource = Callable[[np.ndarray], list[Cut]]


class MilpModel:
    """Minimisation model: variables with bounds and kinds, linear rows."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: list[str] = []
        self.kinds: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.obj: list[float] = []
        self.rows: list[Cut] = []
        self.index: dict[str, int] = {}
        self.meta: dict = {}

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    def add_var(self, name: str, kind: str = BINARY, lb: float = 0.0, ub: float = 1.0, obj: float = 0.0) -> int:
        if name in self.index:
            raise ValueError(f"duplicate variable {name}")
        k = len(self.var_names)
        self.var_names.append(name)
        self.kinds.append(kind)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.obj.append(float(obj))
        self.index[name] = k
        return k

    def add_constr(self, terms: Iterable[tuple[int, float]], sense: str, rhs: float, name: str = "") -> Cut:
        merged: dict[int, float] = {}
        for i, c in terms:
            if not 0 <= i < self.num_vars:
                raise ValueError(f"constraint {name!r} references undeclared variable {i}")
            merged[i] = merged.get(i, 0.0) + c
        idx = sorted(merged)
        row = Cut(idx, [merged[i] for i in idx], sense, float(rhs), name or f"c{len(self.rows)}")
        self.rows.append(row)
        return row

    def add_cut(self, cut: Cut) -> Cut:
        return self.add_constr(zip(cut.idx, cut.coef), cut.sense, cut.rhs, cut.name)

    def objective_value(self, x: Sequence[float]) -> float:
        return float(np.dot(self.obj, x))

    def violated_rows(self, x: Sequence[float], tol: float = 1e-6) -> list[Cut]:
        return [r for r in self.rows if r.violated(x, tol)]

    def count_rows(self, prefix: str) -> int:
        return sum(1 for r in self.rows if r.name.startswith(prefix))

    def write_lp(self, path: str | Path) -> None:
        Path(path).write_text(self.to_lp())

    def to_lp(self) -> str:
        names = _lp_names(self.var_names)

        def expr(idx, coef) -> str:
            parts = []
            for i, c in zip(idx, coef):
                if c == 0:
                    continue
                sign = "-" if c < 0 else "+"
                parts.append(f"{sign} {abs(c):.12g} {names[i]}")
            text = " ".join(parts) or "0 " + names[0]
            return text[2:] if text.startswith("+ ") else text

        out = [f"\\ {self.name}", "Minimize", " obj: " + expr(range(self.num_vars), self.obj), "Subject To"]
        for k, (r, lbl) in enumerate(zip(self.rows, _lp_names([r.name for r in self.rows]))):
            sense = "=" if r.sense == EQ else r.sense
            out.append(f" {lbl}: {expr(r.idx, r.coef)} {sense} {r.rhs:.12g}")
        out.append("Bounds")
        for i, nm in enumerate(names):
            lo = "-inf" if math.isinf(self.lb[i]) else f"{self.lb[i]:.12g}"
            hi = "+inf" if math.isinf(self.ub[i]) else f"{self.ub[i]:.12g}"
            out.append(f" {lo} <= {nm} <= {hi}")
        for label, kind in (("Binaries", BINARY), ("Generals", INTEGER)):
            members = [names[i] for i in range(self.num_vars) if self.kinds[i] == kind]
            if members:
                out.append(label)
                out.extend(" " + m for m in members)
        out.append("End")
        return "\n".join(out) + "\n"


def _lp_names(raw: Sequence[str]) -> list[str]:
    out = []
    for k, nm in enumerate(raw):
        clean = re.sub(r"[^A-Za-z0-9_.{}()!#$%&@]", "_", nm)
        if not clean or clean[0].isdigit() or clean[0] in ".eE":
            clean = "v_" + clean
        out.append(f"{clean}#{k}")
    return out


@dataclass
class SolveResult:
    status: str
    objective: Optional[float]
    bound: Optional[float]
    values: Optional[np.ndarray]
    backend: str = ""
    mode: str = ""
    cuts: int = 0
    rounds: int = 0
    timings: dict = field(default_factory=dict)
    message: str = ""

    @property
    def gap(self) -> Optional[float]:
        if self.objective is None or self.bound is None:
            return None
        if abs(self.objective) < 1e-9:
            return 0.0
        return min(1.0, max(0.0, (self.objective - self.bound) / abs(self.objective)))

    @property
    def has_solution(self) -> bool:
        return self.values is not None and self.objective is not None


# -- backends ---------------------------------------------------------------

def _scip_solve(model: MilpModel, time_limit: Optional[float], cut_source: Optional[CutSource],
                log_cuts: list, seed: int = 0):
    try:
        from pyscipopt import SCIP_PARAMSETTING, SCIP_RESULT, Conshdlr, Model, quicksum
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise BackendError("scip", f"PySCIPOpt unavailable: {exc}") from None

    m = Model(model.name)
    m.hideOutput()
    m.setParam("parallel/maxnthreads", 1)
    m.setParam("randomization/randomseedshift", seed)
    m.setParam("limits/gap", 0.0)
    # sparsify can cycle forever on flow models with equal coefficients
    m.setParam("presolving/sparsify/maxrounds", 0)
    m.setParam("presolving/maxrounds", 200)
    if time_limit is not None:
        m.setParam("limits/time", max(time_limit, 0.01))
    vtype = {BINARY: "B", INTEGER: "I", CONTINUOUS: "C"}
    xs = [m.addVar(name=f"x{k}", vtype=vtype[model.kinds[k]],
                   lb=None if math.isinf(model.lb[k]) else model.lb[k],
                   ub=None if math.isinf(model.ub[k]) else model.ub[k],
                   obj=model.obj[k]) for k in range(model.num_vars)]
    m.setMinimize()

    def add_row(r: Cut, **kw):
        e = quicksum(c * xs[i] for i, c in zip(r.idx, r.coef))
        if r.sense == LE:
            return m.addCons(e <= r.rhs, name=r.name, **kw)
        if r.sense == GE:
            return m.addCons(e >= r.rhs, name=r.name, **kw)
        return m.addCons(e == r.rhs, name=r.name, **kw)

    for r in model.rows:
        add_row(r)

    errors: list[Exception] = []
    if cut_source is not None:
        # SCIP only knows the rows above; reductions relying on dual arguments
        # could discard solutions the lazy rows would have allowed
        m.setParam("misc/allowstrongdualreds", False)
        m.setParam("misc/allowweakdualreds", False)

        class Lazy(Conshdlr):
            def _separate(self, sol):
                vals = np.array([self.model.getSolVal(sol, x) for x in xs])
                return cut_source(vals)

            def conscheck(self, constraints, solution, checkintegrality, checklprows, printreason, completely):
                try:
                    cuts = self._separate(solution)
                except Exception:
                    # heuristic candidates may break the linear rows; such a
                    # candidate is never a valid solution, so reject it
                    return {"result": SCIP_RESULT.INFEASIBLE}
                return {"result": SCIP_RESULT.INFEASIBLE if cuts else SCIP_RESULT.FEASIBLE}

            def _enforce(self):
                try:
                    cuts = self._separate(None)
                except Exception as exc:
                    errors.append(exc)
                    self.model.interruptSolve()
                    return {"result": SCIP_RESULT.FEASIBLE}
                if not cuts:
                    return {"result": SCIP_RESULT.FEASIBLE}
                for c in cuts:
                    add_row(c)
                    log_cuts.append(c)
                return {"result": SCIP_RESULT.CONSADDED}

            def consenfolp(self, constraints, nusefulconss, solinfeasible):
                return self._enforce()

            def consenfops(self, constraints, nusefulconss, solinfeasible, objinfeasible):
                return self._enforce()

            def conslock(self, constraint, locktype, nlockspos, nlocksneg):
                pass

        m.includeConshdlr(Lazy(), "lazy_paths", "lazy infeasible-path rows",
                          chckpriority=-10, enfopriority=-10, needscons=False)

    t0 = time.process_time()
    try:
        m.optimize()
    except Exception as exc:  # pragma: no cover - solver internal failure
        raise BackendError("scip", str(exc)) from None
    cpu = time.process_time() - t0
    if errors:
        raise BackendError("scip", f"separation failed: {errors[0]!r}") from errors[0]
    st = m.getStatus()
    values = obj = None
    if m.getNSols() > 0:
        best = m.getBestSol()
        values = np.array([m.getSolVal(best, x) for x in xs])
        obj = m.getSolObjVal(best)
    bound = m.getDualbound() if st != "infeasible" else None
    status = {"optimal": OPTIMAL, "timelimit": TIME_LIMIT, "infeasible": INFEASIBLE}.get(st, FEASIBLE)
    if status == OPTIMAL and obj is not None:
        bound = obj if bound is None or bound > obj else bound
    if bound is not None and math.isinf(bound):
        bound = None
    return status, obj, bound, values, cpu, st


def _highs_solve(model: MilpModel, time_limit: Optional[float], seed: int = 0):
    try:
        import highspy
    except ImportError as exc:  # pragma: no cover
        raise BackendError("highs", f"highspy unavailable: {exc}") from None
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("random_seed", seed)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("mip_abs_gap", 1e-7)
    if time_limit is not None:
        h.setOptionValue("time_limit", max(float(time_limit), 0.01))
    inf = highspy.kHighsInf
    nv = model.num_vars
    lb = np.array([-inf if math.isinf(v) else v for v in model.lb])
    ub = np.array([inf if math.isinf(v) else v for v in model.ub])
    h.addVars(nv, lb, ub)
    h.changeColsCost(nv, np.arange(nv, dtype=np.int32), np.array(model.obj, dtype=float))
    integral = [k for k in range(nv) if model.kinds[k] != CONTINUOUS]
    if integral:
        h.changeColsIntegrality(len(integral), np.array(integral, dtype=np.int32),
                                np.array([highspy.HighsVarType.kInteger] * len(integral)))
    if model.rows:
        lo = np.array([-inf if r.sense == LE else r.rhs for r in model.rows])
        hi = np.array([inf if r.sense == GE else r.rhs for r in model.rows])
        starts = np.cumsum([0] + [len(r.idx) for r in model.rows[:-1]]).astype(np.int32)
        idx = np.array([i for r in model.rows for i in r.idx], dtype=np.int32)
        val = np.array([c for r in model.rows for c in r.coef], dtype=float)
        h.addRows(len(model.rows), lo, hi, len(idx), starts, idx, val)
    t0 = time.process_time()
    h.run()
    cpu = time.process_time() - t0
    ms = h.getModelStatus()
    st = h.modelStatusToString(ms)
    info = h.getInfo()
    values = obj = None
    if info.primal_solution_status == 2:
        values = np.array(h.getSolution().col_value)
        obj = float(info.objective_function_value)
    bound = info.mip_dual_bound if integral else obj
    if bound is not None and (math.isinf(bound) or abs(bound) >= inf):
        bound = None
    if ms == highspy.HighsModelStatus.kOptimal:
        status = OPTIMAL
    elif ms == highspy.HighsModelStatus.kInfeasible:
        status = INFEASIBLE
    elif ms == highspy.HighsModelStatus.kTimeLimit:
        status = TIME_LIMIT
    elif values is not None:
        status = FEASIBLE
    else:
        raise BackendError("highs", st)
    if status == OPTIMAL and obj is not None and (bound is None or bound > obj):
        bound = obj
    return status, obj, bound, values, cpu, st


BACKENDS = ("scip", "highs")


def _solve_once(backend: str, model: MilpModel, time_limit: Optional[float], seed: int,
                cut_source: Optional[CutSource] = None, log_cuts: Optional[list] = None):
    if backend == "scip":
        return _scip_solve(model, time_limit, cut_source, log_cuts if log_cuts is not None else [], seed)
    if backend == "highs":
        if cut_source is not None:
            raise BackendError("highs", "no incumbent callback support")
        return _highs_solve(model, time_limit, seed)
    raise BackendError(backend, "unknown backend")


def solve(model: MilpModel, time_limit: Optional[float] = None, cut_source: Optional[CutSource] = None,
          backend: str = "scip", mode: str = "auto", seed: int = 0, max_rounds: int = 10_000) -> SolveResult:
    """Solve ``model``; lazy rows from ``cut_source`` are added until none is violated.

    ``mode`` is ``callback`` (separate on every candidate incumbent inside the
    search), ``loop`` (re-solve after each round of cuts) or ``auto`` (callback
    when the backend supports it).  Cuts found are appended to ``model`` so the
    returned result always refers to the final model.
    """
    if mode == "auto":
        mode = "callback" if backend == "scip" else "loop"
    if cut_source is None:
        mode = "plain"
    t_start = time.perf_counter()
    deadline = None if time_limit is None else t_start + time_limit

    if mode in ("plain", "callback"):
        found: list[Cut] = []
        status, obj, bound, values, cpu, msg = _solve_once(
            backend, model, time_limit, seed, cut_source if mode == "callback" else None, found)
        for c in found:
            model.add_cut(c)
        if values is not None and cut_source is not None and cut_source(values):
            # the incumbent came from a path that skipped the check; report it as unverified
            obj, values, status = None, None, TIME_LIMIT if status != INFEASIBLE else status
        return SolveResult(status, obj, bound, values, backend, mode, len(found), 1,
                           {"solver_cpu": cpu, "solver_wall": time.perf_counter() - t_start}, msg)

    if mode != "loop":
        raise ValueError(f"unknown solve mode {mode!r}")
    total_cuts = rounds = 0
    cpu_total = 0.0
    bound = None
    while True:
        remaining = None if deadline is None else deadline - time.perf_counter()
        if remaining is not None and remaining <= 0:
            return SolveResult(TIME_LIMIT, None, bound, None, backend, mode, total_cuts, rounds,
                               {"solver_cpu": cpu_total, "solver_wall": time.perf_counter() - t_start})
        status, obj, bnd, values, cpu, msg = _solve_once(backend, model, remaining, seed)
        rounds += 1
        cpu_total += cpu
        if bnd is not None:
            # later rounds only add rows, so bounds never decrease
            bound = bnd if bound is None else max(bound, bnd)
        if values is None:
            return SolveResult(status, None, bound, None, backend, mode, total_cuts, rounds,
                               {"solver_cpu": cpu_total, "solver_wall": time.perf_counter() - t_start}, msg)
        cuts = [c for c in cut_source(values) if c.violated(values)]
        if not cuts:
            return SolveResult(status, obj, bound if status != OPTIMAL else obj, values, backend, mode,
                               total_cuts, rounds,
                               {"solver_cpu": cpu_total, "solver_wall": time.perf_counter() - t_start}, msg)
        if status != OPTIMAL:
            # incumbent is infeasible for the full model and the clock ran out
            for c in cuts:
                model.add_cut(c)
            total_cuts += len(cuts)
            return SolveResult(TIME_LIMIT, None, bound, None, backend, mode, total_cuts, rounds,
                               {"solver_cpu": cpu_total, "solver_wall": time.perf_counter() - t_start}, msg)
        for c in cuts:
            model.add_cut(c)
        total_cuts += len(cuts)
        log.debug("round %d: %d cuts, obj %.4f", rounds, len(cuts), obj)
        if rounds >= max_rounds:
            raise BackendError(backend, f"cut loop exceeded {max_rounds} rounds")
