"""Command-line harness: solve, benchmark, fragments, network, render."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from .formulations import PathCapExceeded
from .fragments import SET_KINDS, dump
from .instance import Instance, InstanceError, configure_darplpt, derive_mdarp, load_instance, random_instance
from .milp import INFEASIBLE, BackendError
from .pipeline import FORMULATIONS, SolveConfig, fragment_networks, run
from .preprocessing import InfeasibleInstance, tighten_time_windows
from .results import CAP_STATUS, RunRecord, read_records, render_table, to_csv, write_records

EXIT_OK, EXIT_INFEASIBLE, EXIT_CAP, EXIT_USAGE = 0, 2, 3, 4
PROBLEMS = ("darp-lpt", "mdarp-lpt")

log = logging.getLogger("darplpt")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, many: bool = False) -> None:
    if many:
        p.add_argument("--instances", nargs="*", default=[], help="instance files or directories")
    else:
        p.add_argument("--instance", help="instance file in the Cordeau format")
    p.add_argument("--problem", choices=PROBLEMS, default="darp-lpt")
    p.add_argument("--L", type=int, default=4, help="maximum pickups per trip")
    p.add_argument("--seed", type=int, help="use a random instance with this seed instead of a file")
    p.add_argument("--n", type=int, default=6, help="customers of the random instance")


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--formulation", choices=FORMULATIONS, default="psff")
    p.add_argument("--fragments", choices=SET_KINDS, default="rf")
    p.add_argument("--time-limit", type=float, default=1800.0)
    p.add_argument("--backend", choices=("scip", "highs"), default="scip")
    p.add_argument("--mode", choices=("auto", "callback", "loop"), default="auto")
    p.add_argument("--replicate-cuts", choices=("on", "off"), default="on")
    p.add_argument("--path-cap", type=int, default=5_000_000)


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="darplpt", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one instance")
    _common(s)
    _solver_flags(s)
    s.add_argument("--out", help="append the run record (JSON lines) to this file")
    s.add_argument("--dump-fragments", action="store_true", help="print the fragment set before solving")
    s.add_argument("--routes", action="store_true", help="print the decoded routes")
    s.add_argument("--lp", help="write the initial model in LP format")

    b = sub.add_parser("benchmark", help="run one configuration over many instances")
    _common(b, many=True)
    _solver_flags(b)
    b.add_argument("--out", default="results.jsonl")
    b.add_argument("--table", help="write the rendered text table here (default: stdout)")
    b.add_argument("--csv", help="also write a CSV file")
    b.add_argument("--workers", type=int, default=1)

    f = sub.add_parser("fragments", help="generate a fragment set and report its size")
    _common(f)
    f.add_argument("--fragments", choices=SET_KINDS, default="rf")
    f.add_argument("--dump-fragments", action="store_true")
    f.add_argument("--no-dominance", action="store_true")

    n = sub.add_parser("network", help="export the fragment network as an edge list")
    _common(n)
    n.add_argument("--fragments", choices=SET_KINDS, default="rf")
    n.add_argument("--out", help="output file (default: stdout)")

    r = sub.add_parser("render", help="re-render tables from a results file")
    r.add_argument("results")
    r.add_argument("--csv", action="store_true")
    return ap


def prepare_instance(path: Optional[str], problem: str, L: int, seed: Optional[int] = None, n: int = 6) -> Instance:
    """Load (or generate) an instance and install the problem variant's fleet."""
    if L < 1:
        raise UsageError("--L must be positive")
    if path is None:
        if seed is None:
            raise UsageError("give --instance or --seed")
        if problem == "mdarp-lpt":
            return random_instance(n, seed, L=L, Q=4, multi_depot=max(1, -(-n // 2)))
        return random_instance(n, seed, L=L)
    if not Path(path).exists():
        raise UsageError(f"instance file not found: {path}")
    inst = load_instance(path)
    if problem == "mdarp-lpt":
        md, _ = derive_mdarp(inst, L)
        return md
    if L < 2:
        raise UsageError("darp-lpt needs --L >= 2")
    return configure_darplpt(inst, L)


def _config(args) -> SolveConfig:
    return SolveConfig(formulation=args.formulation, fragments=args.fragments, time_limit=args.time_limit,
                       backend=args.backend, mode=args.mode, replicate_cuts=args.replicate_cuts == "on",
                       path_cap=args.path_cap, seed=args.seed or 0)


def solve_record(inst: Instance, problem: str, cfg: SolveConfig, routes_out: Optional[list] = None) -> RunRecord:
    """Run one configuration; every reported OBJ comes from re-costed routes."""
    fset = cfg.fragments if cfg.formulation in ("fff", "psff") else ""
    rec = RunRecord(inst.name, problem, inst.L, cfg.formulation, fset)
    t0 = time.perf_counter()
    try:
        out = run(inst, cfg)
    except PathCapExceeded as exc:
        rec.status, rec.note, rec.total_time = CAP_STATUS, str(exc), time.perf_counter() - t0
        return rec
    except InfeasibleInstance as exc:
        rec.status, rec.note, rec.total_time = INFEASIBLE, str(exc), time.perf_counter() - t0
        return rec
    res = out.result
    rec.fragment_count = out.fragment_count
    rec.network_time = out.network_time
    rec.solver_cpu = res.timings.get("solver_cpu", 0.0)
    rec.total_time = out.total_time
    rec.status = res.status
    rec.lb = res.bound
    if res.has_solution:
        if out.problems:
            raise RuntimeError("decoded solution failed validation: " + "; ".join(out.problems))
        rec.obj = out.recosted
        if rec.lb is not None and rec.lb > rec.obj:
            rec.lb = rec.obj
        rec.gap = res.gap
        if routes_out is not None:
            routes_out.extend(out.routes)
    return rec


def _exit_for(rec: RunRecord) -> int:
    if rec.status == CAP_STATUS:
        return EXIT_CAP
    if rec.status == INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = prepare_instance(args.instance, args.problem, args.L, args.seed, args.n)
    cfg = _config(args)
    if args.dump_fragments and cfg.formulation in ("fff", "psff"):
        sets, _ = fragment_networks(tighten_time_windows(inst), cfg.fragments)
        for fs in sets:
            sys.stdout.write(dump(fs))
    if args.lp:
        from .pipeline import build_model
        build_model(tighten_time_windows(inst), cfg)[0].write_lp(args.lp)
    routes: list = []
    rec = solve_record(inst, args.problem, cfg, routes)
    print(rec.to_json())
    if args.routes:
        for v, r in routes:
            print(f"vehicle {'-' if v is None else v}: {' '.join(map(str, r))}")
    if args.out:
        write_records([rec], args.out, append=True)
    return _exit_for(rec)


def _instance_paths(items: Sequence[str]) -> list[Path]:
    out = []
    for it in items:
        p = Path(it)
        if p.is_dir():
            out += sorted(q for q in p.iterdir() if q.is_file() and not q.name.startswith("."))
        elif p.exists():
            out.append(p)
        else:
            raise UsageError(f"instance not found: {it}")
    return out


def _bench_one(path: str, problem: str, L: int, cfg: SolveConfig) -> RunRecord:
    fset = cfg.fragments if cfg.formulation in ("fff", "psff") else ""
    try:
        inst = prepare_instance(path, problem, L)
        return solve_record(inst, problem, cfg)
    except Exception as exc:  # one bad row must not stop the batch
        return RunRecord(Path(path).stem, problem, L, cfg.formulation, fset, status="error", note=repr(exc))


def cmd_benchmark(args) -> int:
    paths = _instance_paths(args.instances)
    cfg = _config(args)
    if args.workers > 1 and len(paths) > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            recs = list(pool.map(_bench_one, map(str, paths), [args.problem] * len(paths),
                                 [args.L] * len(paths), [cfg] * len(paths)))
    else:
        recs = [_bench_one(str(p), args.problem, args.L, cfg) for p in paths]
    write_records(recs, args.out)
    # tables are rendered from the file so they always match what was stored
    stored = read_records(args.out)
    table = render_table(stored)
    if args.table:
        Path(args.table).write_text(table)
    else:
        sys.stdout.write(table)
    if args.csv:
        Path(args.csv).write_text(to_csv(stored))
    return EXIT_OK


def cmd_fragments(args) -> int:
    inst = tighten_time_windows(prepare_instance(args.instance, args.problem, args.L, args.seed, args.n))
    t0 = time.perf_counter()
    sets, nets = fragment_networks(inst, args.fragments, dominance=not args.no_dominance)
    elapsed = time.perf_counter() - t0
    if args.dump_fragments:
        for fs in sets:
            sys.stdout.write(dump(fs))
    raw = sum(len(fs) for fs in sets)
    usable = sum(len(n.fragments) for n in nets)
    print(f"# {inst.name} S_{args.fragments.upper()} L={inst.L}: {raw} generated, {usable} in network, {elapsed:.2f}s")
    return EXIT_OK


def cmd_network(args) -> int:
    inst = tighten_time_windows(prepare_instance(args.instance, args.problem, args.L, args.seed, args.n))
    _, nets = fragment_networks(inst, args.fragments)
    text = "".join(n.edge_list() for n in nets)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_render(args) -> int:
    recs = read_records(args.results)
    sys.stdout.write(to_csv(recs) if args.csv else render_table(recs))
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "benchmark": cmd_benchmark, "fragments": cmd_fragments,
            "network": cmd_network, "render": cmd_render}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if not args.command:
        ap.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InstanceError) as exc:
        if isinstance(exc, InfeasibleInstance):
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        print(f"darplpt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendError as exc:
        print(f"darplpt: solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
