"""Run the benchmark configurations over the published instances and render tables.

    python scripts/reproduce_tables.py --data data/instances --out runs/

Each configuration writes its own JSON-lines file; the combined table is
rendered from those files.  Instances that are missing are skipped with a
warning.  Timings depend on the machine and the backend.
"""
import argparse
import logging
from pathlib import Path

from darplpt.cli import _bench_one
from darplpt.pipeline import SolveConfig
from darplpt.results import read_records, render_table, to_csv, write_records

log = logging.getLogger("reproduce")

DARP = ["a2-16", "a2-20", "a2-24", "a3-18", "a3-24", "a3-30", "a3-36", "a4-16", "a4-24", "a4-32", "a4-40",
        "a4-48", "b2-16", "b2-20", "b2-24", "b3-18", "b3-24", "b3-30", "b3-36", "b4-16", "b4-24", "b4-32",
        "b4-40", "b4-48"]

RUNS = {
    "darp-L4": ("darp-lpt", 4, [("abf", "rf"), ("fff", "ff"), ("fff", "rf"), ("psff", "ff"), ("psff", "rf"),
                                ("psff", "mf"), ("pbf", "rf")]),
    "darp-L6": ("darp-lpt", 6, [("psff", "rf"), ("psff", "ff")]),
    "mdarp-L4": ("mdarp-lpt", 4, [("fff", "rf"), ("psff", "rf")]),
}


def find(data: Path, name: str):
    for cand in (data / name, data / f"{name}.txt", data / f"{name}.dat"):
        if cand.is_file():
            return cand
    return None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", type=Path, default=Path("data/instances"))
    ap.add_argument("--out", type=Path, default=Path("runs"))
    ap.add_argument("--time-limit", type=float, default=1800.0)
    ap.add_argument("--backend", default="scip", choices=("scip", "highs"))
    ap.add_argument("--only", nargs="*", help="subset of " + ", ".join(RUNS))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    args.out.mkdir(parents=True, exist_ok=True)
    present = [(n, find(args.data, n)) for n in DARP]
    for name, path in present:
        if path is None:
            log.warning("missing instance %s", name)
    paths = [p for _, p in present if p is not None]
    if not paths:
        log.error("no instances under %s", args.data)
        return 1

    for tag, (problem, L, configs) in RUNS.items():
        if args.only and tag not in args.only:
            continue
        out = args.out / f"{tag}.jsonl"
        recs = []
        for form, kind in configs:
            cfg = SolveConfig(formulation=form, fragments=kind, time_limit=args.time_limit, backend=args.backend)
            for p in paths:
                rec = _bench_one(str(p), problem, L, cfg)
                log.info("%s %s %s/%s obj=%s status=%s", tag, rec.instance, form, kind, rec.obj, rec.status)
                recs.append(rec)
        write_records(recs, out)
        stored = read_records(out)
        (args.out / f"{tag}.txt").write_text(render_table(stored))
        (args.out / f"{tag}.csv").write_text(to_csv(stored))
        print(render_table(stored))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
