"""Compare every formulation with the brute-force oracle on random instances.

    python scripts/oracle_sweep.py --count 50 --backend highs
"""
import argparse
import time

from darplpt.instance import random_instance
from darplpt.oracle import brute_force_optimal
from darplpt.pipeline import SolveConfig, run
from darplpt.preprocessing import tighten_time_windows

CONFIGS = [("abf", "rf"), ("fff", "rf"), ("fff", "ff"), ("psff", "rf"), ("psff", "ff"), ("psff", "eff"),
           ("psff", "erf"), ("psff", "mf"), ("pbf", "rf")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--first-seed", type=int, default=100)
    ap.add_argument("--backend", default="scip", choices=("scip", "highs"))
    ap.add_argument("--depots", type=int, default=0, help="vehicles with their own depots (0: shared depot)")
    args = ap.parse_args()

    bad = 0
    t0 = time.perf_counter()
    for k in range(args.count):
        n, L = 3 + k % 4, 2 + (k // 4) % 3
        inst = random_instance(n, args.first_seed + k, L=L, multi_depot=args.depots)
        opt = brute_force_optimal(tighten_time_windows(inst))
        row = []
        for form, kind in CONFIGS:
            out = run(inst, SolveConfig(formulation=form, fragments=kind, backend=args.backend))
            same = (out.objective is None) if not opt.feasible else \
                (out.objective is not None and abs(out.objective - opt.objective) <= 1e-6)
            bad += not same
            row.append("." if same else "X")
        print(f"{k:3d} n={n} L={L} oracle={opt.objective:9.3f} {''.join(row)}")
    print(f"{bad} disagreements, {time.perf_counter() - t0:.0f}s")
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
