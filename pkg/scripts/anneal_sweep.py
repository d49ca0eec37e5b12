"""Sweep one annealer setting over several seeds and tabulate the outcomes.

    python3 scripts/anneal_sweep.py temp0 0.003 0.01 0.03 --seeds 0 4
"""
import argparse

from pdcpd.pipeline import load_config, run_case_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("key", help="config key to sweep, e.g. temp0, window_shrink, objective")
    ap.add_argument("values", nargs="+")
    ap.add_argument("--config")
    ap.add_argument("--set", action="append", default=[])
    ap.add_argument("--seeds", nargs=2, type=int, default=(0, 4), metavar=("FIRST", "STOP"))
    args = ap.parse_args()

    print(f"{args.key},seed,pd_cps_min,dd_total_min,pd_total_min,best_k,best_eps")
    for value in args.values:
        for seed in range(*args.seeds):
            cfg = load_config(args.config, [*args.set, f"{args.key}={value}", f"master_seed={seed}"])
            rep = run_case_study(cfg)
            w = cfg.scenario.interval_min
            print(",".join(map(str, [
                value, seed, " ".join(f"{t:g}" for t in rep.pd_cps.times(w)),
                rep.dd_total_deviation_min, rep.pd_total_deviation_min, rep.best.k, f"{rep.best.eps:.4f}",
            ])), flush=True)


if __name__ == "__main__":
    main()
