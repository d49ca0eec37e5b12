"""Evaluate the assessment error on a grid of change point pairs around the truth.

    python3 scripts/response_surface.py --out surface.csv [--span-min 120 --step 2 --half-width 12]
"""
import argparse

from pdcpd.pipeline import generate_scenario, load_config, make_assessor, response_surface, write_surface
from pdcpd.simkit import fit_service


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--set", action="append", default=[])
    ap.add_argument("--span-min", type=float, default=None)
    ap.add_argument("--step", type=int, default=None)
    ap.add_argument("--half-width", type=int, default=None)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    cfg = load_config(args.config, args.set)
    scn = cfg.scenario
    data = generate_scenario(scn)
    assessor = make_assessor(data.traces, data.observed, scn.levels, fit_service(data.logs, cfg.fit_family), cfg)
    span = int(round((args.span_min or cfg.surface_span_min) / scn.interval_min))
    rows = response_surface(assessor, scn.true_taus, span, args.step or cfg.surface_step,
                            args.half_width or cfg.anneal.window_half_width0)
    write_surface(args.out, rows)
    best = min(rows, key=lambda r: r[3])
    print(f"{len(rows)} grid points; lowest error {best[3]:.4f} at ({best[0]:g}, {best[1]:g}) min")


if __name__ == "__main__":
    main()
