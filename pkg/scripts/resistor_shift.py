"""Blinding-gap onset versus quenching resistor at a fixed discrimination level."""

import argparse

from sdblind.audit import Monitor, run_audit
from sdblind.detector import paper_default
from sdblind.sweep import default_grid, gap_overlap, lower_gap_edge, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resistors", type=float, nargs="+", default=[0, 1e5, 2e5, 4e5])
    ap.add_argument("--disc-level", type=float, default=1.04)
    ap.add_argument("--gates", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=4)
    args = ap.parse_args()

    grid = default_grid()
    sweeps = []
    for rq in args.resistors:
        s = run_sweep(paper_default(r_quench=rq, disc_level=args.disc_level), grid,
                      args.gates, args.seed, args.jobs)
        sweeps.append(s)
        edge = lower_gap_edge(s.features)
        inside = [p.op for lo, hi in s.features.blinding_gaps[:1] for p in s.points if lo <= p.power <= hi]
        i_min = min(op.photocurrent for op in inside) if inside else float("nan")
        print(f"R_q={rq:9.0f} ohm  onset={edge if edge is None else f'{edge:.3g} W'}  "
              f"gaps={len(s.features.blinding_gaps)}  min in-gap I={i_min * 1e3:.3g} mA")

    if len(sweeps) > 1:
        print("pairwise gap overlaps:", gap_overlap(sweeps) or "none")
        rep = run_audit([s.config_snapshot for s in sweeps], sweeps, Monitor(1e3, 1e-4))
        print("audit:", ", ".join(f"{c.id}={c.verdict}" for c in rep.criteria), "exit", rep.exit_code)


if __name__ == "__main__":
    main()
