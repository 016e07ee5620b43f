"""Count-rate curves for a range of discrimination levels (in mV).

    python scripts/discrimination_sweep.py --levels 16 18 22 26 30 --out runs/disc
"""

import argparse
from pathlib import Path

from sdblind import io
from sdblind.detector import mv_to_i0, paper_default
from sdblind.sweep import default_grid, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=float, nargs="+", default=[16, 18, 22, 26, 30])
    ap.add_argument("--r-quench", type=float, default=0.0)
    ap.add_argument("--gates", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=4)
    ap.add_argument("--out", default="runs/disc")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = default_grid()
    print(f"{'mV':>5} {'I0':>6}  gaps / recovery / dip")
    for mv in args.levels:
        cfg = paper_default(disc_level=mv_to_i0(mv), r_quench=args.r_quench)
        s = run_sweep(cfg, grid, args.gates, args.seed, args.jobs)
        io.emit_plot_data(s, out / f"disc_{mv:g}mV.dat")
        io.emit_sweep_csv(s, out / f"disc_{mv:g}mV.csv")
        f = s.features
        gaps = " ".join(f"[{a:.2g},{b:.2g}]" for a, b in f.blinding_gaps) or "-"
        dip = f"{f.dip_minimum[1] / 1e6:.1f} MHz @ {f.dip_minimum[0]:.2g} W" if f.dip_minimum else "-"
        print(f"{mv:5g} {cfg.disc_level:6.3f}  {gaps} / {f.recovery_power} / {dip}")


if __name__ == "__main__":
    main()
